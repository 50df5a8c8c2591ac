#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "sdjscc/tape.hpp"

namespace sdjscc {

using Rng = std::mt19937_64;

template <typename T>
using ParameterList = std::vector<Parameter<T>*>;

// Kaiming-uniform over fan-in (bound sqrt(6/fan_in)), zero bias.
template <typename T>
class Conv2d {
 public:
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t stride, std::size_t padding, Rng& rng);

  Var forward(Tape<T>& tape, Var x);
  void collect(ParameterList<T>& out);

  std::size_t in_channels() const { return weight.tensor.shape[1]; }
  std::size_t out_channels() const { return weight.tensor.shape[0]; }

  Parameter<T> weight;
  Parameter<T> bias;
  std::size_t stride;
  std::size_t padding;
};

template <typename T>
class Linear {
 public:
  Linear(std::string name, std::size_t in_features, std::size_t out_features, Rng& rng);

  Var forward(Tape<T>& tape, Var x);
  void collect(ParameterList<T>& out);

  Parameter<T> weight;
  Parameter<T> bias;
};

// conv3x3 -> relu -> conv3x3, plus identity skip, then relu. Channel count
// and spatial size are preserved.
template <typename T>
class ResidualBlock {
 public:
  ResidualBlock(std::string name, std::size_t channels, Rng& rng);

  Var forward(Tape<T>& tape, Var x);
  void collect(ParameterList<T>& out);

 private:
  Conv2d<T> first_;
  Conv2d<T> second_;
};

// Throws ConfigError on a repeated parameter name.
template <typename T>
void require_unique_names(const ParameterList<T>& params);

extern template class Conv2d<float>;
extern template class Conv2d<double>;
extern template class Linear<float>;
extern template class Linear<double>;
extern template class ResidualBlock<float>;
extern template class ResidualBlock<double>;

}  // namespace sdjscc
