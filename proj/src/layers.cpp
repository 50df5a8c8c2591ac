#include "sdjscc/layers.hpp"

#include <cmath>
#include <set>

#include "sdjscc/ops.hpp"

namespace sdjscc {

namespace {

template <typename T>
Tensor<T> kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor<T> t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (T& v : t.data) v = static_cast<T>(dist(rng));
  t.requires_grad = true;
  return t;
}

template <typename T>
Tensor<T> zeros(Shape shape) {
  Tensor<T> t(std::move(shape));
  t.requires_grad = true;
  return t;
}

}  // namespace

template <typename T>
Conv2d<T>::Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                  std::size_t stride_, std::size_t padding_, Rng& rng)
    : weight{name + ".weight",
             kaiming_uniform<T>(Shape{out_channels, in_channels, kernel, kernel}, in_channels * kernel * kernel, rng)},
      bias{name + ".bias", zeros<T>(Shape{out_channels})},
      stride(stride_),
      padding(padding_) {}

template <typename T>
Var Conv2d<T>::forward(Tape<T>& tape, Var x) {
  return conv2d(tape, x, tape.param(weight), tape.param(bias), stride, padding);
}

template <typename T>
void Conv2d<T>::collect(ParameterList<T>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename T>
Linear<T>::Linear(std::string name, std::size_t in_features, std::size_t out_features, Rng& rng)
    : weight{name + ".weight", kaiming_uniform<T>(Shape{out_features, in_features}, in_features, rng)},
      bias{name + ".bias", zeros<T>(Shape{out_features})} {}

template <typename T>
Var Linear<T>::forward(Tape<T>& tape, Var x) {
  return linear(tape, x, tape.param(weight), tape.param(bias));
}

template <typename T>
void Linear<T>::collect(ParameterList<T>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

template <typename T>
ResidualBlock<T>::ResidualBlock(std::string name, std::size_t channels, Rng& rng)
    : first_(name + ".conv1", channels, channels, 3, 1, 1, rng),
      second_(name + ".conv2", channels, channels, 3, 1, 1, rng) {}

template <typename T>
Var ResidualBlock<T>::forward(Tape<T>& tape, Var x) {
  Var h = relu(tape, first_.forward(tape, x));
  return relu(tape, add(tape, second_.forward(tape, h), x));
}

template <typename T>
void ResidualBlock<T>::collect(ParameterList<T>& out) {
  first_.collect(out);
  second_.collect(out);
}

template <typename T>
void require_unique_names(const ParameterList<T>& params) {
  std::set<std::string> seen;
  for (const Parameter<T>* p : params) {
    if (!seen.insert(p->name).second) throw ConfigError("duplicate parameter name '" + p->name + "'");
  }
}

template class Conv2d<float>;
template class Conv2d<double>;
template class Linear<float>;
template class Linear<double>;
template class ResidualBlock<float>;
template class ResidualBlock<double>;
template void require_unique_names<float>(const ParameterList<float>&);
template void require_unique_names<double>(const ParameterList<double>&);

}  // namespace sdjscc
