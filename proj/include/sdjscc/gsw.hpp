#pragma once

// Gradient-based semantic weights. For each feature map f_k of the frozen
// task network, the importance w_k is the spatial mean of d(y^c)/d(f_k),
// averaged over classes c and over a calibration set; the weights used by
// the semantic loss are W' = r * softmax(tau * W).

#include <cstddef>
#include <span>
#include <vector>

#include "sdjscc/task_net.hpp"

namespace sdjscc {

struct SemanticWeights {
  std::vector<double> raw;     // W
  std::vector<double> mapped;  // W'
  double tau = 0.0;
  double r = 1.0;
  std::size_t calibration_size = 0;

  std::size_t size() const { return mapped.size(); }
};

// Spatial mean of d(y_c)/d(features[k]). `features` must be [K,M,N] or
// [1,K,M,N] and on the same tape as the scalar `y_c`. Runs a backward pass.
template <typename T>
double per_class_weight(Tape<T>& tape, Var y_c, Var features, std::size_t k);

// Per-image class-averaged weights, [images][K].
template <typename T>
std::vector<std::vector<double>> per_image_weights(TaskNetwork<T>& net, const Tensor<T>& images,
                                                   std::size_t batch = 64);

// W[k]: calibration mean of the class-averaged weights. `net` must be frozen.
template <typename T>
std::vector<double> aggregate_weights(TaskNetwork<T>& net, const Tensor<T>& calibration, std::size_t batch = 64);

// r * softmax(tau * W). Requires r > 0, tau >= 0, finite W.
std::vector<double> map_weights(std::span<const double> raw, double tau, double r);

template <typename T>
SemanticWeights compute_semantic_weights(TaskNetwork<T>& net, const Tensor<T>& calibration, double tau, double r);

// All-ones weights of length K (the unweighted feature loss).
SemanticWeights uniform_weights(std::size_t K);

}  // namespace sdjscc
