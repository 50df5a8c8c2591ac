#pragma once

#include <span>
#include <vector>

#include "sdjscc/gsw.hpp"

namespace sdjscc {

// Mean squared error over all pixels and the batch.
template <typename T>
Var pixel_loss(Tape<T>& tape, Var x, Var x_recon);

// (1/B) * sum_b sum_k w[k] * ||f'_k^b - f_k^b||^2 with the raw squared
// Frobenius norm per map. `clean` is a constant; only f' receives gradient.
template <typename T>
Var weighted_feature_distance(Tape<T>& tape, Var f_recon, const Tensor<T>& clean, std::span<const double> w);

// Weighted feature distance between the task-net features of x_recon and of
// the clean batch. The task network must be frozen.
template <typename T>
Var semantic_loss(Tape<T>& tape, TaskNetwork<T>& net, const Tensor<T>& x_clean, Var x_recon,
                  std::span<const double> w);

// Per-map terms (1/B) * sum_b w[k] * ||f'_k^b - f_k^b||^2; they sum to the loss.
template <typename T>
std::vector<double> semantic_components(TaskNetwork<T>& net, const Tensor<T>& x_clean, const Tensor<T>& x_recon,
                                        std::span<const double> w);

// Gradient-free semantic loss value.
template <typename T>
double semantic_loss_value(TaskNetwork<T>& net, const Tensor<T>& x_clean, const Tensor<T>& x_recon,
                           std::span<const double> w);

}  // namespace sdjscc
