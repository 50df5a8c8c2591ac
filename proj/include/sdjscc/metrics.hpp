#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sdjscc/tensor.hpp"

namespace sdjscc {

struct ClassificationScores {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
  // Classes that never occur in the labels (their F1 counts as 0).
  std::vector<std::size_t> unsupported;
};

ClassificationScores accuracy_f1(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                 std::size_t num_classes);

double mean_squared_error(std::span<const double> a, std::span<const double> b);

// 10*log10(1/MSE) with peak 1; +inf when the inputs are identical.
double psnr_from_mse(double mse);
double psnr(std::span<const double> a, std::span<const double> b);

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b);

// Mean local SSIM of one grayscale image pair [H,W] (row-major), uniform
// 8x8 window at stride 1, K1=0.01, K2=0.03, L=1.
double ssim_gray(std::span<const double> a, std::span<const double> b, std::size_t height, std::size_t width);

// Batch mean of per-image SSIM for [B,C,H,W] tensors; channels are averaged
// to grayscale first.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b);

constexpr std::size_t kSsimWindow = 8;

}  // namespace sdjscc
