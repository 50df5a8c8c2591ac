#pragma once

// Convolution kernels. `kernels::reference` holds the direct serial loops the
// tests compare against; the unqualified versions are the im2col + GEMM
// kernels parallelised over the batch with OpenMP.
//
// Layouts: input [B,Cin,H,W], weight [Cout,Cin,kh,kw], output [B,Cout,H',W'],
// all row-major. Backward entry points accumulate into their outputs.
// Results of the parallel kernels do not depend on the thread count.

#include <cstddef>
#include <span>

namespace sdjscc::kernels {

struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t in_height = 1;
  std::size_t in_width = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_height() const { return (in_height + 2 * padding - kernel_h) / stride + 1; }
  std::size_t out_width() const { return (in_width + 2 * padding - kernel_w) / stride + 1; }
  std::size_t patch_size() const { return in_channels * kernel_h * kernel_w; }
  std::size_t input_size() const { return batch * in_channels * in_height * in_width; }
  std::size_t output_size() const { return batch * out_channels * out_height() * out_width(); }
  std::size_t weight_size() const { return out_channels * patch_size(); }
};

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output);

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_output,
                           std::span<const T> weight, std::span<T> grad_input);

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> grad_output,
                            std::span<const T> input, std::span<T> grad_weight,
                            std::span<T> grad_bias);

}  // namespace reference

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output);

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_output,
                           std::span<const T> weight, std::span<T> grad_input);

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> grad_output,
                            std::span<const T> input, std::span<T> grad_weight,
                            std::span<T> grad_bias);

// Caps the OpenMP pool. SDJSCC_THREADS (if set and positive) bounds the value
// chosen here; 0 means "all available cores".
int configure_threads(int requested = 0);
int max_threads();

}  // namespace sdjscc::kernels
