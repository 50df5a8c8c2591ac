#include "sdjscc/kernels.hpp"

namespace sdjscc::kernels::reference {

namespace {

// Input coordinate for output position `o` and kernel tap `k`; negative or
// out-of-range values fall in the zero padding.
inline long source_index(std::size_t o, std::size_t k, const ConvGeometry& g) {
  return static_cast<long>(o * g.stride + k) - static_cast<long>(g.padding);
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          T acc = bias.empty() ? T{0} : bias[co];
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              const long iy = source_index(oy, ky, g);
              if (iy < 0 || iy >= static_cast<long>(g.in_height)) continue;
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const long ix = source_index(ox, kx, g);
                if (ix < 0 || ix >= static_cast<long>(g.in_width)) continue;
                acc += input[((b * g.in_channels + ci) * g.in_height + iy) * g.in_width + ix] *
                       weight[((co * g.in_channels + ci) * g.kernel_h + ky) * g.kernel_w + kx];
              }
            }
          output[((b * g.out_channels + co) * oh + oy) * ow + ox] = acc;
        }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_output,
                           std::span<const T> weight, std::span<T> grad_input) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T go = grad_output[((b * g.out_channels + co) * oh + oy) * ow + ox];
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              const long iy = source_index(oy, ky, g);
              if (iy < 0 || iy >= static_cast<long>(g.in_height)) continue;
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const long ix = source_index(ox, kx, g);
                if (ix < 0 || ix >= static_cast<long>(g.in_width)) continue;
                grad_input[((b * g.in_channels + ci) * g.in_height + iy) * g.in_width + ix] +=
                    go * weight[((co * g.in_channels + ci) * g.kernel_h + ky) * g.kernel_w + kx];
              }
            }
        }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> grad_output,
                            std::span<const T> input, std::span<T> grad_weight,
                            std::span<T> grad_bias) {
  const std::size_t oh = g.out_height(), ow = g.out_width();
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const T go = grad_output[((b * g.out_channels + co) * oh + oy) * ow + ox];
          if (!grad_bias.empty()) grad_bias[co] += go;
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              const long iy = source_index(oy, ky, g);
              if (iy < 0 || iy >= static_cast<long>(g.in_height)) continue;
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const long ix = source_index(ox, kx, g);
                if (ix < 0 || ix >= static_cast<long>(g.in_width)) continue;
                grad_weight[((co * g.in_channels + ci) * g.kernel_h + ky) * g.kernel_w + kx] +=
                    go * input[((b * g.in_channels + ci) * g.in_height + iy) * g.in_width + ix];
              }
            }
        }
}

#define SDJSCC_INSTANTIATE(T)                                                                    \
  template void conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>, \
                                  std::span<const T>, std::span<T>);                           \
  template void conv2d_backward_input<T>(const ConvGeometry&, std::span<const T>,              \
                                         std::span<const T>, std::span<T>);                    \
  template void conv2d_backward_weight<T>(const ConvGeometry&, std::span<const T>,             \
                                          std::span<const T>, std::span<T>, std::span<T>);

SDJSCC_INSTANTIATE(float)
SDJSCC_INSTANTIATE(double)

}  // namespace sdjscc::kernels::reference
