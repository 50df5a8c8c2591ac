#include <algorithm>
#include <vector>

#include "sdjscc/kernels.hpp"

namespace sdjscc::kernels {

namespace {

// cols[kk, p] with kk = (ci*kh + ky)*kw + kx and p = oy*ow + ox.
template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* cols) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), P = oh * ow;
  const long H = static_cast<long>(g.in_height), W = static_cast<long>(g.in_width);
  const long pad = static_cast<long>(g.padding), s = static_cast<long>(g.stride);
  for (std::size_t ci = 0; ci < g.in_channels; ++ci)
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        T* row = cols + ((ci * g.kernel_h + ky) * g.kernel_w + kx) * P;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const long iy = static_cast<long>(oy) * s + static_cast<long>(ky) - pad;
          T* dst = row + oy * ow;
          if (iy < 0 || iy >= H) {
            std::fill(dst, dst + ow, T{0});
            continue;
          }
          const T* src = image + (ci * g.in_height + static_cast<std::size_t>(iy)) * g.in_width;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const long ix = static_cast<long>(ox) * s + static_cast<long>(kx) - pad;
            dst[ox] = (ix >= 0 && ix < W) ? src[ix] : T{0};
          }
        }
      }
}

template <typename T>
void col2im_accumulate(const ConvGeometry& g, const T* cols, T* image) {
  const std::size_t oh = g.out_height(), ow = g.out_width(), P = oh * ow;
  const long H = static_cast<long>(g.in_height), W = static_cast<long>(g.in_width);
  const long pad = static_cast<long>(g.padding), s = static_cast<long>(g.stride);
  for (std::size_t ci = 0; ci < g.in_channels; ++ci)
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky)
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        const T* row = cols + ((ci * g.kernel_h + ky) * g.kernel_w + kx) * P;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const long iy = static_cast<long>(oy) * s + static_cast<long>(ky) - pad;
          if (iy < 0 || iy >= H) continue;
          T* dst = image + (ci * g.in_height + static_cast<std::size_t>(iy)) * g.in_width;
          const T* src = row + oy * ow;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const long ix = static_cast<long>(ox) * s + static_cast<long>(kx) - pad;
            if (ix >= 0 && ix < W) dst[ix] += src[ox];
          }
        }
      }
}

template <typename T>
std::vector<T>& scratch(std::size_t n) {
  thread_local std::vector<T> buffer;
  if (buffer.size() < n) buffer.resize(n);
  return buffer;
}

// out[co, :] += sum_kk w[co, kk] * cols[kk, :], four output rows at a time so
// each cols row is read once per block.
template <typename T>
void gemm_rows(std::size_t rows, std::size_t KK, std::size_t P, const T* w, const T* cols, T* out) {
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    T* o0 = out + (r + 0) * P;
    T* o1 = out + (r + 1) * P;
    T* o2 = out + (r + 2) * P;
    T* o3 = out + (r + 3) * P;
    const T* w0 = w + (r + 0) * KK;
    const T* w1 = w + (r + 1) * KK;
    const T* w2 = w + (r + 2) * KK;
    const T* w3 = w + (r + 3) * KK;
    for (std::size_t kk = 0; kk < KK; ++kk) {
      const T* c = cols + kk * P;
      const T a0 = w0[kk], a1 = w1[kk], a2 = w2[kk], a3 = w3[kk];
#pragma omp simd
      for (std::size_t p = 0; p < P; ++p) {
        const T v = c[p];
        o0[p] += a0 * v;
        o1[p] += a1 * v;
        o2[p] += a2 * v;
        o3[p] += a3 * v;
      }
    }
  }
  for (; r < rows; ++r) {
    T* o = out + r * P;
    const T* wr = w + r * KK;
    for (std::size_t kk = 0; kk < KK; ++kk) {
      const T* c = cols + kk * P;
      const T a = wr[kk];
#pragma omp simd
      for (std::size_t p = 0; p < P; ++p) o[p] += a * c[p];
    }
  }
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> output) {
  const std::size_t P = g.out_height() * g.out_width(), KK = g.patch_size();
  const std::size_t in_stride = g.in_channels * g.in_height * g.in_width;
  const long batch = static_cast<long>(g.batch);
#pragma omp parallel for schedule(static) if (batch > 1)
  for (long b = 0; b < batch; ++b) {
    std::vector<T>& cols = scratch<T>(KK * P);
    im2col(g, input.data() + b * in_stride, cols.data());
    T* out = output.data() + b * g.out_channels * P;
    for (std::size_t co = 0; co < g.out_channels; ++co)
      std::fill(out + co * P, out + (co + 1) * P, bias.empty() ? T{0} : bias[co]);
    gemm_rows(g.out_channels, KK, P, weight.data(), cols.data(), out);
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> grad_output,
                           std::span<const T> weight, std::span<T> grad_input) {
  const std::size_t P = g.out_height() * g.out_width(), KK = g.patch_size();
  const std::size_t in_stride = g.in_channels * g.in_height * g.in_width;
  // wt[kk, co] so dcols = wt * grad_out is again a row-streaming product.
  std::vector<T> wt(KK * g.out_channels);
  for (std::size_t co = 0; co < g.out_channels; ++co)
    for (std::size_t kk = 0; kk < KK; ++kk) wt[kk * g.out_channels + co] = weight[co * KK + kk];
  const long batch = static_cast<long>(g.batch);
#pragma omp parallel for schedule(static) if (batch > 1)
  for (long b = 0; b < batch; ++b) {
    std::vector<T>& dcols = scratch<T>(KK * P);
    std::fill(dcols.begin(), dcols.begin() + KK * P, T{0});
    gemm_rows(KK, g.out_channels, P, wt.data(), grad_output.data() + b * g.out_channels * P,
              dcols.data());
    col2im_accumulate(g, dcols.data(), grad_input.data() + b * in_stride);
  }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> grad_output,
                            std::span<const T> input, std::span<T> grad_weight,
                            std::span<T> grad_bias) {
  const std::size_t P = g.out_height() * g.out_width(), KK = g.patch_size();
  const std::size_t Cout = g.out_channels;
  const std::size_t in_stride = g.in_channels * g.in_height * g.in_width;
  const std::size_t per_image = Cout * KK + Cout;
  // One partial per image, reduced in image order afterwards: the sum does not
  // depend on how images were spread over threads.
  std::vector<T> partial(g.batch * per_image);
  const long batch = static_cast<long>(g.batch);
#pragma omp parallel for schedule(static) if (batch > 1)
  for (long b = 0; b < batch; ++b) {
    std::vector<T>& cols = scratch<T>(KK * P);
    im2col(g, input.data() + b * in_stride, cols.data());
    const T* go = grad_output.data() + b * Cout * P;
    T* pw = partial.data() + b * per_image;
    T* pb = pw + Cout * KK;
    std::size_t co = 0;
    for (; co + 4 <= Cout; co += 4) {
      const T* g0 = go + (co + 0) * P;
      const T* g1 = go + (co + 1) * P;
      const T* g2 = go + (co + 2) * P;
      const T* g3 = go + (co + 3) * P;
      for (std::size_t kk = 0; kk < KK; ++kk) {
        const T* c = cols.data() + kk * P;
        T a0 = 0, a1 = 0, a2 = 0, a3 = 0;
#pragma omp simd reduction(+ : a0, a1, a2, a3)
        for (std::size_t p = 0; p < P; ++p) {
          const T v = c[p];
          a0 += g0[p] * v;
          a1 += g1[p] * v;
          a2 += g2[p] * v;
          a3 += g3[p] * v;
        }
        pw[(co + 0) * KK + kk] = a0;
        pw[(co + 1) * KK + kk] = a1;
        pw[(co + 2) * KK + kk] = a2;
        pw[(co + 3) * KK + kk] = a3;
      }
    }
    for (; co < Cout; ++co) {
      const T* gr = go + co * P;
      for (std::size_t kk = 0; kk < KK; ++kk) {
        const T* c = cols.data() + kk * P;
        T a = 0;
#pragma omp simd reduction(+ : a)
        for (std::size_t p = 0; p < P; ++p) a += gr[p] * c[p];
        pw[co * KK + kk] = a;
      }
    }
    for (std::size_t c = 0; c < Cout; ++c) {
      const T* gr = go + c * P;
      T a = 0;
#pragma omp simd reduction(+ : a)
      for (std::size_t p = 0; p < P; ++p) a += gr[p];
      pb[c] = a;
    }
  }
  const long n = static_cast<long>(per_image);
#pragma omp parallel for schedule(static) if (n > 4096)
  for (long i = 0; i < n; ++i) {
    T acc = 0;
    for (std::size_t b = 0; b < g.batch; ++b) acc += partial[b * per_image + i];
    const auto idx = static_cast<std::size_t>(i);
    if (idx < Cout * KK) {
      grad_weight[idx] += acc;
    } else if (!grad_bias.empty()) {
      grad_bias[idx - Cout * KK] += acc;
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

}  // namespace sdjscc::kernels
