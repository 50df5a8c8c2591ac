#include "sdjscc/ops.hpp"

#include <algorithm>
#include <cmath>

#include "sdjscc/kernels.hpp"

namespace sdjscc {

namespace {

constexpr long kParallelThreshold = 1L << 15;

template <typename T>
void require_same_shape(const Tape<T>& tape, Var a, Var b, std::string_view op) {
  require_shape(tape.shape(b), tape.shape(a), op);
}

void require_rank(const Shape& s, std::size_t rank, std::string_view op) {
  if (s.size() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(s));
  }
}

}  // namespace

template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var w, Var b, std::size_t stride, std::size_t padding) {
  const Shape& xs = tape.shape(x);
  const Shape& ws = tape.shape(w);
  require_rank(xs, 4, "conv2d input");
  require_rank(ws, 4, "conv2d weight");
  if (ws[1] != xs[1]) {
    throw DimensionError("conv2d: input axis 1 (channels) is " + std::to_string(xs[1]) +
                         ", weight expects " + std::to_string(ws[1]));
  }
  require_shape(tape.shape(b), Shape{ws[0]}, "conv2d bias");
  if (stride < 1) throw DimensionError("conv2d: stride must be >= 1");
  if (xs[2] + 2 * padding < ws[2]) {
    throw DimensionError("conv2d: input axis 2 (height) " + std::to_string(xs[2]) +
                         " too small for kernel " + std::to_string(ws[2]));
  }
  if (xs[3] + 2 * padding < ws[3]) {
    throw DimensionError("conv2d: input axis 3 (width) " + std::to_string(xs[3]) +
                         " too small for kernel " + std::to_string(ws[3]));
  }
  kernels::ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3], stride, padding};
  Tensor<T> out(Shape{g.batch, g.out_channels, g.out_height(), g.out_width()});
  kernels::conv2d_forward<T>(g, tape.value(x).values(), tape.value(w).values(), tape.value(b).values(),
                             out.values());
  return tape.record("conv2d", std::move(out), {x, w, b}, [x, w, b, g](Tape<T>& t, Var self) {
    auto go = t.grad(self);
    if (t.requires_grad(x)) {
      kernels::conv2d_backward_input<T>(g, go, t.value(w).values(), t.grad_mut(x));
    }
    const bool need_w = t.requires_grad(w), need_b = t.requires_grad(b);
    if (need_w || need_b) {
      std::vector<T> gw_scratch, gb_scratch;
      std::span<T> gw, gb;
      if (need_w) {
        gw = t.grad_mut(w);
      } else {
        gw_scratch.assign(g.weight_size(), T{0});
        gw = gw_scratch;
      }
      if (need_b) {
        gb = t.grad_mut(b);
      } else {
        gb_scratch.assign(g.out_channels, T{0});
        gb = gb_scratch;
      }
      kernels::conv2d_backward_weight<T>(g, go, t.value(x).values(), gw, gb);
    }
  });
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  const Tensor<T>& in = tape.value(x);
  Tensor<T> out(in.shape);
  const long n = static_cast<long>(in.size());
#pragma omp parallel for if (n > kParallelThreshold)
  for (long i = 0; i < n; ++i) out[i] = in[i] > T{0} ? in[i] : T{0};
  return tape.record("relu", std::move(out), {x}, [x](Tape<T>& t, Var self) {
    auto go = t.grad(self);
    const Tensor<T>& y = t.value(self);
    auto gx = t.grad_mut(x);
    const long n = static_cast<long>(gx.size());
#pragma omp parallel for if (n > kParallelThreshold)
    for (long i = 0; i < n; ++i) {
      if (y[i] > T{0}) gx[i] += go[i];
    }
  });
}

template <typename T>
Var sigmoid(Tape<T>& tape, Var x) {
  const Tensor<T>& in = tape.value(x);
  Tensor<T> out(in.shape);
  const long n = static_cast<long>(in.size());
#pragma omp parallel for if (n > kParallelThreshold)
  for (long i = 0; i < n; ++i) out[i] = T{1} / (T{1} + std::exp(-in[i]));
  return tape.record("sigmoid", std::move(out), {x}, [x](Tape<T>& t, Var self) {
    auto go = t.grad(self);
    const Tensor<T>& y = t.value(self);
    auto gx = t.grad_mut(x);
    const long n = static_cast<long>(gx.size());
#pragma omp parallel for if (n > kParallelThreshold)
    for (long i = 0; i < n; ++i) gx[i] += go[i] * y[i] * (T{1} - y[i]);
  });
}

template <typename T>
Var linear(Tape<T>& tape, Var x, Var w, Var b) {
  const Shape& xs = tape.shape(x);
  const Shape& ws = tape.shape(w);
  require_rank(xs, 2, "linear input");
  require_rank(ws, 2, "linear weight");
  if (ws[1] != xs[1]) {
    throw DimensionError("linear: input axis 1 is " + std::to_string(xs[1]) + ", weight expects " +
                         std::to_string(ws[1]));
  }
  require_shape(tape.shape(b), Shape{ws[0]}, "linear bias");
  const std::size_t B = xs[0], In = xs[1], Out = ws[0];
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& wv = tape.value(w);
  const Tensor<T>& bv = tape.value(b);
  Tensor<T> out(Shape{B, Out});
  for (std::size_t i = 0; i < B; ++i)
    for (std::size_t o = 0; o < Out; ++o) {
      T acc = bv[o];
      for (std::size_t k = 0; k < In; ++k) acc += xv[i * In + k] * wv[o * In + k];
      out[i * Out + o] = acc;
    }
  return tape.record("linear", std::move(out), {x, w, b}, [x, w, b, B, In, Out](Tape<T>& t, Var self) {
    auto go = t.grad(self);
    if (t.requires_grad(x)) {
      auto gx = t.grad_mut(x);
      const Tensor<T>& wv = t.value(w);
      for (std::size_t i = 0; i < B; ++i)
        for (std::size_t o = 0; o < Out; ++o)
          for (std::size_t k = 0; k < In; ++k) gx[i * In + k] += go[i * Out + o] * wv[o * In + k];
    }
    if (t.requires_grad(w)) {
      auto gw = t.grad_mut(w);
      const Tensor<T>& xv = t.value(x);
      for (std::size_t i = 0; i < B; ++i)
        for (std::size_t o = 0; o < Out; ++o)
          for (std::size_t k = 0; k < In; ++k) gw[o * In + k] += go[i * Out + o] * xv[i * In + k];
    }
    if (t.requires_grad(b)) {
      auto gb = t.grad_mut(b);
      for (std::size_t i = 0; i < B; ++i)
        for (std::size_t o = 0; o < Out; ++o) gb[o] += go[i * Out + o];
    }
  });
}

template <typename T>
Var softmax(Tape<T>& tape, Var x) {
  const Tensor<T>& in = tape.value(x);
  if (in.ndim() == 0) throw DimensionError("softmax: scalar input has no axis");
  const std::size_t D = in.shape.back(), rows = in.size() / D;
  Tensor<T> out(in.shape);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* src = in.data.data() + r * D;
    T* dst = out.data.data() + r * D;
    const T m = *std::max_element(src, src + D);
    T z = 0;
    for (std::size_t i = 0; i < D; ++i) z += (dst[i] = std::exp(src[i] - m));
    for (std::size_t i = 0; i < D; ++i) dst[i] /= z;
  }
  return tape.record("softmax", std::move(out), {x}, [x, D, rows](Tape<T>& t, Var self) {
    auto go = t.grad(self);
    const Tensor<T>& y = t.value(self);
    auto gx = t.grad_mut(x);
    for (std::size_t r = 0; r < rows; ++r) {
      T dot = 0;
      for (std::size_t i = 0; i < D; ++i) dot += go[r * D + i] * y[r * D + i];
      for (std::size_t i = 0; i < D; ++i) gx[r * D + i] += y[r * D + i] * (go[r * D + i] - dot);
    }
  });
}

template <typename T>
Var nearest_upsample2x(Tape<T>& tape, Var x) {
  const Shape& xs = tape.shape(x);
  require_rank(xs, 4, "nearest_upsample2x");
  const std::size_t planes = xs[0] * xs[1], H = xs[2], W = xs[3];
  const Tensor<T>& in = tape.value(x);
  Tensor<T> out(Shape{xs[0], xs[1], 2 * H, 2 * W});
  const long np = static_cast<long>(planes);
#pragma omp parallel for if (np * static_cast<long>(H * W) > kParallelThreshold)
  for (long p = 0; p < np; ++p) {
    const T* src = in.data.data() + p * H * W;
    T* dst = out.data.data() + p * 4 * H * W;
    for (std::size_t y = 0; y < 2 * H; ++y)
      for (std::size_t xx = 0; xx < 2 * W; ++xx) dst[y * 2 * W + xx] = src[(y / 2) * W + xx / 2];
  }
  return tape.record("nearest_upsample2x", std::move(out), {x}, [x, planes, H, W](Tape<T>& t, Var self) {
    auto go = t.grad(self);
    auto gx = t.grad_mut(x);
    const long np = static_cast<long>(planes);
#pragma omp parallel for if (np * static_cast<long>(H * W) > kParallelThreshold)
    for (long p = 0; p < np; ++p) {
      const T* src = go.data() + p * 4 * H * W;
      T* dst = gx.data() + p * H * W;
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t xx = 0; xx < W; ++xx) {
          const T* s = src + (2 * y) * 2 * W + 2 * xx;
          dst[y * W + xx] += s[0] + s[1] + s[2 * W] + s[2 * W + 1];
        }
    }
  });
}

template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x) {
  const Shape& xs = tape.shape(x);
  require_rank(xs, 4, "global_avg_pool");
  const std::size_t planes = xs[0] * xs[1], area = xs[2] * xs[3];
  const Tensor<T>& in = tape.value(x);
  Tensor<T> out(Shape{xs[0], xs[1]});
  for (std::size_t p = 0; p < planes; ++p) {
    T acc = 0;
    for (std::size_t i = 0; i < area; ++i) acc += in[p * area + i];
    out[p] = acc / static_cast<T>(area);
  }
  return tape.record("global_avg_pool", std::move(out), {x}, [x, planes, area](Tape<T>& t, Var self) {
    auto go = t.grad(self);
    auto gx = t.grad_mut(x);
    for (std::size_t p = 0; p < planes; ++p) {
      const T g = go[p] / static_cast<T>(area);
      for (std::size_t i = 0; i < area; ++i) gx[p * area + i] += g;
    }
  });
}

template <typename T>
Var mse(Tape<T>& tape, Var a, Var b) {
  require_same_shape(tape, a, b, "mse");
  const Tensor<T>& av = tape.value(a);
  const Tensor<T>& bv = tape.value(b);
  const std::size_t n = av.size();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(av[i]) - static_cast<double>(bv[i]);
    acc += d * d;
  }
  Tensor<T> out(Shape{1}, static_cast<T>(acc / static_cast<double>(n)));
  return tape.record("mse", std::move(out), {a, b}, [a, b, n](Tape<T>& t, Var self) {
    const T g = t.grad(self)[0] * T{2} / static_cast<T>(n);
    const Tensor<T>& av = t.value(a);
    const Tensor<T>& bv = t.value(b);
    if (t.requires_grad(a)) {
      auto ga = t.grad_mut(a);
      for (std::size_t i = 0; i < n; ++i) ga[i] += g * (av[i] - bv[i]);
    }
    if (t.requires_grad(b)) {
      auto gb = t.grad_mut(b);
      for (std::size_t i = 0; i < n; ++i) gb[i] -= g * (av[i] - bv[i]);
    }
  });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  require_same_shape(tape, a, b, "add");
  const Tensor<T>& av = tape.value(a);
  const Tensor<T>& bv = tape.value(b);
  Tensor<T> out(av.shape);
  const long n = static_cast<long>(av.size());
#pragma omp parallel for if (n > kParallelThreshold)
  for (long i = 0; i < n; ++i) out[i] = av[i] + bv[i];
  return tape.record("add", std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    auto go = t.grad(self);
    for (Var in : {a, b}) {
      if (!t.requires_grad(in)) continue;
      auto g = t.grad_mut(in);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
    }
  });
}

template <typename T>
Var sub(Tape<T>& tape, Var a, Var b) {
  require_same_shape(tape, a, b, "sub");
  const Tensor<T>& av = tape.value(a);
  const Tensor<T>& bv = tape.value(b);
  Tensor<T> out(av.shape);
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  return tape.record("sub", std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    auto go = t.grad(self);
    if (t.requires_grad(a)) {
      auto g = t.grad_mut(a);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i];
    }
    if (t.requires_grad(b)) {
      auto g = t.grad_mut(b);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= go[i];
    }
  });
}

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b) {
  require_same_shape(tape, a, b, "mul");
  const Tensor<T>& av = tape.value(a);
  const Tensor<T>& bv = tape.value(b);
  Tensor<T> out(av.shape);
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  return tape.record("mul", std::move(out), {a, b}, [a, b](Tape<T>& t, Var self) {
    auto go = t.grad(self);
    if (t.requires_grad(a)) {
      auto g = t.grad_mut(a);
      const Tensor<T>& bv = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      auto g = t.grad_mut(b);
      const Tensor<T>& av = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * av[i];
    }
  });
}

template <typename T>
Var scale(Tape<T>& tape, Var x, T factor) {
  const Tensor<T>& in = tape.value(x);
  Tensor<T> out(in.shape);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * factor;
  return tape.record("scale", std::move(out), {x}, [x, factor](Tape<T>& t, Var self) {
    auto go = t.grad(self);
    auto g = t.grad_mut(x);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += go[i] * factor;
  });
}

template <typename T>
Var sum(Tape<T>& tape, Var x) {
  const Tensor<T>& in = tape.value(x);
  T acc = 0;
  for (T v : in.data) acc += v;
  return tape.record("sum", Tensor<T>(Shape{1}, acc), {x}, [x](Tape<T>& t, Var self) {
    const T go = t.grad(self)[0];
    auto g = t.grad_mut(x);
    for (T& v : g) v += go;
  });
}

template <typename T>
Var cross_entropy(Tape<T>& tape, Var logits, std::span<const std::size_t> labels) {
  const Shape& ls = tape.shape(logits);
  require_rank(ls, 2, "cross_entropy");
  const std::size_t B = ls[0], C = ls[1];
  if (labels.size() != B) {
    throw DimensionError("cross_entropy: axis 0 (batch) is " + std::to_string(B) + ", got " +
                         std::to_string(labels.size()) + " labels");
  }
  const Tensor<T>& z = tape.value(logits);
  std::vector<T> probs(B * C);
  double loss = 0;
  for (std::size_t b = 0; b < B; ++b) {
    if (labels[b] >= C) throw ContractError("cross_entropy: label out of range");
    const T* row = z.data.data() + b * C;
    const T m = *std::max_element(row, row + C);
    T total = 0;
    for (std::size_t c = 0; c < C; ++c) total += (probs[b * C + c] = std::exp(row[c] - m));
    for (std::size_t c = 0; c < C; ++c) probs[b * C + c] /= total;
    loss -= static_cast<double>(row[labels[b]] - m) - std::log(static_cast<double>(total));
  }
  std::vector<std::size_t> targets(labels.begin(), labels.end());
  return tape.record("cross_entropy", Tensor<T>(Shape{1}, static_cast<T>(loss / static_cast<double>(B))),
                     {logits},
                     [logits, B, C, probs = std::move(probs), targets = std::move(targets)](Tape<T>& t, Var self) {
                       const T g = t.grad(self)[0] / static_cast<T>(B);
                       auto gz = t.grad_mut(logits);
                       for (std::size_t b = 0; b < B; ++b)
                         for (std::size_t c = 0; c < C; ++c)
                           gz[b * C + c] += g * (probs[b * C + c] - (c == targets[b] ? T{1} : T{0}));
                     });
}

#define SDJSCC_INSTANTIATE(T)                                                  \
  template Var conv2d<T>(Tape<T>&, Var, Var, Var, std::size_t, std::size_t); \
  template Var relu<T>(Tape<T>&, Var);                                        \
  template Var sigmoid<T>(Tape<T>&, Var);                                     \
  template Var linear<T>(Tape<T>&, Var, Var, Var);                            \
  template Var softmax<T>(Tape<T>&, Var);                                     \
  template Var nearest_upsample2x<T>(Tape<T>&, Var);                          \
  template Var global_avg_pool<T>(Tape<T>&, Var);                             \
  template Var mse<T>(Tape<T>&, Var, Var);                                    \
  template Var add<T>(Tape<T>&, Var, Var);                                    \
  template Var sub<T>(Tape<T>&, Var, Var);                                    \
  template Var mul<T>(Tape<T>&, Var, Var);                                    \
  template Var scale<T>(Tape<T>&, Var, T);                                    \
  template Var sum<T>(Tape<T>&, Var);                                         \
  template Var cross_entropy<T>(Tape<T>&, Var, std::span<const std::size_t>);

SDJSCC_INSTANTIATE(float)
SDJSCC_INSTANTIATE(double)

}  // namespace sdjscc
