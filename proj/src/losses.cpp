#include "sdjscc/losses.hpp"

#include "sdjscc/ops.hpp"

namespace sdjscc {

namespace {

void check_weights(const Shape& fs, std::span<const double> w) {
  if (fs.size() != 4) throw DimensionError("semantic loss: features must be [B,K,M,N], got " + shape_string(fs));
  if (w.size() != fs[1]) {
    throw ConfigError("semantic loss: " + std::to_string(w.size()) + " weights for " + std::to_string(fs[1]) +
                      " feature maps");
  }
}

template <typename T>
std::vector<double> per_map(const Tensor<T>& a, const Tensor<T>& b, std::span<const double> w) {
  require_shape(a.shape, b.shape, "semantic loss features");
  check_weights(a.shape, w);
  const std::size_t B = a.shape[0], K = a.shape[1], area = a.shape[2] * a.shape[3];
  std::vector<double> out(K, 0.0);
  for (std::size_t bi = 0; bi < B; ++bi)
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t off = (bi * K + k) * area;
      double acc = 0;
      for (std::size_t i = 0; i < area; ++i) {
        const double d = static_cast<double>(a[off + i]) - static_cast<double>(b[off + i]);
        acc += d * d;
      }
      out[k] += w[k] * acc;
    }
  for (double& v : out) v /= static_cast<double>(B);
  return out;
}

}  // namespace

template <typename T>
Var pixel_loss(Tape<T>& tape, Var x, Var x_recon) {
  return mse(tape, x_recon, x);
}

template <typename T>
Var weighted_feature_distance(Tape<T>& tape, Var f_recon, const Tensor<T>& clean, std::span<const double> w) {
  const Tensor<T>& fv = tape.value(f_recon);
  const std::vector<double> parts = per_map(fv, clean, w);
  double total = 0;
  for (double p : parts) total += p;
  std::vector<double> weights(w.begin(), w.end());
  return tape.record("semantic_loss", Tensor<T>(Shape{1}, static_cast<T>(total)), {f_recon},
                     [f_recon, clean, weights](Tape<T>& t, Var self) {
                       const Tensor<T>& fv = t.value(f_recon);
                       const std::size_t B = fv.shape[0], K = fv.shape[1], area = fv.shape[2] * fv.shape[3];
                       const double g = static_cast<double>(t.grad(self)[0]) * 2.0 / static_cast<double>(B);
                       auto gf = t.grad_mut(f_recon);
                       for (std::size_t bi = 0; bi < B; ++bi)
                         for (std::size_t k = 0; k < K; ++k) {
                           const T s = static_cast<T>(g * weights[k]);
                           const std::size_t off = (bi * K + k) * area;
                           for (std::size_t i = 0; i < area; ++i) gf[off + i] += s * (fv[off + i] - clean[off + i]);
                         }
                     });
}

template <typename T>
Var semantic_loss(Tape<T>& tape, TaskNetwork<T>& net, const Tensor<T>& x_clean, Var x_recon,
                  std::span<const double> w) {
  if (!net.frozen()) throw ContractError("semantic loss: task network must be frozen");
  const FeatureGeometry g = net.geometry();
  if (w.size() != g.K) {
    throw ConfigError("semantic loss: " + std::to_string(w.size()) + " weights for a task net with K=" +
                      std::to_string(g.K));
  }
  const Tensor<T> clean = net.extract_features(x_clean);
  return weighted_feature_distance(tape, net.features(tape, x_recon), clean, w);
}

template <typename T>
std::vector<double> semantic_components(TaskNetwork<T>& net, const Tensor<T>& x_clean, const Tensor<T>& x_recon,
                                        std::span<const double> w) {
  return per_map(net.extract_features(x_recon), net.extract_features(x_clean), w);
}

template <typename T>
double semantic_loss_value(TaskNetwork<T>& net, const Tensor<T>& x_clean, const Tensor<T>& x_recon,
                           std::span<const double> w) {
  double total = 0;
  for (double p : semantic_components(net, x_clean, x_recon, w)) total += p;
  return total;
}

#define SDJSCC_INSTANTIATE(T)                                                                             \
  template Var pixel_loss<T>(Tape<T>&, Var, Var);                                                         \
  template Var weighted_feature_distance<T>(Tape<T>&, Var, const Tensor<T>&, std::span<const double>);    \
  template Var semantic_loss<T>(Tape<T>&, TaskNetwork<T>&, const Tensor<T>&, Var, std::span<const double>); \
  template std::vector<double> semantic_components<T>(TaskNetwork<T>&, const Tensor<T>&, const Tensor<T>&, \
                                                      std::span<const double>);                           \
  template double semantic_loss_value<T>(TaskNetwork<T>&, const Tensor<T>&, const Tensor<T>&,             \
                                         std::span<const double>);

SDJSCC_INSTANTIATE(float)
SDJSCC_INSTANTIATE(double)

}  // namespace sdjscc
