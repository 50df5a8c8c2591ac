#include "sdjscc/gsw.hpp"

#include <algorithm>
#include <cmath>

namespace sdjscc {

template <typename T>
double per_class_weight(Tape<T>& tape, Var y_c, Var features, std::size_t k) {
  Shape fs = tape.shape(features);
  if (fs.size() == 4 && fs[0] == 1) fs.erase(fs.begin());
  if (fs.size() != 3) {
    throw DimensionError("per_class_weight: features must be [K,M,N] or [1,K,M,N], got " +
                         shape_string(tape.shape(features)));
  }
  if (k >= fs[0]) throw DimensionError("per_class_weight: map index " + std::to_string(k) + " >= K");
  if (!tape.requires_grad(features)) throw ContractError("per_class_weight: gradient unavailable, features are detached");
  // y independent of the features: the gradient is identically zero.
  if (!tape.requires_grad(y_c)) return 0.0;
  tape.backward(y_c);
  if (!tape.has_grad(features)) return 0.0;
  const auto g = tape.grad(features);
  const std::size_t area = fs[1] * fs[2];
  double acc = 0;
  for (std::size_t i = 0; i < area; ++i) acc += static_cast<double>(g[k * area + i]);
  return acc / static_cast<double>(area);
}

template <typename T>
std::vector<std::vector<double>> per_image_weights(TaskNetwork<T>& net, const Tensor<T>& images, std::size_t batch) {
  if (!net.frozen()) throw ContractError("gsw: task network must be frozen");
  if (images.ndim() != 4 || images.shape[0] == 0) throw ConfigError("gsw: calibration set is empty");
  const FeatureGeometry geo = net.geometry();
  const std::size_t n = images.shape[0], C = net.arch().num_classes, area = geo.M * geo.N;
  const std::size_t per_image = numel(images.shape) / n;
  std::vector<std::vector<double>> out(n, std::vector<double>(geo.K, 0.0));
  batch = std::max<std::size_t>(batch, 1);
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t B = std::min(n, start + batch) - start;
    Shape shape = images.shape;
    shape[0] = B;
    Tensor<T> x(shape, std::vector<T>(images.data.begin() + static_cast<long>(start * per_image),
                                      images.data.begin() + static_cast<long>((start + B) * per_image)));
    Tape<T> tape;
    Var f = net.features(tape, tape.constant(std::move(x)));
    Var leaf = tape.leaf(tape.value(f));
    Var y = net.head(tape, leaf);
    std::vector<T> seed(B * C);
    for (std::size_t c = 0; c < C; ++c) {
      // Image b's logits depend only on image b's features, so seeding the
      // whole column yields every image's d(y_b^c)/d(f_b) in one pass.
      std::fill(seed.begin(), seed.end(), T{0});
      for (std::size_t b = 0; b < B; ++b) seed[b * C + c] = T{1};
      tape.backward(y, seed);
      const auto g = tape.grad(leaf);
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t k = 0; k < geo.K; ++k) {
          double acc = 0;
          const T* gk = g.data() + (b * geo.K + k) * area;
          for (std::size_t i = 0; i < area; ++i) acc += static_cast<double>(gk[i]);
          out[start + b][k] += acc / static_cast<double>(area);
        }
    }
    for (std::size_t b = 0; b < B; ++b)
      for (double& w : out[start + b]) w /= static_cast<double>(C);
  }
  return out;
}

template <typename T>
std::vector<double> aggregate_weights(TaskNetwork<T>& net, const Tensor<T>& calibration, std::size_t batch) {
  const auto per_image = per_image_weights(net, calibration, batch);
  std::vector<double> W(net.geometry().K, 0.0);
  for (const auto& w : per_image)
    for (std::size_t k = 0; k < W.size(); ++k) W[k] += w[k];
  for (double& w : W) w /= static_cast<double>(per_image.size());
  return W;
}

std::vector<double> map_weights(std::span<const double> raw, double tau, double r) {
  if (!(r > 0) || !std::isfinite(r)) throw ContractError("map_weights: r must be finite and > 0");
  if (!(tau >= 0) || !std::isfinite(tau)) throw ContractError("map_weights: tau must be finite and >= 0");
  if (raw.empty()) throw ContractError("map_weights: empty weight vector");
  for (double w : raw) {
    if (!std::isfinite(w)) throw ContractError("map_weights: non-finite raw weight");
  }
  std::vector<double> out(raw.size());
  if (tau == 0) {
    out.assign(raw.size(), r / static_cast<double>(raw.size()));
    return out;
  }
  double top = -std::numeric_limits<double>::infinity();
  for (double w : raw) top = std::max(top, tau * w);
  double z = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) z += (out[i] = std::exp(tau * raw[i] - top));
  for (double& w : out) w = r * (w / z);
  return out;
}

template <typename T>
SemanticWeights compute_semantic_weights(TaskNetwork<T>& net, const Tensor<T>& calibration, double tau, double r) {
  SemanticWeights sw;
  sw.raw = aggregate_weights(net, calibration);
  sw.mapped = map_weights(sw.raw, tau, r);
  sw.tau = tau;
  sw.r = r;
  sw.calibration_size = calibration.shape.empty() ? 0 : calibration.shape[0];
  return sw;
}

SemanticWeights uniform_weights(std::size_t K) {
  SemanticWeights sw;
  sw.raw.assign(K, 0.0);
  sw.mapped.assign(K, 1.0);
  sw.tau = 0.0;
  sw.r = static_cast<double>(K);
  return sw;
}

template double per_class_weight<float>(Tape<float>&, Var, Var, std::size_t);
template double per_class_weight<double>(Tape<double>&, Var, Var, std::size_t);
template std::vector<std::vector<double>> per_image_weights<float>(TaskNetwork<float>&, const Tensor<float>&, std::size_t);
template std::vector<std::vector<double>> per_image_weights<double>(TaskNetwork<double>&, const Tensor<double>&, std::size_t);
template std::vector<double> aggregate_weights<float>(TaskNetwork<float>&, const Tensor<float>&, std::size_t);
template std::vector<double> aggregate_weights<double>(TaskNetwork<double>&, const Tensor<double>&, std::size_t);
template SemanticWeights compute_semantic_weights<float>(TaskNetwork<float>&, const Tensor<float>&, double, double);
template SemanticWeights compute_semantic_weights<double>(TaskNetwork<double>&, const Tensor<double>&, double, double);

}  // namespace sdjscc
