#include "sdjscc/metrics.hpp"

#include <cmath>
#include <limits>

#include "sdjscc/errors.hpp"

namespace sdjscc {

ClassificationScores accuracy_f1(std::span<const std::size_t> predictions, std::span<const std::size_t> labels,
                                 std::size_t num_classes) {
  if (predictions.empty() || labels.empty()) throw ContractError("accuracy_f1: empty input");
  if (predictions.size() != labels.size()) {
    throw ContractError("accuracy_f1: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(labels.size()) + " labels");
  }
  if (num_classes == 0) throw ContractError("accuracy_f1: num_classes must be >= 1");
  std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t y = labels[i], p = predictions[i];
    if (y >= num_classes || p >= num_classes) throw ContractError("accuracy_f1: class index out of range");
    if (p == y) {
      ++hits;
      ++tp[y];
    } else {
      ++fp[p];
      ++fn[y];
    }
  }
  ClassificationScores s;
  s.accuracy = static_cast<double>(hits) / static_cast<double>(labels.size());
  s.per_class_f1.resize(num_classes, 0.0);
  double total = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (tp[c] + fn[c] == 0) {
      s.unsupported.push_back(c);
      continue;
    }
    const double denom = static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    s.per_class_f1[c] = 2.0 * static_cast<double>(tp[c]) / denom;
    total += s.per_class_f1[c];
  }
  s.macro_f1 = total / static_cast<double>(num_classes);
  return s;
}

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw DimensionError("mean_squared_error: size mismatch or empty input");
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

double psnr_from_mse(double mse) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

double psnr(std::span<const double> a, std::span<const double> b) { return psnr_from_mse(mean_squared_error(a, b)); }

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b) {
  require_shape(b.shape, a.shape, "psnr");
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return psnr_from_mse(acc / static_cast<double>(a.size()));
}

double ssim_gray(std::span<const double> a, std::span<const double> b, std::size_t height, std::size_t width) {
  if (height < kSsimWindow || width < kSsimWindow) {
    throw ConfigError("ssim: image " + std::to_string(height) + "x" + std::to_string(width) +
                      " is smaller than the " + std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) +
                      " window");
  }
  if (a.size() != height * width || b.size() != height * width) throw DimensionError("ssim: buffer size mismatch");
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  constexpr double n = kSsimWindow * kSsimWindow;
  double total = 0;
  std::size_t windows = 0;
  for (std::size_t y0 = 0; y0 + kSsimWindow <= height; ++y0)
    for (std::size_t x0 = 0; x0 + kSsimWindow <= width; ++x0) {
      double sa = 0, sb = 0;
      for (std::size_t y = y0; y < y0 + kSsimWindow; ++y)
        for (std::size_t x = x0; x < x0 + kSsimWindow; ++x) {
          sa += a[y * width + x];
          sb += b[y * width + x];
        }
      const double ma = sa / n, mb = sb / n;
      double vaa = 0, vbb = 0, vab = 0;
      for (std::size_t y = y0; y < y0 + kSsimWindow; ++y)
        for (std::size_t x = x0; x < x0 + kSsimWindow; ++x) {
          const double da = a[y * width + x] - ma, db = b[y * width + x] - mb;
          vaa += da * da;
          vbb += db * db;
          vab += da * db;
        }
      vaa /= n;
      vbb /= n;
      vab /= n;
      // Products are formed in symmetric order so ssim(a,b) == ssim(b,a) bitwise.
      const double num = (2 * ma * mb + c1) * (2 * vab + c2);
      const double den = (ma * ma + mb * mb + c1) * (vaa + vbb + c2);
      total += num / den;
      ++windows;
    }
  return total / static_cast<double>(windows);
}

template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b) {
  require_shape(b.shape, a.shape, "ssim");
  if (a.ndim() != 4) throw DimensionError("ssim: expects [B,C,H,W], got " + shape_string(a.shape));
  const std::size_t B = a.shape[0], C = a.shape[1], H = a.shape[2], W = a.shape[3], area = H * W;
  std::vector<double> ga(area), gb(area);
  double total = 0;
  for (std::size_t bi = 0; bi < B; ++bi) {
    std::fill(ga.begin(), ga.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t off = (bi * C + c) * area;
      for (std::size_t i = 0; i < area; ++i) {
        ga[i] += static_cast<double>(a[off + i]);
        gb[i] += static_cast<double>(b[off + i]);
      }
    }
    for (std::size_t i = 0; i < area; ++i) {
      ga[i] /= static_cast<double>(C);
      gb[i] /= static_cast<double>(C);
    }
    total += ssim_gray(ga, gb, H, W);
  }
  return total / static_cast<double>(B);
}

template double psnr<float>(const Tensor<float>&, const Tensor<float>&);
template double psnr<double>(const Tensor<double>&, const Tensor<double>&);
template double ssim<float>(const Tensor<float>&, const Tensor<float>&);
template double ssim<double>(const Tensor<double>&, const Tensor<double>&);

}  // namespace sdjscc
