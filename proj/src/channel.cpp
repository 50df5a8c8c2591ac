#include "sdjscc/channel.hpp"

#include <cmath>
#include <string>

#include "sdjscc/ops.hpp"

namespace sdjscc {

double noise_variance(double snr_db, double signal_power) {
  if (snr_db == ChannelConfig::kNoiseless) return 0.0;
  return signal_power / std::pow(10.0, snr_db / 10.0);
}

double ChannelConfig::noise_variance() const { return sdjscc::noise_variance(snr_db, signal_power); }

void ChannelConfig::validate() const {
  if (!(signal_power > 0) || !std::isfinite(signal_power)) {
    throw ConfigError("channel: signal_power must be finite and > 0");
  }
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw ConfigError("channel: snr_db must be a number or +inf");
  }
  if (!noiseless() && !(noise_variance() > 0) ) {
    throw ConfigError("channel: snr_db " + std::to_string(snr_db) + " gives a non-positive noise variance");
  }
  if (!noiseless() && !std::isfinite(noise_variance())) {
    throw ConfigError("channel: snr_db " + std::to_string(snr_db) + " gives an infinite noise variance");
  }
}

double bpp(std::size_t symbols, std::size_t height, std::size_t width) {
  if (symbols == 0 || height == 0 || width == 0) throw ConfigError("bpp: all arguments must be positive");
  return static_cast<double>(symbols) / static_cast<double>(height * width);
}

template <typename T>
Tensor<T> quantize(const Tensor<T>& e) {
  Tensor<T> q(e.shape);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const T v = e[i];
    if (!(v >= T(-1e-6) && v <= T(1 + 1e-6))) {
      throw ContractError("quantize: input " + std::to_string(static_cast<double>(v)) + " at index " +
                          std::to_string(i) + " is outside [0,1]");
    }
    q[i] = v > T(0.5) ? T{1} : T{0};
  }
  return q;
}

template <typename T>
Var quantize(Tape<T>& tape, Var e) {
  Tensor<T> q = quantize(tape.value(e));
  return tape.record("quantize", std::move(q), {e}, [e](Tape<T>& t, Var self) {
    auto go = t.grad(self);
    auto ge = t.grad_mut(e);
    for (std::size_t i = 0; i < ge.size(); ++i) ge[i] += go[i];
  });
}

AwgnChannel::AwgnChannel(const ChannelConfig& config) : config_(config) {
  config_.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                    0x5eedc4a7u};
  rng_.seed(seq);
}

template <typename T>
double AwgnChannel::variance_for(const Tensor<T>& q) const {
  if (config_.noiseless()) return 0.0;
  if (!config_.measured_power) return config_.noise_variance();
  double power = 0;
  for (T v : q.data) power += static_cast<double>(v) * static_cast<double>(v);
  power /= static_cast<double>(q.size());
  return noise_variance(config_.snr_db, power);
}

template <typename T>
Tensor<T> AwgnChannel::transmit(const Tensor<T>& q) {
  Tensor<T> out = q;
  out.grad.reset();
  const double var = variance_for(q);
  if (var == 0.0) return out;
  const double sigma = std::sqrt(var);
  for (T& v : out.data) v += static_cast<T>(sigma * normal_(rng_));
  return out;
}

template <typename T>
Var AwgnChannel::transmit(Tape<T>& tape, Var q) {
  const Tensor<T>& qv = tape.value(q);
  const double var = variance_for(qv);
  if (var == 0.0) return q;
  const double sigma = std::sqrt(var);
  Tensor<T> noise(qv.shape);
  for (T& v : noise.data) v = static_cast<T>(sigma * normal_(rng_));
  return add(tape, q, tape.constant(std::move(noise)));
}

template Tensor<float> quantize<float>(const Tensor<float>&);
template Tensor<double> quantize<double>(const Tensor<double>&);
template Var quantize<float>(Tape<float>&, Var);
template Var quantize<double>(Tape<double>&, Var);
template Tensor<float> AwgnChannel::transmit<float>(const Tensor<float>&);
template Tensor<double> AwgnChannel::transmit<double>(const Tensor<double>&);
template Var AwgnChannel::transmit<float>(Tape<float>&, Var);
template Var AwgnChannel::transmit<double>(Tape<double>&, Var);

}  // namespace sdjscc
