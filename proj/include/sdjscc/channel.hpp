#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>

#include "sdjscc/tape.hpp"

namespace sdjscc {

struct ChannelConfig {
  static constexpr double kNoiseless = std::numeric_limits<double>::infinity();

  double snr_db = 5.0;
  double signal_power = 0.5;
  std::uint64_t seed = 0;
  // Use the mean square of each transmitted block as signal power instead of
  // the fixed `signal_power`.
  bool measured_power = false;

  bool noiseless() const { return snr_db == kNoiseless; }
  // sigma^2 = signal_power / 10^(snr_db/10); 0 when noiseless.
  double noise_variance() const;
  void validate() const;
};

double noise_variance(double snr_db, double signal_power);

// Channel bits per image pixel; one quantized element is one bit.
double bpp(std::size_t symbols, std::size_t height, std::size_t width);

// 1 where e > 0.5, else 0. Inputs must lie in [0,1] (1e-6 slack).
template <typename T>
Tensor<T> quantize(const Tensor<T>& e);

// Same forward value; the backward rule passes the gradient through unchanged.
template <typename T>
Var quantize(Tape<T>& tape, Var e);

// Real additive white Gaussian noise applied to the quantized bits. Noise is
// drawn from a generator owned by the channel, so a channel built from the
// same config emits the same sequence.
class AwgnChannel {
 public:
  explicit AwgnChannel(const ChannelConfig& config);

  template <typename T>
  Tensor<T> transmit(const Tensor<T>& q);

  // Noise enters as a constant, so d(out)/d(q) = identity.
  template <typename T>
  Var transmit(Tape<T>& tape, Var q);

  const ChannelConfig& config() const { return config_; }

 private:
  template <typename T>
  double variance_for(const Tensor<T>& q) const;

  ChannelConfig config_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace sdjscc
