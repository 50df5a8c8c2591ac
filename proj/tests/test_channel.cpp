#include <doctest.h>

#include "suites.hpp"

using namespace sdjscc;

TEST_CASE("noise variance and SNR match the configuration (Monte Carlo)") {
  for (double snr : {0.0, 5.0, 10.0, 20.0}) {
    const suites::ChannelStats s = suites::channel_statistics(snr, 1000000, 42 + static_cast<std::uint64_t>(snr));
    INFO("snr " << snr << " var " << s.empirical_variance << " expected " << s.expected_variance);
    CHECK(s.pass());
  }
}

TEST_CASE("noise variance formula") {
  CHECK(noise_variance(0.0, 0.5) == 0.5);
  CHECK(noise_variance(10.0, 0.5) == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(noise_variance(20.0, 1.0) == doctest::Approx(0.01).epsilon(1e-15));
  ChannelConfig cfg;
  cfg.snr_db = ChannelConfig::kNoiseless;
  CHECK(cfg.noise_variance() == 0.0);
}

TEST_CASE("noiseless channel is the identity") {
  ChannelConfig cfg;
  cfg.snr_db = ChannelConfig::kNoiseless;
  AwgnChannel ch(cfg);
  Tensor<double> q({8}, std::vector<double>{0, 1, 1, 0, 1, 0, 0, 1});
  CHECK(ch.transmit(q).data == q.data);
}

TEST_CASE("same config and seed give the same noise; a different seed does not") {
  Tensor<float> q({1000}, 1.0f);
  AwgnChannel a(ChannelConfig{5.0, 0.5, 7, false}), b(ChannelConfig{5.0, 0.5, 7, false}),
      c(ChannelConfig{5.0, 0.5, 8, false});
  const auto ya = a.transmit(q), yb = b.transmit(q), yc = c.transmit(q);
  CHECK(ya.data == yb.data);
  CHECK(ya.data != yc.data);
}

TEST_CASE("measured power scales noise to the block's mean square") {
  Tensor<double> q({200000}, 0.0);
  for (std::size_t i = 0; i < q.size(); i += 4) q[i] = 1.0;  // mean square 0.25
  AwgnChannel ch(ChannelConfig{10.0, 0.5, 3, true});
  const auto y = ch.transmit(q);
  double noise = 0;
  for (std::size_t i = 0; i < q.size(); ++i) noise += (y[i] - q[i]) * (y[i] - q[i]);
  CHECK(noise / q.size() == doctest::Approx(0.025).epsilon(0.02));
}

TEST_CASE("quantizer thresholds at one half and checks its input range") {
  Tensor<double> e({5}, std::vector<double>{0.0, 0.49, 0.5, 0.51, 1.0});
  CHECK(quantize(e).data == std::vector<double>{0, 0, 0, 1, 1});
  CHECK_THROWS_AS(quantize(Tensor<double>({1}, 1.1)), ContractError);
  CHECK_THROWS_AS(quantize(Tensor<double>({1}, -0.2)), ContractError);
}

TEST_CASE("bits per pixel") {
  CHECK(bpp(4 * 8 * 8, 32, 32) == 0.25);
  CodecArch a;
  CHECK(a.bpp() == 0.25);
  a.latent_channels = 8;
  CHECK(a.bpp() == 0.5);
}

TEST_CASE("invalid channel configuration") {
  ChannelConfig cfg;
  cfg.signal_power = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.signal_power = 0.5;
  cfg.snr_db = NAN;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
