#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sdjscc/evaluate.hpp"

namespace sdjscc {

// One trained codec: the unit a sweep loads a checkpoint for. tau and r only
// distinguish sd_jscc codecs; the other methods carry the reporting values.
struct SweepCell {
  Method method = Method::deep_jscc;
  double snr_train_db = 5.0;
  std::size_t latent_channels = 4;
  double tau = 0.0;
  double r = 0.0;
  std::uint64_t seed = 0;
};

struct SweepSpec {
  std::vector<Method> methods;
  std::vector<double> snr_train_db;
  std::vector<double> snr_test_db;
  std::vector<std::size_t> latent_channels;
  // Swept for sd_jscc only; other methods report `reference_tau`.
  std::vector<double> tau;
  double reference_tau = 0.0;
  double r = 0.0;  // 0: K
  std::vector<std::uint64_t> seeds;

  void validate() const;
  // Cells in grid-key order; r is resolved against K.
  std::vector<SweepCell> cells(std::size_t K) const;
  std::size_t record_count() const;
};

struct SweepContext {
  const Dataset* test = nullptr;
  TaskNetwork<float>* net = nullptr;
  // GSW weights before the softmax mapping.
  std::vector<double> raw_weights;
  CodecArch arch;  // latent_channels is overridden per cell
  double signal_power = 0.5;
  bool measured_power = false;
  std::size_t passes = 1;
  std::function<std::filesystem::path(const SweepCell&)> checkpoint_path;
  // Name of the command that produces a cell's checkpoint.
  std::function<std::string(const SweepCell&)> producer;
};

// Evaluates every cell at every test SNR. Cells run in parallel; records are
// returned sorted by grid key. Missing checkpoints raise ConfigError listing
// every unrunnable cell.
std::vector<ExperimentRecord> run_sweep(const SweepSpec& spec, const SweepContext& ctx);

std::string describe(const SweepCell& cell);

}  // namespace sdjscc
