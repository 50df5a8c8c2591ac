#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "sdjscc/codec.hpp"
#include "sdjscc/dataset.hpp"
#include "sdjscc/errors.hpp"
#include "sdjscc/gsw.hpp"

namespace sdjscc {

enum class Stage : std::int64_t { pretrain_jscc = 1, finetune_sdjscc = 2 };
enum class LossKind { pixel, feature_uniform, semantic };

struct TrainConfig {
  Stage stage = Stage::pretrain_jscc;
  std::size_t batch_size = 32;
  double lr = 1e-4;
  std::size_t steps = 1;
  double snr_train_db = 5.0;
  double signal_power = 0.5;
  bool measured_power = false;
  std::uint64_t seed = 0;
  LossKind loss_kind = LossKind::pixel;
  // Adds pixel_blend * pixel MSE to the stage-2 loss; 0 disables it.
  double pixel_blend = 0.0;
  // Progress line every report_every steps when log is set.
  std::size_t report_every = 100;
  std::ostream* log = nullptr;

  void validate() const;
};

struct LossReport {
  std::size_t step = 0;
  double loss = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossReport> trace;
};

// Raised when a step produces a non-finite value. The parameters have not
// been touched by the failing step, so `last_good` holds the state after the
// last successful update.
class NonFiniteLossError : public TrainingError {
 public:
  NonFiniteLossError(const std::string& what, Checkpoint last_good, std::size_t step)
      : TrainingError(what), last_good(std::move(last_good)), step(step) {}
  Checkpoint last_good;
  std::size_t step;
};

// Pixel-MSE training of encoder and decoder through quantizer and channel.
TrainResult train_stage1(const Dataset& data, Codec<float>& codec, const TrainConfig& config);

// Loads `stage1` into the codec, then minimises the (weighted) feature loss
// of the frozen task network. Both encoder and decoder are updated.
TrainResult train_stage2(const Dataset& data, Codec<float>& codec, const Checkpoint& stage1,
                         TaskNetwork<float>& net, const SemanticWeights& weights, const TrainConfig& config);

// Trailing moving average with the given window (shorter at the start).
std::vector<double> moving_average(const std::vector<LossReport>& trace, std::size_t window);

void write_loss_trace(const std::filesystem::path& path, const std::vector<LossReport>& trace);

}  // namespace sdjscc
