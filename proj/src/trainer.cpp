#include "sdjscc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "sdjscc/csv.hpp"
#include "sdjscc/losses.hpp"
#include "sdjscc/ops.hpp"
#include "sdjscc/optim.hpp"

namespace sdjscc {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Epoch-wise shuffled sampler; only full batches are drawn.
class BatchSampler {
 public:
  BatchSampler(std::size_t count, std::size_t batch, std::uint64_t seed)
      : order_(count), batch_(batch), pos_(count), rng_(seed) {
    std::iota(order_.begin(), order_.end(), 0);
  }

  std::span<const std::size_t> next() {
    if (pos_ + batch_ > order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      pos_ = 0;
    }
    std::span<const std::size_t> out(order_.data() + pos_, batch_);
    pos_ += batch_;
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_;
  Rng rng_;
};

ChannelConfig channel_for(const TrainConfig& cfg) {
  ChannelConfig ch;
  ch.snr_db = cfg.snr_train_db;
  ch.signal_power = cfg.signal_power;
  ch.measured_power = cfg.measured_power;
  ch.seed = splitmix(cfg.seed ^ (0x6368616eULL + static_cast<std::uint64_t>(cfg.stage)));
  return ch;
}

void check_data(const Dataset& data, const CodecArch& arch) {
  if (data.count == 0) throw ConfigError("training: empty dataset");
  if (data.channels != arch.in_channels || data.height != arch.height || data.width != arch.width) {
    throw ConfigError("training: dataset images are " + std::to_string(data.channels) + "x" +
                      std::to_string(data.height) + "x" + std::to_string(data.width) + ", codec expects " +
                      std::to_string(arch.in_channels) + "x" + std::to_string(arch.height) + "x" +
                      std::to_string(arch.width));
  }
}

// Runs `steps` optimisation steps; `step_loss` builds the loss on a fresh tape.
template <typename StepLoss>
TrainResult run(const Dataset& data, Codec<float>& codec, const TrainConfig& cfg, StepLoss step_loss) {
  ParameterList<float> params = codec.parameters();
  Adam<float> adam(AdamOptions{.lr = cfg.lr});
  const std::size_t batch = std::min(cfg.batch_size, data.count);
  BatchSampler sampler(data.count, batch, splitmix(cfg.seed ^ (0x62617463ULL + static_cast<std::uint64_t>(cfg.stage))));
  AwgnChannel channel(channel_for(cfg));
  const auto stage = static_cast<std::int64_t>(cfg.stage);
  TrainResult result;
  result.trace.reserve(cfg.steps);
  double last = 0;
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const std::span<const std::size_t> idx = sampler.next();
    try {
      Tape<float> tape;
      const Tensor<float> x = data.batch<float>(idx);
      Var loss = step_loss(tape, x, channel);
      const double value = tape.value(loss)[0];
      if (!std::isfinite(value)) throw NumericError("loss is not finite");
      tape.backward(loss);
      adam.step(params);
      last = value;
      result.trace.push_back(LossReport{step, value});
    } catch (const NumericError& e) {
      for (Parameter<float>* p : params) p->tensor.zero_grad();
      throw NonFiniteLossError("training stage " + std::to_string(stage) + " step " + std::to_string(step) +
                                   ": " + e.what(),
                               codec.checkpoint(CheckpointMeta{stage, static_cast<std::int64_t>(step - 1), last}),
                               step);
    }
    if (cfg.log != nullptr && cfg.report_every > 0 && step % cfg.report_every == 0) {
      *cfg.log << "stage " << stage << " step " << step << " loss " << format_double(last) << '\n';
    }
  }
  result.checkpoint = codec.checkpoint(CheckpointMeta{stage, static_cast<std::int64_t>(cfg.steps), last});
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("training: batch_size must be >= 1");
  if (steps < 1) throw ConfigError("training: steps must be >= 1");
  if (!(lr > 0) || !std::isfinite(lr)) throw ConfigError("training: lr must be finite and > 0");
  if (!(pixel_blend >= 0)) throw ConfigError("training: pixel_blend must be >= 0");
  ChannelConfig ch;
  ch.snr_db = snr_train_db;
  ch.signal_power = signal_power;
  ch.validate();
}

TrainResult train_stage1(const Dataset& data, Codec<float>& codec, const TrainConfig& config) {
  config.validate();
  if (config.stage != Stage::pretrain_jscc) throw ConfigError("train_stage1: config is not for stage 1");
  if (config.loss_kind != LossKind::pixel) throw ConfigError("train_stage1: stage 1 trains on the pixel loss");
  check_data(data, codec.arch());
  return run(data, codec, config, [&](Tape<float>& tape, const Tensor<float>& x, AwgnChannel& channel) {
    Var xv = tape.constant(x);
    return pixel_loss(tape, xv, codec.transmit(tape, xv, channel));
  });
}

TrainResult train_stage2(const Dataset& data, Codec<float>& codec, const Checkpoint& stage1,
                         TaskNetwork<float>& net, const SemanticWeights& weights, const TrainConfig& config) {
  config.validate();
  if (config.stage != Stage::finetune_sdjscc) throw ConfigError("train_stage2: config is not for stage 2");
  if (config.loss_kind == LossKind::pixel) {
    throw ConfigError("train_stage2: stage 2 trains on a feature loss (semantic or feature_uniform)");
  }
  if (stage1.meta.stage != static_cast<std::int64_t>(Stage::pretrain_jscc)) {
    throw ConfigError("train_stage2: checkpoint is from stage " + std::to_string(stage1.meta.stage) +
                      ", expected a stage-1 checkpoint");
  }
  if (!net.frozen()) throw ContractError("train_stage2: task network must be frozen");
  check_data(data, codec.arch());
  const FeatureGeometry g = net.geometry();
  const std::vector<double> w =
      config.loss_kind == LossKind::feature_uniform ? uniform_weights(g.K).mapped : weights.mapped;
  if (w.size() != g.K) {
    throw ConfigError("train_stage2: " + std::to_string(w.size()) + " weights for K=" + std::to_string(g.K));
  }
  codec.load(stage1);
  const std::uint64_t before = net.hash();
  TrainResult result = run(data, codec, config, [&](Tape<float>& tape, const Tensor<float>& x, AwgnChannel& channel) {
    Var xv = tape.constant(x);
    Var xr = codec.transmit(tape, xv, channel);
    Var loss = semantic_loss(tape, net, x, xr, w);
    if (config.pixel_blend > 0) {
      loss = add(tape, loss, scale(tape, pixel_loss(tape, xv, xr), static_cast<float>(config.pixel_blend)));
    }
    return loss;
  });
  if (net.hash() != before) throw ContractError("train_stage2: task network weights changed during fine-tuning");
  return result;
}

std::vector<double> moving_average(const std::vector<LossReport>& trace, std::size_t window) {
  window = std::max<std::size_t>(window, 1);
  std::vector<double> out(trace.size());
  double acc = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    acc += trace[i].loss;
    if (i >= window) acc -= trace[i - window].loss;
    out[i] = acc / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

void write_loss_trace(const std::filesystem::path& path, const std::vector<LossReport>& trace) {
  std::string text = "step,loss\n";
  for (const LossReport& r : trace) text += std::to_string(r.step) + "," + format_double(r.loss) + "\n";
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace sdjscc
