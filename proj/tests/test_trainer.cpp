#include <doctest.h>

#include "suites.hpp"
#include "sdjscc/checkpoint.hpp"
#include "sdjscc/dataset.hpp"
#include "sdjscc/trainer.hpp"

using namespace sdjscc;

namespace {

const DatasetSplit& data() {
  static const DatasetSplit d = [] {
    ShapesConfig cfg;
    cfg.num_per_class = 40;
    cfg.size = 16;
    cfg.seed = 3;
    return generate_shapes(cfg);
  }();
  return d;
}

CodecArch arch() {
  CodecArch a;
  a.height = a.width = 16;
  a.base_channels = 8;
  a.num_residual_blocks = 1;
  return a;
}

TrainConfig stage1_config(std::size_t steps) {
  TrainConfig c;
  c.batch_size = 8;
  c.lr = 1e-3;
  c.steps = steps;
  c.seed = 11;
  return c;
}

TrainConfig stage2_config(std::size_t steps, LossKind kind) {
  TrainConfig c = stage1_config(steps);
  c.stage = Stage::finetune_sdjscc;
  c.loss_kind = kind;
  return c;
}

std::unique_ptr<TaskNetwork<float>> frozen_net() {
  auto net = std::make_unique<TaskNetwork<float>>(task_arch_for(data().train), 5);
  net->freeze();
  return net;
}

std::vector<double> losses(const TrainResult& r) {
  std::vector<double> out;
  for (const LossReport& l : r.trace) out.push_back(l.loss);
  return out;
}

double fixed_batch_loss(Codec<float>& codec) {
  std::vector<std::size_t> idx = {0, 1, 2, 3};
  const Tensor<float> x = data().train.batch<float>(idx);
  AwgnChannel ch(ChannelConfig{5.0, 0.5, 77, false});
  Tape<float> tape;
  tape.set_grad_enabled(false);
  Var xv = tape.constant(x);
  return tape.value(pixel_loss(tape, xv, codec.transmit(tape, xv, ch)))[0];
}

}  // namespace

TEST_CASE("stage 1: identical seeds give identical traces and parameters") {
  Codec<float> a(arch(), 1), b(arch(), 1);
  const TrainResult ra = train_stage1(data().train, a, stage1_config(30));
  const TrainResult rb = train_stage1(data().train, b, stage1_config(30));
  CHECK(losses(ra) == losses(rb));
  CHECK(ra.checkpoint.to_bytes() == rb.checkpoint.to_bytes());
  CHECK(ra.trace.size() == 30);
  CHECK(ra.checkpoint.meta.stage == 1);
  CHECK(ra.checkpoint.meta.step == 30);

  Codec<float> c(arch(), 1);
  TrainConfig other = stage1_config(30);
  other.seed = 12;
  CHECK(losses(train_stage1(data().train, c, other)) != losses(ra));
}

TEST_CASE("stage 1: smoothed pixel loss falls") {
  Codec<float> codec(arch(), 2);
  const TrainResult r = train_stage1(data().train, codec, stage1_config(300));
  const auto smooth = moving_average(r.trace, 100);
  MESSAGE("first " << r.trace.front().loss << " smoothed end " << smooth.back());
  CHECK(smooth.back() < r.trace.front().loss);
  CHECK(smooth.back() < smooth[99]);
}

TEST_CASE("checkpoint reload reproduces the next-step loss exactly") {
  Codec<float> a(arch(), 3);
  const TrainResult r = train_stage1(data().train, a, stage1_config(20));
  Codec<float> b(arch(), 99);
  b.load(Checkpoint::from_bytes(r.checkpoint.to_bytes()));
  CHECK(fixed_batch_loss(a) == fixed_batch_loss(b));
}

TEST_CASE("stage 2 starts from the stage-1 forward outputs and leaves the task net alone") {
  Codec<float> s1(arch(), 4);
  const TrainResult r1 = train_stage1(data().train, s1, stage1_config(20));
  const double stage1_loss = fixed_batch_loss(s1);
  auto net = frozen_net();
  const std::uint64_t hash = net->hash();

  Codec<float> s2(arch(), 5);
  s2.load(r1.checkpoint);
  CHECK(fixed_batch_loss(s2) == stage1_loss);

  Codec<float> trained(arch(), 6);
  const SemanticWeights w = compute_semantic_weights(*net, data().train.range<float>(0, 16), 50.0, 32.0);
  const TrainResult r2 = train_stage2(data().train, trained, r1.checkpoint, *net, w, stage2_config(150, LossKind::semantic));
  CHECK(net->hash() == hash);
  CHECK(r2.checkpoint.meta.stage == 2);
  const auto smooth = moving_average(r2.trace, 50);
  MESSAGE("semantic loss first " << r2.trace.front().loss << " smoothed end " << smooth.back());
  CHECK(smooth.back() < smooth[49]);
}

TEST_CASE("ablation: all-ones semantic weights train exactly like the unweighted feature loss") {
  Codec<float> s1(arch(), 7);
  const TrainResult r1 = train_stage1(data().train, s1, stage1_config(10));
  auto net = frozen_net();
  const std::size_t K = net->geometry().K;
  SemanticWeights tau0;
  tau0.raw = aggregate_weights(*net, data().train.range<float>(0, 8));
  tau0.mapped = map_weights(tau0.raw, 0.0, static_cast<double>(K));
  Codec<float> a(arch(), 8), b(arch(), 8);
  const TrainResult ra = train_stage2(data().train, a, r1.checkpoint, *net, tau0, stage2_config(20, LossKind::semantic));
  const TrainResult rb =
      train_stage2(data().train, b, r1.checkpoint, *net, uniform_weights(K), stage2_config(20, LossKind::feature_uniform));
  CHECK(losses(ra) == losses(rb));
  CHECK(ra.checkpoint.to_bytes() == rb.checkpoint.to_bytes());
}

TEST_CASE("stage 2 refuses a checkpoint that is not from stage 1") {
  Codec<float> codec(arch(), 9);
  auto net = frozen_net();
  const Checkpoint wrong = codec.checkpoint(CheckpointMeta{2, 5, 0.1});
  CHECK_THROWS_AS(train_stage2(data().train, codec, wrong, *net, uniform_weights(net->geometry().K),
                               stage2_config(1, LossKind::feature_uniform)),
                  ConfigError);
  CHECK_THROWS_AS(train_stage2(data().train, codec, Checkpoint{}, *net, uniform_weights(net->geometry().K),
                               stage2_config(1, LossKind::feature_uniform)),
                  ConfigError);
}

TEST_CASE("divergence raises with the last good checkpoint") {
  Codec<float> codec(arch(), 10);
  TrainConfig cfg = stage1_config(10);
  cfg.lr = 1e30;
  try {
    train_stage1(data().train, codec, cfg);
    FAIL("expected NonFiniteLossError");
  } catch (const NonFiniteLossError& e) {
    CHECK(e.step >= 2);
    CHECK(e.last_good.meta.step == static_cast<std::int64_t>(e.step - 1));
    for (const NamedTensor& t : e.last_good.tensors)
      for (float v : std::get<std::vector<float>>(t.values)) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("training config validation") {
  Codec<float> codec(arch(), 1);
  TrainConfig cfg = stage1_config(0);
  CHECK_THROWS_AS(train_stage1(data().train, codec, cfg), ConfigError);
  cfg = stage1_config(1);
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train_stage1(data().train, codec, cfg), ConfigError);
  cfg = stage1_config(1);
  cfg.loss_kind = LossKind::semantic;
  CHECK_THROWS_AS(train_stage1(data().train, codec, cfg), ConfigError);
  CodecArch big = arch();
  big.height = big.width = 32;
  Codec<float> mismatched(big, 1);
  CHECK_THROWS_AS(train_stage1(data().train, mismatched, stage1_config(1)), ConfigError);
}

TEST_CASE("moving average and loss trace file") {
  const std::vector<LossReport> t = {{1, 4}, {2, 2}, {3, 6}, {4, 0}};
  CHECK(moving_average(t, 2) == std::vector<double>{4, 3, 4, 3});
  const auto path = std::filesystem::temp_directory_path() / "sdjscc_trace.csv";
  write_loss_trace(path, {{1, 0.5}, {2, 0.25}});
  const auto bytes = read_file(path);
  CHECK(std::string(bytes.begin(), bytes.end()) == "step,loss\n1,0.5\n2,0.25\n");
  std::filesystem::remove(path);
}
