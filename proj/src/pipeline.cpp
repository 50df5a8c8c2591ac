#include "sdjscc/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "sdjscc/csv.hpp"
#include "sdjscc/plot.hpp"

namespace sdjscc {

namespace {

std::string tag(double v) { return format_double(v); }

void require_file(const std::filesystem::path& path, std::string_view producer) {
  if (!std::filesystem::exists(path)) {
    throw ConfigError("missing " + path.string() + "; run `sdjscc " + std::string(producer) + "` first");
  }
}

std::vector<double> doubles(const std::string& list, double fallback, std::string_view key) {
  std::vector<double> out;
  for (const std::string& s : split_list(list)) out.push_back(parse_double(s, key));
  if (out.empty()) out.push_back(fallback);
  return out;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::string_view producer) {
  require_file(path, producer);
  return Checkpoint::load(path);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path, const RunConfig& cfg) {
  ckpt.save(path);
  write_config_sidecar(path, cfg);
}

TrainConfig train_config(const RunConfig& cfg, Stage stage, std::ostream* log) {
  TrainConfig tc;
  tc.stage = stage;
  tc.batch_size = cfg.batch_size;
  tc.lr = cfg.lr;
  tc.steps = stage == Stage::pretrain_jscc ? cfg.stage1_steps : cfg.stage2_steps;
  tc.snr_train_db = cfg.snr_train;
  tc.signal_power = cfg.signal_power;
  tc.measured_power = cfg.measured_power;
  tc.seed = cfg.seed;
  tc.pixel_blend = cfg.pixel_blend;
  tc.report_every = cfg.report_every;
  tc.log = log;
  return tc;
}

// Keeps the state before a diverged step next to the intended checkpoint.
template <typename F>
TrainResult guarded(const std::filesystem::path& path, const RunConfig& cfg, F train) {
  try {
    return train();
  } catch (const NonFiniteLossError& e) {
    std::filesystem::path last = path;
    last += ".last_good";
    save_checkpoint(e.last_good, last, cfg);
    throw;
  }
}

std::string gsw_table(const SemanticWeights& w) {
  std::string text = "k,raw_w,mapped_w\n";
  for (std::size_t k = 0; k < w.raw.size(); ++k) {
    text += std::to_string(k) + "," + format_double(w.raw[k]) + "," + format_double(w.mapped[k]) + "\n";
  }
  return text;
}

}  // namespace

std::filesystem::path RunDir::stage1(double snr_train, std::size_t latent, std::uint64_t seed) const {
  return root_ / ("jscc_snr" + tag(snr_train) + "_c" + std::to_string(latent) + "_s" + std::to_string(seed) + ".ckpt");
}

std::filesystem::path RunDir::stage2(Method method, double snr_train, std::size_t latent, double tau, double r,
                                     std::uint64_t seed) const {
  std::string name = std::string(method_name(method)) + "_snr" + tag(snr_train) + "_c" + std::to_string(latent);
  if (method == Method::sd_jscc) name += "_tau" + tag(tau) + "_r" + tag(r);
  else if (method != Method::sd_jscc_wo_gsw) throw ContractError("stage-2 checkpoint requested for deep_jscc");
  return root_ / (name + "_s" + std::to_string(seed) + ".ckpt");
}

std::filesystem::path RunDir::codec(const SweepCell& c) const {
  if (c.method == Method::deep_jscc) return stage1(c.snr_train_db, c.latent_channels, c.seed);
  return stage2(c.method, c.snr_train_db, c.latent_channels, c.tau, c.r, c.seed);
}

std::filesystem::path RunDir::gsw_csv(double tau, double r) const {
  return root_ / ("gsw_tau" + tag(tau) + "_r" + tag(r) + ".csv");
}

std::string_view producer_of(Method method) {
  return method == Method::deep_jscc ? "pretrain-jscc" : "finetune-sdjscc";
}

CodecArch codec_arch(const RunConfig& cfg, const Dataset& data) {
  CodecArch arch;
  arch.in_channels = data.channels;
  arch.height = data.height;
  arch.width = data.width;
  arch.base_channels = cfg.base_channels;
  arch.latent_channels = cfg.latent_channels;
  arch.num_residual_blocks = cfg.residual_blocks;
  arch.validate();
  return arch;
}

double resolve_r(const RunConfig& cfg, std::size_t K) { return cfg.r > 0 ? cfg.r : static_cast<double>(K); }

Tensor<float> calibration_images(const Dataset& train, std::size_t n) {
  if (n == 0) throw ConfigError("calibration_size must be >= 1");
  return train.range<float>(0, std::min(n, train.count));
}

SweepSpec sweep_spec(const RunConfig& cfg) {
  SweepSpec spec;
  for (const std::string& m : split_list(cfg.sweep_methods)) spec.methods.push_back(parse_method(m));
  spec.snr_train_db = doubles(cfg.sweep_snr_train, cfg.snr_train, "sweep_snr_train");
  spec.snr_test_db = doubles(cfg.sweep_snr_test, cfg.snr_test, "sweep_snr_test");
  for (const std::string& s : split_list(cfg.sweep_latent_channels)) {
    spec.latent_channels.push_back(parse_size(s, "sweep_latent_channels"));
  }
  if (spec.latent_channels.empty()) spec.latent_channels.push_back(cfg.latent_channels);
  spec.tau = doubles(cfg.sweep_tau, cfg.tau, "sweep_tau");
  spec.reference_tau = cfg.tau;
  spec.r = cfg.r;
  for (const std::string& s : split_list(cfg.sweep_seeds)) spec.seeds.push_back(parse_u64(s, "sweep_seeds"));
  if (spec.seeds.empty()) spec.seeds.push_back(cfg.seed);
  spec.validate();
  return spec;
}

Dataset load_dataset(const std::filesystem::path& path) {
  require_file(path, "gen-data");
  return Dataset::load(path);
}

std::unique_ptr<TaskNetwork<float>> load_task_net(const RunConfig& cfg, const Dataset& train) {
  RunDir dir(cfg);
  const Checkpoint ckpt = load_checkpoint(dir.task_net(), "pretrain-task");
  auto net = std::make_unique<TaskNetwork<float>>(task_arch_for(train), cfg.seed);
  net->load(ckpt);
  net->freeze();
  return net;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_config_sidecar(const std::filesystem::path& artifact, const RunConfig& cfg) {
  std::filesystem::path side = artifact;
  side += ".config";
  write_text(side, cfg.to_text());
}

DatasetSplit Pipeline::gen_data() const {
  ShapesConfig sc;
  sc.num_per_class = cfg.num_per_class;
  sc.classes = cfg.num_classes;
  sc.size = cfg.image_size;
  sc.seed = cfg.seed;
  DatasetSplit split = generate_shapes(sc);
  const RunDir dir(cfg);
  split.train.save(dir.train());
  split.test.save(dir.test());
  write_config_sidecar(dir.train(), cfg);
  write_config_sidecar(dir.test(), cfg);
  if (log) *log << "gen-data: " << split.train.count << " train, " << split.test.count << " test images\n";
  return split;
}

double Pipeline::pretrain_task() const {
  const RunDir dir(cfg);
  const Dataset train = load_dataset(dir.train());
  const Dataset test = load_dataset(dir.test());
  TaskTrainConfig tc;
  tc.epochs = cfg.task_epochs;
  tc.batch_size = cfg.task_batch;
  tc.lr = cfg.task_lr;
  tc.seed = cfg.seed;
  PretrainResult res = sdjscc::pretrain_task(train, test, task_arch_for(train), tc);
  const double last = res.epoch_losses.empty() ? 0.0 : res.epoch_losses.back();
  save_checkpoint(res.net->checkpoint(CheckpointMeta{0, static_cast<std::int64_t>(tc.epochs), last}), dir.task_net(),
                  cfg);
  std::string text = "epoch,loss\n";
  for (std::size_t e = 0; e < res.epoch_losses.size(); ++e) {
    text += std::to_string(e + 1) + "," + format_double(res.epoch_losses[e]) + "\n";
  }
  write_text(dir.root() / "task_net.loss.csv", text);
  if (log) {
    *log << "pretrain-task: train acc " << format_double(res.train_accuracy) << ", test acc "
         << format_double(res.test_accuracy) << "\n";
  }
  return res.test_accuracy;
}

TrainResult Pipeline::pretrain_jscc() const {
  const RunDir dir(cfg);
  const Dataset train = load_dataset(dir.train());
  Codec<float> codec(codec_arch(cfg, train), cfg.seed);
  const std::filesystem::path out = dir.stage1(cfg.snr_train, cfg.latent_channels, cfg.seed);
  TrainResult res = guarded(out, cfg, [&] { return train_stage1(train, codec, train_config(cfg, Stage::pretrain_jscc, log)); });
  save_checkpoint(res.checkpoint, out, cfg);
  std::filesystem::path trace = out;
  trace.replace_extension(".loss.csv");
  write_loss_trace(trace, res.trace);
  return res;
}

TrainResult Pipeline::finetune_sdjscc() const {
  const Method method = parse_method(cfg.method);
  if (method == Method::deep_jscc) throw ConfigError("finetune-sdjscc: method must be sd_jscc or sd_jscc_wo_gsw");
  const RunDir dir(cfg);
  const Dataset train = load_dataset(dir.train());
  const Checkpoint stage1 =
      load_checkpoint(dir.stage1(cfg.snr_train, cfg.latent_channels, cfg.seed), producer_of(Method::deep_jscc));
  auto net = load_task_net(cfg, train);
  const std::size_t K = net->geometry().K;
  const double r = resolve_r(cfg, K);
  TrainConfig tc = train_config(cfg, Stage::finetune_sdjscc, log);
  SemanticWeights weights;
  if (method == Method::sd_jscc) {
    tc.loss_kind = LossKind::semantic;
    weights = compute_semantic_weights(*net, calibration_images(train, cfg.calibration_size), cfg.tau, r);
    write_text(dir.gsw_csv(cfg.tau, r), gsw_table(weights));
    write_config_sidecar(dir.gsw_csv(cfg.tau, r), cfg);
  } else {
    tc.loss_kind = LossKind::feature_uniform;
    weights = uniform_weights(K);
  }
  Codec<float> codec(codec_arch(cfg, train), cfg.seed);
  const std::filesystem::path out = dir.stage2(method, cfg.snr_train, cfg.latent_channels, cfg.tau, r, cfg.seed);
  TrainResult res = guarded(out, cfg, [&] { return train_stage2(train, codec, stage1, *net, weights, tc); });
  save_checkpoint(res.checkpoint, out, cfg);
  std::filesystem::path trace = out;
  trace.replace_extension(".loss.csv");
  write_loss_trace(trace, res.trace);
  return res;
}

SemanticWeights Pipeline::gsw_inspect() const {
  const RunDir dir(cfg);
  const Dataset train = load_dataset(dir.train());
  auto net = load_task_net(cfg, train);
  const double r = resolve_r(cfg, net->geometry().K);
  SemanticWeights w = compute_semantic_weights(*net, calibration_images(train, cfg.calibration_size), cfg.tau, r);
  write_text(dir.gsw_csv(cfg.tau, r), gsw_table(w));
  write_config_sidecar(dir.gsw_csv(cfg.tau, r), cfg);
  return w;
}

namespace {

std::vector<ExperimentRecord> run_grid(const RunConfig& cfg, std::ostream* log, const std::string& csv_name,
                                       bool plots) {
  const RunDir dir(cfg);
  const SweepSpec spec = sweep_spec(cfg);
  const Dataset train = load_dataset(dir.train());
  const Dataset test = load_dataset(dir.test());
  auto net = load_task_net(cfg, train);
  SweepContext ctx;
  ctx.test = &test;
  ctx.net = net.get();
  ctx.raw_weights = aggregate_weights(*net, calibration_images(train, cfg.calibration_size));
  ctx.arch = codec_arch(cfg, train);
  ctx.signal_power = cfg.signal_power;
  ctx.measured_power = cfg.measured_power;
  ctx.passes = cfg.eval_passes;
  ctx.checkpoint_path = [&dir](const SweepCell& c) { return dir.codec(c); };
  ctx.producer = [](const SweepCell& c) { return std::string(producer_of(c.method)); };
  std::vector<ExperimentRecord> records = run_sweep(spec, ctx);

  const std::filesystem::path csv = dir.root() / csv_name;
  write_records(csv, records);
  write_config_sidecar(csv, cfg);
  if (plots) {
    write_svg(dir.root() / "acc_vs_snr.svg", accuracy_plot(records, Axis::snr_test));
    if (spec.latent_channels.size() > 1) write_svg(dir.root() / "acc_vs_bpp.svg", accuracy_plot(records, Axis::bpp));
    if (spec.tau.size() > 1) write_svg(dir.root() / "acc_vs_tau.svg", accuracy_plot(records, Axis::tau));
  }
  if (log) *log << csv.string() << ": " << records.size() << " records\n";
  return records;
}

}  // namespace

std::vector<ExperimentRecord> Pipeline::eval() const {
  RunConfig one = cfg;
  one.sweep_methods = cfg.method;
  one.sweep_snr_train = format_double(cfg.snr_train);
  one.sweep_snr_test = format_double(cfg.snr_test);
  one.sweep_latent_channels = std::to_string(cfg.latent_channels);
  one.sweep_tau = format_double(cfg.tau);
  one.sweep_seeds = std::to_string(cfg.seed);
  return run_grid(one, log, "eval.csv", false);
}

std::vector<ExperimentRecord> Pipeline::sweep() const { return run_grid(cfg, log, "sweep.csv", true); }

}  // namespace sdjscc
