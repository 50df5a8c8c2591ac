#pragma once

// Run-directory layout and the steps behind each CLI subcommand.
//
//   <out>/train.imgd, test.imgd (+ .meta)     gen-data
//   <out>/task_net.ckpt                         pretrain-task
//   <out>/jscc_snr<S>_c<L>_s<seed>.ckpt         pretrain-jscc
//   <out>/sd_jscc_snr<S>_c<L>_tau<T>_r<R>_s<seed>.ckpt
//   <out>/sd_jscc_wo_gsw_snr<S>_c<L>_s<seed>.ckpt   finetune-sdjscc
//   <out>/gsw_tau<T>_r<R>.csv                   gsw-inspect
//   <out>/eval.csv, sweep.csv, *.svg            eval, sweep
//
// Every checkpoint and CSV gets a "<file>.config" sidecar with the resolved
// configuration that produced it.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string_view>
#include <vector>

#include "sdjscc/config.hpp"
#include "sdjscc/evaluate.hpp"
#include "sdjscc/gsw.hpp"
#include "sdjscc/sweep.hpp"
#include "sdjscc/trainer.hpp"

namespace sdjscc {

class RunDir {
 public:
  explicit RunDir(const RunConfig& cfg) : cfg_(cfg), root_(cfg.out) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path train() const { return cfg_.train_path(); }
  std::filesystem::path test() const { return cfg_.test_path(); }
  std::filesystem::path task_net() const { return root_ / "task_net.ckpt"; }
  std::filesystem::path stage1(double snr_train, std::size_t latent, std::uint64_t seed) const;
  std::filesystem::path stage2(Method method, double snr_train, std::size_t latent, double tau, double r,
                               std::uint64_t seed) const;
  std::filesystem::path codec(const SweepCell& cell) const;
  std::filesystem::path gsw_csv(double tau, double r) const;

 private:
  const RunConfig& cfg_;
  std::filesystem::path root_;
};

// Subcommand that writes the artifact a cell needs.
std::string_view producer_of(Method method);

CodecArch codec_arch(const RunConfig& cfg, const Dataset& data);
double resolve_r(const RunConfig& cfg, std::size_t K);
Tensor<float> calibration_images(const Dataset& train, std::size_t n);
SweepSpec sweep_spec(const RunConfig& cfg);

// Loaders raise ConfigError naming the subcommand that produces a missing file.
Dataset load_dataset(const std::filesystem::path& path);
std::unique_ptr<TaskNetwork<float>> load_task_net(const RunConfig& cfg, const Dataset& train);

void write_text(const std::filesystem::path& path, std::string_view text);
void write_config_sidecar(const std::filesystem::path& artifact, const RunConfig& cfg);

struct Pipeline {
  RunConfig cfg;
  std::ostream* log = nullptr;

  DatasetSplit gen_data() const;
  // Returns clean test accuracy.
  double pretrain_task() const;
  TrainResult pretrain_jscc() const;
  TrainResult finetune_sdjscc() const;
  SemanticWeights gsw_inspect() const;
  std::vector<ExperimentRecord> eval() const;
  std::vector<ExperimentRecord> sweep() const;
};

}  // namespace sdjscc
