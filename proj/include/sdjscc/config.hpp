#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sdjscc {

// `key=value` lines; '#' starts a comment, blank lines are skipped.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text, std::string_view source);

std::size_t parse_size(std::string_view text, std::string_view key);
std::uint64_t parse_u64(std::string_view text, std::string_view key);
double parse_double(std::string_view text, std::string_view key);  // accepts inf
bool parse_bool(std::string_view text, std::string_view key);
std::vector<std::string> split_list(std::string_view text);  // comma separated, empty -> {}

// Fully resolved settings for one CLI invocation. Every field maps to one
// config-file key of the same name; CLI flags are applied on top of the file.
struct RunConfig {
  std::string out = "run";
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  std::string train_data;  // empty: <out>/train.imgd
  std::string test_data;   // empty: <out>/test.imgd
  std::size_t num_classes = 4;
  std::size_t num_per_class = 500;
  std::size_t image_size = 32;

  std::size_t task_epochs = 20;
  double task_lr = 3e-3;
  std::size_t task_batch = 32;

  std::size_t base_channels = 32;
  std::size_t latent_channels = 4;
  std::size_t residual_blocks = 2;

  double snr_train = 5.0;
  double snr_test = 5.0;
  double signal_power = 0.5;
  bool measured_power = false;

  std::size_t batch_size = 32;
  double lr = 1e-4;
  std::size_t stage1_steps = 20000;
  std::size_t stage2_steps = 5000;
  std::string method = "sd_jscc";  // finetune: sd_jscc | sd_jscc_wo_gsw
  double pixel_blend = 0.0;
  double tau = 50.0;
  double r = 0.0;  // 0: use K
  std::size_t calibration_size = 256;
  std::size_t report_every = 100;
  std::size_t eval_passes = 1;

  std::string sweep_methods = "deep_jscc,sd_jscc";
  std::string sweep_snr_train;         // empty: snr_train
  std::string sweep_snr_test = "0,5,10,15,20";
  std::string sweep_latent_channels;   // empty: latent_channels
  std::string sweep_tau;               // empty: tau
  std::string sweep_seeds;             // empty: seed

  // Throws ConfigError for unknown keys or unparsable values.
  void set(std::string_view key, std::string_view value);
  void apply_text(std::string_view text, std::string_view source);
  static RunConfig from_file(const std::filesystem::path& path);

  // Deterministic key=value dump of every field.
  std::string to_text() const;
  static const std::vector<std::string>& keys();

  std::filesystem::path train_path() const;
  std::filesystem::path test_path() const;
};

}  // namespace sdjscc
