#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdjscc/codec.hpp"
#include "sdjscc/dataset.hpp"
#include "sdjscc/task_net.hpp"

namespace sdjscc {

enum class Method { deep_jscc, sd_jscc, sd_jscc_wo_gsw };

std::string_view method_name(Method m);
Method parse_method(std::string_view text);

struct EvalSettings {
  double snr_test_db = 5.0;
  double signal_power = 0.5;
  bool measured_power = false;
  std::uint64_t seed = 0;
  // Number of noisy passes over the test set.
  std::size_t passes = 1;
  std::size_t batch = 100;
};

struct EvalMetrics {
  double acc = 0.0;
  double f1 = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double pixel_mse = 0.0;
  double semantic_loss = 0.0;
};

// Classifies decoded test images with the frozen task network and scores the
// reconstructions. semantic_loss uses `weights` (length K).
EvalMetrics evaluate(Codec<float>& codec, TaskNetwork<float>& net, const Dataset& test,
                     std::span<const double> weights, const EvalSettings& settings);

// Task-net scores on the clean test images.
EvalMetrics evaluate_clean(TaskNetwork<float>& net, const Dataset& test);

struct ExperimentRecord {
  Method method = Method::deep_jscc;
  double snr_train_db = 0.0;
  double snr_test_db = 0.0;
  double bpp = 0.0;
  double tau = 0.0;
  double r = 0.0;
  std::uint64_t seed = 0;
  EvalMetrics metrics;

  void validate() const;
};

inline constexpr std::string_view kRecordHeader =
    "method,snr_train_db,snr_test_db,bpp,tau,r,seed,acc,f1,psnr_db,ssim,pixel_mse,semantic_loss";

std::string record_row(const ExperimentRecord& r);
ExperimentRecord parse_record_row(std::string_view line);
std::string records_csv(const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> read_records(const std::filesystem::path& path);
void write_records(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records);

// Grid-key order: method, snr_train, bpp, tau, r, seed, snr_test.
bool record_less(const ExperimentRecord& a, const ExperimentRecord& b);

// Seed used for the evaluation channel of one test SNR.
std::uint64_t eval_noise_seed(std::uint64_t seed, double snr_test_db);

}  // namespace sdjscc
