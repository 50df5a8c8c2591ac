#include "sdjscc/evaluate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <tuple>

#include "sdjscc/config.hpp"
#include "sdjscc/csv.hpp"
#include "sdjscc/losses.hpp"
#include "sdjscc/metrics.hpp"

namespace sdjscc {

namespace {

struct Accumulator {
  std::vector<std::size_t> predictions;
  std::vector<std::size_t> labels;
  double squared_error = 0;
  std::size_t pixels = 0;
  double ssim_sum = 0;
  double semantic_sum = 0;
  std::size_t images = 0;

  EvalMetrics finish(std::size_t num_classes) const {
    EvalMetrics m;
    const ClassificationScores s = accuracy_f1(predictions, labels, num_classes);
    m.acc = s.accuracy;
    m.f1 = s.macro_f1;
    m.pixel_mse = pixels ? squared_error / static_cast<double>(pixels) : 0.0;
    m.psnr_db = psnr_from_mse(m.pixel_mse);
    m.ssim = images ? ssim_sum / static_cast<double>(images) : 0.0;
    m.semantic_loss = images ? semantic_sum / static_cast<double>(images) : 0.0;
    return m;
  }
};

void argmax_rows(const Tensor<float>& logits, std::vector<std::size_t>& out) {
  const std::size_t B = logits.shape[0], C = logits.shape[1];
  for (std::size_t b = 0; b < B; ++b) {
    const float* row = logits.data.data() + b * C;
    out.push_back(static_cast<std::size_t>(std::max_element(row, row + C) - row));
  }
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::deep_jscc: return "deep_jscc";
    case Method::sd_jscc: return "sd_jscc";
    case Method::sd_jscc_wo_gsw: return "sd_jscc_wo_gsw";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  for (Method m : {Method::deep_jscc, Method::sd_jscc, Method::sd_jscc_wo_gsw}) {
    if (method_name(m) == text) return m;
  }
  throw ConfigError("unknown method '" + std::string(text) + "' (expected deep_jscc, sd_jscc or sd_jscc_wo_gsw)");
}

std::uint64_t eval_noise_seed(std::uint64_t seed, double snr_test_db) {
  return mix(mix(seed ^ 0x6576616cULL) ^ std::bit_cast<std::uint64_t>(snr_test_db));
}

EvalMetrics evaluate(Codec<float>& codec, TaskNetwork<float>& net, const Dataset& test,
                     std::span<const double> weights, const EvalSettings& settings) {
  if (test.count == 0) throw ConfigError("evaluate: empty test set");
  if (settings.passes == 0 || settings.batch == 0) throw ConfigError("evaluate: passes and batch must be >= 1");
  if (weights.size() != net.geometry().K) throw ConfigError("evaluate: weight vector does not match the task net");
  ChannelConfig ch;
  ch.snr_db = settings.snr_test_db;
  ch.signal_power = settings.signal_power;
  ch.measured_power = settings.measured_power;
  ch.seed = settings.seed;
  ch.validate();
  AwgnChannel channel(ch);
  Accumulator acc;
  for (std::size_t pass = 0; pass < settings.passes; ++pass) {
    for (std::size_t start = 0; start < test.count; start += settings.batch) {
      const std::size_t end = std::min(test.count, start + settings.batch);
      const Tensor<float> x = test.range<float>(start, end);
      const Tensor<float> xr = codec.reconstruct(x, channel);
      Tape<float> tape;
      tape.set_grad_enabled(false);
      Var f = net.features(tape, tape.constant(xr));
      argmax_rows(tape.value(net.head(tape, f)), acc.predictions);
      const Tensor<float> clean = net.extract_features(x);
      Var d = weighted_feature_distance(tape, f, clean, weights);
      acc.semantic_sum += static_cast<double>(tape.value(d)[0]) * static_cast<double>(end - start);
      for (std::size_t i = start; i < end; ++i) acc.labels.push_back(test.labels[i]);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = static_cast<double>(x[i]) - static_cast<double>(xr[i]);
        acc.squared_error += e * e;
      }
      acc.pixels += x.size();
      acc.ssim_sum += ssim(x, xr) * static_cast<double>(end - start);
      acc.images += end - start;
    }
  }
  return acc.finish(net.arch().num_classes);
}

EvalMetrics evaluate_clean(TaskNetwork<float>& net, const Dataset& test) {
  if (test.count == 0) throw ConfigError("evaluate: empty test set");
  Accumulator acc;
  acc.predictions = predict(net, test);
  acc.labels.assign(test.labels.begin(), test.labels.end());
  acc.images = test.count;
  acc.ssim_sum = static_cast<double>(test.count);
  EvalMetrics m = acc.finish(net.arch().num_classes);
  m.psnr_db = psnr_from_mse(0.0);
  return m;
}

void ExperimentRecord::validate() const {
  const auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(metrics.acc) || !unit(metrics.f1)) throw ContractError("experiment record: acc/f1 outside [0,1]");
  // SSIM goes negative for anti-correlated content.
  if (!(metrics.ssim >= -1.0 && metrics.ssim <= 1.0 + 1e-12)) {
    throw ContractError("experiment record: ssim outside range");
  }
  if (std::isnan(metrics.psnr_db) || metrics.psnr_db == -std::numeric_limits<double>::infinity()) {
    throw ContractError("experiment record: psnr is not finite or the identical-image sentinel");
  }
}

std::string record_row(const ExperimentRecord& r) {
  return csv_join({std::string(method_name(r.method)), format_double(r.snr_train_db), format_double(r.snr_test_db),
                   format_double(r.bpp), format_double(r.tau), format_double(r.r), std::to_string(r.seed),
                   format_double(r.metrics.acc), format_double(r.metrics.f1), format_double(r.metrics.psnr_db),
                   format_double(r.metrics.ssim), format_double(r.metrics.pixel_mse),
                   format_double(r.metrics.semantic_loss)});
}

ExperimentRecord parse_record_row(std::string_view line) {
  const std::vector<std::string> f = csv_split(line);
  if (f.size() != 13) throw IoError("record row has " + std::to_string(f.size()) + " fields, expected 13");
  ExperimentRecord r;
  r.method = parse_method(f[0]);
  r.snr_train_db = parse_double(f[1], "snr_train_db");
  r.snr_test_db = parse_double(f[2], "snr_test_db");
  r.bpp = parse_double(f[3], "bpp");
  r.tau = parse_double(f[4], "tau");
  r.r = parse_double(f[5], "r");
  r.seed = parse_u64(f[6], "seed");
  r.metrics.acc = parse_double(f[7], "acc");
  r.metrics.f1 = parse_double(f[8], "f1");
  r.metrics.psnr_db = parse_double(f[9], "psnr_db");
  r.metrics.ssim = parse_double(f[10], "ssim");
  r.metrics.pixel_mse = parse_double(f[11], "pixel_mse");
  r.metrics.semantic_loss = parse_double(f[12], "semantic_loss");
  return r;
}

std::string records_csv(const std::vector<ExperimentRecord>& records) {
  std::string out(kRecordHeader);
  out += '\n';
  for (const ExperimentRecord& r : records) out += record_row(r) + "\n";
  return out;
}

std::vector<ExperimentRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRecordHeader) throw IoError(path.string() + ": unexpected CSV header");
  std::vector<ExperimentRecord> out;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_record_row(line));
  }
  return out;
}

void write_records(const std::filesystem::path& path, const std::vector<ExperimentRecord>& records) {
  const std::string text = records_csv(records);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

bool record_less(const ExperimentRecord& a, const ExperimentRecord& b) {
  return std::tuple(static_cast<int>(a.method), a.snr_train_db, a.bpp, a.tau, a.r, a.seed, a.snr_test_db) <
         std::tuple(static_cast<int>(b.method), b.snr_train_db, b.bpp, b.tau, b.r, b.seed, b.snr_test_db);
}

}  // namespace sdjscc
