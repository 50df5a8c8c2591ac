#include "sdjscc/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "sdjscc/csv.hpp"
#include "sdjscc/errors.hpp"

namespace sdjscc {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct Field {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename M>
Field field(std::string name, M RunConfig::*member) {
  Field f;
  f.name = name;
  f.set = [member, name](RunConfig& c, std::string_view v) {
    if constexpr (std::is_same_v<M, std::string>) {
      c.*member = std::string(v);
    } else if constexpr (std::is_same_v<M, bool>) {
      c.*member = parse_bool(v, name);
    } else if constexpr (std::is_same_v<M, double>) {
      c.*member = parse_double(v, name);
    } else if constexpr (std::is_same_v<M, std::uint64_t>) {
      c.*member = parse_u64(v, name);
    } else {
      c.*member = parse_size(v, name);
    }
  };
  f.get = [member](const RunConfig& c) -> std::string {
    if constexpr (std::is_same_v<M, std::string>) {
      return c.*member;
    } else if constexpr (std::is_same_v<M, bool>) {
      return c.*member ? "true" : "false";
    } else if constexpr (std::is_same_v<M, double>) {
      return format_double(c.*member);
    } else {
      return std::to_string(c.*member);
    }
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      field("out", &RunConfig::out),
      field("seed", &RunConfig::seed),
      field("threads", &RunConfig::threads),
      field("train_data", &RunConfig::train_data),
      field("test_data", &RunConfig::test_data),
      field("num_classes", &RunConfig::num_classes),
      field("num_per_class", &RunConfig::num_per_class),
      field("image_size", &RunConfig::image_size),
      field("task_epochs", &RunConfig::task_epochs),
      field("task_lr", &RunConfig::task_lr),
      field("task_batch", &RunConfig::task_batch),
      field("base_channels", &RunConfig::base_channels),
      field("latent_channels", &RunConfig::latent_channels),
      field("residual_blocks", &RunConfig::residual_blocks),
      field("snr_train", &RunConfig::snr_train),
      field("snr_test", &RunConfig::snr_test),
      field("signal_power", &RunConfig::signal_power),
      field("measured_power", &RunConfig::measured_power),
      field("batch_size", &RunConfig::batch_size),
      field("lr", &RunConfig::lr),
      field("stage1_steps", &RunConfig::stage1_steps),
      field("stage2_steps", &RunConfig::stage2_steps),
      field("method", &RunConfig::method),
      field("pixel_blend", &RunConfig::pixel_blend),
      field("tau", &RunConfig::tau),
      field("r", &RunConfig::r),
      field("calibration_size", &RunConfig::calibration_size),
      field("report_every", &RunConfig::report_every),
      field("eval_passes", &RunConfig::eval_passes),
      field("sweep_methods", &RunConfig::sweep_methods),
      field("sweep_snr_train", &RunConfig::sweep_snr_train),
      field("sweep_snr_test", &RunConfig::sweep_snr_test),
      field("sweep_latent_channels", &RunConfig::sweep_latent_channels),
      field("sweep_tau", &RunConfig::sweep_tau),
      field("sweep_seeds", &RunConfig::sweep_seeds),
  };
  return table;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text, std::string_view source) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": expected key=value");
    }
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

std::size_t parse_size(std::string_view text, std::string_view key) {
  return static_cast<std::size_t>(parse_u64(text, key));
}

std::uint64_t parse_u64(std::string_view text, std::string_view key) {
  text = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError(std::string(key) + ": '" + std::string(text) + "' is not a non-negative integer");
  }
  return v;
}

double parse_double(std::string_view text, std::string_view key) {
  text = trim(text);
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || std::isnan(v)) {
    throw ConfigError(std::string(key) + ": '" + std::string(text) + "' is not a number");
  }
  return v;
}

bool parse_bool(std::string_view text, std::string_view key) {
  text = trim(text);
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(std::string(key) + ": '" + std::string(text) + "' is not a boolean");
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  text = trim(text);
  if (text.empty()) return out;
  for (const std::string& item : csv_split(text)) {
    const std::string_view t = trim(item);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  for (const Field& f : fields()) {
    if (f.name == key) {
      f.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::apply_text(std::string_view text, std::string_view source) {
  for (const auto& [key, value] : parse_key_values(text, source)) {
    try {
      set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(source) + ": " + e.what());
    }
  }
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg;
  cfg.apply_text(ss.str(), path.string());
  return cfg;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const Field& f : fields()) out += f.name + "=" + f.get(*this) + "\n";
  return out;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const Field& f : fields()) v.push_back(f.name);
    return v;
  }();
  return names;
}

std::filesystem::path RunConfig::train_path() const {
  return train_data.empty() ? std::filesystem::path(out) / "train.imgd" : std::filesystem::path(train_data);
}

std::filesystem::path RunConfig::test_path() const {
  return test_data.empty() ? std::filesystem::path(out) / "test.imgd" : std::filesystem::path(test_data);
}

}  // namespace sdjscc
