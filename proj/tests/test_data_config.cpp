#include <doctest.h>

#include <filesystem>
#include <random>

#include "sdjscc/checkpoint.hpp"
#include "sdjscc/config.hpp"
#include "sdjscc/csv.hpp"
#include "sdjscc/dataset.hpp"
#include "sdjscc/errors.hpp"

using namespace sdjscc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sdjscc_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

DatasetSplit small(std::uint64_t seed) {
  ShapesConfig cfg;
  cfg.num_per_class = 20;
  cfg.size = 16;
  cfg.seed = seed;
  return generate_shapes(cfg);
}

}  // namespace

TEST_CASE("split sizes and balance") {
  ShapesConfig cfg;  // 4 classes x 500
  const DatasetSplit d = generate_shapes(cfg);
  CHECK(d.train.count == 2000);
  CHECK(d.test.count == 500);
  CHECK(d.train.num_classes == 4);
  std::vector<std::size_t> per(4, 0);
  for (auto l : d.train.labels) ++per[l];
  CHECK(per == std::vector<std::size_t>(4, 500));
  CHECK(d.train.class_names == std::vector<std::string>(shape_names().begin(), shape_names().begin() + 4));
}

TEST_CASE("same seed gives byte-identical files; another seed does not") {
  const auto a = small(1), b = small(1), c = small(2);
  CHECK(a.train.to_bytes() == b.train.to_bytes());
  CHECK(a.test.to_bytes() == b.test.to_bytes());
  CHECK(a.train.to_bytes() != c.train.to_bytes());
}

TEST_CASE("dataset file layout and round trip") {
  const auto d = small(3);
  const auto dir = scratch("dataset");
  d.train.save(dir / "train.imgd");
  const auto bytes = read_file(dir / "train.imgd");
  const std::size_t N = d.train.count;
  CHECK(bytes.size() == 20 + 2 * N + N * 16 * 16 * 3);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "IMGD");
  const Dataset back = Dataset::load(dir / "train.imgd");
  CHECK(back == d.train);
  CHECK(back.to_bytes() == bytes);
  fs::remove_all(dir);
}

TEST_CASE("malformed dataset files") {
  auto bytes = small(4).train.to_bytes();
  bytes.pop_back();
  CHECK_THROWS_AS(Dataset::from_bytes(bytes), IoError);
  CHECK_THROWS_AS(Dataset::from_bytes(std::vector<std::uint8_t>{'I', 'M'}), IoError);

  Dataset d = small(4).train;
  d.labels[0] = 9;
  CHECK_THROWS_AS(d.validate(), ConfigError);

  const auto dir = scratch("dataset_meta");
  small(4).train.save(dir / "t.imgd");
  fs::remove(dir / "t.imgd.meta");
  CHECK_THROWS_AS(Dataset::load(dir / "t.imgd"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("batches are [B,C,H,W] in [0,1] with channel-last source pixels") {
  Dataset d;
  d.count = 1;
  d.height = 1;
  d.width = 2;
  d.channels = 3;
  d.num_classes = 2;
  d.labels = {1};
  d.pixels = {255, 0, 51, 0, 255, 102};  // (r,g,b) per pixel
  const std::vector<std::size_t> idx = {0};
  const Tensor<double> x = d.batch<double>(idx);
  CHECK(x.shape == Shape{1, 3, 1, 2});
  CHECK(x.data == std::vector<double>{1, 0, 0, 1, 0.2, 0.4});
}

TEST_CASE("generator argument checks") {
  ShapesConfig cfg;
  cfg.size = 12;
  CHECK_THROWS_AS(generate_shapes(cfg), ConfigError);
  cfg.size = 32;
  cfg.classes = 1;
  CHECK_THROWS_AS(generate_shapes(cfg), ConfigError);
  cfg.classes = 17;
  CHECK_THROWS_AS(generate_shapes(cfg), ConfigError);
}

TEST_CASE("config parsing") {
  RunConfig cfg;
  cfg.apply_text("# comment\nseed = 7\n\ntau=200\nmeasured_power=true\nsweep_tau=0,1,10\n", "test");
  CHECK(cfg.seed == 7);
  CHECK(cfg.tau == 200);
  CHECK(cfg.measured_power);
  CHECK(split_list(cfg.sweep_tau) == std::vector<std::string>{"0", "1", "10"});
  CHECK_THROWS_AS(cfg.set("sede", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.set("seed", "-1"), ConfigError);
  CHECK_THROWS_AS(cfg.set("tau", "fast"), ConfigError);
  CHECK_THROWS_AS(cfg.apply_text("no equals sign\n", "test"), ConfigError);
  cfg.set("snr_test", "inf");
  CHECK(std::isinf(cfg.snr_test));
}

TEST_CASE("resolved config dump lists every key and round-trips") {
  RunConfig cfg;
  cfg.seed = 3;
  cfg.lr = 0.00123;
  cfg.sweep_methods = "sd_jscc";
  const std::string text = cfg.to_text();
  for (const std::string& k : RunConfig::keys()) CHECK(text.find(k + "=") != std::string::npos);
  RunConfig back;
  back.apply_text(text, "dump");
  CHECK(back.to_text() == text);

  const auto dir = scratch("config");
  const fs::path file = dir / "run.cfg";
  write_file(file, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  CHECK(RunConfig::from_file(file).to_text() == text);
  CHECK_THROWS_AS(RunConfig::from_file(dir / "missing.cfg"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("shortest round-trip number formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(5) == "5");
  CHECK(format_double(-2.5e-7) == "-2.5e-07");
  CHECK(format_double(INFINITY) == "inf");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(csv_split("a,,b") == std::vector<std::string>{"a", "", "b"});
  CHECK(csv_join({"x", "y"}) == "x,y");
}
