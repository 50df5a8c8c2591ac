#include <doctest.h>

#include <filesystem>

#include "sdjscc/checkpoint.hpp"
#include "sdjscc/csv.hpp"
#include "sdjscc/gsw.hpp"
#include "sdjscc/dataset.hpp"
#include "sdjscc/plot.hpp"
#include "sdjscc/sweep.hpp"

using namespace sdjscc;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  DatasetSplit data;
  std::unique_ptr<TaskNetwork<float>> net;
  CodecArch arch;
  fs::path dir;

  Fixture() {
    ShapesConfig sc;
    sc.num_per_class = 20;
    sc.size = 16;
    data = generate_shapes(sc);
    net = std::make_unique<TaskNetwork<float>>(task_arch_for(data.train), 1);
    net->freeze();
    arch.height = arch.width = 16;
    arch.base_channels = 4;
    arch.num_residual_blocks = 1;
    dir = fs::temp_directory_path() / "sdjscc_sweep";
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Fixture() { fs::remove_all(dir); }

  fs::path path(const SweepCell& c) const {
    return dir / (std::string(method_name(c.method)) + "_t" + format_double(c.tau) + "_s" + std::to_string(c.seed) + ".ckpt");
  }

  SweepContext context() {
    SweepContext ctx;
    ctx.test = &data.test;
    ctx.net = net.get();
    ctx.raw_weights = aggregate_weights(*net, data.train.range<float>(0, 8));
    ctx.arch = arch;
    ctx.checkpoint_path = [this](const SweepCell& c) { return path(c); };
    ctx.producer = [](const SweepCell& c) {
      return c.method == Method::deep_jscc ? std::string("sdjscc pretrain-jscc") : std::string("sdjscc finetune-sdjscc");
    };
    return ctx;
  }

  void materialise(const SweepSpec& spec) {
    for (const SweepCell& c : spec.cells(net->geometry().K)) {
      CodecArch a = arch;
      a.latent_channels = c.latent_channels;
      Codec<float> codec(a, c.seed + 100 * static_cast<std::uint64_t>(c.method));
      codec.checkpoint(CheckpointMeta{1, 0, 0}).save(path(c));
    }
  }
};

SweepSpec one_cell() {
  SweepSpec s;
  s.methods = {Method::deep_jscc};
  s.snr_train_db = {5};
  s.snr_test_db = {5};
  s.latent_channels = {4};
  s.tau = {50};
  s.reference_tau = 50;
  s.seeds = {0};
  return s;
}

}  // namespace

TEST_CASE("a grid of one cell yields one record") {
  Fixture f;
  const SweepSpec spec = one_cell();
  f.materialise(spec);
  const auto records = run_sweep(spec, f.context());
  REQUIRE(records.size() == 1);
  CHECK(records[0].method == Method::deep_jscc);
  CHECK(records[0].bpp == 0.25);
  CHECK(records[0].r == 32);
}

TEST_CASE("grid enumeration, ordering and byte-identical reruns") {
  Fixture f;
  SweepSpec spec = one_cell();
  spec.methods = {Method::sd_jscc, Method::deep_jscc};
  spec.snr_test_db = {10, 0};
  spec.tau = {0, 10};
  spec.seeds = {1, 0};
  f.materialise(spec);
  CHECK(spec.record_count() == (2 * 2 + 1 * 2) * 2);
  const auto a = run_sweep(spec, f.context());
  const auto b = run_sweep(spec, f.context());
  CHECK(a.size() == spec.record_count());
  CHECK(std::is_sorted(a.begin(), a.end(), record_less));
  CHECK(records_csv(a) == records_csv(b));
  CHECK(a.front().method == Method::deep_jscc);
  CHECK(a.front().snr_test_db == 0);
  for (const ExperimentRecord& r : a)
    if (r.method == Method::deep_jscc) CHECK(r.tau == 50);
}

TEST_CASE("methods share the evaluation noise for a given seed and test SNR") {
  CHECK(eval_noise_seed(0, 5) == eval_noise_seed(0, 5));
  CHECK(eval_noise_seed(0, 5) != eval_noise_seed(0, 6));
  CHECK(eval_noise_seed(0, 5) != eval_noise_seed(1, 5));
}

TEST_CASE("missing checkpoints list every unrunnable cell and its producer") {
  Fixture f;
  SweepSpec spec = one_cell();
  spec.methods = {Method::deep_jscc, Method::sd_jscc};
  spec.seeds = {0, 1};
  SweepSpec have = one_cell();
  f.materialise(have);  // only deep_jscc seed 0 exists
  try {
    run_sweep(spec, f.context());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("deep_jscc snr_train=5 latent_channels=4 seed=1") != std::string::npos);
    CHECK(msg.find("sd_jscc snr_train=5 latent_channels=4 tau=50 r=32 seed=0") != std::string::npos);
    CHECK(msg.find("sd_jscc snr_train=5 latent_channels=4 tau=50 r=32 seed=1") != std::string::npos);
    CHECK(msg.find("deep_jscc snr_train=5 latent_channels=4 seed=0") == std::string::npos);
    CHECK(msg.find("sdjscc finetune-sdjscc") != std::string::npos);
  }
}

TEST_CASE("empty grids are rejected") {
  SweepSpec spec = one_cell();
  spec.seeds.clear();
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("record CSV") {
  ExperimentRecord r;
  r.method = Method::sd_jscc_wo_gsw;
  r.snr_train_db = 5;
  r.snr_test_db = -3;
  r.bpp = 0.25;
  r.tau = 0;
  r.r = 32;
  r.seed = 2;
  r.metrics = {0.875, 0.8, 21.5, 0.6, 0.007, 1234.5};
  const std::string csv = records_csv({r});
  CHECK(csv == std::string(kRecordHeader) + "\nsd_jscc_wo_gsw,5,-3,0.25,0,32,2,0.875,0.8,21.5,0.6,0.007,1234.5\n");
  const ExperimentRecord back = parse_record_row(record_row(r));
  CHECK(record_row(back) == record_row(r));

  r.metrics.psnr_db = INFINITY;
  CHECK(record_row(r).find(",inf,") != std::string::npos);
  CHECK(std::isinf(parse_record_row(record_row(r)).metrics.psnr_db));

  const fs::path p = fs::temp_directory_path() / "sdjscc_records.csv";
  write_records(p, {r});
  CHECK(record_row(read_records(p).at(0)) == record_row(r));
  fs::remove(p);

  r.metrics.acc = 1.5;
  CHECK_THROWS_AS(r.validate(), ContractError);
  CHECK_THROWS_AS(parse_record_row("deep_jscc,1,2"), IoError);
  CHECK_THROWS_AS(parse_method("jscc"), ConfigError);
}

TEST_CASE("accuracy plot averages seeds and renders an SVG") {
  std::vector<ExperimentRecord> recs;
  for (std::uint64_t seed : {0, 1})
    for (double snr : {0.0, 5.0}) {
      ExperimentRecord r;
      r.method = Method::deep_jscc;
      r.snr_test_db = snr;
      r.seed = seed;
      r.metrics.acc = 0.5 + 0.1 * static_cast<double>(seed) + 0.01 * snr;
      recs.push_back(r);
    }
  const LinePlot plot = accuracy_plot(recs, Axis::snr_test);
  REQUIRE(plot.series.size() == 1);
  REQUIRE(plot.series[0].points.size() == 2);
  CHECK(plot.series[0].points[0].second == doctest::Approx(0.55));
  CHECK(plot.series[0].points[1].second == doctest::Approx(0.60));
  const std::string svg = render_svg(plot);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("deep_jscc") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
}
