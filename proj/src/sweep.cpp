#include "sdjscc/sweep.hpp"

#include <algorithm>
#include <exception>

#include "sdjscc/csv.hpp"
#include "sdjscc/gsw.hpp"

namespace sdjscc {

void SweepSpec::validate() const {
  if (methods.empty() || snr_train_db.empty() || snr_test_db.empty() || latent_channels.empty() || seeds.empty()) {
    throw ConfigError("sweep: every grid axis needs at least one value");
  }
  if (tau.empty() && std::find(methods.begin(), methods.end(), Method::sd_jscc) != methods.end()) {
    throw ConfigError("sweep: sd_jscc needs at least one tau");
  }
}

std::vector<SweepCell> SweepSpec::cells(std::size_t K) const {
  validate();
  const double rr = r > 0 ? r : static_cast<double>(K);
  std::vector<SweepCell> out;
  for (Method m : methods)
    for (double snr : snr_train_db)
      for (std::size_t L : latent_channels) {
        const std::vector<double> taus = m == Method::sd_jscc ? tau : std::vector<double>{reference_tau};
        for (double t : taus)
          for (std::uint64_t s : seeds) out.push_back(SweepCell{m, snr, L, t, rr, s});
      }
  return out;
}

std::size_t SweepSpec::record_count() const { return cells(1).size() * snr_test_db.size(); }

std::string describe(const SweepCell& c) {
  std::string s = std::string(method_name(c.method)) + " snr_train=" + format_double(c.snr_train_db) +
                  " latent_channels=" + std::to_string(c.latent_channels);
  if (c.method == Method::sd_jscc) s += " tau=" + format_double(c.tau) + " r=" + format_double(c.r);
  return s + " seed=" + std::to_string(c.seed);
}

std::vector<ExperimentRecord> run_sweep(const SweepSpec& spec, const SweepContext& ctx) {
  if (ctx.test == nullptr || ctx.net == nullptr || !ctx.checkpoint_path) {
    throw ContractError("run_sweep: context is incomplete");
  }
  const std::size_t K = ctx.net->geometry().K;
  if (ctx.raw_weights.size() != K) throw ConfigError("run_sweep: raw weights do not match the task net");
  const std::vector<SweepCell> cells = spec.cells(K);

  std::string missing;
  for (const SweepCell& c : cells) {
    const std::filesystem::path p = ctx.checkpoint_path(c);
    if (!std::filesystem::exists(p)) {
      missing += "\n  " + describe(c) + ": missing " + p.string();
      if (ctx.producer) missing += " (produced by `" + ctx.producer(c) + "`)";
    }
  }
  if (!missing.empty()) throw ConfigError("sweep: unrunnable cells:" + missing);

  const std::size_t T = spec.snr_test_db.size();
  std::vector<ExperimentRecord> records(cells.size() * T);
  std::vector<std::exception_ptr> errors(cells.size());
  const long n = static_cast<long>(cells.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      const SweepCell& c = cells[static_cast<std::size_t>(i)];
      CodecArch arch = ctx.arch;
      arch.latent_channels = c.latent_channels;
      Codec<float> codec(arch, c.seed);
      codec.load(Checkpoint::load(ctx.checkpoint_path(c)));
      const std::vector<double> w = map_weights(ctx.raw_weights, c.tau, c.r);
      for (std::size_t j = 0; j < T; ++j) {
        EvalSettings es;
        es.snr_test_db = spec.snr_test_db[j];
        es.signal_power = ctx.signal_power;
        es.measured_power = ctx.measured_power;
        es.seed = eval_noise_seed(c.seed, es.snr_test_db);
        es.passes = ctx.passes;
        ExperimentRecord& rec = records[static_cast<std::size_t>(i) * T + j];
        rec.method = c.method;
        rec.snr_train_db = c.snr_train_db;
        rec.snr_test_db = es.snr_test_db;
        rec.bpp = arch.bpp();
        rec.tau = c.tau;
        rec.r = c.r;
        rec.seed = c.seed;
        rec.metrics = evaluate(codec, *ctx.net, *ctx.test, w, es);
        rec.validate();
      }
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::stable_sort(records.begin(), records.end(), record_less);
  return records;
}

}  // namespace sdjscc
