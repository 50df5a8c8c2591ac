#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "sdjscc/csv.hpp"
#include "sdjscc/kernels.hpp"
#include "sdjscc/pipeline.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> snr_train;
  std::optional<double> snr_test;
  std::optional<std::size_t> latent_channels;
  std::optional<double> tau;
  std::optional<double> r;
  std::optional<std::string> out;
  std::vector<std::string> sets;
};

sdjscc::RunConfig resolve(const Overrides& o) {
  sdjscc::RunConfig cfg = o.config.empty() ? sdjscc::RunConfig{} : sdjscc::RunConfig::from_file(o.config);
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw sdjscc::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.snr_train) cfg.snr_train = *o.snr_train;
  if (o.snr_test) cfg.snr_test = *o.snr_test;
  if (o.latent_channels) cfg.latent_channels = *o.latent_channels;
  if (o.tau) cfg.tau = *o.tau;
  if (o.r) cfg.r = *o.r;
  if (o.out) cfg.out = *o.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic-importance deep JSCC simulator"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config, "key=value config file");
  app.add_option("--seed", o.seed, "run seed");
  app.add_option("--snr-train", o.snr_train, "training SNR in dB");
  app.add_option("--snr-test", o.snr_test, "test SNR in dB");
  app.add_option("--latent-channels", o.latent_channels, "latent channels (bpp = channels / 16)");
  app.add_option("--tau", o.tau, "softmax temperature for the semantic weights");
  app.add_option("--r", o.r, "total semantic weight mass (0 = number of feature maps)");
  app.add_option("--out", o.out, "run directory");
  app.add_option("--set", o.sets, "extra key=value override (repeatable)");
  app.fallthrough();

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "render the synthetic shapes train/test files"},
      {"pretrain-task", "train and freeze the task network"},
      {"pretrain-jscc", "stage 1: train the codec on pixel MSE"},
      {"finetune-sdjscc", "stage 2: fine-tune the codec on the feature loss"},
      {"gsw-inspect", "write the semantic weights as k,raw_w,mapped_w"},
      {"eval", "evaluate one trained codec"},
      {"sweep", "evaluate the configured grid and plot it"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const sdjscc::RunConfig cfg = resolve(o);
    sdjscc::kernels::configure_threads(static_cast<int>(cfg.threads));
    std::clog << "# " << command << " with resolved config:\n" << cfg.to_text();
    sdjscc::write_text(std::filesystem::path(cfg.out) / (command + ".config"), cfg.to_text());
    sdjscc::Pipeline p{cfg, &std::clog};
    if (command == "gen-data") {
      p.gen_data();
    } else if (command == "pretrain-task") {
      p.pretrain_task();
    } else if (command == "pretrain-jscc") {
      p.pretrain_jscc();
    } else if (command == "finetune-sdjscc") {
      p.finetune_sdjscc();
    } else if (command == "gsw-inspect") {
      const sdjscc::SemanticWeights w = p.gsw_inspect();
      std::cout << "k,raw_w,mapped_w\n";
      for (std::size_t k = 0; k < w.raw.size(); ++k) {
        std::cout << k << "," << sdjscc::format_double(w.raw[k]) << "," << sdjscc::format_double(w.mapped[k]) << "\n";
      }
    } else if (command == "eval") {
      std::cout << sdjscc::records_csv(p.eval());
    } else if (command == "sweep") {
      std::cout << sdjscc::records_csv(p.sweep());
    }
  } catch (const std::exception& e) {
    std::cerr << "sdjscc " << command << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
