#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "ivpvae/cli/commands.hpp"

namespace {

using namespace ivpvae;

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> task;
  std::optional<std::string> backend;
  std::optional<std::string> out;
  std::optional<std::string> data;
  std::optional<std::string> checkpoint;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "key=value run configuration file");
  cmd->add_option("--seed", f.seed, "seed for data generation, splitting and initialization");
  cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
  cmd->add_option("--task", f.task, "forecast, classify or unsupervised");
  cmd->add_option("--backend", f.backend, "rk4, dopri5 or flow");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--data", f.data, "dataset CSV");
  cmd->add_option("--checkpoint", f.checkpoint, "checkpoint file (default OUT/model.ckpt)");
  cmd->add_option("--set", f.overrides, "override any config key: --set key=value")->take_all();
}

/// Defaults, then the config file, then --set entries, then dedicated flags.
cli::RunConfig build_config(const Flags& f) {
  cli::RunConfig cfg;
  if (!f.config.empty()) cli::apply_file(cfg, f.config);
  for (const auto& o : f.overrides) cli::apply_override(cfg, o);
  if (f.seed) cfg.set("seed", std::to_string(*f.seed));
  if (f.threads) cfg.set("threads", std::to_string(*f.threads));
  if (f.task) cfg.set("task", *f.task);
  if (f.backend) cfg.set("backend", *f.backend);
  if (f.out) cfg.set("out", *f.out);
  if (f.data) cfg.set("data", *f.data);
  if (f.checkpoint) cfg.set("checkpoint", *f.checkpoint);
  cfg.validate();
  return cfg;
}

int run(const std::string& command, const Flags& flags) {
  const cli::RunConfig cfg = build_config(flags);
  if (command == "generate") {
    const auto r = cli::cmd_generate(cfg);
    std::cout << "wrote " << r.n_series << " series to " << r.csv.string() << " (manifest " << r.manifest.string()
              << ")\n";
  } else if (command == "train") {
    const auto s = cli::cmd_train(cfg, [](const train::EpochRecord& r) {
      std::cout << "epoch " << r.epoch << " " << r.split << " loss " << io::format_double(r.loss.total);
      if (r.metric) std::cout << " metric " << io::format_double(*r.metric);
      std::cout << " (" << io::format_double(r.wall_seconds) << " s)" << std::endl;
    });
    std::cout << "best epoch " << s.result.best_epoch << ", validation "
              << train::selection_metric_name(cfg.model.task) << " " << io::format_double(s.result.best_metric)
              << "\ncheckpoint " << s.checkpoint.string() << "\nlog " << s.log.string() << "\nsolver round trip "
              << io::format_double(s.roundtrip_before) << " before, " << io::format_double(s.roundtrip_after)
              << " after training\ntest split:\n"
              << s.test.metrics.to_text();
  } else if (command == "evaluate") {
    std::cout << cli::cmd_evaluate(cfg).metrics.to_text();
  } else if (command == "forecast") {
    const auto r = cli::cmd_forecast(cfg);
    std::cout << "wrote " << r.rows << " predictions to " << r.csv.string() << "\n";
  } else if (command == "bench") {
    std::cout << eval::BenchReport::csv_header() << std::endl;
    cli::cmd_bench(cfg, [](const eval::BenchReport& r) { std::cout << r.csv_row() << std::endl; });
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Irregular time series forecasting and classification with IVP-VAE"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"generate", "write a synthetic dataset and its manifest"},
      {"train", "train a model and save the best-validation checkpoint"},
      {"evaluate", "report metrics of a checkpoint on one split"},
      {"forecast", "predict values of each series at given times"},
      {"bench", "time parallel against row-by-row encoding"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
