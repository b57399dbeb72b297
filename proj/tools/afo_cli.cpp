// afo: run adaptive frequency oscillator experiments from JSON configs.
//
// Exit codes: 0 success, 1 usage error, 2 invalid configuration (nothing
// written), 3 numerical failure during a run.

#include "afo/errors.hpp"
#include "afo/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int run_command(const std::string &config_path, const std::string &out_dir,
                const std::vector<std::string> &overrides, bool quiet, unsigned threads) {
  afo::ExperimentConfig cfg;
  try {
    cfg = afo::config_from_json(
        afo::apply_overrides(afo::read_config_document(config_path), overrides));
  } catch (const afo::ConfigurationError &e) {
    std::cerr << "afo: " << e.what() << '\n';
    return 2;
  } catch (const afo::DomainError &e) {
    std::cerr << "afo: config: " << e.what() << '\n';
    return 2;
  }

  try {
    const auto res = afo::run_experiment(cfg, out_dir, {threads});
    if (!quiet)
      std::cout << res.line << '\n';
    return 0;
  } catch (const afo::IntegrationError &e) {
    std::cerr << "afo: integration failed at t = " << e.time() << ": " << e.what() << '\n';
  } catch (const std::exception &e) {
    std::cerr << "afo: " << e.what() << '\n';
  }
  return 3;
}

int check_command(const std::string &config_path, const std::vector<std::string> &overrides) {
  try {
    const auto cfg = afo::config_from_json(
        afo::apply_overrides(afo::read_config_document(config_path), overrides));
    std::cout << afo::config_to_json(cfg).dump(2) << '\n';
    return 0;
  } catch (const std::invalid_argument &e) {
    std::cerr << "afo: " << e.what() << '\n';
  } catch (const std::domain_error &e) {
    std::cerr << "afo: config: " << e.what() << '\n';
  }
  return 2;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Adaptive frequency oscillator experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::vector<std::string> overrides;
  bool quiet = false;
  unsigned threads = 0;

  auto *run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("--config", config_path, "Experiment JSON")->required();
  run->add_option("--out-dir", out_dir, "Output directory (files go to <out-dir>/<name>/)");
  run->add_option("--override", overrides, "key.path=value (repeatable)");
  run->add_flag("--quiet", quiet, "Suppress the summary line");
  run->add_option("--threads", threads, "Worker threads for sweeps (0 = all cores)");

  auto *check = app.add_subcommand("check", "Validate a config and print its normalized form");
  check->add_option("--config", config_path, "Experiment JSON")->required();
  check->add_option("--override", overrides, "key.path=value (repeatable)");

  auto *list = app.add_subcommand("list-experiments", "List the bundled reproduction configs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (*run)
    return run_command(config_path, out_dir, overrides, quiet, threads);
  if (*check)
    return check_command(config_path, overrides);
  if (*list) {
    for (const auto &e : afo::bundled_experiments())
      std::cout << e.name << "\t" << e.description << '\n';
    return 0;
  }
  return 1;
}
