#ifndef AFO_EXPERIMENTS_HPP
#define AFO_EXPERIMENTS_HPP

#include "afo/integrator.hpp"
#include "afo/signals.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace afo {

// Config-driven experiments. A config is a JSON document (schema in
// docs/config.md); config_from_json validates everything a run needs before
// any computation starts and throws ConfigurationError otherwise.

enum class ExperimentKind { Simulate, Pool, Predict, Manifold, FreqResp, SyncRegion, Spectrogram };

std::string_view to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(std::string_view s);

struct MeanRemovalWindow {
  double t0 = 0.0;
  double t1 = 0.0;
  double scan_dt = 1e-3;
};

struct CrossingScan {
  double scan_dt = 0.0; ///< 0 selects (pi / omega_max) / 40
  std::optional<double> omega_max; ///< required for sampled traces
};

struct SpectrogramSettings {
  double bin_width = 1.0;
  double frame_step = 0.5;
};

struct ManifoldGrid {
  long k_min = -2;
  long k_max = 2;
  double Omega_min = -10.0;
  double Omega_max = 10.0;
  int Omega_count = 81;
  double F_min = -1.0;
  double F_max = 1.0;
  int F_count = 41;
};

struct FreqRespSettings {
  std::vector<double> lambdas{0.1, 1.0, 10.0};
  double omega_F = 1000.0;
  double coupling = 1e5;
  std::vector<double> mod_multiples{0.1, 1.0, 10.0, 100.0}; ///< omega_C = m * lambda
  double min_window = 10.0;
};

struct SyncSettings {
  std::vector<double> K_grid;
  std::vector<double> omega0_grid;
  double fundamental = 0.0;
  int max_denominator = 1;
  double lock_tolerance = 0.01;
};

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::Simulate;
  std::string description;

  std::optional<SignalSpec> signal;
  std::optional<MeanRemovalWindow> remove_mean;

  double lambda = 1.0;
  double coupling = 1.0;
  double eta = 1.0;
  long n_oscillators = 1;

  // Single oscillator initial condition (phi defaults to an attracting branch).
  std::optional<double> phi0;
  double omega0 = 0.0;
  // Pool initial condition; phi and alpha default to zero.
  std::vector<double> phi_init, omega_init, alpha_init;

  double horizon = 0.0;
  IntegratorOptions integrator;
  bool auto_max_step = true; ///< max_step absent: (pi / omega_max) / 50
  CrossingScan crossings;
  std::optional<double> omega_F; ///< fundamental of a periodic input
  std::optional<double> steady_window; ///< pool: averaging window at the end

  std::optional<SpectrogramSettings> spectrogram;
  ManifoldGrid manifold;
  FreqRespSettings freqresp;
  SyncSettings sync;
};

/// Throws ConfigurationError on any malformed or out-of-range field.
ExperimentConfig config_from_json(const nlohmann::json &doc);
nlohmann::json config_to_json(const ExperimentConfig &cfg);

/// Reads and parses a file; parse failures become ConfigurationError.
nlohmann::json read_config_document(const std::filesystem::path &path);

/// Applies "a.b.c=value" overrides. The value is parsed as JSON when possible
/// and kept as a string otherwise. Numeric path segments index arrays.
nlohmann::json apply_overrides(nlohmann::json doc, std::span<const std::string> overrides);

/// The signal actually fed to the system (mean removal applied).
SignalSpec effective_signal(const ExperimentConfig &cfg);

struct RunOptions {
  unsigned threads = 0; ///< 0 = hardware concurrency
};

struct RunResult {
  nlohmann::json summary;
  std::string line; ///< one-line human summary
};

/// Runs the experiment and writes its files under out_dir / cfg.name.
RunResult run_experiment(const ExperimentConfig &cfg, const std::filesystem::path &out_dir,
                         const RunOptions &opts = {});

struct BundledExperiment {
  std::string_view name;
  std::string_view description;
};

/// Reproduction configs shipped in configs/<name>.json.
std::span<const BundledExperiment> bundled_experiments();

} // namespace afo

#endif // AFO_EXPERIMENTS_HPP
