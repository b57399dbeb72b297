#include "afo/experiments.hpp"

#include "afo/analysis.hpp"
#include "afo/errors.hpp"
#include "afo/manifolds.hpp"
#include "afo/models.hpp"
#include "afo/signal_json.hpp"
#include "afo/slowfast_maps.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

namespace afo {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::pair<ExperimentKind, std::string_view>, 7> kKindNames{{
    {ExperimentKind::Simulate, "simulate"},
    {ExperimentKind::Pool, "pool"},
    {ExperimentKind::Predict, "predict"},
    {ExperimentKind::Manifold, "manifold"},
    {ExperimentKind::FreqResp, "freqresp"},
    {ExperimentKind::SyncRegion, "syncregion"},
    {ExperimentKind::Spectrogram, "spectrogram"},
}};

constexpr std::array<BundledExperiment, 11> kBundled{{
    {"fig2", "single oscillator, F = cos(100t), K = 1e7: exponential convergence to 100.008"},
    {"fig3", "three-cosine periodic input with 4 zeros per period, K = 1e6: converges near 60"},
    {"fig4", "weak coupling K = 20, F = cos(60t), omega(0) = 90: convergence turns exponential"},
    {"fig5", "sync regions vs exponential convergence for the three-cosine input"},
    {"lorenz", "centered Lorenz z(t) as input: extracts the dominant frequency"},
    {"aperiodic", "three incommensurate cosines, K = 1e7: no convergence, maps still predict"},
    {"freqresp", "frequency response of the adaptation for lambda in {0.1, 1, 10}"},
    {"pool1", "one oscillator with feedback and amplitude, I = 2cos(30t)"},
    {"pool3", "pool of 3 oscillators, K = 100: recovers the three input components"},
    {"pool50", "pool of 50 oscillators: amplitude-weighted frequency distribution"},
    {"timevarying", "pool of 100 oscillators on chirps and FM Gaussians"},
}};

// Strict reader over one JSON object: every key must be consumed.
class Section {
public:
  Section(const json &obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object())
      fail("must be an object");
  }

  bool has(const char *key) const { return obj_.contains(key); }

  const json &raw(const char *key) {
    used_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end())
      fail(std::string("missing field '") + key + "'");
    return *it;
  }

  double number(const char *key) {
    const json &v = raw(key);
    if (!v.is_number())
      fail(std::string("'") + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
      fail(std::string("'") + key + "' must be finite");
    return d;
  }
  double number(const char *key, double fallback) { return has(key) ? number(key) : fallback; }
  std::optional<double> optional_number(const char *key) {
    if (!has(key) || obj_.at(key).is_null()) {
      used_.insert(key);
      return std::nullopt;
    }
    return number(key);
  }

  long integer(const char *key) {
    const json &v = raw(key);
    if (!v.is_number_integer())
      fail(std::string("'") + key + "' must be an integer");
    return v.get<long>();
  }
  long integer(const char *key, long fallback) { return has(key) ? integer(key) : fallback; }

  std::string string(const char *key) {
    const json &v = raw(key);
    if (!v.is_string())
      fail(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
  }
  std::string string(const char *key, const std::string &fallback) {
    return has(key) ? string(key) : fallback;
  }

  std::vector<double> numbers(const char *key) {
    const json &v = raw(key);
    if (!v.is_array())
      fail(std::string("'") + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto &x : v) {
      if (!x.is_number() || !std::isfinite(x.get<double>()))
        fail(std::string("'") + key + "' must hold finite numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  std::vector<double> numbers(const char *key, std::vector<double> fallback) {
    return has(key) ? numbers(key) : fallback;
  }

  Section sub(const char *key) { return Section(raw(key), path_ + "." + key); }

  void finish() const {
    for (const auto &item : obj_.items())
      if (!used_.contains(item.key()))
        fail("unknown field '" + item.key() + "'");
  }

  [[noreturn]] void fail(const std::string &msg) const {
    throw ConfigurationError("config " + path_ + ": " + msg);
  }

private:
  const json &obj_;
  std::string path_;
  std::set<std::string> used_;
};

bool needs_signal(ExperimentKind k) {
  return k == ExperimentKind::Simulate || k == ExperimentKind::Pool ||
         k == ExperimentKind::Predict || k == ExperimentKind::SyncRegion ||
         k == ExperimentKind::Spectrogram;
}
bool is_pool(ExperimentKind k) {
  return k == ExperimentKind::Pool || k == ExperimentKind::Spectrogram;
}
bool uses_integrator(ExperimentKind k) {
  return k != ExperimentKind::Predict && k != ExperimentKind::Manifold;
}
bool uses_horizon(ExperimentKind k) {
  return k != ExperimentKind::Manifold && k != ExperimentKind::FreqResp;
}
bool uses_crossings(ExperimentKind k) {
  return k == ExperimentKind::Simulate || k == ExperimentKind::Predict;
}

void require(bool ok, const std::string &msg) {
  if (!ok)
    throw ConfigurationError("config: " + msg);
}

double crossing_scan_dt(const ExperimentConfig &cfg, const SignalSpec &sig, double t1) {
  if (cfg.crossings.scan_dt > 0.0)
    return cfg.crossings.scan_dt;
  std::optional<double> w = cfg.crossings.omega_max;
  if (!w)
    w = sig.max_frequency(0.0, t1);
  if (!w || !(*w > 0.0))
    return 1e-3;
  return (std::numbers::pi / *w) / 40.0;
}

double default_max_step(const ExperimentConfig &cfg, const SignalSpec &sig, double t1) {
  std::optional<double> w = cfg.crossings.omega_max;
  if (!w)
    w = sig.max_frequency(0.0, t1);
  if (!w || !(*w > 0.0))
    return std::numeric_limits<double>::infinity();
  return (std::numbers::pi / *w) / 50.0;
}

} // namespace

std::string_view to_string(ExperimentKind k) {
  for (const auto &[kind, name] : kKindNames)
    if (kind == k)
      return name;
  return "?";
}

ExperimentKind experiment_kind_from_string(std::string_view s) {
  for (const auto &[kind, name] : kKindNames)
    if (name == s)
      return kind;
  throw ConfigurationError("config: unknown experiment kind '" + std::string(s) + "'");
}

std::span<const BundledExperiment> bundled_experiments() { return kBundled; }

// --- parsing -----------------------------------------------------------------

ExperimentConfig config_from_json(const json &doc) {
  Section root(doc, "<root>");
  ExperimentConfig cfg;
  cfg.name = root.string("name");
  require(!cfg.name.empty() && std::all_of(cfg.name.begin(), cfg.name.end(),
                                           [](char c) {
                                             return std::isalnum(static_cast<unsigned char>(c)) ||
                                                    c == '_' || c == '-';
                                           }),
          "name must be non-empty and use only letters, digits, '_' and '-'");
  cfg.kind = experiment_kind_from_string(root.string("experiment"));
  cfg.description = root.string("description", "");

  if (needs_signal(cfg.kind)) {
    cfg.signal = signal_from_json(root.raw("signal"));
    if (root.has("remove_mean")) {
      Section s = root.sub("remove_mean");
      cfg.remove_mean = MeanRemovalWindow{s.number("t0"), s.number("t1"), s.number("scan_dt")};
      s.finish();
      require(cfg.remove_mean->t1 > cfg.remove_mean->t0 && cfg.remove_mean->scan_dt > 0.0,
              "remove_mean needs t1 > t0 and scan_dt > 0");
    }
  }

  if (cfg.kind != ExperimentKind::FreqResp) {
    Section m = root.sub("model");
    cfg.lambda = m.number("lambda");
    require(cfg.lambda > 0.0, "model.lambda must be positive");
    if (cfg.kind != ExperimentKind::Predict && cfg.kind != ExperimentKind::SyncRegion) {
      cfg.coupling = m.number("K");
      require(cfg.coupling > 0.0, "model.K must be positive");
    }
    if (is_pool(cfg.kind)) {
      cfg.eta = m.number("eta");
      cfg.n_oscillators = m.integer("N");
      PoolParams{cfg.n_oscillators, cfg.lambda, cfg.coupling, cfg.eta}.validate();
    }
    m.finish();
  }

  if (cfg.kind == ExperimentKind::Simulate || cfg.kind == ExperimentKind::Predict) {
    Section s = root.sub("initial");
    cfg.omega0 = s.number("omega");
    if (cfg.kind == ExperimentKind::Simulate)
      cfg.phi0 = s.optional_number("phi");
    s.finish();
  } else if (is_pool(cfg.kind)) {
    Section s = root.sub("initial");
    const auto n = static_cast<std::size_t>(cfg.n_oscillators);
    cfg.omega_init = s.numbers("omega");
    cfg.phi_init = s.numbers("phi", std::vector<double>(n, 0.0));
    cfg.alpha_init = s.numbers("alpha", std::vector<double>(n, 0.0));
    s.finish();
    require(cfg.omega_init.size() == n && cfg.phi_init.size() == n && cfg.alpha_init.size() == n,
            "initial.phi/omega/alpha must each hold N values");
  }

  if (uses_horizon(cfg.kind)) {
    cfg.horizon = root.number("horizon");
    require(cfg.horizon > 0.0, "horizon must be positive");
  }

  if (uses_integrator(cfg.kind)) {
    if (root.has("integrator")) {
      Section s = root.sub("integrator");
      cfg.integrator.rel_tol = s.number("rel_tol", cfg.integrator.rel_tol);
      cfg.integrator.abs_tol = s.number("abs_tol", cfg.integrator.abs_tol);
      cfg.integrator.event_time_tol = s.number("event_time_tol", cfg.integrator.event_time_tol);
      cfg.integrator.output_step = s.number("output_step", cfg.integrator.output_step);
      if (auto ms = s.optional_number("max_step")) {
        cfg.integrator.max_step = *ms;
        cfg.auto_max_step = false;
      }
      s.finish();
    }
    cfg.integrator.validate();
  }

  if (uses_crossings(cfg.kind) && root.has("crossings")) {
    Section s = root.sub("crossings");
    cfg.crossings.scan_dt = s.number("scan_dt", 0.0);
    cfg.crossings.omega_max = s.optional_number("omega_max");
    s.finish();
    require(cfg.crossings.scan_dt >= 0.0, "crossings.scan_dt must be non-negative");
  }
  if (cfg.signal && cfg.signal->has_trace() && uses_crossings(cfg.kind))
    require(cfg.crossings.omega_max.has_value(),
            "crossings.omega_max is required for sampled or Lorenz inputs");

  if (uses_crossings(cfg.kind) && root.has("periodic")) {
    Section s = root.sub("periodic");
    cfg.omega_F = s.number("omega_F");
    s.finish();
    require(*cfg.omega_F > 0.0, "periodic.omega_F must be positive");
  }

  if (is_pool(cfg.kind) && root.has("pool")) {
    Section s = root.sub("pool");
    cfg.steady_window = s.optional_number("steady_window");
    if (s.has("spectrogram")) {
      Section g = s.sub("spectrogram");
      cfg.spectrogram = SpectrogramSettings{g.number("bin_width"), g.number("frame_step")};
      g.finish();
      require(cfg.spectrogram->bin_width > 0.0 && cfg.spectrogram->frame_step > 0.0,
              "pool.spectrogram bin_width and frame_step must be positive");
    }
    s.finish();
    if (cfg.steady_window)
      require(*cfg.steady_window > 0.0 && *cfg.steady_window <= cfg.horizon,
              "pool.steady_window must lie in (0, horizon]");
  }
  if (cfg.kind == ExperimentKind::Spectrogram)
    require(cfg.spectrogram.has_value(), "spectrogram experiments need pool.spectrogram");

  if (cfg.kind == ExperimentKind::Manifold) {
    Section s = root.sub("manifold");
    auto &g = cfg.manifold;
    g.k_min = s.integer("k_min");
    g.k_max = s.integer("k_max");
    g.Omega_min = s.number("Omega_min");
    g.Omega_max = s.number("Omega_max");
    g.Omega_count = static_cast<int>(s.integer("Omega_count"));
    g.F_min = s.number("F_min");
    g.F_max = s.number("F_max");
    g.F_count = static_cast<int>(s.integer("F_count"));
    s.finish();
    require(g.k_max >= g.k_min && g.Omega_count >= 2 && g.F_count >= 2 &&
                g.Omega_max > g.Omega_min && g.F_max > g.F_min,
            "manifold grid must be non-empty and increasing");
  }

  if (cfg.kind == ExperimentKind::FreqResp) {
    Section s = root.sub("freqresp");
    auto &f = cfg.freqresp;
    f.lambdas = s.numbers("lambdas");
    f.omega_F = s.number("omega_F");
    f.coupling = s.number("K");
    f.mod_multiples = s.numbers("mod_multiples");
    f.min_window = s.number("min_window", f.min_window);
    s.finish();
    require(!f.lambdas.empty() && !f.mod_multiples.empty(),
            "freqresp.lambdas and mod_multiples must be non-empty");
    require(std::all_of(f.lambdas.begin(), f.lambdas.end(), [](double v) { return v > 0.0; }) &&
                std::all_of(f.mod_multiples.begin(), f.mod_multiples.end(),
                            [](double v) { return v > 0.0; }),
            "freqresp lambdas and multiples must be positive");
    require(f.omega_F > 0.0 && f.coupling > 0.0 && f.min_window > 0.0,
            "freqresp omega_F, K and min_window must be positive");
  }

  if (cfg.kind == ExperimentKind::SyncRegion) {
    Section s = root.sub("syncregion");
    auto &g = cfg.sync;
    g.K_grid = s.numbers("K_grid");
    g.omega0_grid = s.numbers("omega0_grid");
    g.fundamental = s.number("fundamental");
    g.max_denominator = static_cast<int>(s.integer("max_denominator", g.max_denominator));
    g.lock_tolerance = s.number("lock_tolerance", g.lock_tolerance);
    s.finish();
    require(!g.K_grid.empty() && !g.omega0_grid.empty(), "syncregion grids must be non-empty");
    require(std::all_of(g.K_grid.begin(), g.K_grid.end(), [](double v) { return v > 0.0; }),
            "syncregion.K_grid must be positive");
    require(g.fundamental > 0.0 && g.max_denominator >= 1 && g.lock_tolerance > 0.0,
            "syncregion fundamental, max_denominator and lock_tolerance must be positive");
    require(cfg.horizon >= 5.0 / cfg.lambda, "syncregion horizon must cover 5/lambda");
  }

  root.finish();
  return cfg;
}

json config_to_json(const ExperimentConfig &cfg) {
  json j;
  j["name"] = cfg.name;
  j["experiment"] = std::string(to_string(cfg.kind));
  j["description"] = cfg.description;
  if (needs_signal(cfg.kind) && cfg.signal) {
    j["signal"] = signal_to_json(*cfg.signal);
    if (cfg.remove_mean)
      j["remove_mean"] = {{"t0", cfg.remove_mean->t0},
                          {"t1", cfg.remove_mean->t1},
                          {"scan_dt", cfg.remove_mean->scan_dt}};
  }
  if (cfg.kind != ExperimentKind::FreqResp) {
    json m{{"lambda", cfg.lambda}};
    if (cfg.kind != ExperimentKind::Predict && cfg.kind != ExperimentKind::SyncRegion)
      m["K"] = cfg.coupling;
    if (is_pool(cfg.kind)) {
      m["eta"] = cfg.eta;
      m["N"] = cfg.n_oscillators;
    }
    j["model"] = m;
  }
  if (cfg.kind == ExperimentKind::Simulate || cfg.kind == ExperimentKind::Predict) {
    json s{{"omega", cfg.omega0}};
    if (cfg.phi0)
      s["phi"] = *cfg.phi0;
    j["initial"] = s;
  } else if (is_pool(cfg.kind)) {
    j["initial"] = {{"phi", cfg.phi_init}, {"omega", cfg.omega_init}, {"alpha", cfg.alpha_init}};
  }
  if (uses_horizon(cfg.kind))
    j["horizon"] = cfg.horizon;
  if (uses_integrator(cfg.kind)) {
    json s{{"rel_tol", cfg.integrator.rel_tol},
           {"abs_tol", cfg.integrator.abs_tol},
           {"event_time_tol", cfg.integrator.event_time_tol},
           {"output_step", cfg.integrator.output_step}};
    if (!cfg.auto_max_step)
      s["max_step"] = cfg.integrator.max_step;
    j["integrator"] = s;
  }
  if (uses_crossings(cfg.kind)) {
    json s{{"scan_dt", cfg.crossings.scan_dt}};
    if (cfg.crossings.omega_max)
      s["omega_max"] = *cfg.crossings.omega_max;
    j["crossings"] = s;
    if (cfg.omega_F)
      j["periodic"] = {{"omega_F", *cfg.omega_F}};
  }
  if (is_pool(cfg.kind)) {
    json s = json::object();
    if (cfg.steady_window)
      s["steady_window"] = *cfg.steady_window;
    if (cfg.spectrogram)
      s["spectrogram"] = {{"bin_width", cfg.spectrogram->bin_width},
                          {"frame_step", cfg.spectrogram->frame_step}};
    j["pool"] = s;
  }
  if (cfg.kind == ExperimentKind::Manifold) {
    const auto &g = cfg.manifold;
    j["manifold"] = {{"k_min", g.k_min},         {"k_max", g.k_max},
                     {"Omega_min", g.Omega_min}, {"Omega_max", g.Omega_max},
                     {"Omega_count", g.Omega_count}, {"F_min", g.F_min},
                     {"F_max", g.F_max},         {"F_count", g.F_count}};
  }
  if (cfg.kind == ExperimentKind::FreqResp) {
    const auto &f = cfg.freqresp;
    j["freqresp"] = {{"lambdas", f.lambdas},
                     {"omega_F", f.omega_F},
                     {"K", f.coupling},
                     {"mod_multiples", f.mod_multiples},
                     {"min_window", f.min_window}};
  }
  if (cfg.kind == ExperimentKind::SyncRegion) {
    const auto &g = cfg.sync;
    j["syncregion"] = {{"K_grid", g.K_grid},
                       {"omega0_grid", g.omega0_grid},
                       {"fundamental", g.fundamental},
                       {"max_denominator", g.max_denominator},
                       {"lock_tolerance", g.lock_tolerance}};
  }
  return j;
}

json read_config_document(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigurationError("cannot open config file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigurationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

json apply_overrides(json doc, std::span<const std::string> overrides) {
  for (const auto &ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigurationError("override '" + ov + "' is not of the form key.path=value");
    const std::string path = ov.substr(0, eq);
    const std::string text = ov.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error &) {
      value = text;
    }

    json *node = &doc;
    std::size_t start = 0;
    for (;;) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
      if (key.empty())
        throw ConfigurationError("override '" + ov + "' has an empty path segment");
      json *next = nullptr;
      if (node->is_array()) {
        std::size_t idx = 0;
        try {
          std::size_t used = 0;
          idx = std::stoul(key, &used);
          if (used != key.size())
            throw std::invalid_argument(key);
        } catch (const std::exception &) {
          throw ConfigurationError("override '" + ov + "': '" + key + "' is not an array index");
        }
        if (idx >= node->size())
          throw ConfigurationError("override '" + ov + "': index " + key + " out of range");
        next = &(*node)[idx];
      } else if (node->is_object() || node->is_null()) {
        next = &(*node)[key];
      } else {
        throw ConfigurationError("override '" + ov + "': cannot descend into a scalar");
      }
      if (dot == std::string::npos) {
        *next = value;
        break;
      }
      node = next;
      start = dot + 1;
    }
  }
  return doc;
}

SignalSpec effective_signal(const ExperimentConfig &cfg) {
  if (!cfg.signal)
    throw ConfigurationError("config: experiment has no signal");
  if (cfg.remove_mean)
    return remove_mean(*cfg.signal, cfg.remove_mean->t0, cfg.remove_mean->t1,
                       cfg.remove_mean->scan_dt);
  return *cfg.signal;
}

// --- running -----------------------------------------------------------------

namespace {

std::ofstream open_output(const fs::path &p) {
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + p.string());
  return out;
}

void write_json(const fs::path &p, const json &j) {
  auto out = open_output(p);
  out << j.dump(2) << '\n';
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

json convergence_json(const ConvergenceReport &r) {
  return {{"converged", r.converged},         {"lambda_omega_final", r.omega_final},
          {"fitted_rate", r.fitted_rate},     {"fit_r2", r.fit_r2},
          {"ripple_amplitude", r.ripple_amplitude}, {"lambda_omega_midrange", r.omega_midrange},
          {"envelope_drift", r.envelope_drift}};
}

IntegratorOptions integrator_for(const ExperimentConfig &cfg, const SignalSpec &sig) {
  IntegratorOptions io = cfg.integrator;
  if (cfg.auto_max_step)
    io.max_step = default_max_step(cfg, sig, cfg.horizon);
  return io;
}

json fixed_points_json(const ExperimentConfig &cfg, const SignalSpec &sig, double scan_dt) {
  const auto zeros = zeros_in_period(sig, *cfg.omega_F, scan_dt);
  const auto fp = fixed_points_periodic<double>(cfg.lambda, *cfg.omega_F, zeros);
  json j{{"zeros_per_period", zeros.size()},
         {"omega_bar_plus", fp.omega_bar_plus},
         {"omega_bar_minus", fp.omega_bar_minus},
         {"omega_tilde", fp.omega_tilde},
         {"lambda_omega_tilde", cfg.lambda * fp.omega_tilde},
         {"bounds_trajectory", fp.bounds_trajectory}};
  if (zeros.size() % 2 == 0)
    j["limit_frequency"] = limit_frequency<double>(static_cast<int>(zeros.size()), *cfg.omega_F);
  return j;
}

RunResult run_single(const ExperimentConfig &cfg, const fs::path &dir, bool simulate) {
  const SignalSpec sig = effective_signal(cfg);
  const double scan_dt = crossing_scan_dt(cfg, sig, cfg.horizon);
  const CrossingList crossings =
      zero_crossings(sig, 0.0, cfg.horizon, scan_dt, kDefaultTimeTol, cfg.crossings.omega_max);

  json summary{{"experiment", std::string(to_string(cfg.kind))},
               {"name", cfg.name},
               {"lambda", cfg.lambda},
               {"crossings", crossings.times.size()}};
  std::optional<MapPrediction> pred;
  if (!crossings.times.empty()) {
    pred = predict_sequence(cfg.omega0, 0.0, crossings, cfg.lambda);
    auto out = open_output(dir / "prediction.csv");
    write_prediction_csv(out, *pred);
  }
  if (cfg.omega_F)
    summary["fixed_points"] = fixed_points_json(cfg, sig, scan_dt);

  std::string line = cfg.name + ":";
  if (!simulate) {
    if (pred)
      summary["final_prediction"] = {{"omega_minus", pred->omega_minus.back()},
                                     {"omega_plus", pred->omega_plus.back()}};
    if (cfg.omega_F)
      line += " lambda*omega_tilde=" + fmt(summary["fixed_points"]["lambda_omega_tilde"], 9);
    line += " crossings=" + std::to_string(crossings.times.size());
    return {summary, line};
  }

  const AfoParams p{cfg.lambda, cfg.coupling};
  p.validate();
  IntegratorOptions io = integrator_for(cfg, sig);
  if (pred)
    io.output_times = probe_times(*pred, cfg.coupling);
  const std::vector<EventFunction> events{
      {kCrossingEvent, [&sig](double t, std::span<const double>) { return sig(t); }}};
  const Eigen::Vector2d y0(cfg.phi0 ? *cfg.phi0 : attracting_phase(sig, 0.0), cfg.omega0);
  IntegrationStats stats;
  const Trajectory traj = integrate<2>(AfoSystem{p, &sig, true}, y0, 0.0, cfg.horizon, io, events,
                                       &stats);

  const std::vector<std::string> names{"phi", "omega"};
  {
    auto out = open_output(dir / "trajectory.csv");
    write_csv(out, traj, names);
  }
  {
    auto out = open_output(dir / "events.csv");
    write_events_csv(out, traj, names);
  }
  summary["steps"] = {{"accepted", stats.accepted}, {"rejected", stats.rejected}};
  summary["final_state"] = {{"phi", traj.state(traj.size() - 1)[0]},
                            {"omega", traj.state(traj.size() - 1)[1]}};

  if (cfg.horizon >= 5.0 / cfg.lambda) {
    const auto rep = fit_convergence(traj, cfg.lambda);
    summary["convergence"] = convergence_json(rep);
    line += " lambda*omega_final=" + fmt(rep.omega_final, 9) +
            " converged=" + (rep.converged ? "yes" : "no");
  } else {
    const double lw = cfg.lambda * traj.state(traj.size() - 1)[1];
    line += " lambda*omega_end=" + fmt(lw, 9) + " converged=n/a";
  }
  if (pred) {
    const auto cmp = compare_maps(traj, *pred, cfg.coupling, cfg.lambda);
    summary["map_comparison"] = {{"events", cmp.size()},
                                 {"max_error", cmp.max_error},
                                 {"mean_error", cmp.mean_error}};
    auto out = open_output(dir / "comparison.csv");
    write_comparison_csv(out, cmp);
    line += " map_max_err=" + fmt(cmp.max_error, 3);
  }
  if (cfg.omega_F)
    line += " lambda*omega_tilde=" + fmt(summary["fixed_points"]["lambda_omega_tilde"], 9);
  return {summary, line};
}

RunResult run_pool(const ExperimentConfig &cfg, const fs::path &dir) {
  const SignalSpec sig = effective_signal(cfg);
  const PoolParams p{cfg.n_oscillators, cfg.lambda, cfg.coupling, cfg.eta};
  p.validate();
  const auto n = static_cast<Eigen::Index>(cfg.n_oscillators);
  PoolState s0{Eigen::Map<const Eigen::VectorXd>(cfg.phi_init.data(), n),
               Eigen::Map<const Eigen::VectorXd>(cfg.omega_init.data(), n),
               Eigen::Map<const Eigen::VectorXd>(cfg.alpha_init.data(), n)};
  s0.validate(p);

  IntegratorOptions io = integrator_for(cfg, sig);
  IntegrationStats stats;
  const Trajectory traj =
      integrate<Eigen::Dynamic>(PoolSystem{p, &sig}, s0.pack(), 0.0, cfg.horizon, io, {}, &stats);

  std::vector<std::string> names;
  for (const char *prefix : {"phi", "omega", "alpha"})
    for (Eigen::Index i = 0; i < n; ++i)
      names.push_back(std::string(prefix) + "_" + std::to_string(i));
  {
    auto out = open_output(dir / "trajectory.csv");
    write_csv(out, traj, names);
  }
  {
    const Eigen::VectorXd err = reconstruction_error(traj, sig);
    auto out = open_output(dir / "reconstruction.csv");
    out << std::setprecision(17) << "t,error\n";
    for (std::size_t r = 0; r < traj.size(); ++r)
      out << traj.time(r) << ',' << err[static_cast<Eigen::Index>(r)] << '\n';
  }

  const double window = cfg.steady_window ? *cfg.steady_window : 0.2 * cfg.horizon;
  const auto ss = pool_steady_state(traj, sig, cfg.lambda, cfg.horizon - window, cfg.horizon);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return ss.lambda_omega[a] < ss.lambda_omega[b]; });
  json osc = json::array();
  for (Eigen::Index i : order)
    osc.push_back({{"index", i},
                   {"lambda_omega", ss.lambda_omega[i]},
                   {"alpha", ss.alpha[i]},
                   {"omega_ripple", ss.omega_ripple[i]}});

  json summary{{"experiment", std::string(to_string(cfg.kind))},
               {"name", cfg.name},
               {"steady_window", {cfg.horizon - window, cfg.horizon}},
               {"oscillators", osc},
               {"mse", ss.mse},
               {"steps", {{"accepted", stats.accepted}, {"rejected", stats.rejected}}}};

  if (cfg.spectrogram) {
    std::vector<double> frames;
    for (double t = 0.0; t <= cfg.horizon + 1e-12; t += cfg.spectrogram->frame_step)
      frames.push_back(std::min(t, cfg.horizon));
    const auto spec = spectrogram(traj, cfg.lambda, cfg.spectrogram->bin_width, frames);
    auto out = open_output(dir / "spectrogram.csv");
    write_spectrogram_csv(out, spec);
    summary["spectrogram_frames"] = spec.size();
  }

  std::string line = cfg.name + ": mse=" + fmt(ss.mse, 3) + " lambda*omega=[";
  const std::size_t shown = std::min<std::size_t>(order.size(), 6);
  for (std::size_t k = 0; k < shown; ++k)
    line += (k ? " " : "") + fmt(ss.lambda_omega[order[k]], 6);
  if (shown < order.size())
    line += " ...";
  line += "]";
  return {summary, line};
}

RunResult run_manifold(const ExperimentConfig &cfg, const fs::path &dir) {
  const auto &g = cfg.manifold;
  std::vector<double> Om(static_cast<std::size_t>(g.Omega_count)), F(static_cast<std::size_t>(g.F_count));
  for (int i = 0; i < g.Omega_count; ++i)
    Om[static_cast<std::size_t>(i)] = g.Omega_min + (g.Omega_max - g.Omega_min) * i / (g.Omega_count - 1);
  for (int i = 0; i < g.F_count; ++i)
    F[static_cast<std::size_t>(i)] = g.F_min + (g.F_max - g.F_min) * i / (g.F_count - 1);
  auto out = open_output(dir / "manifold_surface.csv");
  write_manifold_surface(out, g.k_min, g.k_max, Om, F, cfg.lambda, 1.0 / cfg.coupling);
  json summary{{"experiment", "manifold"},
               {"name", cfg.name},
               {"epsilon", 1.0 / cfg.coupling},
               {"branches", g.k_max - g.k_min + 1},
               {"grid", {{"Omega", g.Omega_count}, {"F", g.F_count}}}};
  return {summary, cfg.name + ": manifold surface for k in [" + std::to_string(g.k_min) + ", " +
                       std::to_string(g.k_max) + "]"};
}

RunResult run_freqresp(const ExperimentConfig &cfg, const fs::path &dir, const RunOptions &ro) {
  const auto &f = cfg.freqresp;
  json per_lambda = json::array();
  auto out = open_output(dir / "freqresp.csv");
  out << std::setprecision(17) << "lambda,mod_freq,magnitude_db,phase\n";
  std::string line = cfg.name + ":";
  for (double lam : f.lambdas) {
    std::vector<double> wc;
    for (double m : f.mod_multiples)
      if (m * lam <= f.omega_F / 10.0)
        wc.push_back(m * lam);
    if (wc.empty())
      continue;
    FreqResponseOptions fo;
    fo.min_window = f.min_window;
    fo.integrator = cfg.integrator;
    fo.threads = ro.threads;
    const auto pts = frequency_response(lam, f.omega_F, wc, f.coupling, fo);
    json arr = json::array();
    for (const auto &p : pts) {
      out << lam << ',' << p.mod_freq << ',' << p.magnitude_db << ',' << p.phase << '\n';
      arr.push_back({{"mod_freq", p.mod_freq}, {"magnitude_db", p.magnitude_db}, {"phase", p.phase}});
      if (std::abs(p.mod_freq - lam) <= 1e-12 * lam)
        line += " lambda=" + fmt(lam, 3) + ":" + fmt(p.magnitude_db, 3) + "dB/" +
                fmt(p.phase * 180.0 / std::numbers::pi, 3) + "deg";
    }
    per_lambda.push_back({{"lambda", lam}, {"points", arr}});
  }
  json summary{{"experiment", "freqresp"},
               {"name", cfg.name},
               {"omega_F", f.omega_F},
               {"K", f.coupling},
               {"responses", per_lambda}};
  return {summary, line};
}

RunResult run_sync(const ExperimentConfig &cfg, const fs::path &dir, const RunOptions &ro) {
  const SignalSpec sig = effective_signal(cfg);
  SyncSweepOptions so;
  so.horizon = cfg.horizon;
  so.fundamental = cfg.sync.fundamental;
  so.max_denominator = cfg.sync.max_denominator;
  so.lock_tolerance = cfg.sync.lock_tolerance;
  so.integrator = cfg.integrator;
  if (!cfg.auto_max_step)
    so.integrator.max_step = cfg.integrator.max_step;
  so.threads = ro.threads;
  const auto cells = sync_region_sweep(sig, cfg.sync.K_grid, cfg.sync.omega0_grid, cfg.lambda, so);
  {
    auto out = open_output(dir / "sync.csv");
    write_sync_csv(out, cells);
  }
  json summary = sync_summary_json(cells, cfg.sync.K_grid, cfg.sync.omega0_grid, cfg.lambda, so);
  summary["experiment"] = "syncregion";
  summary["name"] = cfg.name;
  std::size_t locked = 0, expo = 0, both = 0;
  for (const auto &c : cells) {
    locked += c.locked;
    expo += c.exponential;
    both += c.locked && c.exponential;
  }
  summary["counts"] = {{"cells", cells.size()}, {"locked", locked}, {"exponential", expo},
                       {"both", both}};
  return {summary, cfg.name + ": cells=" + std::to_string(cells.size()) +
                       " locked=" + std::to_string(locked) +
                       " exponential=" + std::to_string(expo) + " both=" + std::to_string(both)};
}

} // namespace

RunResult run_experiment(const ExperimentConfig &cfg, const fs::path &out_dir,
                         const RunOptions &opts) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path dir = out_dir / cfg.name;
  fs::create_directories(dir);

  RunResult res;
  switch (cfg.kind) {
  case ExperimentKind::Simulate:
    res = run_single(cfg, dir, true);
    break;
  case ExperimentKind::Predict:
    res = run_single(cfg, dir, false);
    break;
  case ExperimentKind::Pool:
  case ExperimentKind::Spectrogram:
    res = run_pool(cfg, dir);
    break;
  case ExperimentKind::Manifold:
    res = run_manifold(cfg, dir);
    break;
  case ExperimentKind::FreqResp:
    res = run_freqresp(cfg, dir, opts);
    break;
  case ExperimentKind::SyncRegion:
    res = run_sync(cfg, dir, opts);
    break;
  }
  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.summary["config"] = config_to_json(cfg);
  write_json(dir / "summary.json", res.summary);
  res.line += " runtime=" + fmt(runtime, 3) + "s";
  return res;
}

} // namespace afo
