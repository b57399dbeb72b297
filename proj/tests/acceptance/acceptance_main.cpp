// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any
// criterion fails.

#include "afo/analysis.hpp"
#include "afo/errors.hpp"
#include "afo/experiments.hpp"
#include "afo/integrator.hpp"
#include "afo/manifolds.hpp"
#include "afo/models.hpp"
#include "afo/slowfast_maps.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace afo;
using nlohmann::json;
namespace fs = std::filesystem;
constexpr double pi = std::numbers::pi;

namespace {

const fs::path out_root = AFO_SCRATCH_DIR;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  // Records one check; the measured value always goes into the detail line.
  void check(bool ok, const std::string &what) {
    pass = pass && ok;
    if (detail.tellp() > 0)
      detail << "; ";
    detail << what << (ok ? "" : " [x]");
  }
};

std::string num(double v, int prec = 6) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

ExperimentConfig load(const std::string &name, const std::vector<std::string> &overrides = {}) {
  json doc = read_config_document(fs::path(AFO_CONFIG_DIR) / (name + ".json"));
  doc = apply_overrides(doc, overrides);
  return config_from_json(doc);
}

struct Timed {
  RunResult result;
  double seconds;
};

Timed run(const ExperimentConfig &cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunOptions ro;
  ro.threads = 1;
  auto r = run_experiment(cfg, out_root, ro);
  return {std::move(r),
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
}

/// Columns t and one named column from a CSV written by the runners.
std::pair<std::vector<double>, std::vector<double>> read_column(const fs::path &p,
                                                                const std::string &col) {
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  std::size_t idx = 0, pos = 0, found = std::string::npos;
  for (std::size_t i = 0;; ++i) {
    const std::size_t next = header.find(',', pos);
    if (header.substr(pos, next - pos) == col)
      found = i;
    if (next == std::string::npos)
      break;
    pos = next + 1;
  }
  if (found == std::string::npos)
    throw std::runtime_error("column " + col + " missing in " + p.string());
  idx = found;
  std::vector<double> t, y;
  for (std::string line; std::getline(in, line);) {
    std::istringstream ls(line);
    std::string cell;
    for (std::size_t i = 0; std::getline(ls, cell, ','); ++i) {
      if (i == 0)
        t.push_back(std::stod(cell));
      if (i == idx)
        y.push_back(std::stod(cell));
    }
  }
  return {t, y};
}

/// Time average by the trapezoid rule over rows in [t0, t1].
double time_mean(const std::vector<double> &t, const std::vector<double> &y, double t0, double t1) {
  double area = 0, span = 0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (t[i] < t0 || t[i + 1] > t1)
      continue;
    const double h = t[i + 1] - t[i];
    area += 0.5 * h * (y[i] + y[i + 1]);
    span += h;
  }
  return area / span;
}

// ---------------------------------------------------------------------------

Outcome c01() {
  Outcome o;
  const auto cfg = load("fig2");
  const auto r = run(cfg);
  const auto &conv = r.result.summary["convergence"];
  const double mean = conv["lambda_omega_final"], ripple = conv["ripple_amplitude"];
  const double mid = conv["lambda_omega_midrange"];
  const double err = r.result.summary["map_comparison"]["max_error"];
  o.check(std::abs(mean - 100.008) <= 0.01, "tail mean " + num(mean, 9) + " (midrange " +
                                                 num(mid, 9) + ")");
  o.check(std::abs(ripple / cfg.lambda - pi / 2) <= 0.05, "ripple " + num(ripple));
  o.check(err < 0.05 * pi, "map max err " + num(err, 3));
  o.check(r.seconds < 60, "runtime " + num(r.seconds, 3) + "s");
  return o;
}

Outcome c02() {
  Outcome o;
  oracle::Gen g(20240101);
  double worst_pi = 0, worst_periodic = 0;
  long bound_checks = 0, bound_fail = 0;
  for (int i = 0; i < 1000; ++i) {
    const double lambda = g.log_uniform(1e-3, 1e2), wF = g.log_uniform(1e-1, 1e4);
    const auto fp = fixed_points_cosine(lambda, wF);
    worst_pi = std::max(worst_pi, std::abs((fp.omega_bar_plus - fp.omega_bar_minus) - pi) /
                                      std::max(1.0, fp.omega_bar_plus));
    const std::vector<double> zeros{pi / wF, 2 * pi / wF};
    const auto pp = fixed_points_periodic<double>(lambda, wF, zeros);
    worst_periodic = std::max(
        worst_periodic, std::abs(pp.omega_bar_plus - fp.omega_bar_plus) / fp.omega_bar_plus);
    if (lambda * pi / wF < 1) {
      ++bound_checks;
      const double lw = lambda * fp.omega_bar_plus;
      bound_fail += !(wF < lw && lw < wF + lambda * pi);
    }
  }
  o.check(worst_pi <= 1e-12, "max |w+ - w- - pi| (rel) " + num(worst_pi, 3));
  o.check(worst_periodic <= 1e-12, "periodic vs cosine " + num(worst_periodic, 3));
  o.check(bound_fail == 0, "bounds violated " + std::to_string(bound_fail) + "/" +
                               std::to_string(bound_checks));
  return o;
}

Outcome c03() {
  Outcome o;
  const auto cfg = load("fig3");
  const auto r = run(cfg);
  const double mean = r.result.summary["convergence"]["lambda_omega_final"];
  const double err = r.result.summary["map_comparison"]["max_error"];
  o.check(std::abs(mean - 60) <= pi + 0.5, "tail mean " + num(mean));
  o.check(err < 0.05 * pi, "map max err " + num(err, 3));
  o.check(r.seconds < 60, "runtime " + num(r.seconds, 3) + "s");
  return o;
}

Outcome c04() {
  Outcome o;
  const auto cfg = load("fig3");
  const auto zeros = zeros_in_period(effective_signal(cfg), 30.0, 1e-5);
  const double lam = 1e-6;
  const double v = lam * fixed_points_periodic<double>(lam, 30.0, zeros).omega_tilde;
  o.check(std::abs(v - 60) / 60 <= 1e-3, "four zeros: " + num(v, 9));
  double worst = 0;
  for (double wF : {1.0, 30.0, 100.0, 1000.0})
    worst = std::max(worst, std::abs(lam * fixed_points_cosine(lam, wF).omega_tilde - wF) / wF);
  o.check(worst <= 1e-6, "cosine rel err " + num(worst, 3));
  return o;
}

Outcome c05() {
  Outcome o;
  const auto cfg = load("lorenz");
  const auto r = run(cfg);
  const auto [t, w] = read_column(out_root / cfg.name / "trajectory.csv", "omega");
  std::vector<double> lw(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    lw[i] = cfg.lambda * w[i];
  const double half = time_mean(t, lw, 0.5 * cfg.horizon, cfg.horizon);
  const double last = r.result.summary["convergence"]["lambda_omega_final"];

  const auto &trace = std::get<SampledTrace>(cfg.signal->terms().front());
  const std::vector<double> z(trace.values().begin(), trace.values().end());
  const double peak = oracle::fft_peak_frequency(z, trace.recipe()->output_step);
  const double mean_err = r.result.summary["map_comparison"]["mean_error"];
  const long events = r.result.summary["map_comparison"]["events"];
  const long crossings = r.result.summary["crossings"];
  o.check(std::abs(half - peak) <= 0.5, "second-half mean " + num(half, 4) + " vs FFT peak " +
                                            num(peak, 4) + " (final 1/lambda window " +
                                            num(last, 4) + ")");
  o.check(events == crossings && mean_err < 0.2,
          "map mean err " + num(mean_err, 3) + " over " + std::to_string(events) + " events");
  o.check(r.seconds < 120, "runtime " + num(r.seconds, 3) + "s");
  return o;
}

Outcome c06() {
  Outcome o;
  const SignalSpec f({Constant{2}, Cosine{1, 100, 0}});
  IntegratorOptions io;
  io.max_step = (pi / 100) / 50;
  io.output_step = 1e-3;
  const auto tr = integrate<2>(AfoSystem{{1.0, 1e4}, &f}, Eigen::Vector2d(attracting_phase(f), 50),
                               0.0, 8.0, io);
  const auto rep = fit_convergence(tr, 1.0);
  o.check(rep.omega_final < 0.1, "tail mean " + num(rep.omega_final, 3));
  return o;
}

Outcome c07() {
  Outcome o;
  const auto cfg = load("aperiodic");
  const auto r = run(cfg);
  const auto &conv = r.result.summary["convergence"];
  const double mean_err = r.result.summary["map_comparison"]["mean_error"];
  o.check(!conv["converged"].get<bool>(),
          "converged=" + std::string(conv["converged"] ? "yes" : "no") + " (r2 " +
              num(conv["fit_r2"], 3) + ", drift " + num(conv["envelope_drift"], 3) + ")");
  o.check(mean_err < 0.1 * pi, "map mean err " + num(mean_err, 3));
  return o;
}

Outcome c08() {
  Outcome o;
  auto cfg = load("freqresp");
  const auto r = run(cfg);
  for (const auto &resp : r.result.summary["responses"]) {
    const double lam = resp["lambda"];
    std::optional<double> at1, at10, at100;
    double phase1 = 0;
    for (const auto &p : resp["points"]) {
      const double m = p["mod_freq"].get<double>() / lam;
      if (std::abs(m - 1) < 1e-9) {
        at1 = p["magnitude_db"];
        phase1 = p["phase"].get<double>() * 180 / pi;
      }
      if (std::abs(m - 10) < 1e-9)
        at10 = p["magnitude_db"];
      if (std::abs(m - 100) < 1e-9)
        at100 = p["magnitude_db"];
    }
    const std::string tag = "lambda=" + num(lam, 3) + ": ";
    o.check(at1 && std::abs(*at1 + 3.0) <= 0.5, tag + num(at1.value_or(NAN), 4) + " dB");
    o.check(std::abs(phase1 + 45) <= 5, tag + num(phase1, 4) + " deg");
    if (at10 && at100)
      o.check(std::abs((*at100 - *at10) + 20) <= 2, tag + "slope " + num(*at100 - *at10, 4) + " dB/dec");
    else
      o.detail << "; " << tag << "slope n/a (omega_C > omega_F/10)";
  }
  o.check(r.seconds < 600, "runtime " + num(r.seconds, 3) + "s");
  return o;
}

Outcome c09() {
  Outcome o;
  const SignalSpec f({Cosine{1.3, 30, 0.4}, Cosine{1, 60, 0}, Cosine{1.4, 90, 1.3}});
  oracle::Gen g(909);
  double lo = 1e9, hi = 0;
  for (int n = 0; n < 100;) {
    const double theta = g.uniform(0, 2 * pi / 30);
    if (std::abs(f(theta)) <= 0.1)
      continue;
    const long k = g.integer(-3, 3);
    const double Om = k * pi + g.uniform(-3, 3), lam = g.uniform(0.5, 2), eps = g.log_uniform(1e-6, 1e-3);
    const double ratio = residual_single(k, Om, theta, f, lam, eps) /
                         residual_single(k, Om, theta, f, lam, eps / 2);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    ++n;
  }
  o.check(lo >= 3.5 && hi <= 4.5, "residual ratio in [" + num(lo, 4) + ", " + num(hi, 4) + "]");

  // Slow phases between the input's sign changes: log|omega| falls at rate lambda.
  const SignalSpec c({Cosine{1, 100, 0}});
  for (double lam : {1.0, 3.0}) {
    const double K = 1e7;
    IntegratorOptions io;
    io.max_step = (pi / 100) / 50;
    io.output_step = 1e-5;
    const auto tr = integrate<2>(AfoSystem{{lam, K}, &c}, Eigen::Vector2d(0, 80), 0.0, 0.3, io);
    const auto cr = zero_crossings(c, 0.0, 0.3, 1e-4);
    double sum = 0;
    int segs = 0;
    for (std::size_t i = 0; i + 1 < cr.times.size(); ++i) {
      const double gap = cr.times[i + 1] - cr.times[i];
      sum += log_slope(tr, 1, cr.times[i] + gap / 10, cr.times[i + 1] - gap / 10);
      ++segs;
    }
    const double slope = sum / segs;
    o.check(std::abs(slope + lam) <= 0.02 * lam,
            "lambda=" + num(lam, 2) + " slow slope " + num(slope, 9));
  }
  return o;
}

Outcome c10() {
  Outcome o;
  const auto cfg = load("pool1");
  const auto r = run(cfg);
  const auto &osc = r.result.summary["oscillators"][0];
  const double lw = osc["lambda_omega"], a = osc["alpha"], rip = osc["omega_ripple"];
  o.check(std::abs(lw - 30) <= 0.2, "lambda*omega " + num(lw));
  o.check(std::abs(a - 2) <= 0.02, "alpha " + num(a));
  o.check(rip < 0.1, "ripple " + num(rip, 3));
  o.check(r.seconds < 120, "runtime " + num(r.seconds, 3) + "s");
  return o;
}

const std::vector<double> pool3_freqs{30, 30 * std::numbers::sqrt2, 30 * pi / std::numbers::sqrt2};
const std::vector<double> pool3_amps{1.3, 1.0, 1.4};

/// Per-oscillator criteria of the N = 3 pool on a summary (sorted by frequency).
bool pool3_components(const json &summary, std::string &text) {
  bool ok = true;
  std::ostringstream s;
  for (std::size_t i = 0; i < 3; ++i) {
    const double lw = summary["oscillators"][i]["lambda_omega"];
    const double a = summary["oscillators"][i]["alpha"];
    const bool good = std::abs(lw - pool3_freqs[i]) <= 1 && std::abs(a - pool3_amps[i]) <= 0.1;
    ok = ok && good;
    s << (i ? " " : "") << num(lw, 5) << "/" << num(a, 3) << (good ? "" : "*");
  }
  text = s.str();
  return ok;
}

Outcome c11() {
  Outcome o;
  const auto r = run(load("pool3"));
  std::string text;
  const bool components = pool3_components(r.result.summary, text);
  o.check(components, "lambda*omega/alpha " + text);
  const double mse = r.result.summary["mse"];
  o.check(mse < 1e-2, "mse " + num(mse, 3));
  o.check(r.seconds < 300, "runtime " + num(r.seconds, 3) + "s");
  return o;
}

Outcome c12() {
  Outcome o;
  const auto r = run(load("pool3", {"model.K=1e4", "name=pool3_strong"}));
  std::string text;
  const bool components = pool3_components(r.result.summary, text);
  const double mse = r.result.summary["mse"];
  o.check(mse < 1e-2, "mse " + num(mse, 3));
  o.check(!components, "component criteria fail as expected: " + text);
  return o;
}

Outcome c13() {
  Outcome o;
  const auto cfg = load("pool3");
  const SignalSpec I = effective_signal(cfg);
  const Eigen::Index n = 3;
  PoolState s0{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto &c = std::get<Cosine>(I.terms()[static_cast<std::size_t>(i)]);
    s0.phi[i] = c.phase;
    s0.omega[i] = c.freq / cfg.lambda;
    s0.alpha[i] = c.amplitude;
  }
  IntegratorOptions io;
  io.rel_tol = 1e-10;
  io.abs_tol = 1e-12;
  io.output_step = 1e-3;
  const double T = 10 * 2 * pi / 30;
  const auto tr = integrate<Eigen::Dynamic>(
      PoolSystem{{cfg.n_oscillators, cfg.lambda, cfg.coupling, cfg.eta}, &I}, s0.pack(), 0.0, T, io);
  double worst = 0; // in units of the per-component tolerance
  for (std::size_t r = 0; r < tr.size(); ++r) {
    const auto y = tr.state(r);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w0 = s0.omega[i], a0 = s0.alpha[i];
      worst = std::max(worst, std::abs(y[n + i] - w0) / (io.rel_tol * std::abs(w0) + io.abs_tol));
      worst = std::max(worst, std::abs(y[2 * n + i] - a0) / (io.rel_tol * std::abs(a0) + io.abs_tol));
    }
  }
  o.check(worst < 10, "max deviation " + num(worst, 3) + " x tolerance over 10 periods");
  return o;
}

} // namespace

int main() {
  fs::create_directories(out_root);
  const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria{
      {"fig2 reproduction", c01},
      {"closed-form consistency", c02},
      {"fig3 reproduction", c03},
      {"small-lambda limit", c04},
      {"Lorenz frequency extraction", c05},
      {"strictly positive input", c06},
      {"aperiodic strong coupling", c07},
      {"frequency response", c08},
      {"manifold residual scaling", c09},
      {"single-oscillator pool", c10},
      {"three-oscillator pool", c11},
      {"three-oscillator pool, strong coupling", c12},
      {"exact-solution persistence", c13},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("C%02zu %s %s: %s (%.1fs)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
