#include "afo/signals.hpp"

#include "afo/errors.hpp"
#include "afo/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace afo {

namespace {

template <class... Ts> struct overloaded : Ts... {
  using Ts::operator()...;
};

void require(bool ok, const char *what) {
  if (!ok)
    throw DomainError(what);
}

bool finite(std::initializer_list<double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

void validate(const SignalTerm &term) {
  std::visit(overloaded{
                 [](const Cosine &c) {
                   require(finite({c.amplitude, c.freq, c.phase}), "cosine: non-finite parameter");
                   require(c.amplitude >= 0.0, "cosine: amplitude must be >= 0");
                   require(c.freq > 0.0, "cosine: freq must be > 0");
                 },
                 [](const LinearChirp &c) {
                   require(finite({c.amplitude, c.base_freq, c.rate}),
                           "linear chirp: non-finite parameter");
                   require(c.amplitude >= 0.0, "linear chirp: amplitude must be >= 0");
                   require(c.base_freq > 0.0, "linear chirp: base_freq must be > 0");
                 },
                 [](const QuadraticChirp &c) {
                   require(finite({c.amplitude, c.base_freq, c.cubic_coeff}),
                           "quadratic chirp: non-finite parameter");
                   require(c.amplitude >= 0.0, "quadratic chirp: amplitude must be >= 0");
                   require(c.base_freq > 0.0, "quadratic chirp: base_freq must be > 0");
                 },
                 [](const FmGaussian &g) {
                   require(finite({g.amplitude, g.carrier, g.center, g.width_sq}),
                           "fm gaussian: non-finite parameter");
                   require(g.amplitude >= 0.0, "fm gaussian: amplitude must be >= 0");
                   require(g.carrier > 0.0, "fm gaussian: carrier must be > 0");
                   require(g.width_sq > 0.0, "fm gaussian: width_sq must be > 0");
                 },
                 [](const FmSine &f) {
                   require(finite({f.carrier, f.mod_freq}), "fm sine: non-finite parameter");
                   require(f.carrier > 0.0 && f.mod_freq > 0.0,
                           "fm sine: frequencies must be > 0");
                 },
                 [](const SampledTrace &) {}, // checked by its constructor
                 [](const Constant &c) {
                   require(std::isfinite(c.offset), "constant: non-finite offset");
                 },
             },
             term);
}

double term_value(const SignalTerm &term, double t) {
  return std::visit(
      overloaded{
          [t](const Cosine &c) { return c.amplitude * std::cos(c.freq * t + c.phase); },
          [t](const LinearChirp &c) {
            return c.amplitude * std::sin(c.base_freq * t + c.rate * t * t);
          },
          [t](const QuadraticChirp &c) {
            return c.amplitude * std::sin(c.base_freq * t + c.cubic_coeff * t * t * t);
          },
          [t](const FmGaussian &g) {
            const double d = t - g.center;
            return g.amplitude * std::sin(g.carrier * t) * std::exp(-d * d / g.width_sq);
          },
          [t](const FmSine &f) {
            return std::sin(f.carrier * t + std::sin(f.mod_freq * t) / f.mod_freq);
          },
          [t](const SampledTrace &s) { return s.value(t); },
          [](const Constant &c) { return c.offset; },
      },
      term);
}

double term_derivative(const SignalTerm &term, double t) {
  return std::visit(
      overloaded{
          [t](const Cosine &c) { return -c.amplitude * c.freq * std::sin(c.freq * t + c.phase); },
          [t](const LinearChirp &c) {
            return c.amplitude * (c.base_freq + 2.0 * c.rate * t) *
                   std::cos(c.base_freq * t + c.rate * t * t);
          },
          [t](const QuadraticChirp &c) {
            return c.amplitude * (c.base_freq + 3.0 * c.cubic_coeff * t * t) *
                   std::cos(c.base_freq * t + c.cubic_coeff * t * t * t);
          },
          [t](const FmGaussian &g) {
            const double d = t - g.center;
            const double env = std::exp(-d * d / g.width_sq);
            return g.amplitude * env *
                   (g.carrier * std::cos(g.carrier * t) -
                    2.0 * d / g.width_sq * std::sin(g.carrier * t));
          },
          [t](const FmSine &f) {
            return (f.carrier + std::cos(f.mod_freq * t)) *
                   std::cos(f.carrier * t + std::sin(f.mod_freq * t) / f.mod_freq);
          },
          [t](const SampledTrace &s) { return s.derivative(t); },
          [](const Constant &) { return 0.0; },
      },
      term);
}

} // namespace

// --- SampledTrace -----------------------------------------------------------

SampledTrace::SampledTrace(std::vector<double> times, std::vector<double> values,
                           std::optional<LorenzRecipe> recipe)
    : recipe_(std::move(recipe)) {
  if (times.size() != values.size())
    throw DomainError("sampled trace: times and values differ in length");
  if (times.size() < 2)
    throw DomainError("sampled trace: need at least two samples");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || !std::isfinite(values[i]))
      throw DomainError("sampled trace: non-finite sample");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw DomainError("sampled trace: times must be strictly increasing");
  }

  // Natural spline: tridiagonal solve for the knot second derivatives.
  const std::size_t n = times.size();
  std::vector<double> second(n, 0.0), u(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double sig = (times[i] - times[i - 1]) / (times[i + 1] - times[i - 1]);
    const double p = sig * second[i - 1] + 2.0;
    second[i] = (sig - 1.0) / p;
    const double slope_r = (values[i + 1] - values[i]) / (times[i + 1] - times[i]);
    const double slope_l = (values[i] - values[i - 1]) / (times[i] - times[i - 1]);
    u[i] = (6.0 * (slope_r - slope_l) / (times[i + 1] - times[i - 1]) - sig * u[i - 1]) / p;
  }
  second[n - 1] = 0.0;
  for (std::size_t k = n - 1; k-- > 0;)
    second[k] = second[k] * second[k + 1] + u[k];
  second[0] = 0.0;

  data_ = std::make_shared<const Data>(Data{std::move(times), std::move(values), std::move(second)});
}

std::size_t SampledTrace::interval(double t) const {
  const auto &ts = data_->times;
  if (!(t >= ts.front() && t <= ts.back())) {
    std::ostringstream msg;
    msg << "sampled trace: t=" << t << " outside [" << ts.front() << ", " << ts.back() << "]";
    throw DomainError(msg.str());
  }
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - ts.begin());
  hi = std::clamp<std::size_t>(hi, 1, ts.size() - 1);
  return hi - 1;
}

double SampledTrace::value(double t) const {
  const std::size_t lo = interval(t);
  const auto &d = *data_;
  const double h = d.times[lo + 1] - d.times[lo];
  const double a = (d.times[lo + 1] - t) / h;
  const double b = (t - d.times[lo]) / h;
  return a * d.values[lo] + b * d.values[lo + 1] +
         ((a * a * a - a) * d.second[lo] + (b * b * b - b) * d.second[lo + 1]) * h * h / 6.0;
}

double SampledTrace::derivative(double t) const {
  const std::size_t lo = interval(t);
  const auto &d = *data_;
  const double h = d.times[lo + 1] - d.times[lo];
  const double a = (d.times[lo + 1] - t) / h;
  const double b = (t - d.times[lo]) / h;
  return (d.values[lo + 1] - d.values[lo]) / h -
         (3.0 * a * a - 1.0) / 6.0 * h * d.second[lo] +
         (3.0 * b * b - 1.0) / 6.0 * h * d.second[lo + 1];
}

// --- SignalSpec -------------------------------------------------------------

SignalSpec::SignalSpec(std::vector<SignalTerm> terms) : terms_(std::move(terms)) {
  if (terms_.empty())
    throw DomainError("signal: at least one term is required");
  for (const auto &term : terms_)
    validate(term);
}

bool SignalSpec::has_trace() const {
  return std::any_of(terms_.begin(), terms_.end(), [](const SignalTerm &term) {
    return std::holds_alternative<SampledTrace>(term);
  });
}

double SignalSpec::operator()(double t) const {
  double sum = 0.0;
  for (const auto &term : terms_)
    sum += term_value(term, t);
  return sum;
}

std::optional<double> SignalSpec::max_frequency(double t0, double t1) const {
  double w = 0.0;
  for (const auto &term : terms_) {
    if (std::holds_alternative<SampledTrace>(term))
      return std::nullopt;
    w = std::max(w, std::visit(overloaded{
                                   [](const Cosine &c) { return c.freq; },
                                   [&](const LinearChirp &c) {
                                     return std::max(std::abs(c.base_freq + 2 * c.rate * t0),
                                                     std::abs(c.base_freq + 2 * c.rate * t1));
                                   },
                                   [&](const QuadraticChirp &c) {
                                     const double tm = std::max(t0 * t0, t1 * t1);
                                     return std::abs(c.base_freq) +
                                            3 * std::abs(c.cubic_coeff) * tm;
                                   },
                                   [](const FmGaussian &g) { return g.carrier; },
                                   [](const FmSine &f) { return f.carrier + 1.0; },
                                   [](const SampledTrace &) { return 0.0; },
                                   [](const Constant &) { return 0.0; },
                               },
                               term));
  }
  return w;
}

std::pair<double, double> SignalSpec::span() const {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const auto &term : terms_) {
    if (const auto *s = std::get_if<SampledTrace>(&term)) {
      lo = std::max(lo, s->start());
      hi = std::min(hi, s->end());
    }
  }
  return {lo, hi};
}

double eval(const SignalSpec &spec, double t) {
  if (!std::isfinite(t))
    throw DomainError("signal: non-finite time");
  return spec(t);
}

double eval_derivative(const SignalSpec &spec, double t) {
  if (!std::isfinite(t))
    throw DomainError("signal: non-finite time");
  double sum = 0.0;
  for (const auto &term : spec.terms())
    sum += term_derivative(term, t);
  return sum;
}

// --- zero crossings ----------------------------------------------------------

CrossingList zero_crossings(const SignalSpec &spec, double t0, double t1, double scan_dt,
                            double time_tol, std::optional<double> omega_max) {
  if (!(t1 > t0))
    throw DomainError("zero_crossings: t1 must exceed t0");
  if (!(scan_dt > 0.0) || !(time_tol > 0.0))
    throw ConfigurationError("zero_crossings: scan_dt and time_tol must be positive");
  if (!omega_max) {
    omega_max = spec.max_frequency(t0, t1);
    if (!omega_max)
      throw ConfigurationError(
          "zero_crossings: signal contains a sampled trace, an omega_max bound is required");
  }
  if (*omega_max > 0.0 && scan_dt > (std::numbers::pi / *omega_max) / 20.0) {
    std::ostringstream msg;
    msg << "zero_crossings: scan_dt=" << scan_dt << " exceeds (pi/omega_max)/20 = "
        << (std::numbers::pi / *omega_max) / 20.0;
    throw ConfigurationError(msg.str());
  }

  auto sign_of = [](double v) { return (v > 0.0) - (v < 0.0); };
  CrossingList out;
  const auto steps = static_cast<long>(std::ceil((t1 - t0) / scan_dt));
  double t_prev = t0;
  int s_prev = sign_of(spec(t0));
  for (long k = 1; k <= steps; ++k) {
    const double t = k == steps ? t1 : t0 + static_cast<double>(k) * scan_dt;
    const int s = sign_of(spec(t));
    if (s != 0 && s_prev != 0 && s != s_prev) {
      double lo = t_prev, hi = t;
      while (hi - lo > time_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
          break;
        const int sm = sign_of(spec(mid));
        if (sm == s)
          hi = mid;
        else
          lo = mid; // an exact zero inherits the sign before it
      }
      const double tc = 0.5 * (lo + hi);
      out.times.push_back(tc);
      out.directions.push_back(s > 0 ? +1 : -1);
      out.slopes.push_back(eval_derivative(spec, tc));
    }
    if (s != 0)
      s_prev = s;
    t_prev = t;
  }
  return out;
}

// --- mean removal ------------------------------------------------------------

double mean_value(const SignalSpec &spec, double t0, double t1, double scan_dt) {
  if (!(t1 > t0) || !(scan_dt > 0.0))
    throw DomainError("mean_value: need t1 > t0 and scan_dt > 0");
  const auto steps = static_cast<long>(std::ceil((t1 - t0) / scan_dt));
  const double h = (t1 - t0) / static_cast<double>(steps);
  double sum = 0.5 * (spec(t0) + spec(t1));
  for (long k = 1; k < steps; ++k)
    sum += spec(t0 + static_cast<double>(k) * h);
  return sum * h / (t1 - t0);
}

SignalSpec remove_mean(const SignalSpec &spec, double t0, double t1, double scan_dt) {
  const double m = mean_value(spec, t0, t1, scan_dt);
  auto terms = spec.terms();
  terms.emplace_back(Constant{-m});
  return SignalSpec(std::move(terms));
}

// --- Lorenz ------------------------------------------------------------------

SampledTrace lorenz_trace(const LorenzRecipe &recipe) {
  if (!(recipe.duration > 0.0) || !(recipe.transient >= 0.0) || !(recipe.output_step > 0.0) ||
      recipe.output_step > 1e-3)
    throw DomainError("lorenz_trace: need duration > 0, transient >= 0, 0 < output_step <= 1e-3");
  if (!finite({recipe.init[0], recipe.init[1], recipe.init[2]}))
    throw DomainError("lorenz_trace: non-finite initial state");

  auto rhs = [](double, const Eigen::Vector3d &s, Eigen::Vector3d &ds) {
    ds[0] = 10.0 * (s[1] - s[0]);
    ds[1] = s[0] * (28.0 - s[2]) - s[1];
    ds[2] = s[0] * s[1] - (8.0 / 3.0) * s[2];
  };
  IntegratorOptions opts;
  opts.rel_tol = recipe.rel_tol;
  opts.abs_tol = recipe.rel_tol * 1e-2;
  opts.max_step = recipe.output_step;
  Eigen::Vector3d y0(recipe.init[0], recipe.init[1], recipe.init[2]);
  if (recipe.transient > 0.0) {
    // Only the end state of the transient is needed.
    IntegratorOptions skip = opts;
    skip.output_step = recipe.transient;
    const Trajectory warm = integrate<3>(rhs, y0, 0.0, recipe.transient, skip);
    y0 = warm.state(warm.size() - 1);
  }
  opts.output_step = recipe.output_step;
  const Trajectory traj = integrate<3>(rhs, y0, 0.0, recipe.duration, opts);

  std::vector<double> times(traj.times().begin(), traj.times().end());
  std::vector<double> values(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i)
    values[i] = traj.state(i)[2];
  return SampledTrace(std::move(times), std::move(values), recipe);
}

SampledTrace lorenz_trace(double duration, double rel_tol, const std::array<double, 3> &init) {
  LorenzRecipe recipe;
  recipe.duration = duration;
  recipe.rel_tol = rel_tol;
  recipe.init = init;
  return lorenz_trace(recipe);
}

} // namespace afo
