#include "afo/analysis.hpp"

#include "afo/errors.hpp"
#include "afo/manifolds.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace afo {

namespace {

constexpr double kPi = std::numbers::pi;

double interp_linear(std::span<const double> t, std::span<const double> y, double at) {
  auto it = std::upper_bound(t.begin(), t.end(), at);
  if (it == t.begin())
    return y.front();
  if (it == t.end())
    return y.back();
  const auto i = static_cast<std::size_t>(it - t.begin());
  const double w = (at - t[i - 1]) / (t[i] - t[i - 1]);
  return (1.0 - w) * y[i - 1] + w * y[i];
}

/// Trapezoid mean of the linear interpolant of (t, y) on [a, b].
double window_mean(std::span<const double> t, std::span<const double> y, double a, double b) {
  if (!(b > a))
    return interp_linear(t, y, a);
  double prev_t = a;
  double prev_y = interp_linear(t, y, a);
  double sum = 0.0;
  auto it = std::upper_bound(t.begin(), t.end(), a);
  for (; it != t.end() && *it < b; ++it) {
    const auto i = static_cast<std::size_t>(it - t.begin());
    sum += 0.5 * (prev_y + y[i]) * (t[i] - prev_t);
    prev_t = t[i];
    prev_y = y[i];
  }
  sum += 0.5 * (prev_y + interp_linear(t, y, b)) * (b - prev_t);
  return sum / (b - a);
}

struct ExpFit {
  double y_inf = 0.0;
  double amplitude = 0.0;
  double rate = 0.0;
  double r2 = 0.0;
  double sse = std::numeric_limits<double>::infinity();
};

/// y ~ y_inf + C exp(-r (t - t_ref)) for fixed r, linear least squares in (y_inf, C).
ExpFit fit_fixed_rate(std::span<const double> t, std::span<const double> y, double r,
                      double t_ref) {
  double s00 = 0, s01 = 0, s11 = 0, b0 = 0, b1 = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double e = std::exp(-r * (t[i] - t_ref));
    s00 += 1.0;
    s01 += e;
    s11 += e * e;
    b0 += y[i];
    b1 += e * y[i];
  }
  const double det = s00 * s11 - s01 * s01;
  ExpFit f;
  f.rate = r;
  if (!(std::abs(det) > 1e-14 * s00 * s11))
    return f;
  f.y_inf = (s11 * b0 - s01 * b1) / det;
  f.amplitude = (s00 * b1 - s01 * b0) / det;
  double sse = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r_i = y[i] - f.y_inf - f.amplitude * std::exp(-r * (t[i] - t_ref));
    sse += r_i * r_i;
  }
  f.sse = sse;
  return f;
}

ExpFit fit_exponential(std::span<const double> t, std::span<const double> y, double lambda) {
  if (t.size() < 3)
    return {};
  const double t_ref = t.front();
  // Coarse log-spaced scan over [1e-3, 1e3] lambda, then golden section.
  constexpr int kScan = 241;
  const double lo = std::log(1e-3 * lambda), hi = std::log(1e3 * lambda);
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kScan; ++i) {
    const double r = std::exp(lo + (hi - lo) * i / (kScan - 1));
    const double sse = fit_fixed_rate(t, y, r, t_ref).sse;
    if (sse < best_sse) {
      best_sse = sse;
      best = i;
    }
  }
  double a = lo + (hi - lo) * std::max(0, best - 1) / (kScan - 1);
  double b = lo + (hi - lo) * std::min(kScan - 1, best + 1) / (kScan - 1);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  auto sse_at = [&](double lr) { return fit_fixed_rate(t, y, std::exp(lr), t_ref).sse; };
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = sse_at(c), fd = sse_at(d);
  for (int it = 0; it < 100 && (b - a) > 1e-12; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = sse_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = sse_at(d);
    }
  }
  ExpFit f = fit_fixed_rate(t, y, std::exp(0.5 * (a + b)), t_ref);
  double mean = 0.0;
  for (double v : y)
    mean += v;
  mean /= static_cast<double>(y.size());
  double sst = 0.0;
  for (double v : y)
    sst += (v - mean) * (v - mean);
  f.r2 = sst > 0.0 ? std::clamp(1.0 - f.sse / sst, 0.0, 1.0) : (f.sse == 0.0 ? 1.0 : 0.0);
  return f;
}

} // namespace

// --- convergence -------------------------------------------------------------

ConvergenceReport fit_convergence(std::span<const double> times,
                                  std::span<const double> lambda_omega, double lambda,
                                  std::span<const double> event_times) {
  if (!(lambda > 0.0))
    throw DomainError("fit_convergence: lambda must be positive");
  if (times.size() != lambda_omega.size() || times.size() < 2)
    throw DomainError("fit_convergence: need matching time and value samples");
  const double T0 = times.front(), T = times.back();
  const double window = 1.0 / lambda;
  if (T - T0 < 5.0 * window * (1.0 - 1e-9))
    throw DomainError("fit_convergence: trajectory must cover at least 5/lambda seconds");

  std::vector<double> events;
  for (double te : event_times)
    if (te > T0 && te < T)
      events.push_back(te);
  std::sort(events.begin(), events.end());

  ConvergenceReport rep;
  const double tail_start = T - window;

  // Tail mean over whole inter-crossing intervals.
  auto first_ev = std::lower_bound(events.begin(), events.end(), tail_start);
  const auto n_tail_events = static_cast<std::size_t>(events.end() - first_ev);
  if (n_tail_events >= 2)
    rep.omega_final = window_mean(times, lambda_omega, *first_ev, events.back());
  else
    rep.omega_final = window_mean(times, lambda_omega, tail_start, T);

  double mn = std::numeric_limits<double>::infinity(), mx = -mn;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] >= tail_start) {
      mn = std::min(mn, lambda_omega[i]);
      mx = std::max(mx, lambda_omega[i]);
    }
  rep.ripple_amplitude = 0.5 * (mx - mn);
  rep.omega_midrange = 0.5 * (mx + mn);

  // Envelope samples.
  std::vector<double> et, ey;
  if (events.size() >= 3) {
    for (std::size_t j = 0; j + 1 < events.size(); ++j) {
      const double tm = 0.5 * (events[j] + events[j + 1]);
      et.push_back(tm);
      ey.push_back(interp_linear(times, lambda_omega, tm));
    }
  } else {
    const std::size_t stride = std::max<std::size_t>(1, times.size() / 4000);
    for (std::size_t i = 0; i < times.size(); i += stride) {
      et.push_back(times[i]);
      ey.push_back(lambda_omega[i]);
    }
  }
  const ExpFit fit = fit_exponential(et, ey, lambda);
  rep.fitted_rate = fit.rate;
  rep.fit_r2 = fit.r2;

  // Drift of the window extremes in the second half, transient removed.
  const double half = T0 + 0.5 * (T - T0);
  const auto n_windows = static_cast<long>(std::floor((T - half) / window));
  std::vector<double> wmax, wmin;
  for (long w = 0; w < n_windows; ++w) {
    const double a = T - static_cast<double>(w + 1) * window;
    const double b = T - static_cast<double>(w) * window;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (times[i] < a || times[i] > b)
        continue;
      const double v =
          lambda_omega[i] - fit.amplitude * std::exp(-fit.rate * (times[i] - et.front()));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (std::isfinite(lo)) {
      wmin.push_back(lo);
      wmax.push_back(hi);
    }
  }
  if (wmax.size() >= 2) {
    const auto [a1, b1] = std::minmax_element(wmax.begin(), wmax.end());
    const auto [a2, b2] = std::minmax_element(wmin.begin(), wmin.end());
    rep.envelope_drift = std::max(*b1 - *a1, *b2 - *a2);
  }

  rep.converged = rep.fit_r2 > 0.95 && rep.ripple_amplitude < 2.0 * lambda * kPi &&
                  rep.envelope_drift < 0.25 * lambda * kPi;
  return rep;
}

ConvergenceReport fit_convergence(const Trajectory &traj, double lambda, Eigen::Index omega_index,
                                  const std::string &event_kind) {
  if (traj.size() < 2)
    throw DomainError("fit_convergence: trajectory too short");
  const Eigen::VectorXd lw = lambda * traj.component(omega_index);
  std::vector<double> ev;
  for (const auto &e : traj.events())
    if (e.kind == event_kind)
      ev.push_back(e.time);
  return fit_convergence(traj.times(), std::span<const double>(lw.data(), lw.size()), lambda, ev);
}

double log_slope(const Trajectory &traj, Eigen::Index component, double t0, double t1) {
  const auto [lo, hi] = traj.index_range(t0, t1);
  if (hi < lo + 3)
    throw DomainError("log_slope: fewer than three rows in the window");
  double st = 0, sy = 0, stt = 0, sty = 0;
  const auto n = static_cast<double>(hi - lo);
  for (std::size_t r = lo; r < hi; ++r) {
    const double t = traj.time(r);
    const double y = std::log(std::abs(traj.state(r)[component]));
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  return (n * sty - st * sy) / (n * stt - st * st);
}

double rotation_number(const Trajectory &traj, Eigen::Index phi_index, double t0, double t1) {
  if (!(t1 > t0))
    throw DomainError("rotation_number: t1 must exceed t0");
  return (dense_eval(traj, t1, phi_index) - dense_eval(traj, t0, phi_index)) / (t1 - t0);
}

// --- map comparison ----------------------------------------------------------

double probe_offset(double coupling, double slope, double gap_before, double gap_after) {
  const double floor = 10.0 / coupling;
  double d = floor;
  if (std::isfinite(slope) && slope != 0.0)
    d = std::max(floor, 10.0 / std::sqrt(coupling * std::abs(slope)));
  double gap = std::numeric_limits<double>::infinity();
  if (std::isfinite(gap_before) && gap_before > 0.0)
    gap = std::min(gap, gap_before);
  if (std::isfinite(gap_after) && gap_after > 0.0)
    gap = std::min(gap, gap_after);
  return std::min(d, 0.25 * gap);
}

namespace {
std::vector<double> offsets_for(const MapPrediction &pred, double coupling) {
  std::vector<double> d(pred.size(), 0.0);
  for (std::size_t i = 1; i < pred.size(); ++i) {
    const double before = pred.event_times[i] - pred.event_times[i - 1];
    const double after = i + 1 < pred.size() ? pred.event_times[i + 1] - pred.event_times[i]
                                             : std::numeric_limits<double>::infinity();
    d[i] = probe_offset(coupling, pred.input_slopes[i], before, after);
  }
  return d;
}
} // namespace

std::vector<double> probe_times(const MapPrediction &pred, double coupling) {
  const auto d = offsets_for(pred, coupling);
  std::vector<double> out;
  out.reserve(2 * pred.size());
  for (std::size_t i = 1; i < pred.size(); ++i) {
    out.push_back(pred.event_times[i] - d[i]);
    out.push_back(pred.event_times[i] + d[i]);
  }
  return out;
}

MapComparison compare_maps(const Trajectory &traj, const MapPrediction &pred, double coupling,
                           double lambda, Eigen::Index omega_index, const std::string &event_kind) {
  if (pred.size() < 2)
    throw AlignmentError("compare_maps: prediction holds no events");
  const double t_start = pred.event_times.front();
  const double t_end = traj.back_time();
  constexpr double kMatchTol = 1e-6;

  std::vector<double> sim;
  for (const auto &e : traj.events())
    if (e.kind == event_kind && e.time > t_start && e.time <= t_end)
      sim.push_back(e.time);
  std::size_t n_pred = 0;
  while (n_pred + 1 < pred.size() && pred.event_times[n_pred + 1] <= t_end)
    ++n_pred;

  if (sim.size() != n_pred) {
    std::ostringstream msg;
    msg << "compare_maps: trajectory logs " << sim.size() << " '" << event_kind
        << "' events in (" << t_start << ", " << t_end << "] but the prediction has " << n_pred;
    throw AlignmentError(msg.str());
  }
  for (std::size_t i = 0; i < n_pred; ++i) {
    if (std::abs(sim[i] - pred.event_times[i + 1]) > kMatchTol) {
      std::ostringstream msg;
      msg.precision(12);
      msg << "compare_maps: event " << i + 1 << " at t=" << sim[i]
          << " does not match predicted crossing t=" << pred.event_times[i + 1];
      throw AlignmentError(msg.str());
    }
  }

  const auto d = offsets_for(pred, coupling);
  MapComparison cmp;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 1; i <= n_pred; ++i) {
    const double tb = pred.event_times[i] - d[i];
    const double ta = pred.event_times[i] + d[i];
    if (tb < traj.front_time() || ta > t_end)
      continue;
    const double em =
        std::abs(dense_eval(traj, tb, omega_index) - pred.omega_minus[i] * std::exp(lambda * d[i]));
    const double ep =
        std::abs(dense_eval(traj, ta, omega_index) - pred.omega_plus[i] * std::exp(-lambda * d[i]));
    cmp.event_times.push_back(pred.event_times[i]);
    cmp.offsets.push_back(d[i]);
    cmp.error_minus.push_back(em);
    cmp.error_plus.push_back(ep);
    cmp.max_error = std::max({cmp.max_error, em, ep});
    sum += em + ep;
    count += 2;
  }
  cmp.mean_error = count ? sum / static_cast<double>(count) : 0.0;
  return cmp;
}

void write_comparison_csv(std::ostream &os, const MapComparison &cmp) {
  const auto old = os.precision(17);
  os << "t_event,offset,error_minus,error_plus\n";
  for (std::size_t i = 0; i < cmp.size(); ++i)
    os << cmp.event_times[i] << ',' << cmp.offsets[i] << ',' << cmp.error_minus[i] << ','
       << cmp.error_plus[i] << '\n';
  os.precision(old);
}

// --- synchronization regions -------------------------------------------------

bool is_locked(double rotation, double fundamental, int max_q, double rel_tol) {
  if (!(fundamental > 0.0) || max_q < 1)
    throw DomainError("is_locked: need a positive fundamental and max_q >= 1");
  const double r = std::abs(rotation);
  for (int q = 1; q <= max_q; ++q) {
    const double unit = fundamental / q;
    const auto p = static_cast<long>(std::llround(r / unit));
    if (p < 1)
      continue;
    const double target = static_cast<double>(p) * unit;
    if (std::abs(r - target) <= rel_tol * target)
      return true;
  }
  return false;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn &&fn) {
  if (threads == 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n)
          return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure)
            failure = std::current_exception();
          next.store(n);
        }
      }
    });
  for (auto &t : pool)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
}

IntegratorOptions with_default_max_step(IntegratorOptions opts, const SignalSpec &signal,
                                        double t0, double t1) {
  if (!std::isfinite(opts.max_step)) {
    const auto w = signal.max_frequency(t0, t1);
    if (w && *w > 0.0)
      opts.max_step = (kPi / *w) / 50.0;
  }
  return opts;
}

} // namespace

std::vector<SyncCell> sync_region_sweep(const SignalSpec &signal, std::span<const double> K_grid,
                                        std::span<const double> omega0_grid, double lambda,
                                        const SyncSweepOptions &opts) {
  if (K_grid.empty() || omega0_grid.empty())
    throw DomainError("sync_region_sweep: empty grid");
  if (!(opts.fundamental > 0.0))
    throw DomainError("sync_region_sweep: the input fundamental frequency must be given");
  if (!(opts.horizon >= 5.0 / lambda))
    throw DomainError("sync_region_sweep: horizon must cover at least 5/lambda");

  const IntegratorOptions base = with_default_max_step(opts.integrator, signal, 0.0, opts.horizon);
  std::vector<SyncCell> cells(K_grid.size() * omega0_grid.size());
  const std::vector<EventFunction> events{
      {kCrossingEvent, [&signal](double t, std::span<const double>) { return signal(t); }}};
  const double phi0 = attracting_phase(signal, 0.0);

  parallel_for(cells.size(), opts.threads, [&](std::size_t idx) {
    SyncCell &cell = cells[idx];
    cell.coupling = K_grid[idx / omega0_grid.size()];
    cell.omega0 = omega0_grid[idx % omega0_grid.size()];
    const AfoParams p{lambda, cell.coupling};
    p.validate();
    const Eigen::Vector2d y0(phi0, cell.omega0);

    IntegratorOptions plain = base;
    plain.output_step = opts.horizon / 200.0;
    const Trajectory fixed =
        integrate<2>(AfoSystem{p, &signal, false}, y0, 0.0, opts.horizon, plain);
    cell.rotation = rotation_number(fixed, 0, 0.5 * opts.horizon, opts.horizon);
    cell.locked = is_locked(cell.rotation, opts.fundamental, opts.max_denominator,
                            opts.lock_tolerance);

    IntegratorOptions adaptive = base;
    if (adaptive.output_step == 0.0)
      adaptive.output_step = std::min(1e-3, kPi / opts.fundamental / 20.0);
    const Trajectory run =
        integrate<2>(AfoSystem{p, &signal, true}, y0, 0.0, opts.horizon, adaptive, events);
    cell.adaptive = fit_convergence(run, lambda);
    cell.exponential = cell.adaptive.converged && cell.adaptive.fitted_rate >= 0.5 * lambda &&
                       cell.adaptive.fitted_rate <= 2.0 * lambda;
  });
  return cells;
}

void write_sync_csv(std::ostream &os, std::span<const SyncCell> cells) {
  const auto old = os.precision(17);
  os << "K,omega0,rotation,locked,exponential,omega_final,fitted_rate,fit_r2\n";
  for (const auto &c : cells)
    os << c.coupling << ',' << c.omega0 << ',' << c.rotation << ',' << int(c.locked) << ','
       << int(c.exponential) << ',' << c.adaptive.omega_final << ',' << c.adaptive.fitted_rate
       << ',' << c.adaptive.fit_r2 << '\n';
  os.precision(old);
}

nlohmann::json sync_summary_json(std::span<const SyncCell> cells, std::span<const double> K_grid,
                                 std::span<const double> omega0_grid, double lambda,
                                 const SyncSweepOptions &opts) {
  nlohmann::json j;
  j["grid"] = {{"K", std::vector<double>(K_grid.begin(), K_grid.end())},
               {"omega0", std::vector<double>(omega0_grid.begin(), omega0_grid.end())}};
  std::vector<int> locked, exponential;
  std::vector<double> final_freq;
  for (const auto &c : cells) {
    locked.push_back(c.locked);
    exponential.push_back(c.exponential);
    final_freq.push_back(c.adaptive.omega_final);
  }
  j["flags"] = {{"locked", locked}, {"exponential", exponential}, {"omega_final", final_freq}};
  j["parameters"] = {{"lambda", lambda},
                     {"horizon", opts.horizon},
                     {"fundamental", opts.fundamental},
                     {"max_denominator", opts.max_denominator},
                     {"lock_tolerance", opts.lock_tolerance}};
  return j;
}

// --- frequency response ------------------------------------------------------

SingleToneFit fit_single_tone(std::span<const double> t, std::span<const double> y, double w) {
  if (t.size() != y.size() || t.size() < 3)
    throw DomainError("fit_single_tone: need at least three samples");
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Eigen::Vector3d row(std::cos(w * t[i]), std::sin(w * t[i]), 1.0);
    A += row * row.transpose();
    b += row * y[i];
  }
  const Eigen::Vector3d x = A.ldlt().solve(b);
  return {x[0], x[1], x[2]};
}

namespace {

// Oscillator plus the running integrals of lambda*omega against cos, sin and 1.
struct DemodSystem {
  AfoSystem afo;
  double mod_freq;

  void operator()(double t, const Eigen::Matrix<double, 5, 1> &y,
                  Eigen::Matrix<double, 5, 1> &dy) const {
    Eigen::Vector2d head = y.head<2>(), dhead;
    afo(t, head, dhead);
    dy.head<2>() = dhead;
    const double lw = afo.params.lambda * y[1];
    dy[2] = lw * std::cos(mod_freq * t);
    dy[3] = lw * std::sin(mod_freq * t);
    dy[4] = lw;
  }
};

} // namespace

std::vector<FreqResponsePoint> frequency_response(double lambda, double omega_F,
                                                  std::span<const double> omega_C_list,
                                                  double coupling,
                                                  const FreqResponseOptions &opts) {
  const AfoParams p{lambda, coupling};
  p.validate();
  if (!(omega_F > 0.0))
    throw DomainError("frequency_response: omega_F must be positive");
  for (double wc : omega_C_list)
    if (!(wc > 0.0) || wc > omega_F / 10.0)
      throw DomainError("frequency_response: each omega_C must lie in (0, omega_F / 10]");

  const double transient = opts.transient_time > 0.0 ? opts.transient_time : 5.0 / lambda;
  std::vector<FreqResponsePoint> out(omega_C_list.size());

  parallel_for(omega_C_list.size(), opts.threads, [&](std::size_t idx) {
    const double wc = omega_C_list[idx];
    const double period = 2.0 * kPi / wc;
    const auto n_periods =
        std::max<long>(2, static_cast<long>(std::ceil(opts.min_window / period)));
    const double window = static_cast<double>(n_periods) * period;
    // Start the window on a whole number of modulation periods as well.
    const double t_start = std::ceil(transient / period) * period;
    const double t_end = t_start + window;
    if (window < 2.0 * period * (1.0 - 1e-12))
      throw DomainError("frequency_response: fewer than 2 modulation periods in steady state");

    const SignalSpec input({FmSine{omega_F, wc}});
    IntegratorOptions io = with_default_max_step(opts.integrator, input, 0.0, t_end);
    io.output_step = 0.0;
    io.output_times.clear();
    IntegratorOptions io_warm = io;
    io_warm.output_step = t_start; // only the end state is needed

    const AfoSystem afo{p, &input, true};
    const Eigen::Vector2d y0(attracting_phase(input, 0.0), omega_F / lambda);
    const Trajectory warm = integrate<2>(afo, y0, 0.0, t_start, io_warm);
    const auto ys = warm.state(warm.size() - 1);

    Eigen::Matrix<double, 5, 1> z0;
    z0 << ys[0], ys[1], 0.0, 0.0, 0.0;
    IntegratorOptions io_win = io;
    io_win.output_step = window;
    const Trajectory run =
        integrate<5>(DemodSystem{afo, wc}, z0, t_start, t_end, io_win);
    const auto z = run.state(run.size() - 1);
    const double a = 2.0 * z[2] / window;
    const double b = 2.0 * z[3] / window;
    out[idx] = {wc, 20.0 * std::log10(std::hypot(a, b)), -std::atan2(b, a)};
  });
  return out;
}

void write_freqresp_csv(std::ostream &os, std::span<const FreqResponsePoint> pts) {
  const auto old = os.precision(17);
  os << "mod_freq,magnitude_db,phase\n";
  for (const auto &p : pts)
    os << p.mod_freq << ',' << p.magnitude_db << ',' << p.phase << '\n';
  os.precision(old);
}

// --- spectrogram -------------------------------------------------------------

SpectroFrame spectro_frame(double time, const Eigen::VectorXd &phi, const Eigen::VectorXd &omega,
                           const Eigen::VectorXd &alpha, double lambda, double bin_width) {
  if (!(bin_width > 0.0))
    throw DomainError("spectrogram: bin_width must be positive");
  if (phi.size() != omega.size() || phi.size() != alpha.size())
    throw DomainError("spectrogram: state sizes differ");

  std::map<long, std::vector<Eigen::Index>> bins;
  for (Eigen::Index i = 0; i < phi.size(); ++i)
    bins[static_cast<long>(std::floor(lambda * omega[i] / bin_width))].push_back(i);

  SpectroFrame frame;
  frame.time = time;
  for (const auto &[idx, members] : bins) {
    const double center = (static_cast<double>(idx) + 0.5) * bin_width;
    const double psi = std::abs(center);
    const double span = 2.0 * kPi / psi;
    double best = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < kSpectroPhaseSamples; ++s) {
      const double tb = span * s / kSpectroPhaseSamples;
      double sum = 0.0;
      for (Eigen::Index i : members)
        sum += alpha[i] * std::cos(psi * tb + phi[i]);
      best = std::max(best, sum);
    }
    frame.bin_centers.push_back(center);
    frame.bin_amplitudes.push_back(std::max(0.0, best));
  }
  return frame;
}

std::vector<SpectroFrame> spectrogram(const Trajectory &pool_traj, double lambda,
                                      double bin_width, std::span<const double> frame_times) {
  const Eigen::Index n = pool_traj.dim() / 3;
  if (n == 0 || pool_traj.dim() % 3 != 0)
    throw DomainError("spectrogram: not a pool trajectory");
  std::vector<SpectroFrame> frames;
  frames.reserve(frame_times.size());
  for (double t : frame_times) {
    const Eigen::VectorXd y = dense_eval(pool_traj, t);
    frames.push_back(
        spectro_frame(t, y.segment(0, n), y.segment(n, n), y.segment(2 * n, n), lambda, bin_width));
  }
  return frames;
}

void write_spectrogram_csv(std::ostream &os, std::span<const SpectroFrame> frames) {
  const auto old = os.precision(17);
  os << "time,bin_center,amplitude\n";
  for (const auto &f : frames)
    for (std::size_t b = 0; b < f.bin_centers.size(); ++b)
      os << f.time << ',' << f.bin_centers[b] << ',' << f.bin_amplitudes[b] << '\n';
  os.precision(old);
}

// --- pool steady state -------------------------------------------------------

PoolSteadyState pool_steady_state(const Trajectory &pool_traj, const SignalSpec &input,
                                  double lambda, double t0, double t1) {
  const Eigen::Index n = pool_traj.dim() / 3;
  if (n == 0 || pool_traj.dim() % 3 != 0)
    throw DomainError("pool_steady_state: not a pool trajectory");
  const auto [lo, hi] = pool_traj.index_range(t0, t1);
  if (hi < lo + 2)
    throw DomainError("pool_steady_state: fewer than two rows in the window");

  PoolSteadyState s;
  s.lambda_omega = Eigen::VectorXd::Zero(n);
  s.alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd mn = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  Eigen::VectorXd mx = -mn;
  double span = 0.0;
  for (std::size_t r = lo; r < hi; ++r) {
    const auto y = pool_traj.state(r);
    mn = mn.cwiseMin(lambda * y.segment(n, n));
    mx = mx.cwiseMax(lambda * y.segment(n, n));
    if (r + 1 < hi) {
      const auto y1 = pool_traj.state(r + 1);
      const double dt = pool_traj.time(r + 1) - pool_traj.time(r);
      s.lambda_omega += 0.5 * dt * lambda * (y.segment(n, n) + y1.segment(n, n));
      s.alpha += 0.5 * dt * (y.segment(2 * n, n) + y1.segment(2 * n, n));
      span += dt;
    }
  }
  s.lambda_omega /= span;
  s.alpha /= span;
  s.omega_ripple = 0.5 * (mx - mn);
  s.mse = mean_squared_reconstruction_error(pool_traj, input, t0, t1);
  return s;
}

} // namespace afo
