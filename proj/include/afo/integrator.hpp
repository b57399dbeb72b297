#ifndef AFO_INTEGRATOR_HPP
#define AFO_INTEGRATOR_HPP

#include "afo/errors.hpp"
#include "afo/trajectory.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace afo {

struct IntegratorOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0.0; ///< 0 selects the step automatically
  double event_time_tol = 1e-9;
  /// Spacing of stored rows. 0 stores every accepted step.
  double output_step = 0.0;
  /// Extra times stored exactly from the continuous extension.
  std::vector<double> output_times;

  void validate() const {
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_unit(rel_tol) || !in_unit(abs_tol))
      throw ConfigurationError("integrator tolerances must lie in (0, 1)");
    if (!(max_step > 0.0))
      throw ConfigurationError("integrator max_step must be positive");
    if (!(initial_step >= 0.0) || !(output_step >= 0.0) || !(event_time_tol > 0.0))
      throw ConfigurationError("integrator step options must be non-negative");
  }
};

/// Scalar function of (t, state) whose strict sign changes are logged as
/// events labelled `label`.
struct EventFunction {
  std::string label;
  std::function<double(double, std::span<const double>)> fn;
};

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

/// Dormand-Prince 5(4) with PI step-size control, the 4th-order continuous
/// extension and event location by bisection on that extension.
///
/// `Rhs` is called as rhs(t, y, dydt) with y, dydt of type
/// Eigen::Matrix<double, Dim, 1>.
template <int Dim = Eigen::Dynamic>
class DormandPrince45 {
public:
  using State = Eigen::Matrix<double, Dim, 1>;

  explicit DormandPrince45(IntegratorOptions options) : opts_(std::move(options)) {
    opts_.validate();
  }

  const IntegrationStats &stats() const { return stats_; }

  template <typename Rhs>
  Trajectory run(Rhs &&rhs, const State &y0, double t0, double t1,
                 std::span<const EventFunction> events = {}) {
    if (!(t1 > t0))
      throw DomainError("integrate: t1 must exceed t0");
    if (!y0.allFinite())
      throw DomainError("integrate: non-finite initial state");

    stats_ = {};
    const Eigen::Index n = y0.size();
    for (State *v : {&y_, &ynew_, &ytmp_, &k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &err_})
      v->resize(n);
    for (auto &r : rcont_)
      r.resize(n);

    Trajectory traj(n);
    double t = t0;
    y_ = y0;
    eval(rhs, t, y_, k1_);
    traj.append(t, span(y_), span(k1_));

    std::vector<double> extra = opts_.output_times;
    std::sort(extra.begin(), extra.end());
    auto extra_it = std::upper_bound(extra.begin(), extra.end(), t0);
    long grid_index = 1;
    double last_stored = t0;

    std::vector<int> signs(events.size());
    for (std::size_t i = 0; i < events.size(); ++i)
      signs[i] = sign_of(events[i].fn(t, span(y_)));

    const double span_len = t1 - t0;
    const double h_min = 1e-14 * span_len;
    const double h_max = std::min(opts_.max_step, span_len);
    double h = opts_.initial_step > 0.0 ? opts_.initial_step : initial_step(rhs, t, h_max);
    h = std::min(h, h_max);
    double facold = 1e-4;
    bool rejected_last = false;
    double last_err = 0.0;

    while (t < t1) {
      if (h < h_min) {
        std::ostringstream msg;
        msg << "step size underflow at t=" << t << " (h=" << h << ", last error estimate "
            << last_err << "); the system is too stiff for the requested tolerances";
        throw IntegrationError(msg.str(), t, std::vector<double>(y_.data(), y_.data() + n),
                               last_err);
      }
      bool last = false;
      if (t + 1.01 * h >= t1) {
        h = t1 - t;
        last = true;
      }

      const double e = attempt(rhs, t, h);
      last_err = e;
      if (!std::isfinite(e) || e > 1.0) {
        ++stats_.rejected;
        const double fac11 = std::isfinite(e) ? std::pow(e, kExpo1) : 1e3;
        h /= std::min(kFacc1, fac11 / kSafe);
        rejected_last = true;
        continue;
      }

      ++stats_.accepted;
      const double t_new = last ? t1 : t + h;
      build_dense(h);

      if (!events.empty())
        locate_events(events, signs, t, h, traj);

      // Rows strictly inside (t, t_new), in time order.
      for (;;) {
        double next = std::numeric_limits<double>::infinity();
        bool from_grid = false;
        if (opts_.output_step > 0.0) {
          next = t0 + static_cast<double>(grid_index) * opts_.output_step;
          from_grid = true;
        }
        if (extra_it != extra.end() && *extra_it < next) {
          next = *extra_it;
          from_grid = false;
        }
        if (!(next < t_new))
          break;
        if (next > last_stored) {
          dense_state(t, h, next, ytmp_);
          dense_derivative(t, h, next, err_);
          traj.append(next, span(ytmp_), span(err_));
          last_stored = next;
        }
        if (from_grid)
          ++grid_index;
        else
          ++extra_it;
      }

      t = t_new;
      y_ = ynew_;
      k1_ = k7_;

      bool store_end = opts_.output_step == 0.0 || last;
      if (opts_.output_step > 0.0 &&
          t0 + static_cast<double>(grid_index) * opts_.output_step == t) {
        store_end = true;
        ++grid_index;
      }
      if (extra_it != extra.end() && *extra_it == t) {
        store_end = true;
        ++extra_it;
      }
      if (store_end && t > last_stored) {
        traj.append(t, span(y_), span(k1_));
        last_stored = t;
      }

      const double fac11 = std::pow(std::max(e, 1e-300), kExpo1);
      double fac = fac11 / std::pow(facold, kBeta);
      fac = std::max(kFacc2, std::min(kFacc1, fac / kSafe));
      double h_new = h / fac;
      facold = std::max(e, 1e-4);
      if (rejected_last)
        h_new = std::min(h_new, h);
      rejected_last = false;
      h = std::min(h_new, h_max);
    }
    return traj;
  }

private:
  // Dormand-Prince 5(4) coefficients (Hairer, Norsett & Wanner).
  static constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
  static constexpr double a21 = 0.2, a31 = 3.0 / 40.0, a32 = 9.0 / 40.0, a41 = 44.0 / 45.0,
                          a42 = -56.0 / 15.0, a43 = 32.0 / 9.0, a51 = 19372.0 / 6561.0,
                          a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0,
                          a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0, a71 = 35.0 / 384.0,
                          a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                          a76 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
  static constexpr double kSafe = 0.9, kBeta = 0.04, kExpo1 = 0.2 - kBeta * 0.75;
  static constexpr double kFacc1 = 1.0 / 0.2, kFacc2 = 1.0 / 10.0;

  static std::span<const double> span(const State &v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
  }
  static int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

  template <typename Rhs>
  void eval(Rhs &rhs, double t, const State &y, State &dy) {
    ++stats_.rhs_evals;
    rhs(t, y, dy);
  }

  double error_norm(const State &err) const {
    const double n = static_cast<double>(err.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double sk =
          opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
      const double r = err[i] / sk;
      sum += r * r;
    }
    return std::sqrt(sum / n);
  }

  template <typename Rhs>
  double initial_step(Rhs &rhs, double t, double h_max) {
    double dnf = 0.0, dny = 0.0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const double sk = opts_.abs_tol + opts_.rel_tol * std::abs(y_[i]);
      dnf += (k1_[i] / sk) * (k1_[i] / sk);
      dny += (y_[i] / sk) * (y_[i] / sk);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, h_max);
    ytmp_ = y_ + h * k1_;
    eval(rhs, t + h, ytmp_, k2_);
    double der2 = 0.0;
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      const double sk = opts_.abs_tol + opts_.rel_tol * std::abs(y_[i]);
      const double d = (k2_[i] - k1_[i]) / sk;
      der2 += d * d;
    }
    der2 = std::sqrt(der2 / static_cast<double>(y_.size())) / h;
    const double der12 = std::max(std::abs(der2), std::sqrt(dnf / static_cast<double>(y_.size())));
    const double h1 =
        der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 1.0 / 5.0);
    return std::min({100.0 * h, h1, h_max});
  }

  template <typename Rhs>
  double attempt(Rhs &rhs, double t, double h) {
    ytmp_.noalias() = y_ + h * a21 * k1_;
    eval(rhs, t + c2 * h, ytmp_, k2_);
    ytmp_.noalias() = y_ + h * (a31 * k1_ + a32 * k2_);
    eval(rhs, t + c3 * h, ytmp_, k3_);
    ytmp_.noalias() = y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    eval(rhs, t + c4 * h, ytmp_, k4_);
    ytmp_.noalias() = y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    eval(rhs, t + c5 * h, ytmp_, k5_);
    ytmp_.noalias() = y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    eval(rhs, t + h, ytmp_, k6_);
    ynew_.noalias() = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
    eval(rhs, t + h, ynew_, k7_);
    err_.noalias() = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    if (!ynew_.allFinite())
      return std::numeric_limits<double>::infinity();
    return error_norm(err_);
  }

  void build_dense(double h) {
    rcont_[0] = y_;
    rcont_[1] = ynew_ - y_;
    rcont_[2] = h * k1_ - rcont_[1];
    rcont_[3] = rcont_[1] - h * k7_ - rcont_[2];
    rcont_[4] = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);
  }

  void dense_state(double t, double h, double at, State &out) const {
    const double a = (at - t) / h;
    const double b = 1.0 - a;
    out = rcont_[0] + a * (rcont_[1] + b * (rcont_[2] + a * (rcont_[3] + b * rcont_[4])));
  }

  void dense_derivative(double t, double h, double at, State &out) const {
    const double a = (at - t) / h;
    const double b = 1.0 - a;
    // y = r0 + a P, P = r1 + b Q, Q = r2 + a R, R = r3 + b r4
    State R = rcont_[3] + b * rcont_[4];
    State Q = rcont_[2] + a * R;
    State P = rcont_[1] + b * Q;
    out = (P + a * (-Q + b * (R - a * rcont_[4]))) / h;
  }

  void locate_events(std::span<const EventFunction> events, std::vector<int> &signs, double t,
                     double h, Trajectory &traj) {
    struct Found {
      double time;
      std::size_t index;
    };
    std::vector<Found> found;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const int s_new = sign_of(events[i].fn(t + h, span(ynew_)));
      if (s_new == 0)
        continue; // exact zero inherits the previous sign
      if (signs[i] == 0 || s_new == signs[i]) {
        signs[i] = s_new;
        continue;
      }
      double lo = t, hi = t + h;
      while (hi - lo > opts_.event_time_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
          break;
        dense_state(t, h, mid, ytmp_);
        const int s_mid = sign_of(events[i].fn(mid, span(ytmp_)));
        if (s_mid == s_new)
          hi = mid;
        else
          lo = mid;
      }
      found.push_back({0.5 * (lo + hi), i});
      signs[i] = s_new;
    }
    std::sort(found.begin(), found.end(), [](const Found &a, const Found &b) {
      return a.time < b.time || (a.time == b.time && a.index < b.index);
    });
    // Events closer than the location tolerance are reported in label order.
    for (std::size_t j = 1; j < found.size(); ++j) {
      for (std::size_t m = j; m > 0; --m) {
        auto &a = found[m - 1];
        auto &b = found[m];
        if (std::abs(b.time - a.time) <= opts_.event_time_tol &&
            events[b.index].label < events[a.index].label)
          std::swap(a, b);
        else
          break;
      }
    }
    for (const auto &f : found) {
      dense_state(t, h, f.time, ytmp_);
      EventRecord rec;
      rec.time = f.time;
      rec.kind = events[f.index].label;
      rec.state_before = ytmp_;
      rec.state_after = ytmp_;
      traj.add_event(std::move(rec));
    }
  }

  IntegratorOptions opts_;
  IntegrationStats stats_;
  State y_, ynew_, ytmp_, k1_, k2_, k3_, k4_, k5_, k6_, k7_, err_;
  State rcont_[5];
};

/// Integrate dy/dt = rhs(t, y) from t0 to t1.
template <int Dim, typename Rhs>
Trajectory integrate(Rhs &&rhs, const Eigen::Matrix<double, Dim, 1> &y0, double t0, double t1,
                     const IntegratorOptions &opts, std::span<const EventFunction> events = {},
                     IntegrationStats *stats = nullptr) {
  DormandPrince45<Dim> solver(opts);
  Trajectory traj = solver.run(std::forward<Rhs>(rhs), y0, t0, t1, events);
  if (stats)
    *stats = solver.stats();
  return traj;
}

} // namespace afo

#endif // AFO_INTEGRATOR_HPP
