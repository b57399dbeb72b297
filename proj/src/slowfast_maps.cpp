#include "afo/slowfast_maps.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

namespace afo {

MapPrediction predict_sequence(double omega0, double t_start, const CrossingList &crossings,
                               double lambda) {
  if (crossings.times.empty())
    throw DomainError("predict_sequence: empty crossing list");
  if (!(lambda > 0.0))
    throw DomainError("predict_sequence: lambda must be positive");

  MapPrediction pred;
  const std::size_t n = crossings.times.size() + 1;
  pred.event_times.reserve(n);
  pred.omega_minus.reserve(n);
  pred.omega_plus.reserve(n);
  pred.input_slopes.reserve(n);
  pred.event_times.push_back(t_start);
  pred.omega_minus.push_back(omega0);
  pred.omega_plus.push_back(omega0);
  pred.input_slopes.push_back(std::numeric_limits<double>::quiet_NaN());

  double t_prev = t_start;
  double omega = omega0;
  for (std::size_t i = 0; i < crossings.times.size(); ++i) {
    const double tc = crossings.times[i];
    if (!(tc > t_prev))
      throw DomainError("predict_sequence: crossings must be increasing and after t_start");
    const auto step = step_event(omega, tc - t_prev, lambda);
    pred.event_times.push_back(tc);
    pred.omega_minus.push_back(step.omega_minus);
    pred.omega_plus.push_back(step.omega_plus);
    pred.input_slopes.push_back(i < crossings.slopes.size()
                                    ? crossings.slopes[i]
                                    : std::numeric_limits<double>::quiet_NaN());
    omega = step.omega_plus;
    t_prev = tc;
  }
  return pred;
}

std::vector<double> zeros_in_period(const SignalSpec &spec, double omega_F, double scan_dt,
                                    double t0) {
  if (!(omega_F > 0.0))
    throw DomainError("zeros_in_period: omega_F must be positive");
  const double period = 2.0 * std::numbers::pi / omega_F;
  // Find the anchor zero, then collect one period after it (slightly more so
  // the closing zero is not lost to rounding).
  const auto first = zero_crossings(spec, t0, t0 + period * 1.01, scan_dt);
  if (first.times.empty())
    throw DomainError("zeros_in_period: signal has no sign change");
  const double anchor = first.times.front();
  const auto cycle = zero_crossings(spec, anchor + 0.5 * scan_dt, anchor + period * 1.001, scan_dt);

  std::vector<double> zeros;
  for (double tc : cycle.times) {
    const double rel = tc - anchor;
    if (rel <= period * (1.0 - 1e-6))
      zeros.push_back(rel);
  }
  zeros.push_back(period);
  return zeros;
}

void write_prediction_csv(std::ostream &os, const MapPrediction &pred) {
  const auto old = os.precision(17);
  os << "t_event,omega_minus,omega_plus\n";
  for (std::size_t i = 0; i < pred.size(); ++i)
    os << pred.event_times[i] << ',' << pred.omega_minus[i] << ',' << pred.omega_plus[i] << '\n';
  os.precision(old);
}

} // namespace afo
