#ifndef AFO_SLOWFAST_MAPS_HPP
#define AFO_SLOWFAST_MAPS_HPP

#include "afo/errors.hpp"
#include "afo/signals.hpp"

#include <cmath>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

namespace afo {

// Discrete maps of the singular (eps -> 0) orbits. Between two input sign
// changes omega decays as exp(-lambda dt); each sign change adds pi.
// Both bounds follow from the single recursion on the post-jump value:
//   omega+_{n+1} = omega+_n exp(-lambda dt) + pi
//   omega-_{n+1} = omega+_n exp(-lambda dt)

template <typename Scalar>
struct EventStep {
  Scalar omega_minus;
  Scalar omega_plus;
};

template <typename Scalar>
struct FixedPoints {
  Scalar omega_bar_plus;
  Scalar omega_bar_minus;
  Scalar omega_tilde; ///< midpoint of the two
  /// True when the one-event maps bound omega between the two fixed points
  /// (plain cosine). For general periodic inputs the per-period maps are not
  /// an envelope of the trajectory.
  bool bounds_trajectory;
};

template <typename Scalar>
EventStep<Scalar> step_event(Scalar omega_before_decay, Scalar dt, Scalar lambda) {
  if (!(dt > Scalar(0)))
    throw DomainError("step_event: dt must be positive");
  const Scalar minus = omega_before_decay * std::exp(-lambda * dt);
  return {minus, minus + std::numbers::pi_v<Scalar>};
}

template <typename Scalar>
FixedPoints<Scalar> fixed_points_cosine(Scalar lambda, Scalar omega_F) {
  if (!(lambda > Scalar(0)) || !(omega_F > Scalar(0)))
    throw DomainError("fixed_points_cosine: lambda and omega_F must be positive");
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar x = lambda * pi / omega_F;
  const Scalar plus = pi / -std::expm1(-x);
  const Scalar minus = pi / std::expm1(x);
  const Scalar tilde = pi / (Scalar(2) * std::tanh(x / Scalar(2)));
  return {plus, minus, tilde, true};
}

/// Fixed points of the per-period maps for a periodic input whose zeros in
/// one period, measured from a zero at t = 0, are `zeros` (last = 2 pi / omega_F).
template <typename Scalar>
FixedPoints<Scalar> fixed_points_periodic(Scalar lambda, Scalar omega_F,
                                          std::span<const Scalar> zeros) {
  if (zeros.empty())
    throw DomainError("fixed_points_periodic: empty zero list");
  if (!(lambda > Scalar(0)) || !(omega_F > Scalar(0)))
    throw DomainError("fixed_points_periodic: lambda and omega_F must be positive");
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar period = Scalar(2) * pi / omega_F;
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    if (!(zeros[i] > Scalar(0)) || (i > 0 && !(zeros[i] > zeros[i - 1])))
      throw DomainError("fixed_points_periodic: zeros must be positive and increasing");
  }
  if (std::abs(zeros.back() - period) > Scalar(1e-6) * period)
    throw DomainError("fixed_points_periodic: last zero must equal the period 2 pi / omega_F");

  // Weights e^{-lambda (T - t_i)} keep large lambda T from overflowing.
  Scalar sum_but_last(0);
  for (std::size_t i = 0; i + 1 < zeros.size(); ++i)
    sum_but_last += std::exp(-lambda * (period - zeros[i]));
  const Scalar decay = std::exp(-lambda * period);
  const Scalar scale = pi / -std::expm1(-lambda * period);
  const Scalar plus = scale * (sum_but_last + Scalar(1));
  const Scalar minus = scale * (sum_but_last + decay);
  return {plus, minus, (plus + minus) / Scalar(2), zeros.size() == 2};
}

/// lambda -> 0 limit of lambda * omega_tilde: omega_F * N / 2.
template <typename Scalar>
Scalar limit_frequency(int n_zeros, Scalar omega_F) {
  if (n_zeros < 2 || n_zeros % 2 != 0)
    throw DomainError("limit_frequency: the number of sign changes per period must be even and >= 2");
  return omega_F * Scalar(n_zeros) / Scalar(2);
}

/// Average exponential convergence (omega0 - omega_tilde) exp(-lambda t) + omega_tilde.
template <typename Scalar>
Scalar envelope(Scalar omega0, Scalar omega_tilde, Scalar lambda, Scalar t) {
  if (!(t >= Scalar(0)))
    throw DomainError("envelope: t must be non-negative");
  return (omega0 - omega_tilde) * std::exp(-lambda * t) + omega_tilde;
}

/// Event-by-event prediction. Entry 0 is the initial condition at t_start
/// (omega_minus = omega_plus = omega0); entry i >= 1 is the i-th crossing after
/// t_start with omega_plus - omega_minus = pi.
struct MapPrediction {
  std::vector<double> event_times;
  std::vector<double> omega_minus;
  std::vector<double> omega_plus;
  std::vector<double> input_slopes; ///< dF/dt at each crossing (NaN for entry 0)

  std::size_t size() const { return event_times.size(); }
};

MapPrediction predict_sequence(double omega0, double t_start, const CrossingList &crossings,
                               double lambda);

/// Zeros of a periodic signal over one period, measured from its first sign
/// change at or after t0 (the last entry is the period itself).
std::vector<double> zeros_in_period(const SignalSpec &spec, double omega_F, double scan_dt,
                                    double t0 = 0.0);

/// CSV: t_event,omega_minus,omega_plus
void write_prediction_csv(std::ostream &os, const MapPrediction &pred);

} // namespace afo

#endif // AFO_SLOWFAST_MAPS_HPP
