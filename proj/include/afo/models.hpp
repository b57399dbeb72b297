#ifndef AFO_MODELS_HPP
#define AFO_MODELS_HPP

#include "afo/signals.hpp"

#include <Eigen/Core>

#include <cmath>

namespace afo {

// Adaptive frequency phase oscillator
//   phi'   = lambda omega - K sin(phi) F(t)
//   omega' =              - K sin(phi) F(t)
// The oscillator frequency is lambda * omega. With eps = 1/K and
// Omega = phi - omega the system becomes slow-fast:
//   eps omega' = -sin(Omega + omega) F(theta),  Omega' = lambda omega,  theta' = 1.
// phi is never wrapped; the manifold index k in phi ~ k pi is unbounded.

struct AfoParams {
  double lambda = 1.0;
  double coupling = 1.0; ///< K

  double epsilon() const { return 1.0 / coupling; }
  void validate() const;
};

struct AfoState {
  double phi = 0.0;
  double omega = 0.0;

  Eigen::Vector2d vec() const { return {phi, omega}; }
  static AfoState from(const Eigen::Vector2d &v) { return {v[0], v[1]}; }
};

struct TransformedState {
  double omega = 0.0;
  double Omega = 0.0; ///< phi - omega
  double theta = 0.0; ///< time

  Eigen::Vector3d vec() const { return {omega, Omega, theta}; }
  static TransformedState from(const Eigen::Vector3d &v) { return {v[0], v[1], v[2]}; }
};

/// 0 or pi, whichever lies on an attracting slow manifold at t0 (decided by
/// the sign of F(t0), or of F'(t0) when F(t0) = 0).
double attracting_phase(const SignalSpec &f, double t0 = 0.0);

TransformedState to_transformed(const AfoState &s, double t);
AfoState from_transformed(const TransformedState &s);

/// (phi', omega') of the oscillator.
AfoState afo_rhs(const AfoState &s, double t, const AfoParams &p, const SignalSpec &f);

/// (omega', Omega', theta') in slow-fast coordinates.
TransformedState transformed_rhs(const TransformedState &s, const AfoParams &p,
                                 const SignalSpec &f);

// Pool of N oscillators with amplitude adaptation, driven by the shared error
//   e(t) = I(t) - sum_j alpha_j cos(phi_j)
//   phi_i' = lambda omega_i - K e sin(phi_i), omega_i' = -K e sin(phi_i),
//   alpha_i' = eta e cos(phi_i)

struct PoolParams {
  Eigen::Index n_oscillators = 1;
  double lambda = 1.0;
  double coupling = 1.0; ///< K
  double eta = 1.0;

  double epsilon() const { return 1.0 / coupling; }
  void validate() const;
};

struct PoolState {
  Eigen::VectorXd phi;
  Eigen::VectorXd omega;
  Eigen::VectorXd alpha;

  Eigen::Index size() const { return phi.size(); }
  /// Layout used by the integrator: [phi; omega; alpha].
  Eigen::VectorXd pack() const;
  static PoolState unpack(const Eigen::Ref<const Eigen::VectorXd> &y);
  void validate(const PoolParams &p) const;
};

/// Pool output sum_i alpha_i cos(phi_i).
double pool_output(const PoolState &s);

PoolState pool_rhs(const PoolState &s, double t, const PoolParams &p, const SignalSpec &input);

// Functors in the form the integrator expects.

struct AfoSystem {
  AfoParams params;
  const SignalSpec *signal = nullptr;
  bool adaptive = true; ///< false freezes omega (plain phase oscillator)

  void operator()(double t, const Eigen::Vector2d &y, Eigen::Vector2d &dy) const {
    const double drive = params.coupling * std::sin(y[0]) * (*signal)(t);
    dy[0] = params.lambda * y[1] - drive;
    dy[1] = adaptive ? -drive : 0.0;
  }
};

struct TransformedSystem {
  AfoParams params;
  const SignalSpec *signal = nullptr;

  void operator()(double, const Eigen::Vector3d &y, Eigen::Vector3d &dy) const {
    dy[0] = -params.coupling * std::sin(y[1] + y[0]) * (*signal)(y[2]);
    dy[1] = params.lambda * y[0];
    dy[2] = 1.0;
  }
};

struct PoolSystem {
  PoolParams params;
  const SignalSpec *input = nullptr;

  void operator()(double t, const Eigen::VectorXd &y, Eigen::VectorXd &dy) const;
};

} // namespace afo

#endif // AFO_MODELS_HPP
