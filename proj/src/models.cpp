#include "afo/models.hpp"

#include "afo/errors.hpp"

#include <cmath>
#include <numbers>

namespace afo {

void AfoParams::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("afo: lambda must be positive");
  if (!(coupling > 0.0) || !std::isfinite(coupling))
    throw DomainError("afo: coupling K must be positive");
}

double attracting_phase(const SignalSpec &f, double t0) {
  double v = f(t0);
  if (v == 0.0)
    v = eval_derivative(f, t0);
  return v >= 0.0 ? 0.0 : std::numbers::pi;
}

TransformedState to_transformed(const AfoState &s, double t) {
  return {s.omega, s.phi - s.omega, t};
}

AfoState from_transformed(const TransformedState &s) { return {s.Omega + s.omega, s.omega}; }

AfoState afo_rhs(const AfoState &s, double t, const AfoParams &p, const SignalSpec &f) {
  const double drive = p.coupling * std::sin(s.phi) * f(t);
  return {p.lambda * s.omega - drive, -drive};
}

TransformedState transformed_rhs(const TransformedState &s, const AfoParams &p,
                                 const SignalSpec &f) {
  return {-(1.0 / p.epsilon()) * std::sin(s.Omega + s.omega) * f(s.theta), p.lambda * s.omega,
          1.0};
}

void PoolParams::validate() const {
  if (n_oscillators < 1)
    throw DomainError("pool: need at least one oscillator");
  if (!(lambda > 0.0) || !(coupling > 0.0) || !(eta > 0.0))
    throw DomainError("pool: lambda, K and eta must be positive");
}

Eigen::VectorXd PoolState::pack() const {
  Eigen::VectorXd y(3 * size());
  y << phi, omega, alpha;
  return y;
}

PoolState PoolState::unpack(const Eigen::Ref<const Eigen::VectorXd> &y) {
  if (y.size() % 3 != 0)
    throw DomainError("pool: packed state length must be a multiple of 3");
  const Eigen::Index n = y.size() / 3;
  return {y.segment(0, n), y.segment(n, n), y.segment(2 * n, n)};
}

void PoolState::validate(const PoolParams &p) const {
  if (phi.size() != p.n_oscillators || omega.size() != p.n_oscillators ||
      alpha.size() != p.n_oscillators)
    throw DomainError("pool: state dimension does not match n_oscillators");
  if (!phi.allFinite() || !omega.allFinite() || !alpha.allFinite())
    throw DomainError("pool: non-finite state");
}

double pool_output(const PoolState &s) { return s.alpha.dot(s.phi.array().cos().matrix()); }

PoolState pool_rhs(const PoolState &s, double t, const PoolParams &p, const SignalSpec &input) {
  PoolSystem sys{p, &input};
  Eigen::VectorXd dy(3 * s.size());
  sys(t, s.pack(), dy);
  return PoolState::unpack(dy);
}

void PoolSystem::operator()(double t, const Eigen::VectorXd &y, Eigen::VectorXd &dy) const {
  const Eigen::Index n = y.size() / 3;
  const auto phi = y.segment(0, n);
  const auto omega = y.segment(n, n);
  const auto alpha = y.segment(2 * n, n);

  double output = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    output += alpha[i] * std::cos(phi[i]);
  const double e = (*input)(t)-output;

  const double ke = params.coupling * e;
  const double he = params.eta * e;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = std::sin(phi[i]);
    const double c = std::cos(phi[i]);
    dy[i] = params.lambda * omega[i] - ke * s;
    dy[n + i] = -ke * s;
    dy[2 * n + i] = he * c;
  }
}

} // namespace afo
