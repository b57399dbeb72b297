#include "afo/manifolds.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace afo {

const char *to_string(Stability s) {
  switch (s) {
  case Stability::Attracting:
    return "attracting";
  case Stability::Repelling:
    return "repelling";
  case Stability::Saddle:
    return "saddle";
  }
  return "?";
}

const char *to_string(ManifoldFamily f) {
  switch (f) {
  case ManifoldFamily::Pi:
    return "pi";
  case ManifoldFamily::PiMinusFeedback:
    return "pi_minus_feedback";
  case ManifoldFamily::PiPlusFeedback:
    return "pi_plus_feedback";
  case ManifoldFamily::Feedback:
    return "feedback";
  }
  return "?";
}

Stability classify_single(long k, double F_theta) {
  if (F_theta == 0.0 || !std::isfinite(F_theta))
    throw SingularManifoldError("classify_single: F(theta) = 0 separates the manifolds");
  return -parity_sign(k) * F_theta < 0.0 ? Stability::Attracting : Stability::Repelling;
}

FeedbackPoint feedback_manifolds(long k, double Omega, double I_theta, double alpha, double lambda,
                                 double epsilon) {
  const double den = parity_sign(k) * I_theta - alpha;
  const double num = epsilon * lambda;
  detail::guard_denominator(num, den, "feedback_manifolds");
  const double omega = (static_cast<double>(k) * std::numbers::pi - Omega) * (1.0 + num / den);
  if (den > 0.0)
    return {omega, ManifoldFamily::PiMinusFeedback, Stability::Attracting};
  return {omega, ManifoldFamily::PiPlusFeedback, Stability::Repelling};
}

double feedback_MF_flow(double I_theta, double alpha, double Omega, int branch_sign, long n,
                        double lambda) {
  if (branch_sign != 1 && branch_sign != -1)
    throw DomainError("feedback_MF_flow: branch_sign must be +1 or -1");
  if (alpha == 0.0 || !(std::abs(I_theta) <= std::abs(alpha)))
    throw DomainError("feedback_MF_flow: |I| > |alpha|, the point is off M_F");
  const double target =
      branch_sign * std::acos(I_theta / alpha) - 2.0 * std::numbers::pi * static_cast<double>(n);
  return lambda * (target - Omega);
}

PoolManifoldPoint pool_manifold(const Eigen::VectorXi &k, const Eigen::VectorXd &Omega,
                                double I_theta, const Eigen::VectorXd &alpha, double lambda,
                                double epsilon) {
  const Eigen::Index n = k.size();
  if (n == 0 || Omega.size() != n || alpha.size() != n)
    throw DomainError("pool_manifold: k, Omega and alpha must have the same non-zero length");

  Eigen::VectorXd s(n);
  for (Eigen::Index i = 0; i < n; ++i)
    s[i] = parity_sign(k[i]);

  const double den = I_theta - s.dot(alpha);
  const double num = epsilon * lambda;
  detail::guard_denominator(num, den, "pool_manifold");

  PoolManifoldPoint out;
  out.omega.resize(n);
  out.eigenvalues.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double base = static_cast<double>(k[i]) * std::numbers::pi - Omega[i];
    out.omega[i] = base * (1.0 + num * s[i] / den);
    double ev = alpha[i] - s[i] * I_theta;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i)
        ev += alpha[j] * s[j] * s[i];
    out.eigenvalues[i] = ev;
  }
  if ((out.eigenvalues.array() < 0.0).all())
    out.stability = Stability::Attracting;
  else if ((out.eigenvalues.array() > 0.0).all())
    out.stability = Stability::Repelling;
  else
    out.stability = Stability::Saddle;
  return out;
}

double residual_single(long k, double Omega, double theta, const SignalSpec &f, double lambda,
                       double epsilon) {
  const double F = f(theta);
  const double dF = eval_derivative(f, theta);
  const double omega = single_manifold_omega(k, Omega, F, lambda, epsilon);
  const double s = parity_sign(k);
  const double base = static_cast<double>(k) * std::numbers::pi - Omega;
  const double factor = 1.0 + epsilon * s * lambda / F;
  // d/dt along Omega' = lambda omega, theta' = 1
  const double domega_dOmega = -factor;
  const double domega_dtheta = base * (-epsilon * s * lambda * dF / (F * F));
  const double domega_dt = domega_dOmega * lambda * omega + domega_dtheta;
  return std::abs(epsilon * domega_dt + std::sin(Omega + omega) * F);
}

double residual_feedback(long k, double Omega, double theta, double alpha, const SignalSpec &input,
                         double lambda, double epsilon, double eta) {
  const double I = input(theta);
  const double dI = eval_derivative(input, theta);
  const double omega = feedback_manifolds(k, Omega, I, alpha, lambda, epsilon).omega;
  const double s = parity_sign(k);
  const double base = static_cast<double>(k) * std::numbers::pi - Omega;
  const double D = s * I - alpha;
  const double phi = Omega + omega;
  const double e = I - alpha * std::cos(phi);
  const double dalpha = eta * e * std::cos(phi);
  const double domega_dt = -(1.0 + epsilon * lambda / D) * lambda * omega +
                           base * (-epsilon * lambda / (D * D)) * (s * dI - dalpha);
  return std::abs(epsilon * domega_dt + std::sin(phi) * e);
}

void write_manifold_surface(std::ostream &os, long k_min, long k_max,
                            std::span<const double> Omega_grid, std::span<const double> F_grid,
                            double lambda, double epsilon) {
  if (k_max < k_min)
    throw DomainError("write_manifold_surface: k_max < k_min");
  const auto old = os.precision(17);
  os << "Omega,F,k,omega,stability\n";
  for (long k = k_min; k <= k_max; ++k)
    for (double F : F_grid)
      for (double Om : Omega_grid) {
        double omega;
        try {
          omega = single_manifold_omega(k, Om, F, lambda, epsilon);
        } catch (const SingularManifoldError &) {
          continue;
        }
        os << Om << ',' << F << ',' << k << ',' << omega << ','
           << to_string(classify_single(k, F)) << '\n';
      }
  os.precision(old);
}

Eigen::VectorXd reconstruction_error(const Trajectory &pool_traj, const SignalSpec &input) {
  const Eigen::Index n = pool_traj.dim() / 3;
  if (n == 0 || pool_traj.dim() % 3 != 0)
    throw DomainError("reconstruction_error: not a pool trajectory");
  Eigen::VectorXd err(static_cast<Eigen::Index>(pool_traj.size()));
  for (std::size_t r = 0; r < pool_traj.size(); ++r) {
    const auto y = pool_traj.state(r);
    const double out = y.segment(2 * n, n).dot(y.segment(0, n).array().cos().matrix());
    err[static_cast<Eigen::Index>(r)] = input(pool_traj.time(r)) - out;
  }
  return err;
}

double mean_squared_reconstruction_error(const Trajectory &pool_traj, const SignalSpec &input,
                                         double t0, double t1) {
  const auto [lo, hi] = pool_traj.index_range(t0, t1);
  if (hi <= lo)
    throw DomainError("mean_squared_reconstruction_error: no rows in window");
  const Eigen::Index n = pool_traj.dim() / 3;
  double sum = 0.0;
  for (std::size_t r = lo; r < hi; ++r) {
    const auto y = pool_traj.state(r);
    const double out = y.segment(2 * n, n).dot(y.segment(0, n).array().cos().matrix());
    const double e = input(pool_traj.time(r)) - out;
    sum += e * e;
  }
  return sum / static_cast<double>(hi - lo);
}

} // namespace afo
