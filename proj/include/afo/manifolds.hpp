#ifndef AFO_MANIFOLDS_HPP
#define AFO_MANIFOLDS_HPP

#include "afo/errors.hpp"
#include "afo/signals.hpp"
#include "afo/trajectory.hpp"

#include <Eigen/Core>

#include <cmath>
#include <iosfwd>
#include <numbers>
#include <span>
#include <string>

namespace afo {

// First-order (O(eps)) slow manifolds of the single oscillator, the
// oscillator with feedback and the pool. Higher orders are not computed;
// residual() measures the fast-equation defect instead.

enum class Stability { Attracting, Repelling, Saddle };
enum class ManifoldFamily { Pi, PiMinusFeedback, PiPlusFeedback, Feedback };

const char *to_string(Stability s);
const char *to_string(ManifoldFamily f);

inline int parity_sign(long k) { return (k % 2 == 0) ? 1 : -1; }

namespace detail {
/// Refuse to divide when |den| < 1e-8 (1 + |num|).
template <typename Scalar>
void guard_denominator(Scalar num, Scalar den, const char *what) {
  using std::abs;
  if (!(abs(den) >= Scalar(1e-8) * (Scalar(1) + abs(num))))
    throw SingularManifoldError(std::string(what) + ": too close to the manifold fold");
}
} // namespace detail

/// omega = (k pi - Omega)(1 + eps (-1)^k lambda / F(theta))
template <typename Scalar>
Scalar single_manifold_omega(long k, Scalar Omega, Scalar F_theta, Scalar lambda, Scalar epsilon) {
  const Scalar num = epsilon * Scalar(parity_sign(k)) * lambda;
  detail::guard_denominator(num, F_theta, "single_manifold_omega");
  const Scalar base = Scalar(k) * std::numbers::pi_v<Scalar> - Omega;
  return base * (Scalar(1) + num / F_theta);
}

/// Attracting iff (-1)^(k+1) F(theta) < 0.
Stability classify_single(long k, double F_theta);

template <typename Scalar>
struct SlowFlowPoint {
  Scalar omega;
  Scalar Omega;
};

/// Critical-manifold flow: omega = -Omega0 e^{-lambda t}, Omega = k pi + Omega0 e^{-lambda t}.
/// Omega0 is the initial offset from k pi.
template <typename Scalar>
SlowFlowPoint<Scalar> slow_flow(Scalar Omega0, long k, Scalar lambda, Scalar t) {
  if (!(t >= Scalar(0)))
    throw DomainError("slow_flow: t must be non-negative");
  const Scalar d = Omega0 * std::exp(-lambda * t);
  return {-d, Scalar(k) * std::numbers::pi_v<Scalar> + d};
}

struct FeedbackPoint {
  double omega;
  ManifoldFamily family;
  Stability stability;
};

/// M_pi-: omega = (k pi - Omega)(1 + eps lambda / ((-1)^k I - alpha)), attracting
/// when alpha < (-1)^k I, repelling (M_pi+) when alpha > (-1)^k I.
FeedbackPoint feedback_manifolds(long k, double Omega, double I_theta, double alpha, double lambda,
                                 double epsilon);

/// Slow flow of Omega on M_F: lambda((branch_sign arccos(I/alpha) - 2 pi n) - Omega).
/// alpha is constant on M_F.
double feedback_MF_flow(double I_theta, double alpha, double Omega, int branch_sign, long n,
                        double lambda);

struct PoolManifoldPoint {
  Eigen::VectorXd omega;
  Stability stability;
  Eigen::VectorXd eigenvalues;
};

/// omega_i = (k_i pi - Omega_i)(1 + eps lambda (-1)^k_i / (I - sum_j (-1)^k_j alpha_j)),
/// eigenvalue_i = alpha_i + (-1)^(k_i+1) I + sum_{j != i} alpha_j (-1)^(k_j + k_i).
PoolManifoldPoint pool_manifold(const Eigen::VectorXi &k, const Eigen::VectorXd &Omega,
                                double I_theta, const Eigen::VectorXd &alpha, double lambda,
                                double epsilon);

/// Fast-equation defect |eps d(omega_M)/dt + sin(Omega + omega_M) F(theta)| at the
/// manifold point over (Omega, theta). d(omega_M)/dt follows the slow flow
/// (Omega' = lambda omega_M, theta' = 1), so F'(theta) is needed.
double residual_single(long k, double Omega, double theta, const SignalSpec &f, double lambda,
                       double epsilon);

/// Same defect for the oscillator with feedback, where the fast equation is
/// eps omega' = -sin(phi)(I - alpha cos(phi)) and alpha' = eta (I - alpha cos(phi)) cos(phi).
double residual_feedback(long k, double Omega, double theta, double alpha, const SignalSpec &input,
                         double lambda, double epsilon, double eta);

/// Grid of single-oscillator manifold heights for k in [k_min, k_max]:
/// CSV columns Omega,F,k,omega,stability. Points next to the fold are skipped.
void write_manifold_surface(std::ostream &os, long k_min, long k_max,
                            std::span<const double> Omega_grid, std::span<const double> F_grid,
                            double lambda, double epsilon);

/// I(t) - sum_i alpha_i cos(phi_i) at every stored row of a pool trajectory
/// (layout [phi; omega; alpha]).
Eigen::VectorXd reconstruction_error(const Trajectory &pool_traj, const SignalSpec &input);

/// Mean of the squared reconstruction error over rows in [t0, t1].
double mean_squared_reconstruction_error(const Trajectory &pool_traj, const SignalSpec &input,
                                         double t0, double t1);

} // namespace afo

#endif // AFO_MANIFOLDS_HPP
