#include "afo/analysis.hpp"
#include "afo/errors.hpp"
#include "afo/integrator.hpp"
#include "afo/manifolds.hpp"
#include "afo/models.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace afo;
constexpr double pi = std::numbers::pi;

TEST_CASE("single manifold height") {
  CHECK(single_manifold_omega(0L, 1.0, 1.0, 1.0, 1e-4) == doctest::Approx(-1.0001).epsilon(1e-14));
  for (long k = -4; k <= 4; ++k)
    CHECK(single_manifold_omega(k, 0.3, 0.7, 2.0, 0.0) == k * pi - 0.3);
  CHECK_THROWS_AS(single_manifold_omega(0L, 1.0, 0.0, 1.0, 1e-4), SingularManifoldError);
  CHECK_THROWS_AS(single_manifold_omega(0L, 1.0, 1e-14, 1.0, 1e-4), SingularManifoldError);
}

TEST_CASE("property: attracting branches lie further from zero") {
  oracle::Gen g(31);
  for (int i = 0; i < 500; ++i) {
    const long k = g.integer(-10, 10);
    const double Om = g.uniform(-40, 40);
    const double F = g.uniform(-1, 1);
    if (std::abs(F) < 1e-3 || std::abs(k * pi - Om) < 1e-6)
      continue;
    const double lam = g.log_uniform(0.1, 10), eps = g.log_uniform(1e-7, 1e-3);
    // First-order expansion: only meaningful while eps lambda << |F|.
    if (eps * lam > 0.1 * std::abs(F))
      continue;
    const double w = single_manifold_omega(k, Om, F, lam, eps);
    if (classify_single(k, F) == Stability::Attracting)
      CHECK(std::abs(w) > std::abs(k * pi - Om));
    else
      CHECK(std::abs(w) < std::abs(k * pi - Om));
  }
}

TEST_CASE("classification") {
  CHECK(classify_single(0, 1.0) == Stability::Attracting);
  CHECK(classify_single(1, 1.0) == Stability::Repelling);
  for (long k = -10; k <= 10; ++k) {
    CHECK(classify_single(k, 0.5) != classify_single(k, -0.5));
    CHECK(classify_single(k, 0.5) == classify_single(k + 2, 0.5));
    CHECK(classify_single(k, 0.5) != classify_single(k + 1, 0.5));
  }
  CHECK_THROWS_AS(classify_single(0, 0.0), SingularManifoldError);
  CHECK(std::string(to_string(Stability::Saddle)) == "saddle");
  CHECK(std::string(to_string(ManifoldFamily::PiMinusFeedback)) == "pi_minus_feedback");
}

TEST_CASE("interleaving of attracting and repelling heights near F = 0") {
  const double lambda = 1, eps = 1e-4;
  for (double F : {0.01, -0.01}) {
    for (long k = -3; k <= 3; ++k) {
      // Neighbouring k of opposite stability at the same offset kpi - Omega = d.
      for (double d : {0.7, -0.7}) {
        const double wk = single_manifold_omega(k, k * pi - d, F, lambda, eps);
        const double wk1 = single_manifold_omega(k + 1, (k + 1) * pi - d, F, lambda, eps);
        const double att = classify_single(k, F) == Stability::Attracting ? wk : wk1;
        const double rep = classify_single(k, F) == Stability::Attracting ? wk1 : wk;
        if (d > 0)
          CHECK(att > rep);
        else
          CHECK(att < rep);
      }
    }
  }
}

TEST_CASE("slow flow") {
  const auto p0 = slow_flow(0.8, 3L, 1.5, 0.0);
  CHECK(p0.omega == -0.8);
  CHECK(p0.Omega == doctest::Approx(3 * pi + 0.8));
  oracle::Gen g(4);
  for (int i = 0; i < 100; ++i) {
    const long k = g.integer(-5, 5);
    const auto p = slow_flow(g.uniform(-2, 2), k, g.uniform(0.1, 3), g.uniform(0, 10));
    CHECK(p.omega + p.Omega == doctest::Approx(k * pi).epsilon(1e-14));
  }
}

TEST_CASE("feedback manifolds") {
  oracle::Gen g(8);
  for (int i = 0; i < 100; ++i) {
    const long k = g.integer(-4, 4);
    const double Om = g.uniform(-5, 5), I = g.uniform(0.2, 2) * (g.uniform(0, 1) < 0.5 ? -1 : 1);
    const double lam = g.uniform(0.5, 2), eps = 1e-4;
    const auto p = feedback_manifolds(k, Om, I, 0.0, lam, eps);
    CHECK(p.omega == doctest::Approx(single_manifold_omega(k, Om, I, lam, eps)).epsilon(1e-14));
    CHECK((p.stability == Stability::Attracting) == (classify_single(k, I) == Stability::Attracting));
  }
  auto a = feedback_manifolds(0, 0.5, 2.0, 1.0, 1.0, 1e-3);
  CHECK(a.family == ManifoldFamily::PiMinusFeedback);
  CHECK(a.stability == Stability::Attracting);
  a = feedback_manifolds(0, 0.5, 2.0, 3.0, 1.0, 1e-3);
  CHECK(a.family == ManifoldFamily::PiPlusFeedback);
  CHECK(a.stability == Stability::Repelling);
  CHECK_THROWS_AS(feedback_manifolds(1, 0.5, 2.0, -2.0, 1.0, 1e-3), SingularManifoldError);
}

TEST_CASE("amplitude grows on the attracting feedback branch") {
  oracle::Gen g(9);
  const double eta = 2.5;
  for (int i = 0; i < 100; ++i) {
    const long k = g.integer(-3, 3);
    const double I = g.uniform(-2, 2);
    const double alpha = parity_sign(k) * I - g.uniform(0.05, 1);
    const SignalSpec in({Constant{I}});
    PoolState s{Eigen::VectorXd::Constant(1, k * pi), Eigen::VectorXd::Constant(1, 3.0),
                Eigen::VectorXd::Constant(1, alpha)};
    const auto d = pool_rhs(s, 0.0, PoolParams{1, 1.0, 1e4, eta}, in);
    CHECK(d.alpha[0] > 0);
    CHECK(d.alpha[0] == doctest::Approx(eta * (parity_sign(k) * I - alpha)).epsilon(1e-12));
    CHECK(feedback_manifolds(k, 0.1, I, alpha, 1.0, 1e-4).stability == Stability::Attracting);
  }
}

TEST_CASE("feedback M_F flow") {
  CHECK(feedback_MF_flow(1.5, 1.5, 0.2, 1, 2, 3.0) == doctest::Approx(3.0 * (-4 * pi - 0.2)));
  CHECK(feedback_MF_flow(1.5, 1.5, 0.2, -1, 0, 1.0) == doctest::Approx(-0.2));
  CHECK_THROWS_AS(feedback_MF_flow(2.0, 1.0, 0.0, 1, 0, 1.0), DomainError);
  CHECK_THROWS_AS(feedback_MF_flow(0.0, 0.0, 0.0, 1, 0, 1.0), DomainError);
  CHECK_THROWS_AS(feedback_MF_flow(0.5, 1.0, 0.0, 0, 0, 1.0), DomainError);

  // With I = A cos(wF t) and alpha = A the target phase is wF t on [0, pi / wF].
  const double A = 1.7, wF = 30;
  for (int i = 0; i <= 20; ++i) {
    const double t = (pi / wF) * i / 20.0;
    const double Om = 0.3;
    const double target = feedback_MF_flow(A * std::cos(wF * t), A, Om, 1, 0, 1.0) + Om;
    CHECK(target == doctest::Approx(wF * t).epsilon(1e-6).scale(1));
    // alpha' vanishes on M_F: the shared error is zero there.
    const SignalSpec in({Cosine{A, wF, 0}});
    PoolState s{Eigen::VectorXd::Constant(1, wF * t), Eigen::VectorXd::Constant(1, 5.0),
                Eigen::VectorXd::Constant(1, A)};
    CHECK(std::abs(pool_rhs(s, t, PoolParams{1, 1, 100, 1}, in).alpha[0]) < 1e-12);
  }
}

TEST_CASE("pool manifolds") {
  SUBCASE("one oscillator reduces to the feedback case") {
    oracle::Gen g(10);
    for (int i = 0; i < 100; ++i) {
      const long k = g.integer(-3, 3);
      const double Om = g.uniform(-3, 3), I = g.uniform(-2, 2), alpha = g.uniform(-2, 2);
      if (std::abs(parity_sign(k) * I - alpha) < 1e-3)
        continue;
      const auto p = pool_manifold(Eigen::VectorXi::Constant(1, static_cast<int>(k)),
                                   Eigen::VectorXd::Constant(1, Om), I,
                                   Eigen::VectorXd::Constant(1, alpha), 1.0, 1e-4);
      const auto f = feedback_manifolds(k, Om, I, alpha, 1.0, 1e-4);
      CHECK(p.omega[0] == doctest::Approx(f.omega).epsilon(1e-13));
      CHECK(p.eigenvalues[0] == doctest::Approx(alpha - parity_sign(k) * I).epsilon(1e-14));
      CHECK(p.stability == f.stability);
    }
  }
  SUBCASE("zero amplitudes with even indices") {
    const auto p = pool_manifold(Eigen::VectorXi::Constant(3, 2), Eigen::VectorXd::Zero(3), 0.8,
                                 Eigen::VectorXd::Zero(3), 1.0, 1e-3);
    CHECK((p.eigenvalues.array() == -0.8).all());
    CHECK(p.stability == Stability::Attracting);
  }
  SUBCASE("two oscillators by hand") {
    const auto p = pool_manifold(Eigen::Vector2i(0, 0), Eigen::Vector2d(0.1, 0.2), 0.5,
                                 Eigen::Vector2d(1, 0), 1.0, 1e-3);
    CHECK(p.eigenvalues[0] == doctest::Approx(0.5));
    CHECK(p.eigenvalues[1] == doctest::Approx(0.5));
    CHECK(p.stability == Stability::Repelling);
    const auto q = pool_manifold(Eigen::Vector2i(0, 1), Eigen::Vector2d(0.1, 0.2), 0.5,
                                 Eigen::Vector2d(1, 0), 1.0, 1e-3);
    // (1 - 0.5 + 0, 0 + 0.5 - 1) = (0.5, -0.5)
    CHECK(q.eigenvalues[0] == doctest::Approx(0.5));
    CHECK(q.eigenvalues[1] == doctest::Approx(-0.5));
    CHECK(q.stability == Stability::Saddle);
  }
  CHECK_THROWS_AS(pool_manifold(Eigen::Vector2i(0, 0), Eigen::Vector2d(0, 0), 1.0,
                                Eigen::Vector2d(0.5, 0.5), 1.0, 1e-3),
                  SingularManifoldError);
  CHECK_THROWS_AS(pool_manifold(Eigen::Vector2i(0, 0), Eigen::VectorXd::Zero(3), 1.0,
                                Eigen::Vector2d(0.5, 0.5), 1.0, 1e-3),
                  DomainError);
}

TEST_CASE("residuals") {
  const SignalSpec f({Cosine{1.3, 30, 0.4}, Cosine{1, 60, 0}, Cosine{1.4, 90, 1.3}});
  SUBCASE("zero on the critical manifold") {
    for (long k = -2; k <= 2; ++k)
      CHECK(residual_single(k, 0.4, 0.01, f, 1.0, 0.0) < 1e-14);
  }
  SUBCASE("property: second order in epsilon") {
    oracle::Gen g(77);
    int checked = 0;
    while (checked < 100) {
      const double theta = g.uniform(0, 2 * pi / 30);
      if (std::abs(f(theta)) <= 0.1)
        continue;
      const long k = g.integer(-3, 3);
      const double Om = k * pi + g.uniform(-3, 3), lam = g.uniform(0.5, 2);
      const double r1 = residual_single(k, Om, theta, f, lam, 1e-4);
      const double r2 = residual_single(k, Om, theta, f, lam, 5e-5);
      CHECK(r1 / r2 >= 3.5);
      CHECK(r1 / r2 <= 4.5);
      ++checked;
    }
  }
  SUBCASE("grows as the input approaches zero") {
    const SignalSpec c({Cosine{1, 1, 0}});
    double prev = 0;
    for (double d : {1e-1, 3e-2, 1e-2, 3e-3}) {
      const double r = residual_single(0, 0.5, pi / 2 - d, c, 1.0, 1e-4);
      CHECK(r > prev);
      prev = r;
    }
  }
  SUBCASE("feedback residual is second order as well") {
    const SignalSpec I({Cosine{2, 30, 0}});
    oracle::Gen g(78);
    for (int i = 0; i < 50; ++i) {
      const double theta = g.uniform(0, 0.2);
      const double alpha = g.uniform(-1, 1);
      const long k = g.integer(-2, 2);
      if (std::abs(parity_sign(k) * I(theta) - alpha) < 0.2)
        continue;
      const double r1 = residual_feedback(k, k * pi - 1.0, theta, alpha, I, 1.0, 1e-4, 2.0);
      const double r2 = residual_feedback(k, k * pi - 1.0, theta, alpha, I, 1.0, 5e-5, 2.0);
      CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.15));
    }
  }
}

TEST_CASE("manifold surface CSV") {
  std::ostringstream os;
  const std::vector<double> Om{-1, 0, 1}, F{-0.5, 0.0, 0.5};
  write_manifold_surface(os, 0, 1, Om, F, 1.0, 1e-3);
  const std::string s = os.str();
  CHECK(s.rfind("Omega,F,k,omega,stability\n", 0) == 0);
  // F = 0 rows are skipped: 2 branches x 2 F values x 3 Omega values.
  CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 12);
  CHECK_THROWS_AS(write_manifold_surface(os, 1, 0, Om, F, 1.0, 1e-3), DomainError);
}

TEST_CASE("fast jumps move phi by pi away from zero") {
  // Positive omega: phi increases by pi at each input sign change; negative: decreases.
  const double K = 1e6, wF = 10;
  const SignalSpec f({Cosine{1, wF, 0}});
  for (double w0 : {12.0, -12.0}) {
    IntegratorOptions o;
    o.max_step = (pi / wF) / 50;
    const auto cr = zero_crossings(f, 0.0, 1.0, 1e-4);
    const auto pred = predict_sequence(w0, 0.0, cr, 1.0);
    o.output_times = probe_times(pred, K);
    const auto tr = integrate<2>(AfoSystem{{1.0, K}, &f}, Eigen::Vector2d(0, w0), 0.0, 1.0, o);
    for (std::size_t i = 1; i < pred.size(); ++i) {
      const double t = pred.event_times[i];
      const double d = probe_offset(K, pred.input_slopes[i], 0.1, 0.1);
      const double before = dense_eval(tr, t - d, 0), after = dense_eval(tr, t + d, 0);
      const double w = dense_eval(tr, t, 1);
      // Remove the slow drift lambda omega over the probe window.
      const double jump = (after - before) - 2 * d * w;
      CHECK(jump == doctest::Approx(w0 > 0 ? pi : -pi).epsilon(0.02));
    }
  }
}

TEST_CASE("reconstruction error") {
  const SignalSpec I({Cosine{2, 30, 0}});
  const PoolParams p{1, 1.0, 100, 2.0};
  PoolState s0{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 30),
               Eigen::VectorXd::Constant(1, 2)};
  IntegratorOptions o;
  o.output_step = 1e-3;
  const auto tr = integrate<Eigen::Dynamic>(PoolSystem{p, &I}, s0.pack(), 0.0, 1.0, o);
  const auto e = reconstruction_error(tr, I);
  CHECK(e.size() == static_cast<Eigen::Index>(tr.size()));
  CHECK(e.cwiseAbs().maxCoeff() < 1e-6);
  CHECK(mean_squared_reconstruction_error(tr, I, 0.5, 1.0) < 1e-12);
  CHECK_THROWS_AS(mean_squared_reconstruction_error(tr, I, 2.0, 3.0), DomainError);
}
