#include "afo/errors.hpp"
#include "afo/integrator.hpp"
#include "afo/models.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace afo;
constexpr double pi = std::numbers::pi;

namespace {

struct Decay {
  void operator()(double, const Eigen::Matrix<double, 1, 1> &y, Eigen::Matrix<double, 1, 1> &dy) const {
    dy[0] = -y[0];
  }
};

struct Harmonic {
  double w = 1.0;
  void operator()(double, const Eigen::Vector2d &y, Eigen::Vector2d &dy) const {
    dy[0] = y[1];
    dy[1] = -w * w * y[0];
  }
};

IntegratorOptions tol(double rel) {
  IntegratorOptions o;
  o.rel_tol = rel;
  o.abs_tol = rel * 1e-2;
  return o;
}

double decay_error(double rel) {
  const auto tr = integrate<1>(Decay{}, Eigen::Matrix<double, 1, 1>(1.0), 0.0, 1.0, tol(rel));
  return std::abs(tr.state(tr.size() - 1)[0] - std::exp(-1.0));
}

double harmonic_error(double rel) {
  const auto tr = integrate<2>(Harmonic{3.0}, Eigen::Vector2d(1, 0), 0.0, 5.0, tol(rel));
  const auto y = tr.state(tr.size() - 1);
  return std::hypot(y[0] - std::cos(15.0), y[1] + 3 * std::sin(15.0));
}

} // namespace

TEST_CASE("linear decay") {
  const auto o = tol(1e-9);
  const auto tr = integrate<1>(Decay{}, Eigen::Matrix<double, 1, 1>(1.0), 0.0, 1.0, o);
  CHECK(tr.front_time() == 0.0);
  CHECK(tr.back_time() == 1.0);
  CHECK(std::abs(tr.state(tr.size() - 1)[0] - std::exp(-1.0)) < 10 * o.rel_tol);
}

TEST_CASE("harmonic oscillator over 100 periods") {
  const auto o = tol(1e-10);
  const auto tr = integrate<2>(Harmonic{}, Eigen::Vector2d(1, 0), 0.0, 200 * pi, o);
  double drift = 0;
  for (std::size_t i = 0; i < tr.size(); ++i)
    drift = std::max(drift, std::abs(tr.state(i).norm() - 1.0));
  CHECK(drift < 1e-6);
}

TEST_CASE("tightening tolerances never increases the error") {
  for (double rel : {1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10}) {
    CHECK(decay_error(rel / 2) <= decay_error(rel));
    CHECK(harmonic_error(rel / 2) <= harmonic_error(rel));
  }
}

TEST_CASE("agrees with a fixed-step RK4 reference on a nonlinear system") {
  const SignalSpec f({Cosine{1, 10, 0}, Cosine{0.4, 17, 1}});
  const AfoParams p{1.0, 30.0};
  IntegratorOptions o = tol(1e-11);
  const auto tr = integrate<2>(AfoSystem{p, &f}, Eigen::Vector2d(0.2, 12), 0.0, 2.0, o);
  const auto ref = oracle::rk4(
      [&](double t, const Eigen::VectorXd &y) {
        const auto d = afo_rhs({y[0], y[1]}, t, p, f);
        Eigen::VectorXd out(2);
        out << d.phi, d.omega;
        return out;
      },
      Eigen::Vector2d(0.2, 12), 0.0, 2.0, 200000);
  CHECK((tr.state(tr.size() - 1) - ref).norm() < 1e-7);
}

TEST_CASE("dense output") {
  IntegratorOptions o = tol(1e-10);
  const auto tr = integrate<1>(Decay{}, Eigen::Matrix<double, 1, 1>(1.0), 0.0, 2.0, o);
  REQUIRE(tr.size() > 3);
  CHECK(dense_eval(tr, tr.time(2))[0] == tr.state(2)[0]);
  for (std::size_t i = 0; i + 1 < tr.size(); ++i) {
    const double tm = 0.5 * (tr.time(i) + tr.time(i + 1));
    // Cubic Hermite between rows: h^4 max|y''''| / 384 on top of the node error.
    const double h = tr.time(i + 1) - tr.time(i);
    const double bound = std::pow(h, 4) / 384 * std::exp(-tr.time(i)) + 10 * o.rel_tol;
    CHECK(std::abs(dense_eval(tr, tm, 0) - std::exp(-tm)) < bound);
  }
  // Query order does not matter.
  const double a = dense_eval(tr, 1.3, 0);
  dense_eval(tr, 0.2, 0);
  CHECK(dense_eval(tr, 1.3, 0) == a);
  CHECK_THROWS_AS(dense_eval(tr, 2.5), DomainError);
  CHECK_THROWS_AS(dense_eval(tr, -0.1), DomainError);
}

TEST_CASE("output grid and explicit output times") {
  IntegratorOptions o = tol(1e-9);
  o.output_step = 0.1;
  o.output_times = {0.123, 0.5, 0.777};
  const auto tr = integrate<1>(Decay{}, Eigen::Matrix<double, 1, 1>(1.0), 0.0, 1.0, o);
  const auto ts = tr.times();
  for (double t : {0.123, 0.777, 0.3})
    CHECK(std::any_of(ts.begin(), ts.end(), [&](double x) { return std::abs(x - t) < 1e-12; }));
  CHECK(std::is_sorted(ts.begin(), ts.end()));
  CHECK(std::adjacent_find(ts.begin(), ts.end()) == ts.end());
}

TEST_CASE("events at analytic zeros of a cosine") {
  const double wF = 100;
  const SignalSpec f({Cosine{1, wF, 0}});
  IntegratorOptions o = tol(1e-9);
  o.event_time_tol = 1e-10;
  o.max_step = (pi / wF) / 50;
  const std::vector<EventFunction> ev{{"crossing", [&](double t, std::span<const double>) { return f(t); }}};
  const auto tr =
      integrate<2>(AfoSystem{{1.0, 1e3}, &f}, Eigen::Vector2d(0, 80), 0.0, 0.5, o, ev);
  const auto events = tr.events_of_kind("crossing");
  REQUIRE(events.size() == 16);
  for (std::size_t k = 0; k < events.size(); ++k) {
    CHECK(std::abs(events[k].time - (pi / (2 * wF) + k * pi / wF)) < o.event_time_tol);
    CHECK(events[k].state_before.size() == 2);
  }
}

TEST_CASE("simultaneous events come out in label order") {
  IntegratorOptions o = tol(1e-9);
  const std::vector<EventFunction> ev{
      {"b", [](double t, std::span<const double>) { return t - 0.5; }},
      {"a", [](double t, std::span<const double>) { return t - 0.5; }}};
  const auto tr = integrate<1>(Decay{}, Eigen::Matrix<double, 1, 1>(1.0), 0.0, 1.0, o, ev);
  REQUIRE(tr.events().size() == 2);
  CHECK(tr.events()[0].kind == "a");
  CHECK(tr.events()[1].kind == "b");
}

TEST_CASE("strong coupling run completes") {
  const SignalSpec f({Cosine{1, 100, 0}});
  IntegratorOptions o;
  o.max_step = (pi / 100) / 50;
  IntegrationStats st;
  const auto tr = integrate<2>(AfoSystem{{1.0, 1e7}, &f}, Eigen::Vector2d(0, 80), 0.0, 1.0, o, {}, &st);
  CHECK(tr.back_time() == 1.0);
  CHECK(st.accepted > 0);
  for (std::size_t i = 0; i < tr.size(); ++i)
    CHECK(std::abs(tr.state(i)[1]) < 200);
}

TEST_CASE("step underflow reports where it failed") {
  struct Blowup {
    void operator()(double, const Eigen::Matrix<double, 1, 1> &y, Eigen::Matrix<double, 1, 1> &dy) const {
      dy[0] = y[0] * y[0];
    }
  };
  try {
    integrate<1>(Blowup{}, Eigen::Matrix<double, 1, 1>(1.0), 0.0, 2.0, tol(1e-9));
    FAIL("expected an integration error");
  } catch (const IntegrationError &e) {
    CHECK(e.time() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(e.state().size() == 1);
  }
}

TEST_CASE("invalid options and arguments") {
  IntegratorOptions o;
  o.rel_tol = 0;
  CHECK_THROWS_AS(o.validate(), ConfigurationError);
  o = {};
  o.max_step = 0;
  CHECK_THROWS_AS(o.validate(), ConfigurationError);
  CHECK_THROWS_AS(integrate<1>(Decay{}, Eigen::Matrix<double, 1, 1>(1.0), 1.0, 1.0, IntegratorOptions{}),
                  DomainError);
  CHECK_THROWS_AS(integrate<1>(Decay{}, Eigen::Matrix<double, 1, 1>(NAN), 0.0, 1.0, IntegratorOptions{}),
                  DomainError);
}

TEST_CASE("determinism and serialization") {
  const SignalSpec f({Cosine{1.3, 30, 0.4}, Cosine{1, 60, 0}});
  IntegratorOptions o;
  o.max_step = 1e-3;
  const std::vector<EventFunction> ev{{"crossing", [&](double t, std::span<const double>) { return f(t); }}};
  const auto a = integrate<2>(AfoSystem{{1, 1e4}, &f}, Eigen::Vector2d(0, 40), 0.0, 0.5, o, ev);
  const auto b = integrate<2>(AfoSystem{{1, 1e4}, &f}, Eigen::Vector2d(0, 40), 0.0, 0.5, o, ev);
  CHECK(a == b);

  std::stringstream bin;
  write_binary(bin, a);
  CHECK(bin.str().substr(0, 8) == "AFOTRAJ1");
  const auto c = read_binary(bin);
  CHECK(c == a);

  std::stringstream bad("NOTATRAJ");
  CHECK_THROWS_AS(read_binary(bad), ConfigurationError);

  std::ostringstream csv;
  const std::vector<std::string> names{"phi", "omega"};
  write_csv(csv, a, names);
  CHECK(csv.str().rfind("t,phi,omega\n", 0) == 0);
  std::ostringstream evs;
  write_events_csv(evs, a, names);
  CHECK(evs.str().rfind("t,kind,", 0) == 0);
}
