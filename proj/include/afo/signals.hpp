#ifndef AFO_SIGNALS_HPP
#define AFO_SIGNALS_HPP

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace afo {

// Input signal catalog. Every term is evaluated exactly (closed form) except
// SampledTrace, which is a natural cubic spline through its samples.

/// amplitude * cos(freq * t + phase)
struct Cosine {
  double amplitude = 1.0;
  double freq = 1.0;
  double phase = 0.0;
};

/// amplitude * sin(base_freq * t + rate * t^2); instantaneous frequency base_freq + 2 rate t.
struct LinearChirp {
  double amplitude = 1.0;
  double base_freq = 1.0;
  double rate = 0.0;
};

/// amplitude * sin(base_freq * t + cubic_coeff * t^3)
struct QuadraticChirp {
  double amplitude = 1.0;
  double base_freq = 1.0;
  double cubic_coeff = 0.0;
};

/// amplitude * sin(carrier * t) * exp(-(t - center)^2 / width_sq)
struct FmGaussian {
  double amplitude = 1.0;
  double carrier = 1.0;
  double center = 0.0;
  double width_sq = 1.0;
};

/// sin(carrier * t + sin(mod_freq * t) / mod_freq); instantaneous frequency
/// carrier + cos(mod_freq * t).
struct FmSine {
  double carrier = 1.0;
  double mod_freq = 1.0;
};

/// Parameters a Lorenz-generated trace was built from, kept so the trace can
/// be serialized as its recipe instead of its samples.
struct LorenzRecipe {
  double duration = 50.0;
  double rel_tol = 1e-10;
  std::array<double, 3> init{1.0, 1.0, 20.0};
  double transient = 10.0;
  double output_step = 1e-3;
};

/// Natural cubic spline through (times, values). Immutable; copies share data.
class SampledTrace {
public:
  SampledTrace(std::vector<double> times, std::vector<double> values,
               std::optional<LorenzRecipe> recipe = std::nullopt);

  double value(double t) const;
  double derivative(double t) const;

  std::span<const double> times() const { return data_->times; }
  std::span<const double> values() const { return data_->values; }
  double start() const { return data_->times.front(); }
  double end() const { return data_->times.back(); }
  const std::optional<LorenzRecipe> &recipe() const { return recipe_; }

private:
  struct Data {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> second; // spline second derivatives at the knots
  };
  std::size_t interval(double t) const;

  std::shared_ptr<const Data> data_;
  std::optional<LorenzRecipe> recipe_;
};

/// Constant offset.
struct Constant {
  double offset = 0.0;
};

using SignalTerm =
    std::variant<Cosine, LinearChirp, QuadraticChirp, FmGaussian, FmSine, SampledTrace, Constant>;

/// A signal as a sum of terms. Validated on construction and immutable after.
class SignalSpec {
public:
  explicit SignalSpec(std::vector<SignalTerm> terms);

  const std::vector<SignalTerm> &terms() const { return terms_; }
  bool has_trace() const;

  double operator()(double t) const;

  /// Largest instantaneous angular frequency over [t0, t1], or nullopt when a
  /// sampled trace makes it unknowable.
  std::optional<double> max_frequency(double t0, double t1) const;

  /// Intersection of the spans of all sampled traces (infinite when none).
  std::pair<double, double> span() const;

private:
  std::vector<SignalTerm> terms_;
};

double eval(const SignalSpec &spec, double t);
double eval_derivative(const SignalSpec &spec, double t);

struct CrossingList {
  std::vector<double> times;
  std::vector<int> directions; ///< +1 = negative to positive
  std::vector<double> slopes;  ///< dF/dt at each crossing
};

inline constexpr double kDefaultTimeTol = 1e-9;

/// All strict sign changes of the signal in [t0, t1], bisected to time_tol.
/// scan_dt must resolve the fastest oscillation: scan_dt <= (pi / omega_max) / 20.
/// omega_max is taken from the signal unless given; it is required when the
/// signal contains a sampled trace.
CrossingList zero_crossings(const SignalSpec &spec, double t0, double t1, double scan_dt,
                            double time_tol = kDefaultTimeTol,
                            std::optional<double> omega_max = std::nullopt);

/// Trapezoid-rule mean of the signal on [t0, t1] at resolution scan_dt.
double mean_value(const SignalSpec &spec, double t0, double t1, double scan_dt);

/// spec + Constant{-mean}.
SignalSpec remove_mean(const SignalSpec &spec, double t0, double t1, double scan_dt);

/// z(t) of the Lorenz system (sigma 10, rho 28, beta 8/3) sampled every
/// recipe.output_step over [0, recipe.duration], after discarding
/// recipe.transient seconds.
SampledTrace lorenz_trace(const LorenzRecipe &recipe);
SampledTrace lorenz_trace(double duration, double rel_tol, const std::array<double, 3> &init);

} // namespace afo

#endif // AFO_SIGNALS_HPP
