#ifndef AFO_ERRORS_HPP
#define AFO_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace afo {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Invalid configuration: bad scan resolution, malformed experiment file, ...
class ConfigurationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation too close to a fold of the slow manifolds (F(theta) = 0 or
/// the feedback equivalent).
class SingularManifoldError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Simulation events and map predictions cannot be paired up.
class AlignmentError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Step size underflow in the integrator. Carries the state where it gave up.
class IntegrationError : public std::runtime_error {
public:
  IntegrationError(const std::string &what, double time, std::vector<double> state,
                   double error_estimate)
      : std::runtime_error(what), time_(time), state_(std::move(state)),
        error_estimate_(error_estimate) {}

  double time() const noexcept { return time_; }
  const std::vector<double> &state() const noexcept { return state_; }
  double error_estimate() const noexcept { return error_estimate_; }

private:
  double time_;
  std::vector<double> state_;
  double error_estimate_;
};

} // namespace afo

#endif // AFO_ERRORS_HPP
