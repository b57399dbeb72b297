#ifndef AFO_TRAJECTORY_HPP
#define AFO_TRAJECTORY_HPP

#include <Eigen/Core>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace afo {

struct EventRecord {
  double time = 0.0;
  std::string kind;
  Eigen::VectorXd state_before;
  Eigen::VectorXd state_after;
};

/// Time series produced by the integrator: one state row per stored time,
/// the right-hand side at each row (for Hermite interpolation) and the
/// tagged events. Immutable once handed out.
class Trajectory {
public:
  using ConstRow = Eigen::Map<const Eigen::VectorXd>;

  Trajectory() = default;
  explicit Trajectory(Eigen::Index dim) : dim_(dim) {}

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }

  std::span<const double> times() const { return times_; }
  double time(std::size_t i) const { return times_[i]; }
  double front_time() const { return times_.front(); }
  double back_time() const { return times_.back(); }

  ConstRow state(std::size_t i) const { return ConstRow(values_.data() + i * dim_, dim_); }
  ConstRow derivative(std::size_t i) const {
    return ConstRow(derivs_.data() + i * dim_, dim_);
  }

  /// Component `j` of every stored row.
  Eigen::VectorXd component(Eigen::Index j) const;

  const std::vector<EventRecord> &events() const { return events_; }
  std::vector<EventRecord> events_of_kind(const std::string &kind) const;

  /// Stored rows lying in [t0, t1].
  std::pair<std::size_t, std::size_t> index_range(double t0, double t1) const;

  // Builder interface used by the integrator and the binary reader.
  void append(double t, std::span<const double> state, std::span<const double> deriv);
  void add_event(EventRecord event) { events_.push_back(std::move(event)); }
  void reserve(std::size_t rows);

  bool operator==(const Trajectory &other) const;

private:
  Eigen::Index dim_ = 0;
  std::vector<double> times_;
  std::vector<double> values_;
  std::vector<double> derivs_;
  std::vector<EventRecord> events_;
};

/// State at time t. Stored rows are returned exactly; between rows the
/// cubic Hermite interpolant built from the stored derivatives is used.
/// Throws DomainError outside [front_time, back_time].
Eigen::VectorXd dense_eval(const Trajectory &traj, double t);

/// Single component at time t (same interpolation as dense_eval).
double dense_eval(const Trajectory &traj, double t, Eigen::Index component);

/// CSV with header "t,<names...>" and 17 significant digits.
void write_csv(std::ostream &os, const Trajectory &traj, std::span<const std::string> names);

/// CSV of the event log: t,kind,<names...> (state at the event).
void write_events_csv(std::ostream &os, const Trajectory &traj,
                      std::span<const std::string> names);

/// Binary dump: magic "AFOTRAJ1", then little-endian u64 rows, u64 dim,
/// rows x (t, state[dim], deriv[dim]) as f64, u64 event count and per event
/// u64 label length, label bytes, f64 time, state_before[dim], state_after[dim].
void write_binary(std::ostream &os, const Trajectory &traj);
Trajectory read_binary(std::istream &is);

} // namespace afo

#endif // AFO_TRAJECTORY_HPP
