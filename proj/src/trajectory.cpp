#include "afo/trajectory.hpp"

#include "afo/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

namespace afo {

static_assert(std::endian::native == std::endian::little,
              "binary trajectory format assumes a little-endian host");

Eigen::VectorXd Trajectory::component(Eigen::Index j) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i)
    out[static_cast<Eigen::Index>(i)] = values_[i * dim_ + j];
  return out;
}

std::vector<EventRecord> Trajectory::events_of_kind(const std::string &kind) const {
  std::vector<EventRecord> out;
  std::copy_if(events_.begin(), events_.end(), std::back_inserter(out),
               [&](const EventRecord &e) { return e.kind == kind; });
  return out;
}

std::pair<std::size_t, std::size_t> Trajectory::index_range(double t0, double t1) const {
  auto lo = std::lower_bound(times_.begin(), times_.end(), t0);
  auto hi = std::upper_bound(times_.begin(), times_.end(), t1);
  return {static_cast<std::size_t>(lo - times_.begin()),
          static_cast<std::size_t>(hi - times_.begin())};
}

void Trajectory::append(double t, std::span<const double> state, std::span<const double> deriv) {
  if (!times_.empty() && !(t > times_.back()))
    throw DomainError("trajectory times must be strictly increasing");
  times_.push_back(t);
  values_.insert(values_.end(), state.begin(), state.end());
  derivs_.insert(derivs_.end(), deriv.begin(), deriv.end());
}

void Trajectory::reserve(std::size_t rows) {
  times_.reserve(rows);
  values_.reserve(rows * dim_);
  derivs_.reserve(rows * dim_);
}

bool Trajectory::operator==(const Trajectory &other) const {
  if (dim_ != other.dim_ || times_ != other.times_ || values_ != other.values_ ||
      derivs_ != other.derivs_ || events_.size() != other.events_.size())
    return false;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto &a = events_[i];
    const auto &b = other.events_[i];
    if (a.time != b.time || a.kind != b.kind || a.state_before != b.state_before ||
        a.state_after != b.state_after)
      return false;
  }
  return true;
}

namespace {

std::size_t locate(const Trajectory &traj, double t) {
  if (traj.empty() || !(t >= traj.front_time() && t <= traj.back_time())) {
    std::ostringstream msg;
    msg << "dense_eval: t=" << t << " outside trajectory span";
    throw DomainError(msg.str());
  }
  auto times = traj.times();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t i = static_cast<std::size_t>(it - times.begin());
  return i == 0 ? 0 : i - 1;
}

} // namespace

Eigen::VectorXd dense_eval(const Trajectory &traj, double t) {
  const std::size_t i = locate(traj, t);
  if (traj.time(i) == t || i + 1 == traj.size())
    return traj.state(i);
  const double t0 = traj.time(i);
  const double h = traj.time(i + 1) - t0;
  const double s = (t - t0) / h;
  const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  const double h10 = s * (1 - s) * (1 - s);
  const double h01 = s * s * (3 - 2 * s);
  const double h11 = s * s * (s - 1);
  return h00 * traj.state(i) + h10 * h * traj.derivative(i) + h01 * traj.state(i + 1) +
         h11 * h * traj.derivative(i + 1);
}

double dense_eval(const Trajectory &traj, double t, Eigen::Index c) {
  const std::size_t i = locate(traj, t);
  if (traj.time(i) == t || i + 1 == traj.size())
    return traj.state(i)[c];
  const double t0 = traj.time(i);
  const double h = traj.time(i + 1) - t0;
  const double s = (t - t0) / h;
  return (1 + 2 * s) * (1 - s) * (1 - s) * traj.state(i)[c] +
         s * (1 - s) * (1 - s) * h * traj.derivative(i)[c] +
         s * s * (3 - 2 * s) * traj.state(i + 1)[c] + s * s * (s - 1) * h * traj.derivative(i + 1)[c];
}

namespace {

void write_header(std::ostream &os, std::span<const std::string> names, Eigen::Index dim,
                  bool with_kind) {
  os << "t";
  if (with_kind)
    os << ",kind";
  for (Eigen::Index j = 0; j < dim; ++j) {
    os << ',';
    if (static_cast<std::size_t>(j) < names.size())
      os << names[static_cast<std::size_t>(j)];
    else
      os << "y" << j;
  }
  os << '\n';
}

} // namespace

void write_csv(std::ostream &os, const Trajectory &traj, std::span<const std::string> names) {
  const auto old_precision = os.precision(17);
  write_header(os, names, traj.dim(), false);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    os << traj.time(i);
    auto row = traj.state(i);
    for (Eigen::Index j = 0; j < traj.dim(); ++j)
      os << ',' << row[j];
    os << '\n';
  }
  os.precision(old_precision);
}

void write_events_csv(std::ostream &os, const Trajectory &traj,
                      std::span<const std::string> names) {
  const auto old_precision = os.precision(17);
  write_header(os, names, traj.dim(), true);
  for (const auto &e : traj.events()) {
    os << e.time << ',' << e.kind;
    for (Eigen::Index j = 0; j < e.state_after.size(); ++j)
      os << ',' << e.state_after[j];
    os << '\n';
  }
  os.precision(old_precision);
}

namespace {

constexpr char kMagic[8] = {'A', 'F', 'O', 'T', 'R', 'A', 'J', '1'};

void put_u64(std::ostream &os, std::uint64_t v) {
  os.write(reinterpret_cast<const char *>(&v), sizeof v);
}
void put_f64(std::ostream &os, double v) { os.write(reinterpret_cast<const char *>(&v), sizeof v); }
void put_f64s(std::ostream &os, const double *p, std::size_t n) {
  os.write(reinterpret_cast<const char *>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

std::uint64_t get_u64(std::istream &is) {
  std::uint64_t v = 0;
  if (!is.read(reinterpret_cast<char *>(&v), sizeof v))
    throw ConfigurationError("truncated trajectory dump");
  return v;
}
void get_f64s(std::istream &is, double *p, std::size_t n) {
  if (!is.read(reinterpret_cast<char *>(p), static_cast<std::streamsize>(n * sizeof(double))))
    throw ConfigurationError("truncated trajectory dump");
}

} // namespace

void write_binary(std::ostream &os, const Trajectory &traj) {
  os.write(kMagic, sizeof kMagic);
  put_u64(os, traj.size());
  put_u64(os, static_cast<std::uint64_t>(traj.dim()));
  for (std::size_t i = 0; i < traj.size(); ++i) {
    put_f64(os, traj.time(i));
    put_f64s(os, traj.state(i).data(), static_cast<std::size_t>(traj.dim()));
    put_f64s(os, traj.derivative(i).data(), static_cast<std::size_t>(traj.dim()));
  }
  put_u64(os, traj.events().size());
  for (const auto &e : traj.events()) {
    put_u64(os, e.kind.size());
    os.write(e.kind.data(), static_cast<std::streamsize>(e.kind.size()));
    put_f64(os, e.time);
    put_f64s(os, e.state_before.data(), static_cast<std::size_t>(traj.dim()));
    put_f64s(os, e.state_after.data(), static_cast<std::size_t>(traj.dim()));
  }
}

Trajectory read_binary(std::istream &is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw ConfigurationError("not an AFOTRAJ1 trajectory dump");
  const auto rows = get_u64(is);
  const auto dim = static_cast<Eigen::Index>(get_u64(is));
  Trajectory traj(dim);
  traj.reserve(rows);
  std::vector<double> state(static_cast<std::size_t>(dim)), deriv(static_cast<std::size_t>(dim));
  for (std::uint64_t i = 0; i < rows; ++i) {
    double t = 0;
    get_f64s(is, &t, 1);
    get_f64s(is, state.data(), state.size());
    get_f64s(is, deriv.data(), deriv.size());
    traj.append(t, state, deriv);
  }
  const auto n_events = get_u64(is);
  for (std::uint64_t i = 0; i < n_events; ++i) {
    EventRecord e;
    e.kind.resize(get_u64(is));
    if (!is.read(e.kind.data(), static_cast<std::streamsize>(e.kind.size())))
      throw ConfigurationError("truncated trajectory dump");
    get_f64s(is, &e.time, 1);
    e.state_before.resize(dim);
    e.state_after.resize(dim);
    get_f64s(is, e.state_before.data(), static_cast<std::size_t>(dim));
    get_f64s(is, e.state_after.data(), static_cast<std::size_t>(dim));
    traj.add_event(std::move(e));
  }
  return traj;
}

} // namespace afo
