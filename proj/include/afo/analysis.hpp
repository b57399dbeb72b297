#ifndef AFO_ANALYSIS_HPP
#define AFO_ANALYSIS_HPP

#include "afo/integrator.hpp"
#include "afo/models.hpp"
#include "afo/signals.hpp"
#include "afo/slowfast_maps.hpp"
#include "afo/trajectory.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace afo {

inline const std::string kCrossingEvent = "crossing";

// ---------------------------------------------------------------------------
// Convergence

struct ConvergenceReport {
  bool converged = false;
  double omega_final = 0.0;   ///< time mean of lambda*omega over the final 1/lambda
  double fitted_rate = 0.0;   ///< exponential rate of the envelope
  double fit_r2 = 0.0;        ///< in [0, 1]
  double ripple_amplitude = 0.0; ///< (max - min) / 2 of lambda*omega over the tail
  double omega_midrange = 0.0;   ///< (max + min) / 2 of lambda*omega over the tail
  /// Spread of the per-window extremes of lambda*omega (fitted transient
  /// removed) across consecutive 1/lambda windows of the second half of the run.
  double envelope_drift = 0.0;
};

/// Convergence of lambda*omega along a trajectory.
///
/// The tail window is the final 1/lambda seconds. When the trajectory logs
/// input crossings (`event_kind`), the tail mean is taken over whole
/// inter-crossing intervals and the envelope is sampled once per interval,
/// at its midpoint; otherwise every stored row is an envelope sample.
/// The envelope is fitted with y_inf + C exp(-r t) (r by a scan plus golden
/// section, y_inf and C by linear least squares); fit_r2 is the coefficient of
/// determination of that fit. converged requires fit_r2 > 0.95, a ripple below
/// 2 lambda pi and an envelope drift below lambda pi / 4.
/// Requires a span of at least 5/lambda seconds.
ConvergenceReport fit_convergence(const Trajectory &traj, double lambda,
                                  Eigen::Index omega_index = 1,
                                  const std::string &event_kind = kCrossingEvent);

/// Same analysis on raw samples of lambda*omega.
ConvergenceReport fit_convergence(std::span<const double> times,
                                  std::span<const double> lambda_omega, double lambda,
                                  std::span<const double> event_times = {});

/// Least-squares slope of log|x(t)| over stored rows in [t0, t1].
double log_slope(const Trajectory &traj, Eigen::Index component, double t0, double t1);

/// Average phase velocity (phi(t1) - phi(t0)) / (t1 - t0).
double rotation_number(const Trajectory &traj, Eigen::Index phi_index, double t0, double t1);

// ---------------------------------------------------------------------------
// Map prediction against simulation

struct MapComparison {
  std::vector<double> event_times;
  std::vector<double> offsets;     ///< probe distance from each crossing
  std::vector<double> error_minus; ///< |omega(t_i - d) - omega-_i e^{lambda d}|
  std::vector<double> error_plus;  ///< |omega(t_i + d) - omega+_i e^{-lambda d}|
  double max_error = 0.0;
  double mean_error = 0.0;

  std::size_t size() const { return event_times.size(); }
};

/// Probe distance for a crossing with input slope `slope`: ten fast-layer
/// widths 1/sqrt(K |slope|), at least 10/K and at most a quarter of the
/// smaller neighbouring gap.
double probe_offset(double coupling, double slope, double gap_before, double gap_after);

/// Probe times (t_i - d_i, t_i + d_i) for every predicted event (entry 0 skipped).
std::vector<double> probe_times(const MapPrediction &pred, double coupling);

/// Per-event errors between the simulated omega just before/after each fast
/// jump and the map values, both transported to the probe times along the
/// slow decay. Throws AlignmentError if the trajectory's crossing events do not
/// pair one-to-one with the prediction.
MapComparison compare_maps(const Trajectory &traj, const MapPrediction &pred, double coupling,
                           double lambda, Eigen::Index omega_index = 1,
                           const std::string &event_kind = kCrossingEvent);

void write_comparison_csv(std::ostream &os, const MapComparison &cmp);

// ---------------------------------------------------------------------------
// Synchronization regions

struct SyncSweepOptions {
  double horizon = 20.0;
  double fundamental = 0.0;   ///< omega_F of the input
  int max_denominator = 1;    ///< p:q locking with q up to this value
  double lock_tolerance = 0.01; ///< relative
  IntegratorOptions integrator;
  unsigned threads = 0; ///< 0 = hardware concurrency
};

struct SyncCell {
  double coupling = 0.0;
  double omega0 = 0.0;
  double rotation = 0.0; ///< rotation number of the non-adaptive run
  bool locked = false;
  bool exponential = false;
  ConvergenceReport adaptive;
};

/// For every (K, omega0): lock flag of the plain phase oscillator with
/// frequency lambda*omega0, and exponential-convergence flag of the adaptive
/// oscillator started at omega0. Cells are computed concurrently and returned
/// in row-major (K outer, omega0 inner) order.
std::vector<SyncCell> sync_region_sweep(const SignalSpec &signal, std::span<const double> K_grid,
                                        std::span<const double> omega0_grid, double lambda,
                                        const SyncSweepOptions &opts);

/// True if `rotation` is within rel_tol of (p/q)*fundamental for some p >= 1, q <= max_q.
bool is_locked(double rotation, double fundamental, int max_q, double rel_tol);

void write_sync_csv(std::ostream &os, std::span<const SyncCell> cells);
nlohmann::json sync_summary_json(std::span<const SyncCell> cells, std::span<const double> K_grid,
                                 std::span<const double> omega0_grid, double lambda,
                                 const SyncSweepOptions &opts);

// ---------------------------------------------------------------------------
// Frequency response of the adaptation

struct FreqResponsePoint {
  double mod_freq = 0.0;     ///< omega_C
  double magnitude_db = 0.0;
  double phase = 0.0;        ///< rad, negative = lag
};

struct FreqResponseOptions {
  double transient_time = 0.0; ///< 0 selects 5 / lambda
  double min_window = 10.0;    ///< lower bound on the demodulation window, s
  IntegratorOptions integrator; ///< max_step defaults to (pi / omega_max) / 50
  unsigned threads = 1;
};

/// Least-squares fit of a cos(w t) + b sin(w t) + c to (t, y).
struct SingleToneFit {
  double a = 0.0, b = 0.0, c = 0.0;
};
SingleToneFit fit_single_tone(std::span<const double> t, std::span<const double> y, double w);

/// Response of lambda*omega to the input sin(omega_F t + sin(omega_C t) / omega_C),
/// whose instantaneous frequency is omega_F + cos(omega_C t).
std::vector<FreqResponsePoint> frequency_response(double lambda, double omega_F,
                                                  std::span<const double> omega_C_list,
                                                  double coupling,
                                                  const FreqResponseOptions &opts = {});

void write_freqresp_csv(std::ostream &os, std::span<const FreqResponsePoint> pts);

// ---------------------------------------------------------------------------
// Pool spectrogram

struct SpectroFrame {
  double time = 0.0;
  std::vector<double> bin_centers;
  std::vector<double> bin_amplitudes;
};

inline constexpr int kSpectroPhaseSamples = 256;

/// Amplitude-weighted frequency distribution of a pool at one instant: each
/// oscillator goes to the bin holding lambda*omega_i; a bin scores
/// max over tbar in [0, 2 pi / psi] of sum_members alpha_i cos(psi tbar + phi_i),
/// psi being the bin center. Only occupied bins are reported, in increasing order.
SpectroFrame spectro_frame(double time, const Eigen::VectorXd &phi, const Eigen::VectorXd &omega,
                           const Eigen::VectorXd &alpha, double lambda, double bin_width);

std::vector<SpectroFrame> spectrogram(const Trajectory &pool_traj, double lambda,
                                      double bin_width, std::span<const double> frame_times);

/// Long format: time,bin_center,amplitude
void write_spectrogram_csv(std::ostream &os, std::span<const SpectroFrame> frames);

// ---------------------------------------------------------------------------
// Pool steady state

struct PoolSteadyState {
  Eigen::VectorXd lambda_omega; ///< time means over the window
  Eigen::VectorXd alpha;
  Eigen::VectorXd omega_ripple; ///< (max - min) / 2 of lambda*omega_i
  double mse = 0.0;             ///< mean squared reconstruction error
};

PoolSteadyState pool_steady_state(const Trajectory &pool_traj, const SignalSpec &input,
                                  double lambda, double t0, double t1);

} // namespace afo

#endif // AFO_ANALYSIS_HPP
