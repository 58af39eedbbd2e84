#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "kecho/finite_pulse.hpp"
#include "kecho/wavepacket.hpp"

namespace kecho {

/// Evaluates fn(0..n-1) on up to `workers` threads; results are returned in index order.
/// The first exception (lowest index) is rethrown after all workers finish.
std::vector<double> parallel_map(std::size_t n, const std::function<double(std::size_t)>& fn,
                                 int workers);

enum class ControlAxis { Detuning, InitialMomentum, Acceleration };

/// CSV column name (with unit suffix) for a control axis.
std::string_view axis_column(ControlAxis axis);

struct ScanCurve {
  ControlAxis axis = ControlAxis::Detuning;
  std::vector<double> control;  // s, kg·m/s or m/s²
  std::vector<double> output;
  double peak_center = std::numeric_limits<double>::quiet_NaN();
  double peak_value = std::numeric_limits<double>::quiet_NaN();
  double fwhm = std::numeric_limits<double>::quiet_NaN();
};

struct PeakMetrics {
  double fwhm = 0.0;
  double center = 0.0;
  double peak_value = 0.0;
  double left = 0.0;   // half-max crossings
  double right = 0.0;
};

/// Central-peak width from samples: parabolic peak through the three highest contiguous
/// samples, linear interpolation of the half-max crossings (half of the interpolated peak).
/// Throws PeakNotFoundError if the peak is not bracketed or a second lobe exceeds half max.
PeakMetrics extract_fwhm(const ScanCurve& curve);

/// Polishes sampled metrics on the underlying function: Brent maximization for the peak and
/// bracketing root finding for both crossings.
PeakMetrics refine_fwhm(const ScanCurve& curve, const std::function<double(double)>& f);

enum class Engine { Ladder, FirstOrder, Closed, Linearized, FinitePulse };

struct ScanRequest {
  ControlAxis axis = ControlAxis::Detuning;
  Engine engine = Engine::Ladder;
  PhysicalParams params;
  int N = 1;
  double phi_d = 0.0;
  /// Values of the controls that are not scanned.
  double eps = 0.0;    // s
  double p0 = 0.0;     // kg·m/s
  double accel = 0.0;  // m/s²
  /// Scan around T = l T_T.
  int talbot_multiple = 1;
  std::optional<WavepacketSpec> wavepacket;
  /// Finite pulses: depth and duration (phi_d is then derived).
  double V0 = 0.0;
  double tau_p = 0.0;
  std::optional<std::pair<double, double>> range;
  int n_points = 64;
  int parallel = 1;
};

void validate(const ScanRequest& request);

/// I as a function of the scanned control value. The returned callable is thread-safe.
std::function<double(double)> make_evaluator(const ScanRequest& request);

/// Closed-form width used to choose the automatic range.
double predicted_fwhm(const ScanRequest& request);

/// Samples the curve and fills in its peak metrics. Without an explicit range the
/// window is ±2× the predicted width, widened ×4 once if the peak is not bracketed.
ScanCurve scan(const ScanRequest& request);

struct ScalingFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double residual = 0.0;  // max relative deviation of the points from the fit
};

/// Least-squares fit of log(value·scale) against log(x). Needs ≥ 4 points and
/// max(x)/min(x) ≥ min_span.
ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& points,
                       double scale_factor = 1.0, double min_span = 10.0);

struct MinimumResult {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Golden-section search on [a, b]; stops when the bracket is below rel_tol·|x|.
MinimumResult golden_section_minimize(const std::function<double(double)>& f, double a, double b,
                                      double rel_tol);

/// ε-scan of the finite-pulse train near T = l T_T (β = 0), refined on the function.
struct FinitePeakOptions {
  int n_points = 48;
  int parallel = 1;
  bool refine = true;
};

/// Finite-pulse peak; `center` is measured from l T_T. A cached eigensystem may be supplied
/// and is replaced by a wider one if the ladder turns out too narrow.
PeakMetrics finite_peak(int N, double V0, double tau_p, const PhysicalParams& params,
                        int talbot_multiple = 1, const FinitePeakOptions& options = {},
                        std::shared_ptr<const FiberEigensystem>* cache = nullptr);

double measure_peak_shift(int N, double gamma, double tau_p, int talbot_multiple,
                          const PhysicalParams& params, const FinitePeakOptions& options = {});

struct TauSearchOptions {
  int points_per_decade = 16;
  double rel_resolution = 1e-3;
  FinitePeakOptions peak;
};

struct TauPoint {
  double tau_p = 0.0;
  double fwhm = std::numeric_limits<double>::infinity();
  double center = 0.0;
  double peak_value = 0.0;
};

struct TauMinResult {
  double tau_min = 0.0;
  double w_min = 0.0;
  double delta_eps = 0.0;
  double peak_value = 0.0;
  /// γN ≤ 1, where the finite-pulse scaling is not expected to hold.
  bool outside_scaling_regime = false;
  std::vector<TauPoint> coarse;
  int evaluations = 0;
};

/// Walks a geometric τ_p grid upward until the width stops decreasing, then refines the
/// minimum by golden-section search. Throws PeakNotFoundError if no interior minimum exists
/// in (0, T_T/2].
TauMinResult find_tau_min(int N, double gamma, const PhysicalParams& params,
                          const TauSearchOptions& options = {});

}  // namespace kecho
