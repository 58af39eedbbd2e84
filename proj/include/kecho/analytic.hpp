#pragma once

#include "kecho/units.hpp"

namespace kecho {

/// First-order phase slopes of the train coefficients at resonance.
///
/// Conventions: c_q = ⟨β+q|U^N|β⟩ = A_q e^{iθ_q} and d*_q = ⟨β|V^N|β+q⟩ = B_q e^{-iχ_q},
/// with A_q = B_q = |J_q(Nφ)| to first order. Slopes are in rad per unit control:
/// ε in s, p₀ in kg·m/s, a in m/s².
struct PhaseSlopes {
  double theta = 0.0;
  double chi = 0.0;
};

struct FirstOrderCoeffs {
  int q = 0;
  double magnitude = 0.0;  // J_q(Nφ)
  double theta_slope_eps = 0.0, chi_slope_eps = 0.0;
  double theta_slope_p0 = 0.0, chi_slope_p0 = 0.0;
  double theta_slope_a = 0.0, chi_slope_a = 0.0;
};

/// Throws SingularCoefficientError where J_q(Nφ) vanishes (|J_q| < 1e-300).
PhaseSlopes eps_phase_slopes(int N, double phi_d, int q, const PhysicalParams& params);
PhaseSlopes p0_phase_slopes(int N, int q, const PhysicalParams& params);
PhaseSlopes accel_phase_slopes(int N, int q, const PhysicalParams& params);

FirstOrderCoeffs first_order_coeffs(int N, double phi_d, int q, const PhysicalParams& params);

/// |Σ_q d*_q c_q|² with first-order coefficients. At most one of eps, p0, a may be nonzero.
double output_first_order(int N, double phi_d, double eps, double p0, double a,
                          const PhysicalParams& params);

/// Large-N continuum result J_0²(N³ φ² ħκ² ε / (6m)).
double I_eps_asymptotic(int N, double phi_d, double eps, const PhysicalParams& params);

/// J_0²(Nφ √(2 − 2cos(N κ T_T p₀/m))).
double I_p0_closed(int N, double phi_d, double p0, const PhysicalParams& params);
/// J_0²(N² φ κ T_T p₀/m).
double I_p0_linearized(int N, double phi_d, double p0, const PhysicalParams& params);

/// J_0²(Nφ √(2 − 2cos(N(2N−1) κ T_T² a/2))).
double I_accel_closed(int N, double phi_d, double a, const PhysicalParams& params);
/// J_0²(N²(2N−1) φ a T_T² κ/2).
double I_accel_linearized(int N, double phi_d, double a, const PhysicalParams& params);

/// Positive root of J_0²(x) = 1/2 (≈ 1.1264).
double x_half();

/// Full widths at half maximum of the closed forms above.
double fwhm_eps_asymptotic(int N, double phi_d, const PhysicalParams& params);
/// Throws PeakNotFoundError when Nφ is too small for the output to reach one half.
double fwhm_p0_closed(int N, double phi_d, const PhysicalParams& params);
double fwhm_p0_linearized(int N, double phi_d, const PhysicalParams& params);
double fwhm_accel_closed(int N, double phi_d, const PhysicalParams& params);
double fwhm_accel_linearized(int N, double phi_d, const PhysicalParams& params);

}  // namespace kecho
