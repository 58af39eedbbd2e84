#pragma once

#include <optional>

namespace kecho {

inline constexpr double kHbar = 1.054571817e-34;           // J s (CODATA 2018, exact to quoted digits)
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg
inline constexpr double kRb85MassU = 84.911789738;            // u
inline constexpr double kDefaultWavelength = 780e-9;          // m

/// Physical constants of one atom/lattice combination.
///
/// Everything except `mass` and `lambda_L` is derived in derive_params(), so
/// two objects built from the same inputs are bit-identical.
struct PhysicalParams {
  double mass = 0.0;         // kg
  double lambda_L = 0.0;     // m
  double k_L = 0.0;          // 2π/λ, 1/m
  double kappa = 0.0;        // grating wavenumber 2 k_L, 1/m
  double omega_r = 0.0;      // recoil angular frequency ħ k_L²/(2m), rad/s
  double talbot_time = 0.0;  // 2π/(4 ω_r), s

  /// ħκ, the ladder spacing in momentum.
  double ladder_momentum() const { return kHbar * kappa; }
  /// (ħκ)²/m, the energy unit that makes γ dimensionless.
  double gamma_energy_unit() const;
};

PhysicalParams derive_params(double mass, double lambda_L);

/// ⁸⁵Rb in a 780 nm standing wave.
PhysicalParams rb85_780nm();

/// Kick strength in the δ-kick picture, optionally tied to a finite pulse.
struct KickStrength {
  double phi_d = 0.0;
  std::optional<double> V0;     // J
  std::optional<double> tau_p;  // s
  std::optional<double> gamma;  // m V0 / (ħκ)²
};

/// φ_d = V0 τ_p / (2ħ) for the (V0/2) cos κx potential.
KickStrength kick_strength_from_pulse(double V0, double tau_p, const PhysicalParams& params);

double depth_from_gamma(double gamma, const PhysicalParams& params);
double gamma_from_depth(double V0, const PhysicalParams& params);

/// Pulse duration that produces `phi_d` at depth V0 (inverse of the Raman–Nath map).
double pulse_duration_for_kick(double phi_d, double V0);

}  // namespace kecho
