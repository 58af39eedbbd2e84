#include "kecho/units.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kecho/errors.hpp"

namespace kecho {

double PhysicalParams::gamma_energy_unit() const {
  const double p = ladder_momentum();
  return p * p / mass;
}

PhysicalParams derive_params(double mass, double lambda_L) {
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw InvalidArgument("derive_params: mass must be positive, got " + sci(mass));
  if (!(lambda_L > 0.0) || !std::isfinite(lambda_L))
    throw InvalidArgument("derive_params: wavelength must be positive, got " +
                          sci(lambda_L));
  PhysicalParams p;
  p.mass = mass;
  p.lambda_L = lambda_L;
  p.k_L = 2.0 * std::numbers::pi / lambda_L;
  p.kappa = 2.0 * p.k_L;
  p.omega_r = kHbar * p.k_L * p.k_L / (2.0 * mass);
  p.talbot_time = 2.0 * std::numbers::pi / (4.0 * p.omega_r);
  return p;
}

PhysicalParams rb85_780nm() {
  return derive_params(kRb85MassU * kAtomicMassUnit, kDefaultWavelength);
}

KickStrength kick_strength_from_pulse(double V0, double tau_p, const PhysicalParams& params) {
  if (!(V0 > 0.0)) throw InvalidArgument("kick_strength_from_pulse: V0 must be positive");
  if (!(tau_p >= 0.0)) throw InvalidArgument("kick_strength_from_pulse: negative pulse duration");
  KickStrength k;
  k.phi_d = V0 * tau_p / (2.0 * kHbar);
  k.V0 = V0;
  k.tau_p = tau_p;
  k.gamma = gamma_from_depth(V0, params);
  return k;
}

double depth_from_gamma(double gamma, const PhysicalParams& params) {
  return gamma * params.gamma_energy_unit();
}

double gamma_from_depth(double V0, const PhysicalParams& params) {
  return V0 / params.gamma_energy_unit();
}

double pulse_duration_for_kick(double phi_d, double V0) {
  if (!(V0 > 0.0)) throw InvalidArgument("pulse_duration_for_kick: V0 must be positive");
  if (!(phi_d >= 0.0)) throw InvalidArgument("pulse_duration_for_kick: negative kick strength");
  return 2.0 * kHbar * phi_d / V0;
}

}  // namespace kecho
