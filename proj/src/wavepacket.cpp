#include "kecho/wavepacket.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "kecho/errors.hpp"

namespace kecho {
namespace {

// Below this absolute error the integral is accepted regardless of its size,
// so far-off-resonance scan points (I ~ 1e-8) do not chase relative accuracy.
constexpr double kAbsoluteFloor = 1e-9;

}  // namespace

void validate(const WavepacketSpec& spec) {
  if (!(spec.sigma_x > 0.0) || !std::isfinite(spec.sigma_x))
    throw InvalidArgument("wavepacket width must be positive");
  if (!(spec.rel_tol > 0.0)) throw InvalidArgument("wavepacket quadrature tolerance must be positive");
  if (!(spec.cutoff_sigmas > 0.0)) throw InvalidArgument("wavepacket cutoff must be positive");
}

double beta_width(const WavepacketSpec& spec, const PhysicalParams& params) {
  return 1.0 / (2.0 * spec.sigma_x * params.kappa);
}

double beta_density(double beta, const WavepacketSpec& spec, const PhysicalParams& params) {
  const double s = beta_width(spec, params);
  const double z = beta / s;
  return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * s);
}

GaussianResult integrate_fibers(const FiberAmplitude& amplitude, const WavepacketSpec& spec,
                                const PhysicalParams& params) {
  validate(spec);
  using boost::math::quadrature::gauss_kronrod;
  const double half = spec.cutoff_sigmas * beta_width(spec, params);
  double err = 0.0;
  GaussianResult r;

  if (spec.measure == GaussianMeasure::Overlap) {
    auto f = [&](double b) { return beta_density(b, spec, params) * amplitude(b); };
    const cplx s = gauss_kronrod<double, 31>::integrate(f, -half, half, spec.max_depth,
                                                         spec.rel_tol * 0.1, &err);
    const double mag = std::abs(s);
    if (err > spec.rel_tol * mag && err > kAbsoluteFloor)
      throw ConvergenceError("gaussian quadrature did not converge: error " + sci(err) +
                                 " on |S| = " + sci(mag),
                             err);
    r.output = mag * mag;
    r.error_estimate = 2.0 * mag * err;
  } else {
    auto f = [&](double b) { return beta_density(b, spec, params) * std::norm(amplitude(b)); };
    const double s = gauss_kronrod<double, 31>::integrate(f, -half, half, spec.max_depth,
                                                          spec.rel_tol * 0.1, &err);
    if (err > spec.rel_tol * std::abs(s) && err > kAbsoluteFloor)
      throw ConvergenceError("gaussian quadrature did not converge: error " + sci(err),
                             err);
    r.output = s;
    r.error_estimate = err;
  }
  return r;
}

GaussianResult gaussian_output(const SequenceSpec& spec, const WavepacketSpec& wavepacket,
                               const PhysicalParams& params, const LadderOptions& options) {
  validate(spec);
  auto amp = [&](double beta) { return run_askrs(spec, beta, params, options).return_amplitude; };
  return integrate_fibers(amp, wavepacket, params);
}

}  // namespace kecho
