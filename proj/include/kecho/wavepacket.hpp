#pragma once

#include <functional>

#include "kecho/ladder.hpp"

namespace kecho {

enum class GaussianMeasure {
  /// |∫ w(β) A(β) dβ|²: projection of the final state onto the freely evolved initial packet.
  Overlap,
  /// ∫ w(β) |A(β)|² dβ: per-fiber return probability averaged over the momentum density.
  FiberSum,
};

/// Minimum-uncertainty Gaussian centred on p = 0 with position width sigma_x.
struct WavepacketSpec {
  double sigma_x = 100e-6;  // m
  GaussianMeasure measure = GaussianMeasure::Overlap;
  double rel_tol = 1e-4;
  double cutoff_sigmas = 8.0;
  unsigned max_depth = 15;
};

void validate(const WavepacketSpec& spec);

/// Momentum width σ_p = ħ/(2σ) expressed in ladder units ħκ.
double beta_width(const WavepacketSpec& spec, const PhysicalParams& params);

/// Normalized momentum density w(β).
double beta_density(double beta, const WavepacketSpec& spec, const PhysicalParams& params);

struct GaussianResult {
  double output = 0.0;
  double error_estimate = 0.0;
};

/// Lab-frame return amplitude of one quasimomentum fiber.
using FiberAmplitude = std::function<cplx(double beta)>;

/// Adaptive Gauss–Kronrod quadrature of the fiber amplitudes over the momentum density.
/// Throws ConvergenceError if the tolerance is not met.
GaussianResult integrate_fibers(const FiberAmplitude& amplitude, const WavepacketSpec& spec,
                                const PhysicalParams& params);

/// Output of the δ-kick sequence for a Gaussian input.
GaussianResult gaussian_output(const SequenceSpec& spec, const WavepacketSpec& wavepacket,
                               const PhysicalParams& params, const LadderOptions& options = {});

}  // namespace kecho
