#pragma once

#include "kecho/finite_pulse.hpp"
#include "kecho/wavepacket.hpp"

namespace kecho {

/// Position-grid Fourier split-step propagation, used to cross-check the ladder engines.
struct GridOptions {
  /// Grid points per lattice period; 0 picks a power of two covering the expected spread.
  int points_per_period = 0;
  /// Per-pulse convergence target for sub-step doubling.
  double tolerance = 1e-9;
  int max_substeps = 1 << 16;
  /// Largest population allowed in the outer quarter of the momentum grid.
  double edge_tolerance = 1e-8;
};

struct GridResult {
  /// Amplitudes on q ∈ [-M/2, M/2) for a plane-wave fiber.
  LadderState final_state;
  double output = 0.0;
  cplx return_amplitude;
  double norm_drift = 0.0;
  double spectral_edge = 0.0;
  int points = 0;
};

/// One lattice period with Bloch phase β, periodic boundaries.
/// Throws ConvergenceError when the grid is too coarse (spectral edge or norm drift).
GridResult splitstep_fiber(const FinitePulseSpec& spec, double beta, const PhysicalParams& params,
                           const GridOptions& options = {});

/// Gaussian packet on a grid spanning `periods` lattice periods; returns the overlap measure.
/// Intended for narrow packets only (the grid must hold the whole packet).
double splitstep_wavepacket(const FinitePulseSpec& spec, const WavepacketSpec& wavepacket,
                            const PhysicalParams& params, int periods,
                            const GridOptions& options = {});

/// exp(-i sign φ cos κx) applied pointwise on a grid of `points` per period via DFT.
LadderState grid_kick(const LadderState& state, double phi_d, int sign, int points = 2048);

}  // namespace kecho
