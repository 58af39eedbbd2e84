#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "kecho/ladder.hpp"

namespace kecho {

/// Square pulses of depth V0 and duration tau_p at the start of each period T.
struct FinitePulseSpec {
  int N = 1;
  double V0 = 0.0;     // J
  double tau_p = 0.0;  // s
  double T = 0.0;      // s
  double accel = 0.0;  // m/s², must be 0
};

void validate(const FinitePulseSpec& spec);

/// δ-kick strength with the same pulse area, V0 τ_p / (2ħ).
double pulse_area(const FinitePulseSpec& spec);

struct SplittingOptions {
  double tolerance = 1e-9;
  int max_substeps = 1 << 16;
};

struct SplittingReport {
  int substeps = 0;
  /// Norm distance between successive doublings, starting at M = 1 vs 2.
  std::vector<double> changes;
};

/// One pulse by Strang splitting with a fixed number of sub-steps.
LadderState strang_pulse(LadderState state, double V0, double tau_p, int sign,
                         const PhysicalParams& params, int substeps);

/// exp(-(i/ħ)(p²/2m ± (V0/2) cos κx) τ_p) on the fiber, doubling the number of
/// Strang sub-steps until successive results differ by less than the tolerance.
LadderState apply_finite_pulse(LadderState state, const FinitePulseSpec& spec, int sign,
                               const PhysicalParams& params, const SplittingOptions& options = {},
                               SplittingReport* report = nullptr);

/// Eigensystem of the tridiagonal fiber Hamiltonian for sign +1. Reusable for any
/// pulse duration at fixed (V0, β, ladder).
class FiberEigensystem {
 public:
  FiberEigensystem(double V0, double beta, int q_min, int q_max, const PhysicalParams& params);

  double V0() const noexcept { return V0_; }
  double beta() const noexcept { return beta_; }
  int q_min() const noexcept { return q_min_; }
  int q_max() const noexcept { return q_max_; }
  int size() const noexcept { return q_max_ - q_min_ + 1; }
  /// Eigenfrequencies in rad/s, ascending.
  const std::vector<double>& frequencies() const noexcept { return freq_; }

 private:
  friend class PulsePropagator;
  double V0_;
  double beta_;
  int q_min_;
  int q_max_;
  std::vector<double> freq_;
  std::vector<double> vectors_;  // row-major: vectors_[i * n + k] = S_ik
};

/// Exact pulse propagator, stored as a band of the dense unitary.
class PulsePropagator {
 public:
  PulsePropagator(const FiberEigensystem& eigen, double tau_p);

  double tau_p() const noexcept { return tau_p_; }
  int bandwidth() const noexcept { return band_; }
  int q_min() const noexcept { return q_min_; }
  int q_max() const noexcept { return q_max_; }

  /// State must live on the same ladder. Sign −1 is D P D with D = diag((−1)^q).
  LadderState apply(LadderState state, int sign) const;

 private:
  double tau_p_;
  double beta_;
  int q_min_;
  int q_max_;
  int band_ = 0;
  std::vector<cplx> rows_;  // rows_[i * (2 band + 1) + d + band] = P_{i, i+d}
};

enum class PulseMethod { Exact, Splitting };

struct FiniteOptions {
  std::optional<int> half_width;
  int max_retries = 4;
  PulseMethod method = PulseMethod::Exact;
  SplittingOptions splitting;
};

struct FiniteResult {
  LadderState final_state;
  double output = 0.0;
  cplx return_amplitude;
};

/// Initial ladder half-width for a finite-pulse run.
int finite_half_width(int N, double V0, double tau_p);

FiniteResult run_finite_askrs(const FinitePulseSpec& spec, double beta,
                              const PhysicalParams& params, const FiniteOptions& options = {});

/// Eigensystem on the symmetric ladder [-half_width, half_width].
std::shared_ptr<const FiberEigensystem> make_eigensystem(double V0, double beta, int half_width,
                                                         const PhysicalParams& params);

/// The finite-pulse sequence at fixed (N, V0, τ_p, β) for any period T, sharing one
/// propagator. run() throws TruncationError if the ladder is too narrow.
class FiniteSequence {
 public:
  FiniteSequence(int N, double tau_p, std::shared_ptr<const FiberEigensystem> eigen,
                 const PhysicalParams& params);

  FiniteResult run(double T) const;
  double output(double T) const { return run(T).output; }
  int N() const noexcept { return N_; }
  double tau_p() const noexcept { return tau_p_; }
  const FiberEigensystem& eigensystem() const noexcept { return *eigen_; }

 private:
  int N_;
  double tau_p_;
  PhysicalParams params_;
  std::shared_ptr<const FiberEigensystem> eigen_;
  PulsePropagator propagator_;
};

}  // namespace kecho
