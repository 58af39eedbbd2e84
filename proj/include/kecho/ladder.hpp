#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "kecho/units.hpp"

namespace kecho {

using cplx = std::complex<double>;

/// Edge-band population above which a ladder is considered too narrow.
inline constexpr double kEdgeTolerance = 1e-12;
/// Number of sites at each end that make up the edge band.
inline constexpr int kEdgeBand = 5;

/// Amplitudes on the momentum ladder p = (q + β) ħκ, q ∈ [q_min, q_max].
class LadderState {
 public:
  LadderState(double beta, int q_min, int q_max);

  /// |q⟩ on the β fiber.
  static LadderState basis(double beta, int q_min, int q_max, int q = 0);
  /// |0⟩ on a symmetric ladder of half-width `half_width`.
  static LadderState ground(double beta, int half_width);

  double beta() const noexcept { return beta_; }
  int q_min() const noexcept { return q_min_; }
  int q_max() const noexcept { return q_max_; }
  std::size_t size() const noexcept { return amps_.size(); }
  bool contains(int q) const noexcept { return q >= q_min_ && q <= q_max_; }

  /// c_q, zero outside the ladder.
  cplx amplitude(int q) const noexcept;
  void set_amplitude(int q, cplx value);

  std::span<cplx> amplitudes() noexcept { return amps_; }
  std::span<const cplx> amplitudes() const noexcept { return amps_; }

  double norm_squared() const noexcept;
  /// Population summed over the outermost `band` sites at both ends.
  double edge_population(int band = kEdgeBand) const noexcept;
  std::vector<double> populations() const;
  /// Standard deviation of q under |c_q|².
  double q_spread() const noexcept;

 private:
  double beta_;
  int q_min_;
  int q_max_;
  std::vector<cplx> amps_;
};

/// Convolution taps of exp(-i sign φ cos κx) in the ladder basis.
///
/// tap(Δ) = (sign·(-i))^Δ J_Δ(φ), kept while |J_Δ(φ)| ≥ 1e-16.
class KickKernel {
 public:
  KickKernel(double phi_d, int sign);

  double phi_d() const noexcept { return phi_d_; }
  int sign() const noexcept { return sign_; }
  int reach() const noexcept { return reach_; }
  cplx tap(int delta) const noexcept;
  /// All taps, index delta + reach().
  const std::vector<cplx>& taps() const noexcept { return taps_; }

 private:
  double phi_d_;
  int sign_;
  int reach_;
  std::vector<cplx> taps_;  // index delta + reach_
};

/// Throws TruncationError when the edge band holds more than kEdgeTolerance.
void check_edges(const LadderState& state, const char* where);

LadderState apply_kick(LadderState state, const KickKernel& kernel);
LadderState apply_kick(LadderState state, double phi_d, int sign);

/// c_q ← c_q exp(-i 2π (T/T_T) (q+β)²).
LadderState apply_free_evolution(LadderState state, double T, const PhysicalParams& params);

/// Phase (rad) accumulated by ladder momentum u = q + β over [t_start, t_start + T]
/// under the kinetic term (p - m a t)²/(2m); the amplitude picks up exp(-i phase).
double accelerated_free_phase(double u, double T, double t_start, double accel,
                              const PhysicalParams& params);

LadderState apply_free_evolution_accelerated(LadderState state, double T,
                                             const PhysicalParams& params, double accel,
                                             double t_start);

/// N kicks of one sign per train, each followed by free flight of duration T.
struct SequenceSpec {
  int N = 1;
  double phi_d = 0.0;
  double T = 0.0;      // s
  double accel = 0.0;  // m/s²

  /// T = T_T + eps.
  static SequenceSpec at_detuning(int N, double phi_d, double eps, const PhysicalParams& params,
                                  double accel = 0.0);
  double detuning(const PhysicalParams& params) const { return T - params.talbot_time; }
};

void validate(const SequenceSpec& spec);

struct LadderOptions {
  /// Fixed half-width; auto-sized (with retries on edge leakage) when empty.
  std::optional<int> half_width;
  int max_retries = 4;
};

/// Symmetric half-width for N kicks of strength φ.
int ladder_half_width(int N, double phi_d);

struct AskrsResult {
  LadderState final_state;
  double output = 0.0;  // |c_0|²
  /// c_0 with the free-fall phase of the initial momentum removed (lab-frame return amplitude).
  cplx return_amplitude;
};

/// Runs both trains on the β fiber starting from |0⟩.
AskrsResult run_askrs(const SequenceSpec& spec, double beta, const PhysicalParams& params,
                      const LadderOptions& options = {});

struct MomentumHistory {
  int q_min = 0;
  int q_max = 0;
  /// populations[k][q - q_min] after kick k + 1 (2N rows).
  std::vector<std::vector<double>> populations;
};

MomentumHistory momentum_history(const SequenceSpec& spec, double beta,
                                 const PhysicalParams& params, const LadderOptions& options = {});

/// Sum of accelerated_free_phase(β, ...) over all 2N intervals.
double free_fall_phase(const SequenceSpec& spec, double beta, const PhysicalParams& params);

}  // namespace kecho
