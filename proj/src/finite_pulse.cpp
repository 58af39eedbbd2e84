#include "kecho/finite_pulse.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <string>

#include "kecho/errors.hpp"

namespace kecho {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Entries of the banded propagator below this are roundoff from the eigenvector tails.
constexpr double kBandDrop = 1e-14;

std::vector<cplx> kinetic_factors(const LadderState& s, double dt, const PhysicalParams& params) {
  const double r = dt / params.talbot_time;
  std::vector<cplx> f(s.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double u = s.q_min() + static_cast<double>(i) + s.beta();
    const double x = r * u * u;
    f[i] = std::polar(1.0, -kTwoPi * (x - std::nearbyint(x)));
  }
  return f;
}

void multiply(LadderState& s, const std::vector<cplx>& f) {
  auto a = s.amplitudes();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= f[i];
}

double distance(const LadderState& a, const LadderState& b) {
  double s = 0.0;
  const auto x = a.amplitudes();
  const auto y = b.amplitudes();
  for (std::size_t i = 0; i < x.size(); ++i) s += std::norm(x[i] - y[i]);
  return std::sqrt(s);
}

}  // namespace

void validate(const FinitePulseSpec& spec) {
  if (spec.N < 1) throw InvalidArgument("FinitePulseSpec: N must be at least 1");
  if (!(spec.V0 >= 0.0) || !std::isfinite(spec.V0))
    throw InvalidArgument("FinitePulseSpec: V0 must be non-negative");
  if (!(spec.tau_p >= 0.0)) throw InvalidArgument("FinitePulseSpec: negative pulse duration");
  if (!(spec.T > 0.0) || !std::isfinite(spec.T))
    throw InvalidArgument("FinitePulseSpec: period must be positive");
  if (spec.tau_p > spec.T) throw InvalidArgument("FinitePulseSpec: pulse longer than the period");
  if (spec.accel != 0.0)
    throw InvalidArgument("FinitePulseSpec: acceleration is not supported with finite pulses");
}

double pulse_area(const FinitePulseSpec& spec) { return spec.V0 * spec.tau_p / (2.0 * kHbar); }

LadderState strang_pulse(LadderState state, double V0, double tau_p, int sign,
                         const PhysicalParams& params, int substeps) {
  if (substeps < 1) throw InvalidArgument("strang_pulse: need at least one sub-step");
  const double dt = tau_p / substeps;
  const auto half = kinetic_factors(state, dt / 2.0, params);
  const auto full = kinetic_factors(state, dt, params);
  const KickKernel kick(V0 * dt / (2.0 * kHbar), sign);
  multiply(state, half);
  for (int m = 0; m < substeps; ++m) {
    state = apply_kick(std::move(state), kick);
    multiply(state, m + 1 < substeps ? full : half);
  }
  return state;
}

LadderState apply_finite_pulse(LadderState state, const FinitePulseSpec& spec, int sign,
                               const PhysicalParams& params, const SplittingOptions& options,
                               SplittingReport* report) {
  if (!(spec.V0 >= 0.0)) throw InvalidArgument("apply_finite_pulse: V0 must be non-negative");
  if (!(spec.tau_p >= 0.0)) throw InvalidArgument("apply_finite_pulse: negative pulse duration");
  if (sign != 1 && sign != -1) throw InvalidArgument("apply_finite_pulse: sign must be +1 or -1");
  if (report) *report = {};

  int m = 1;
  LadderState coarse = strang_pulse(state, spec.V0, spec.tau_p, sign, params, m);
  for (;;) {
    LadderState fine = strang_pulse(state, spec.V0, spec.tau_p, sign, params, 2 * m);
    const double change = distance(coarse, fine);
    if (report) {
      report->changes.push_back(change);
      report->substeps = 2 * m;
    }
    if (change < options.tolerance) return fine;
    if (2 * m >= options.max_substeps)
      throw ConvergenceError("apply_finite_pulse: splitting not converged after " +
                                 std::to_string(2 * m) + " sub-steps (change " +
                                 sci(change) + ")",
                             change);
    m *= 2;
    coarse = std::move(fine);
  }
}

FiberEigensystem::FiberEigensystem(double V0, double beta, int q_min, int q_max,
                                   const PhysicalParams& params)
    : V0_(V0), beta_(beta), q_min_(q_min), q_max_(q_max) {
  if (q_max < q_min) throw InvalidArgument("FiberEigensystem: empty ladder");
  if (!(V0 >= 0.0)) throw InvalidArgument("FiberEigensystem: V0 must be non-negative");
  const int n = size();
  Eigen::VectorXd diag(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  const double w = kTwoPi / params.talbot_time;
  for (int i = 0; i < n; ++i) {
    const double u = q_min + i + beta;
    diag[i] = w * u * u;
  }
  for (int i = 0; i + 1 < n; ++i) off[i] = V0 / (4.0 * kHbar);

  // computeFromTridiagonal does not rescale; QL iteration on raw rad/s entries can stall.
  double scale = std::abs(V0) / (4.0 * kHbar);
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(diag[i]));
  if (scale == 0.0) scale = 1.0;
  diag /= scale;
  off /= scale;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    throw ConvergenceError("FiberEigensystem: tridiagonal eigensolver failed", 0.0);

  freq_.resize(n);
  for (int k = 0; k < n; ++k) freq_[k] = solver.eigenvalues()[k] * scale;
  vectors_.resize(static_cast<std::size_t>(n) * n);
  const auto& S = solver.eigenvectors();
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) vectors_[static_cast<std::size_t>(i) * n + k] = S(i, k);
}

PulsePropagator::PulsePropagator(const FiberEigensystem& eigen, double tau_p)
    : tau_p_(tau_p), beta_(eigen.beta()), q_min_(eigen.q_min()), q_max_(eigen.q_max()) {
  if (!(tau_p >= 0.0)) throw InvalidArgument("PulsePropagator: negative pulse duration");
  const int n = eigen.size();
  std::vector<cplx> phase(n);
  for (int k = 0; k < n; ++k) phase[k] = std::polar(1.0, -eigen.freq_[k] * tau_p);

  const double* S = eigen.vectors_.data();
  std::vector<std::vector<cplx>> diagonals;
  std::vector<cplx> weighted(n);
  int quiet = 0;
  for (int d = 0; d < n && quiet < 3; ++d) {
    std::vector<cplx> values(n - d);
    double largest = 0.0;
    for (int i = 0; i + d < n; ++i) {
      const double* a = S + static_cast<std::size_t>(i) * n;
      const double* b = S + static_cast<std::size_t>(i + d) * n;
      cplx sum{0.0, 0.0};
      for (int k = 0; k < n; ++k) sum += (a[k] * b[k]) * phase[k];
      values[i] = sum;
      largest = std::max(largest, std::abs(sum));
    }
    quiet = (d > 0 && largest < kBandDrop) ? quiet + 1 : 0;
    diagonals.push_back(std::move(values));
  }
  band_ = static_cast<int>(diagonals.size()) - 1 - quiet;
  if (band_ < 0) band_ = 0;

  const int width = 2 * band_ + 1;
  rows_.assign(static_cast<std::size_t>(n) * width, cplx{0.0, 0.0});
  for (int d = 0; d <= band_; ++d) {
    for (int i = 0; i + d < n; ++i) {
      const cplx v = diagonals[d][i];
      rows_[static_cast<std::size_t>(i) * width + band_ + d] = v;
      rows_[static_cast<std::size_t>(i + d) * width + band_ - d] = v;
    }
  }
}

LadderState PulsePropagator::apply(LadderState state, int sign) const {
  if (state.q_min() != q_min_ || state.q_max() != q_max_ || state.beta() != beta_)
    throw InvalidArgument("PulsePropagator: state lives on a different ladder");
  if (sign != 1 && sign != -1) throw InvalidArgument("PulsePropagator: sign must be +1 or -1");
  const auto in = state.amplitudes();
  const int n = static_cast<int>(in.size());
  const int width = 2 * band_ + 1;
  std::vector<cplx> out(in.size());
  for (int i = 0; i < n; ++i) {
    const cplx* row = rows_.data() + static_cast<std::size_t>(i) * width + band_;
    const int lo = std::max(-band_, -i);
    const int hi = std::min(band_, n - 1 - i);
    cplx sum{0.0, 0.0};
    if (sign > 0) {
      for (int d = lo; d <= hi; ++d) sum += row[d] * in[i + d];
    } else {
      for (int d = lo; d <= hi; ++d) sum += (d % 2 == 0 ? row[d] : -row[d]) * in[i + d];
    }
    out[i] = sum;
  }
  std::copy(out.begin(), out.end(), in.begin());
  check_edges(state, "finite pulse");
  return state;
}

int finite_half_width(int N, double V0, double tau_p) {
  return ladder_half_width(N, V0 * tau_p / (2.0 * kHbar));
}

std::shared_ptr<const FiberEigensystem> make_eigensystem(double V0, double beta, int half_width,
                                                         const PhysicalParams& params) {
  return std::make_shared<const FiberEigensystem>(V0, beta, -half_width, half_width, params);
}

namespace {

cplx undo_free_fall(cplx c0, int N, double T, double beta, const PhysicalParams& params) {
  const double x = 2.0 * N * (T / params.talbot_time) * beta * beta;
  return c0 * std::polar(1.0, kTwoPi * (x - std::nearbyint(x)));
}

template <class Pulse>
FiniteResult run_sequence(int N, double T, double tau_p, LadderState state,
                          const PhysicalParams& params, Pulse&& pulse) {
  const double beta = state.beta();
  for (int k = 0; k < 2 * N; ++k) {
    state = pulse(std::move(state), k < N ? 1 : -1);
    state = apply_free_evolution(std::move(state), T - tau_p, params);
  }
  const cplx c0 = state.amplitude(0);
  const double out = std::norm(c0);
  const cplx ret = undo_free_fall(c0, N, T, beta, params);
  return FiniteResult{std::move(state), out, ret};
}

}  // namespace

FiniteSequence::FiniteSequence(int N, double tau_p, std::shared_ptr<const FiberEigensystem> eigen,
                               const PhysicalParams& params)
    : N_(N), tau_p_(tau_p), params_(params), eigen_(std::move(eigen)),
      propagator_(*eigen_, tau_p) {
  if (N < 1) throw InvalidArgument("FiniteSequence: N must be at least 1");
}

FiniteResult FiniteSequence::run(double T) const {
  if (!(T >= tau_p_)) throw InvalidArgument("FiniteSequence: period shorter than the pulse");
  LadderState state = LadderState::basis(eigen_->beta(), eigen_->q_min(), eigen_->q_max(), 0);
  return run_sequence(N_, T, tau_p_, std::move(state), params_,
                      [&](LadderState s, int sign) { return propagator_.apply(std::move(s), sign); });
}

FiniteResult run_finite_askrs(const FinitePulseSpec& spec, double beta,
                              const PhysicalParams& params, const FiniteOptions& options) {
  validate(spec);
  auto attempt = [&](int hw) {
    if (options.method == PulseMethod::Exact) {
      FiniteSequence seq(spec.N, spec.tau_p, make_eigensystem(spec.V0, beta, hw, params), params);
      return seq.run(spec.T);
    }
    return run_sequence(spec.N, spec.T, spec.tau_p, LadderState::ground(beta, hw), params,
                        [&](LadderState s, int sign) {
                          return apply_finite_pulse(std::move(s), spec, sign, params,
                                                    options.splitting);
                        });
  };
  if (options.half_width) return attempt(*options.half_width);
  int hw = finite_half_width(spec.N, spec.V0, spec.tau_p);
  for (int tries = 0;; ++tries) {
    try {
      return attempt(hw);
    } catch (const TruncationError&) {
      if (tries >= options.max_retries) throw;
      hw = static_cast<int>(std::ceil(1.5 * hw));
    }
  }
}

}  // namespace kecho
