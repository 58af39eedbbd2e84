#include "kecho/splitstep.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "kecho/errors.hpp"

namespace kecho {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class Grid {
 public:
  Grid(int points, int periods, double beta, double talbot_time)
      : m_(points), periods_(periods), beta_(beta), talbot_time_(talbot_time), c_(points) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(c_.data());
    fwd_ = fftw_plan_dft_1d(m_, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(m_, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Grid() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }
  Grid(const Grid&) = delete;
  Grid& operator=(const Grid&) = delete;

  int points() const { return m_; }
  int mode(int k) const { return k < m_ / 2 ? k : k - m_; }
  // Momentum of grid mode k in units of ħκ.
  double u(int k) const { return static_cast<double>(mode(k)) / periods_ + beta_; }
  int index(int q) const { return q >= 0 ? q : q + m_; }

  std::vector<cplx>& coeffs() { return c_; }

  std::vector<cplx> kinetic_factors(double dt) const {
    std::vector<cplx> f(m_);
    const double r = dt / talbot_time_;
    for (int k = 0; k < m_; ++k) {
      const double x = r * u(k) * u(k);
      f[k] = std::polar(1.0, -kTwoPi * (x - std::nearbyint(x)));
    }
    return f;
  }

  std::vector<cplx> potential_factors(double phi, int sign) const {
    std::vector<cplx> f(m_);
    for (int j = 0; j < m_; ++j) {
      const double theta = kTwoPi * static_cast<double>(periods_) * j / m_;
      f[j] = std::polar(1.0, -sign * phi * std::cos(theta));
    }
    return f;
  }

  void multiply(const std::vector<cplx>& f) {
    for (int k = 0; k < m_; ++k) c_[k] *= f[k];
  }

  // Pointwise multiplication in position space.
  void multiply_position(const std::vector<cplx>& f) {
    fftw_execute(bwd_);
    const double inv = 1.0 / m_;
    for (int j = 0; j < m_; ++j) c_[j] *= f[j] * inv;
    fftw_execute(fwd_);
  }

  void strang(double V0, double tau, int sign, int substeps) {
    const double dt = tau / substeps;
    const auto half = kinetic_factors(dt / 2.0);
    const auto full = kinetic_factors(dt);
    const auto pot = potential_factors(V0 * dt / (2.0 * kHbar), sign);
    multiply(half);
    for (int s = 0; s < substeps; ++s) {
      multiply_position(pot);
      multiply(s + 1 < substeps ? full : half);
    }
  }

  void pulse(double V0, double tau, int sign, const GridOptions& options) {
    if (V0 == 0.0 || tau == 0.0) {
      multiply(kinetic_factors(tau));
      return;
    }
    const std::vector<cplx> start = c_;
    int n = 1;
    strang(V0, tau, sign, n);
    std::vector<cplx> coarse = c_;
    for (;;) {
      c_ = start;
      strang(V0, tau, sign, 2 * n);
      double change = 0.0;
      for (int k = 0; k < m_; ++k) change += std::norm(c_[k] - coarse[k]);
      change = std::sqrt(change);
      if (change < options.tolerance) return;
      if (2 * n >= options.max_substeps)
        throw ConvergenceError("grid split-step pulse not converged (change " + sci(change) + ")", change);
      n *= 2;
      coarse = c_;
    }
  }

  double spectral_edge() const {
    double s = 0.0;
    for (int k = 0; k < m_; ++k)
      if (std::abs(mode(k)) >= 3 * m_ / 8) s += std::norm(c_[k]);
    return s;
  }

  double norm_squared() const {
    double s = 0.0;
    for (const auto& v : c_) s += std::norm(v);
    return s;
  }

 private:
  int m_;
  int periods_;
  double beta_;
  double talbot_time_;
  std::vector<cplx> c_;
  fftw_plan fwd_{};
  fftw_plan bwd_{};
};

void check_grid(const Grid& g, const GridOptions& options, double norm0) {
  const double edge = g.spectral_edge();
  if (edge > options.edge_tolerance)
    throw ConvergenceError("grid resolution inadequate: spectral-edge population " +
                               sci(edge),
                           edge);
  const double drift = std::abs(g.norm_squared() - norm0);
  if (drift > 1e-8)
    throw ConvergenceError("grid norm drift " + sci(drift), drift);
}

void run_grid_sequence(Grid& g, const FinitePulseSpec& spec, const GridOptions& options,
                       double norm0) {
  const auto flight = g.kinetic_factors(spec.T - spec.tau_p);
  for (int k = 0; k < 2 * spec.N; ++k) {
    g.pulse(spec.V0, spec.tau_p, k < spec.N ? 1 : -1, options);
    g.multiply(flight);
    check_grid(g, options, norm0);
  }
}

int auto_points(const FinitePulseSpec& spec) {
  const int hw = finite_half_width(spec.N, spec.V0, spec.tau_p);
  return static_cast<int>(std::bit_ceil(static_cast<unsigned>(4 * hw)));
}

}  // namespace

GridResult splitstep_fiber(const FinitePulseSpec& spec, double beta, const PhysicalParams& params,
                           const GridOptions& options) {
  validate(spec);
  const int m = options.points_per_period > 0 ? options.points_per_period : auto_points(spec);
  if (m < 4 || (m % 2) != 0) throw InvalidArgument("splitstep_fiber: need an even grid of ≥ 4 points");
  Grid g(m, 1, beta, params.talbot_time);
  g.coeffs()[0] = 1.0;
  run_grid_sequence(g, spec, options, 1.0);

  GridResult r{LadderState(beta, -m / 2, m / 2 - 1), 0.0, {}, 0.0, g.spectral_edge(), m};
  for (int k = 0; k < m; ++k) r.final_state.set_amplitude(g.mode(k), g.coeffs()[k]);
  const cplx c0 = g.coeffs()[0];
  r.output = std::norm(c0);
  const double x = 2.0 * spec.N * (spec.T / params.talbot_time) * beta * beta;
  r.return_amplitude = c0 * std::polar(1.0, kTwoPi * (x - std::nearbyint(x)));
  r.norm_drift = std::abs(g.norm_squared() - 1.0);
  return r;
}

double splitstep_wavepacket(const FinitePulseSpec& spec, const WavepacketSpec& wavepacket,
                            const PhysicalParams& params, int periods,
                            const GridOptions& options) {
  validate(spec);
  validate(wavepacket);
  if (periods < 1) throw InvalidArgument("splitstep_wavepacket: need at least one period");
  const int per = options.points_per_period > 0 ? options.points_per_period : auto_points(spec);
  const int m = per * periods;
  Grid g(m, periods, 0.0, params.talbot_time);
  const double sb = beta_width(wavepacket, params);
  auto& c = g.coeffs();
  double norm = 0.0;
  for (int k = 0; k < m; ++k) {
    const double u = g.u(k);
    c[k] = std::exp(-u * u / (4.0 * sb * sb));
    norm += std::norm(c[k]);
  }
  for (auto& v : c) v /= std::sqrt(norm);
  const std::vector<cplx> initial = c;

  run_grid_sequence(g, spec, options, 1.0);

  const auto free_fall = g.kinetic_factors(2.0 * spec.N * spec.T);
  cplx overlap{0.0, 0.0};
  for (int k = 0; k < m; ++k) overlap += std::conj(initial[k] * free_fall[k]) * c[k];
  return std::norm(overlap);
}

LadderState grid_kick(const LadderState& state, double phi_d, int sign, int points) {
  if (sign != 1 && sign != -1) throw InvalidArgument("grid_kick: sign must be +1 or -1");
  const int span = std::max(std::abs(state.q_min()), std::abs(state.q_max()));
  if (points < 2 * span + 2) throw InvalidArgument("grid_kick: grid too small for the ladder");
  Grid g(points, 1, state.beta(), 1.0);
  for (int q = state.q_min(); q <= state.q_max(); ++q) g.coeffs()[g.index(q)] = state.amplitude(q);
  g.multiply_position(g.potential_factors(phi_d, sign));
  LadderState out(state.beta(), state.q_min(), state.q_max());
  for (int q = state.q_min(); q <= state.q_max(); ++q) out.set_amplitude(q, g.coeffs()[g.index(q)]);
  return out;
}

}  // namespace kecho
