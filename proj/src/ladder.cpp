#include "kecho/ladder.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kecho/bessel.hpp"
#include "kecho/errors.hpp"

namespace kecho {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// exp(-i 2π x) with x reduced to [-1/2, 1/2] first.
cplx unit_phase(double x) {
  const double r = x - std::nearbyint(x);
  return std::polar(1.0, -kTwoPi * r);
}

// (sign·(-i))^n for any integer n.
cplx quarter_power(int sign, int n) {
  static const cplx powers[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};  // (-i)^k
  int k = n % 4;
  if (k < 0) k += 4;
  cplx v = powers[k];
  if (sign < 0 && (n % 2 != 0)) v = -v;
  return v;
}

}  // namespace

LadderState::LadderState(double beta, int q_min, int q_max)
    : beta_(beta), q_min_(q_min), q_max_(q_max) {
  if (!std::isfinite(beta)) throw InvalidArgument("LadderState: non-finite quasimomentum");
  if (q_max < q_min) throw InvalidArgument("LadderState: q_max < q_min");
  amps_.assign(static_cast<std::size_t>(q_max - q_min) + 1, cplx{0.0, 0.0});
}

LadderState LadderState::basis(double beta, int q_min, int q_max, int q) {
  LadderState s(beta, q_min, q_max);
  s.set_amplitude(q, 1.0);
  return s;
}

LadderState LadderState::ground(double beta, int half_width) {
  return basis(beta, -half_width, half_width, 0);
}

cplx LadderState::amplitude(int q) const noexcept {
  return contains(q) ? amps_[static_cast<std::size_t>(q - q_min_)] : cplx{0.0, 0.0};
}

void LadderState::set_amplitude(int q, cplx value) {
  if (!contains(q))
    throw InvalidArgument("LadderState: q=" + std::to_string(q) + " outside the ladder");
  amps_[static_cast<std::size_t>(q - q_min_)] = value;
}

double LadderState::norm_squared() const noexcept {
  double s = 0.0;
  for (const auto& c : amps_) s += std::norm(c);
  return s;
}

double LadderState::edge_population(int band) const noexcept {
  const std::size_t n = amps_.size();
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(band), n);
  double s = 0.0;
  for (std::size_t i = 0; i < b; ++i) s += std::norm(amps_[i]);
  for (std::size_t i = std::max(b, n - b); i < n; ++i) s += std::norm(amps_[i]);
  return s;
}

std::vector<double> LadderState::populations() const {
  std::vector<double> p(amps_.size());
  for (std::size_t i = 0; i < amps_.size(); ++i) p[i] = std::norm(amps_[i]);
  return p;
}

double LadderState::q_spread() const noexcept {
  double w = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < amps_.size(); ++i) {
    const double p = std::norm(amps_[i]);
    const double q = q_min_ + static_cast<double>(i);
    w += p;
    m1 += p * q;
    m2 += p * q * q;
  }
  if (w <= 0.0) return 0.0;
  m1 /= w;
  return std::sqrt(std::max(0.0, m2 / w - m1 * m1));
}

KickKernel::KickKernel(double phi_d, int sign) : phi_d_(phi_d), sign_(sign) {
  if (!std::isfinite(phi_d)) throw InvalidArgument("KickKernel: non-finite kick strength");
  if (sign != 1 && sign != -1) throw InvalidArgument("KickKernel: sign must be +1 or -1");
  reach_ = bessel_reach(phi_d, 1e-16);
  const auto j = bessel_j_sequence(reach_, phi_d);
  taps_.resize(2 * static_cast<std::size_t>(reach_) + 1);
  for (int d = -reach_; d <= reach_; ++d) {
    const int ad = std::abs(d);
    double jd = j[ad];
    if (d < 0 && (ad % 2 != 0)) jd = -jd;
    taps_[d + reach_] = quarter_power(sign, d) * jd;
  }
}

cplx KickKernel::tap(int delta) const noexcept {
  if (delta < -reach_ || delta > reach_) return {0.0, 0.0};
  return taps_[delta + reach_];
}

void check_edges(const LadderState& state, const char* where) {
  const double edge = state.edge_population();
  if (edge > kEdgeTolerance) {
    throw TruncationError(std::string(where) + ": edge population " + sci(edge) +
                              " exceeds tolerance on ladder [" + std::to_string(state.q_min()) +
                              ", " + std::to_string(state.q_max()) + "]; use a wider ladder",
                          edge);
  }
}

LadderState apply_kick(LadderState state, const KickKernel& kernel) {
  if (kernel.phi_d() == 0.0) return state;
  const auto in = state.amplitudes();
  const int n = static_cast<int>(in.size());
  const int r = kernel.reach();
  const cplx* taps = kernel.taps().data() + r;

  // Gather form with explicit real arithmetic; std::complex operator* goes
  // through the NaN-recovering libgcc path and dominates the run time otherwise.
  std::vector<cplx> out(in.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(-r, i - (n - 1));
    const int hi = std::min(r, i);
    double re = 0.0, im = 0.0;
    for (int d = lo; d <= hi; ++d) {
      const cplx t = taps[d];
      const cplx c = in[i - d];
      re += t.real() * c.real() - t.imag() * c.imag();
      im += t.real() * c.imag() + t.imag() * c.real();
    }
    out[i] = {re, im};
  }
  std::copy(out.begin(), out.end(), in.begin());
  check_edges(state, "apply_kick");
  return state;
}

LadderState apply_kick(LadderState state, double phi_d, int sign) {
  return apply_kick(std::move(state), KickKernel(phi_d, sign));
}

LadderState apply_free_evolution(LadderState state, double T, const PhysicalParams& params) {
  if (!(T >= 0.0)) throw InvalidArgument("apply_free_evolution: negative duration");
  const double r = T / params.talbot_time;
  auto a = state.amplitudes();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double u = state.q_min() + static_cast<double>(i) + state.beta();
    a[i] *= unit_phase(r * u * u);
  }
  return state;
}

double accelerated_free_phase(double u, double T, double t_start, double accel,
                              const PhysicalParams& params) {
  const double r = T / params.talbot_time;
  const double x = r * u * u;
  double phase = kTwoPi * (x - std::nearbyint(x));
  if (accel != 0.0) {
    const double t0 = t_start;
    const double t1 = t_start + T;
    phase -= u * params.kappa * accel * (t1 * t1 - t0 * t0) / 2.0;
    phase += params.mass * accel * accel * (t1 * t1 * t1 - t0 * t0 * t0) / (6.0 * kHbar);
  }
  return phase;
}

LadderState apply_free_evolution_accelerated(LadderState state, double T,
                                             const PhysicalParams& params, double accel,
                                             double t_start) {
  if (accel == 0.0) return apply_free_evolution(std::move(state), T, params);
  if (!(T >= 0.0)) throw InvalidArgument("apply_free_evolution_accelerated: negative duration");
  auto a = state.amplitudes();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double u = state.q_min() + static_cast<double>(i) + state.beta();
    a[i] *= std::polar(1.0, -accelerated_free_phase(u, T, t_start, accel, params));
  }
  return state;
}

SequenceSpec SequenceSpec::at_detuning(int N, double phi_d, double eps,
                                       const PhysicalParams& params, double accel) {
  SequenceSpec s;
  s.N = N;
  s.phi_d = phi_d;
  s.T = params.talbot_time + eps;
  s.accel = accel;
  return s;
}

void validate(const SequenceSpec& spec) {
  if (spec.N < 1) throw InvalidArgument("SequenceSpec: N must be at least 1");
  if (!(spec.T > 0.0) || !std::isfinite(spec.T))
    throw InvalidArgument("SequenceSpec: period must be positive");
  if (!std::isfinite(spec.phi_d)) throw InvalidArgument("SequenceSpec: non-finite kick strength");
  if (!std::isfinite(spec.accel)) throw InvalidArgument("SequenceSpec: non-finite acceleration");
}

int ladder_half_width(int N, double phi_d) {
  const double spread = N * std::abs(phi_d);
  return static_cast<int>(std::ceil(spread + 10.0 + 6.0 * std::cbrt(spread)));
}

double free_fall_phase(const SequenceSpec& spec, double beta, const PhysicalParams& params) {
  double total = 0.0;
  for (int k = 0; k < 2 * spec.N; ++k)
    total += accelerated_free_phase(beta, spec.T, k * spec.T, spec.accel, params);
  return total;
}

namespace {

// Same phases as apply_free_evolution_accelerated, with the quadratic part
// tabulated once and the linear drift term built by recurrence along the ladder.
class FreeSteps {
 public:
  FreeSteps(const SequenceSpec& spec, double beta, int half_width, const PhysicalParams& params)
      : spec_(spec), params_(params), u0_(-half_width + beta), n_(2 * half_width + 1) {
    const double r = spec.T / params.talbot_time;
    base_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double u = u0_ + static_cast<double>(i);
      base_[i] = unit_phase(r * u * u);
    }
  }

  void apply(LadderState& state, int k) const {
    auto a = state.amplitudes();
    if (spec_.accel == 0.0) {
      for (std::size_t i = 0; i < n_; ++i) a[i] *= base_[i];
      return;
    }
    const double t0 = k * spec_.T;
    const double t1 = t0 + spec_.T;
    const double slope = params_.kappa * spec_.accel * (t1 * t1 - t0 * t0) / 2.0;
    const double offset =
        params_.mass * spec_.accel * spec_.accel * (t1 * t1 * t1 - t0 * t0 * t0) / (6.0 * kHbar);
    const cplx step = std::polar(1.0, slope);
    cplx f = std::polar(1.0, std::fmod(slope * u0_ - offset, kTwoPi));
    for (std::size_t i = 0; i < n_; ++i) {
      a[i] *= base_[i] * f;
      f *= step;
      if (i % 64 == 63) f = std::polar(1.0, std::fmod(slope * (u0_ + i + 1.0) - offset, kTwoPi));
    }
  }

 private:
  const SequenceSpec& spec_;
  const PhysicalParams& params_;
  double u0_;
  std::size_t n_;
  std::vector<cplx> base_;
};

// Runs the sequence on a fixed ladder; `observer` sees the state after each kick.
template <class Observer>
LadderState evolve(const SequenceSpec& spec, double beta, int half_width,
                   const PhysicalParams& params, Observer&& observer) {
  LadderState state = LadderState::ground(beta, half_width);
  const KickKernel forward(spec.phi_d, +1);
  const KickKernel backward(spec.phi_d, -1);
  const FreeSteps free(spec, beta, half_width, params);
  for (int k = 0; k < 2 * spec.N; ++k) {
    state = apply_kick(std::move(state), k < spec.N ? forward : backward);
    observer(state);
    free.apply(state, k);
  }
  return state;
}

template <class Fn>
auto with_auto_ladder(const SequenceSpec& spec, const LadderOptions& options, Fn&& fn) {
  if (options.half_width) {
    if (*options.half_width < 0) throw InvalidArgument("ladder half-width must be non-negative");
    return fn(*options.half_width);
  }
  int hw = ladder_half_width(spec.N, spec.phi_d);
  for (int attempt = 0;; ++attempt) {
    try {
      return fn(hw);
    } catch (const TruncationError&) {
      if (attempt >= options.max_retries) throw;
      hw = static_cast<int>(std::ceil(1.5 * hw));
    }
  }
}

}  // namespace

AskrsResult run_askrs(const SequenceSpec& spec, double beta, const PhysicalParams& params,
                      const LadderOptions& options) {
  validate(spec);
  return with_auto_ladder(spec, options, [&](int hw) {
    LadderState final_state = evolve(spec, beta, hw, params, [](const LadderState&) {});
    const cplx c0 = final_state.amplitude(0);
    const double phi0 = free_fall_phase(spec, beta, params);
    AskrsResult r{std::move(final_state), std::norm(c0), c0 * std::polar(1.0, phi0)};
    return r;
  });
}

MomentumHistory momentum_history(const SequenceSpec& spec, double beta,
                                 const PhysicalParams& params, const LadderOptions& options) {
  validate(spec);
  return with_auto_ladder(spec, options, [&](int hw) {
    MomentumHistory h;
    h.q_min = -hw;
    h.q_max = hw;
    h.populations.reserve(2 * static_cast<std::size_t>(spec.N));
    evolve(spec, beta, hw, params,
           [&](const LadderState& s) { h.populations.push_back(s.populations()); });
    return h;
  });
}

}  // namespace kecho
