// Acceptance suite: one PASS/FAIL line per criterion, details indented below it.
// Usage: kecho_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "kecho/analytic.hpp"
#include "kecho/bessel.hpp"
#include "kecho/finite_pulse.hpp"
#include "kecho/ladder.hpp"
#include "kecho/scan.hpp"
#include "kecho/splitstep.hpp"
#include "kecho/wavepacket.hpp"

using namespace kecho;

namespace {

const PhysicalParams P = rb85_780nm();

int workers() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

struct Check {
  std::vector<std::string> details;
  bool ok = true;

  template <class... A>
  void note(const char* fmt, A... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    details.emplace_back(buf);
  }
  template <class... A>
  void expect(bool cond, const char* fmt, A... args) {
    ok = ok && cond;
    char buf[512];
    std::snprintf(buf, sizeof buf, fmt, args...);
    details.emplace_back(std::string(cond ? "ok    " : "FAIL  ") + buf);
  }
};

double rel(double a, double b) { return std::abs(a / b - 1.0); }

PeakMetrics ladder_width(ControlAxis axis, int N, double phi, std::optional<WavepacketSpec> wp = {}) {
  ScanRequest r;
  r.axis = axis;
  r.params = P;
  r.N = N;
  r.phi_d = phi;
  r.wavepacket = wp;
  r.parallel = workers();
  const ScanCurve c = scan(r);
  return refine_fwhm(c, make_evaluator(r));
}

ScalingFit fit(const std::vector<int>& ns, const std::vector<double>& w, double min_span) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < ns.size(); ++i) pts.emplace_back(ns[i], w[i]);
  return fit_scaling(pts, 1.0, min_span);
}

// 1. Perfect echo
void criterion1(Check& c) {
  double worst = 0.0;
  for (int N : {1, 10, 50, 200})
    for (double phi : {0.1, 0.5, 1.0}) {
      const double I = run_askrs(SequenceSpec::at_detuning(N, phi, 0.0, P), 0.0, P).output;
      worst = std::max(worst, std::abs(I - 1.0));
    }
  c.expect(worst < 1e-10, "max |I - 1| over N in {1,10,50,200} x phi in {0.1,0.5,1} = %.2e (< 1e-10)", worst);
}

// 2. Detuning width against the large-N form
void criterion2(Check& c) {
  const double phi = 0.5;
  const std::vector<int> ns{10, 20, 30, 50, 80, 100};
  std::vector<double> w;
  for (int N : ns) {
    const double W = ladder_width(ControlAxis::Detuning, N, phi).fwhm;
    const double pred = 2.0 * x_half() * 6.0 * P.mass / (N * N * N * phi * phi * kHbar * P.kappa * P.kappa);
    w.push_back(W);
    if (N == 30 || N == 50 || N == 80)
      c.expect(rel(W, pred) < 0.05, "N=%d  fwhm %.4e s  predicted %.4e s  deviation %.2f%% (< 5%%)", N, W,
               pred, 100.0 * rel(W, pred));
    else
      c.note("N=%d  fwhm %.4e s  predicted %.4e s  deviation %.2f%%", N, W, pred, 100.0 * rel(W, pred));
  }
  const ScalingFit f = fit(ns, w, 10.0);
  c.expect(std::abs(f.exponent + 3.0) < 0.1, "log-log slope over N=10..100: %.4f (-3 +- 0.1)", f.exponent);
}

// 3. Initial-momentum filter
void criterion3(Check& c) {
  const double phi = 0.5;
  const double hk = P.ladder_momentum();
  const std::vector<int> ns{10, 20, 50, 100};
  std::vector<double> w;
  for (int N : ns) {
    const double W = ladder_width(ControlAxis::InitialMomentum, N, phi).fwhm;
    const double pred = fwhm_p0_closed(N, phi, P);
    w.push_back(W);
    if (N == 20 || N == 50)
      c.expect(rel(W, pred) < 0.05, "N=%d  fwhm %.5e hbar*kappa  closed form %.5e  deviation %.3f%% (< 5%%)", N,
               W / hk, pred / hk, 100.0 * rel(W, pred));
    else
      c.note("N=%d  fwhm %.5e hbar*kappa  closed form %.5e", N, W / hk, pred / hk);
  }
  const ScalingFit f = fit(ns, w, 10.0);
  c.expect(std::abs(f.exponent + 2.0) < 0.1, "log-log slope over N=10..100: %.4f (-2 +- 0.1)", f.exponent);
}

// 4. Acceleration, plane wave and Gaussian packet
void criterion4(Check& c) {
  const double phi = 0.5;
  const std::vector<int> ns{10, 15, 20, 30, 40, 60, 80, 100};
  std::vector<double> w0;
  double worst = 0.0;
  for (int N : ns) {
    const double W = ladder_width(ControlAxis::Acceleration, N, phi).fwhm;
    const double pred = fwhm_accel_closed(N, phi, P);
    w0.push_back(W);
    worst = std::max(worst, rel(W, pred));
    c.note("|0>  N=%d  fwhm %.5e m/s^2  closed form %.5e  deviation %.3f%%", N, W, pred, 100.0 * rel(W, pred));
  }
  c.expect(worst < 0.05, "|0> worst deviation from the closed-form width over N=10..100: %.3f%% (< 5%%)",
           100.0 * worst);
  const ScalingFit f = fit(ns, w0, 10.0);
  c.expect(std::abs(f.exponent + 3.0) < 0.1, "|0> log-log slope: %.4f (-3 +- 0.1)", f.exponent);

  WavepacketSpec wp;
  wp.sigma_x = 100e-6;
  double worst_small = 0.0;
  for (int N : {5, 10, 15, 20}) {
    const double Wg = ladder_width(ControlAxis::Acceleration, N, phi, wp).fwhm;
    const double W0 = ladder_width(ControlAxis::Acceleration, N, phi).fwhm;
    worst_small = std::max(worst_small, rel(Wg, W0));
    c.note("gaussian  N=%d  fwhm %.5e  |0> %.5e  ratio %.4f", N, Wg, W0, Wg / W0);
  }
  c.expect(worst_small < 0.10, "gaussian vs |0> for N <= 20: worst %.2f%% (< 10%%)", 100.0 * worst_small);
  double best_excess = 0.0;
  int at = 0;
  for (int N : {30, 40, 60, 80, 100}) {
    const double Wg = ladder_width(ControlAxis::Acceleration, N, phi, wp).fwhm;
    const double pred = fwhm_accel_closed(N, phi, P);
    c.note("gaussian  N=%d  fwhm %.5e  1/N^3 form %.5e  excess %.1f%%", N, Wg, pred, 100.0 * (Wg / pred - 1.0));
    if (Wg / pred - 1.0 > best_excess) {
      best_excess = Wg / pred - 1.0;
      at = N;
    }
  }
  c.expect(best_excess > 0.25, "gaussian exceeds the 1/N^3 width by %.1f%% at N=%d (> 25%% somewhere in (25,100])",
           100.0 * best_excess, at);
}

// 5. Finite-pulse optimum scaling
void criterion5(Check& c) {
  std::vector<std::pair<double, int>> cases;
  for (double g : {1.0, 10.0, 100.0})
    for (int N : {16, 32, 64, 128})
      if (g * N > 1.0) cases.emplace_back(g, N);
  std::vector<TauMinResult> res(cases.size());
  // Largest cases first so the pool stays busy.
  std::vector<std::size_t> order(cases.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cases[a].first * cases[a].second > cases[b].first * cases[b].second;
  });
  parallel_map(
      cases.size(),
      [&](std::size_t k) {
        const std::size_t i = order[k];
        res[i] = find_tau_min(cases[i].second, cases[i].first, P);
        return 0.0;
      },
      workers());

  std::vector<std::pair<double, double>> wpts, tpts;
  double worst_w = 0.0, worst_t = 0.0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto [g, N] = cases[i];
    const double wc = res[i].w_min * g * N * N * 1e6;
    const double tc = res[i].tau_min * std::sqrt(g * N) * 1e6;
    worst_w = std::max(worst_w, std::abs(wc / 33.0 - 1.0));
    worst_t = std::max(worst_t, std::abs(tc / 22.0 - 1.0));
    c.note("gamma=%-5g N=%-4d tau_min %.4e s  W_min %.4e s  W*gamma*N^2 %.2f us  tau*sqrt(gamma*N) %.2f us  "
           "shift %.3e s  peak %.3f",
           g, N, res[i].tau_min, res[i].w_min, wc, tc, res[i].delta_eps, res[i].peak_value);
    wpts.emplace_back(N, res[i].w_min * g);
    tpts.emplace_back(N, res[i].tau_min * std::sqrt(g));
  }
  c.expect(worst_w < 0.20, "W_min*gamma*N^2 within 20%% of 33 us: worst deviation %.1f%%", 100.0 * worst_w);
  c.expect(worst_t < 0.20, "tau_min*sqrt(gamma*N) within 20%% of 22 us: worst deviation %.1f%%", 100.0 * worst_t);
  const ScalingFit fw = fit_scaling(wpts, 1.0, 8.0);
  const ScalingFit ft = fit_scaling(tpts, 1.0, 8.0);
  c.expect(std::abs(fw.exponent + 2.0) < 0.15, "collapsed W_min*gamma vs N slope %.4f (-2 +- 0.15)", fw.exponent);
  c.expect(std::abs(ft.exponent + 0.5) < 0.1, "collapsed tau_min*sqrt(gamma) vs N slope %.4f (-0.5 +- 0.1)",
           ft.exponent);
}

// 6. Ladder engines against the position-grid oracle
void criterion6(Check& c) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double g = 1.0 + 29.0 * U(rng);
    const double tau = (0.1 + 2.9 * U(rng)) * 1e-6;
    const int N = 1 + static_cast<int>(8 * U(rng)) % 8;
    const double beta = U(rng) - 0.5;
    const double eps = (U(rng) - 0.5) * 10e-9;
    const FinitePulseSpec spec{N, depth_from_gamma(g, P), tau, P.talbot_time + eps, 0.0};
    const FiniteResult lad = run_finite_askrs(spec, beta, P);
    const GridResult grid = splitstep_fiber(spec, beta, P);
    double d = std::abs(lad.return_amplitude - grid.return_amplitude);
    for (int q = grid.final_state.q_min(); q <= grid.final_state.q_max(); ++q)
      d = std::max(d, std::abs(lad.final_state.amplitude(q) - grid.final_state.amplitude(q)));
    worst = std::max(worst, d);
    c.note("case %d: gamma %.2f tau %.3e s N %d beta %+.3f eps %+.2e s  grid %d  max|diff| %.2e", k, g, tau, N,
           beta, eps, grid.points, d);
  }
  c.expect(worst < 1e-6, "finite-pulse ladder vs split-step grid: max amplitude difference %.2e (< 1e-6)", worst);

  double kick_worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double beta = U(rng) - 0.5;
    LadderState s(beta, -40, 40);
    double n = 0.0;
    for (int q = -10; q <= 10; ++q) {
      const cplx a{U(rng) - 0.5, U(rng) - 0.5};
      s.set_amplitude(q, a);
      n += std::norm(a);
    }
    for (auto& a : s.amplitudes()) a /= std::sqrt(n);
    const double phi = 0.1 + 2.9 * U(rng);
    const int sign = U(rng) < 0.5 ? 1 : -1;
    const LadderState a = apply_kick(s, phi, sign);
    const LadderState b = grid_kick(s, phi, sign, 2048);
    for (int q = -40; q <= 40; ++q) kick_worst = std::max(kick_worst, std::abs(a.amplitude(q) - b.amplitude(q)));
  }
  c.expect(kick_worst < 1e-8, "delta-kick operator vs 2048-point grid: max difference %.2e (< 1e-8)", kick_worst);
}

// 7. First-order phase slopes and closed-form consistency
cplx first_train(int N, double phi, double T, double beta, double a, int q) {
  LadderState s = LadderState::ground(beta, ladder_half_width(N, phi));
  const KickKernel k(phi, 1);
  for (int n = 0; n < N; ++n)
    s = apply_free_evolution_accelerated(apply_kick(std::move(s), k), T, P, a, n * T);
  return s.amplitude(q);
}

// <0| second train |q>
cplx second_train(int N, double phi, double T, double beta, double a, int q) {
  const int hw = ladder_half_width(N, phi);
  LadderState s = LadderState::basis(beta, -hw, hw, q);
  const KickKernel k(phi, -1);
  for (int n = 0; n < N; ++n)
    s = apply_free_evolution_accelerated(apply_kick(std::move(s), k), T, P, a, (N + n) * T);
  return s.amplitude(0);
}

void criterion7(Check& c) {
  const double TT = P.talbot_time;
  const double hk = P.ladder_momentum();
  double worst = 0.0;
  int count = 0;
  for (auto [N, phi] : {std::pair{6, 0.5}, {10, 0.5}, {20, 0.3}}) {
    const int Q = static_cast<int>(std::floor(N * phi));
    // Slopes that vanish at q = 0 are compared against the |q| = 1 magnitude.
    const PhaseSlopes p1 = p0_phase_slopes(N, 1, P), a1 = accel_phase_slopes(N, 1, P);
    for (int q = -Q; q <= Q; ++q) {
      if (std::abs(bessel_j(q, N * phi)) < 1e-3) continue;
      auto phase_rate = [&](auto f, int kind, double h) {
        cplx plus, minus;
        if (kind == 0) {
          plus = f(N, phi, TT + h, 0.0, 0.0, q);
          minus = f(N, phi, TT - h, 0.0, 0.0, q);
        } else if (kind == 1) {
          plus = f(N, phi, TT, h, 0.0, q);
          minus = f(N, phi, TT, -h, 0.0, q);
        } else {
          plus = f(N, phi, TT, 0.0, h, q);
          minus = f(N, phi, TT, 0.0, -h, q);
        }
        return std::arg(plus / minus) / (2.0 * h);
      };
      const PhaseSlopes se = eps_phase_slopes(N, phi, q, P);
      const PhaseSlopes sp = p0_phase_slopes(N, q, P);
      const PhaseSlopes sa = accel_phase_slopes(N, q, P);
      const double num[6] = {phase_rate(first_train, 0, 1e-12),       -phase_rate(second_train, 0, 1e-12),
                             phase_rate(first_train, 1, 1e-6) / hk,   -phase_rate(second_train, 1, 1e-6) / hk,
                             phase_rate(first_train, 2, 1e-6),        -phase_rate(second_train, 2, 1e-6)};
      const double th[6] = {se.theta, se.chi, sp.theta, sp.chi, sa.theta, sa.chi};
      const double scale[6] = {std::abs(se.theta), std::abs(se.chi), std::max(std::abs(sp.theta), std::abs(p1.theta)),
                               std::max(std::abs(sp.chi), std::abs(p1.chi)),
                               std::max(std::abs(sa.theta), std::abs(a1.theta)),
                               std::max(std::abs(sa.chi), std::abs(a1.chi))};
      for (int i = 0; i < 6; ++i) {
        worst = std::max(worst, std::abs(num[i] - th[i]) / scale[i]);
        ++count;
      }
    }
  }
  c.expect(worst < 1e-3, "%d phase slopes (eps, p0, a; both trains) vs finite differences: worst relative %.2e (< 1e-3)",
           count, worst);

  double graf = 0.0;
  for (int N : {6, 10, 20, 50}) {
    for (double phi : {0.3, 0.5, 1.0}) {
      const double wp = fwhm_p0_linearized(N, phi, P);
      const double wa = fwhm_accel_linearized(N, phi, P);
      for (double f : {0.05, 0.3, 0.7, 1.5}) {
        graf = std::max(graf, std::abs(output_first_order(N, phi, 0, f * wp, 0, P) - I_p0_closed(N, phi, f * wp, P)));
        graf = std::max(graf, std::abs(output_first_order(N, phi, 0, 0, f * wa, P) - I_accel_closed(N, phi, f * wa, P)));
      }
    }
  }
  c.expect(graf < 1e-10, "first-order Bessel assembly vs closed forms (p0, a): max difference %.2e (< 1e-10)", graf);
}

// 8. Short-pulse limit: the anti-symmetric train cancels the linear pulse-length error
void criterion8(Check& c) {
  const double TT = P.talbot_time;
  for (auto [N, phi] : {std::pair{10, 0.5}, {32, 0.3}}) {
    const int hw = ladder_half_width(N, phi);
    const LadderState g = LadderState::ground(0.0, hw);
    const LadderState kicked = apply_kick(g, phi, 1);
    // Matched area: V0 τ / (2ħ) = φ for every τ.
    auto train_loss = [&](double tau) {
      return 1.0 - run_finite_askrs({N, 2.0 * kHbar * phi / tau, tau, TT, 0.0}, 0.0, P).output;
    };
    auto single_dev = [&](double tau) {
      const PulsePropagator prop(FiberEigensystem(2.0 * kHbar * phi / tau, 0.0, -hw, hw, P), tau);
      const LadderState s = prop.apply(g, 1);
      double d = 0.0;
      for (int q = -hw; q <= hw; ++q) d += std::norm(s.amplitude(q) - kicked.amplitude(q));
      return std::sqrt(d);
    };
    const double h = 1e-8;
    const double y1 = train_loss(h), y2 = train_loss(2.0 * h);
    const double d1 = single_dev(h), d2 = single_dev(2.0 * h);
    // Richardson: y = a τ + b τ², so a = (4 y(h) − y(2h)) / (2h).
    const double train_rate = std::abs(4.0 * y1 - y2) / (2.0 * h);
    const double single_rate = std::abs(4.0 * d1 - d2) / (2.0 * h);
    const double order_train = std::log2(train_loss(4e-8) / train_loss(2e-8));
    const double order_single = std::log2(single_dev(4e-8) / single_dev(2e-8));
    c.note("N=%d phi=%.1f: train 1-I ~ tau^%.3f, single-pulse deviation ~ tau^%.3f", N, phi, order_train,
           order_single);
    c.expect(train_rate < 1e-3 * single_rate && std::abs(order_train - 2.0) < 0.05 && std::abs(order_single - 1.0) < 0.05,
             "N=%d phi=%.1f: |dI/dtau| at 0+ %.3e /s vs single-pulse linear coefficient %.3e /s, ratio %.2e (< 1e-3)",
             N, phi, train_rate, single_rate, train_rate / single_rate);
  }
}

// 9. Peak shift is the same at the first and second Talbot times
void criterion9(Check& c) {
  const double gamma = 10.0;
  const int N = 32;
  const TauMinResult t = find_tau_min(N, gamma, P);
  FinitePeakOptions o;
  o.parallel = workers();
  const double V0 = depth_from_gamma(gamma, P);
  const PeakMetrics p1 = finite_peak(N, V0, t.tau_min, P, 1, o);
  const PeakMetrics p2 = finite_peak(N, V0, t.tau_min, P, 2, o);
  c.note("tau_min %.4e s; l=1: shift %.5e s width %.4e s; l=2: shift %.5e s width %.4e s", t.tau_min, p1.center,
         p1.fwhm, p2.center, p2.fwhm);
  const double d = std::abs(p1.center - p2.center) / std::abs(p1.center);
  c.expect(d < 0.05, "|shift(l=1) - shift(l=2)| / |shift(l=1)| = %.3f%% (< 5%%)", 100.0 * d);
}

struct Criterion {
  int id;
  const char* name;
  void (*fn)(Check&);
};

}  // namespace

int main(int argc, char** argv) {
  const Criterion all[] = {
      {1, "perfect echo", criterion1},
      {2, "detuning width scaling", criterion2},
      {3, "initial-momentum filter", criterion3},
      {4, "acceleration width, plane wave and gaussian", criterion4},
      {5, "finite-pulse optimum scaling", criterion5},
      {6, "ladder vs position-grid oracle", criterion6},
      {7, "first-order phase slopes", criterion7},
      {8, "short-pulse limit", criterion8},
      {9, "peak shift at l=1 and l=2", criterion9},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& cr : all) {
    if (!pick.empty() && !pick.count(cr.id)) continue;
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.fn(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.details.push_back(std::string("FAIL  exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  criterion %d: %s (%.1f s)\n", c.ok ? "PASS" : "FAIL", cr.id, cr.name, secs);
    for (const auto& d : c.details) std::printf("        %s\n", d.c_str());
    std::fflush(stdout);
    failures += c.ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
