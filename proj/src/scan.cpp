#include "kecho/scan.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <exception>
#include <numbers>
#include <string>
#include <thread>

#include "kecho/analytic.hpp"
#include "kecho/errors.hpp"

namespace kecho {

std::vector<double> parallel_map(std::size_t n, const std::function<double(std::size_t)>& fn,
                                 int workers) {
  std::vector<double> out(n);
  std::vector<std::exception_ptr> errors(n);
  const std::size_t w = std::min<std::size_t>(std::max(workers, 1), std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (w <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < w; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string_view axis_column(ControlAxis axis) {
  switch (axis) {
    case ControlAxis::Detuning: return "eps_s";
    case ControlAxis::InitialMomentum: return "p0_kg_m_per_s";
    case ControlAxis::Acceleration: return "accel_m_per_s2";
  }
  return "control";
}

namespace {

struct Crossings {
  std::size_t peak = 0;   // index of the highest sample
  std::size_t left = 0;   // output[left] < half ≤ output[left + 1]
  std::size_t right = 0;  // output[right - 1] ≥ half > output[right]
};

// Vertex of the parabola through three points.
std::pair<double, double> parabola_vertex(double x0, double y0, double x1, double y1, double x2,
                                          double y2) {
  const double d0 = (y1 - y0) / (x1 - x0);
  const double d1 = (y2 - y1) / (x2 - x1);
  const double a = (d1 - d0) / (x2 - x0);
  if (!(a < 0.0)) return {x1, y1};
  const double b = d0 - a * (x0 + x1);
  const double xv = std::clamp(-b / (2.0 * a), x0, x2);
  const double yv = y0 + d0 * (xv - x0) + a * (xv - x0) * (xv - x1);
  return {xv, std::max(yv, y1)};
}

Crossings locate(const ScanCurve& c, double half) {
  const auto& y = c.output;
  const std::size_t n = y.size();
  Crossings k;
  k.peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());

  std::size_t j = k.peak;
  while (j > 0 && y[j] >= half) --j;
  if (y[j] >= half) throw PeakNotFoundError("peak not bracketed on the low side of the scan");
  k.left = j;
  j = k.peak;
  while (j + 1 < n && y[j] >= half) ++j;
  if (y[j] >= half) throw PeakNotFoundError("peak not bracketed on the high side of the scan");
  k.right = j;

  for (std::size_t i = 0; i < k.left; ++i)
    if (y[i] >= half) throw PeakNotFoundError("second lobe above half maximum (multimodal scan)");
  for (std::size_t i = k.right + 1; i < n; ++i)
    if (y[i] >= half) throw PeakNotFoundError("second lobe above half maximum (multimodal scan)");
  return k;
}

double lerp_crossing(double x0, double y0, double x1, double y1, double level) {
  if (y1 == y0) return 0.5 * (x0 + x1);
  return x0 + (level - y0) * (x1 - x0) / (y1 - y0);
}

}  // namespace

PeakMetrics extract_fwhm(const ScanCurve& curve) {
  const auto& x = curve.control;
  const auto& y = curve.output;
  if (x.size() != y.size() || x.size() < 3)
    throw InvalidArgument("extract_fwhm: need at least three samples");
  const std::size_t i = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  if (i == 0 || i + 1 == y.size())
    throw PeakNotFoundError("maximum at the edge of the scan; peak not bracketed");
  if (!(y[i] > 0.0)) throw PeakNotFoundError("scan output is identically zero");

  const auto [xv, yv] = parabola_vertex(x[i - 1], y[i - 1], x[i], y[i], x[i + 1], y[i + 1]);
  const double half = 0.5 * yv;
  const Crossings k = locate(curve, half);

  PeakMetrics m;
  m.center = xv;
  m.peak_value = yv;
  m.left = lerp_crossing(x[k.left], y[k.left], x[k.left + 1], y[k.left + 1], half);
  m.right = lerp_crossing(x[k.right - 1], y[k.right - 1], x[k.right], y[k.right], half);
  m.fwhm = m.right - m.left;
  return m;
}

PeakMetrics refine_fwhm(const ScanCurve& curve, const std::function<double(double)>& f) {
  extract_fwhm(curve);
  const auto& x = curve.control;
  const auto& y = curve.output;
  const std::size_t i = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());

  // Brent's absolute tolerance floor assumes O(1) abscissae, so search on t ∈ [-1, 1].
  const double mid = 0.5 * (x[i - 1] + x[i + 1]);
  const double h = 0.5 * (x[i + 1] - x[i - 1]);
  auto neg = [&](double t) { return -f(mid + h * t); };
  std::uintmax_t iters = 200;
  const auto best = boost::math::tools::brent_find_minima(neg, -1.0, 1.0, 40, iters);
  PeakMetrics m;
  m.center = mid + h * best.first;
  m.peak_value = std::max(-best.second, y[i]);
  if (m.peak_value == y[i] && -best.second < y[i]) m.center = x[i];
  const double half = 0.5 * m.peak_value;
  const Crossings k = locate(curve, half);

  auto g = [&](double v) { return f(v) - half; };
  boost::math::tools::eps_tolerance<double> tol(44);
  auto solve = [&](std::size_t a, std::size_t b) {
    std::uintmax_t it = 100;
    const auto r = boost::math::tools::toms748_solve(g, x[a], x[b], y[a] - half, y[b] - half, tol, it);
    return 0.5 * (r.first + r.second);
  };
  m.left = solve(k.left, k.left + 1);
  m.right = solve(k.right - 1, k.right);
  m.fwhm = m.right - m.left;
  return m;
}

void validate(const ScanRequest& r) {
  if (r.N < 1) throw InvalidArgument("scan: N must be at least 1");
  if (r.n_points < 32) throw InvalidArgument("scan: at least 32 points are required");
  if (r.talbot_multiple < 1) throw InvalidArgument("scan: Talbot multiple must be ≥ 1");
  if (r.range && !(r.range->second > r.range->first))
    throw InvalidArgument("scan: range must be increasing");
  const bool scanned_eps = r.axis == ControlAxis::Detuning;
  const bool scanned_p0 = r.axis == ControlAxis::InitialMomentum;
  const bool scanned_a = r.axis == ControlAxis::Acceleration;
  if (r.wavepacket) {
    validate(*r.wavepacket);
    if (scanned_p0) throw InvalidArgument("scan: a Gaussian input has no initial-momentum axis");
    if (r.engine != Engine::Ladder && r.engine != Engine::FinitePulse)
      throw InvalidArgument("scan: Gaussian inputs need the ladder or finite-pulse engine");
  }
  switch (r.engine) {
    case Engine::Ladder:
      break;
    case Engine::FirstOrder:
    case Engine::Closed:
    case Engine::Linearized: {
      const int fixed = (!scanned_eps && r.eps != 0.0) + (!scanned_p0 && r.p0 != 0.0) +
                        (!scanned_a && r.accel != 0.0);
      if (fixed) throw InvalidArgument("scan: analytic engines need the other controls at zero");
      if (r.talbot_multiple != 1) throw InvalidArgument("scan: analytic engines assume T ≈ T_T");
      break;
    }
    case Engine::FinitePulse:
      if (!scanned_eps) throw InvalidArgument("scan: finite pulses support the detuning axis only");
      if (r.accel != 0.0) throw InvalidArgument("scan: finite pulses do not support acceleration");
      if (!(r.V0 > 0.0) || !(r.tau_p >= 0.0))
        throw InvalidArgument("scan: finite pulses need V0 > 0 and tau_p ≥ 0");
      break;
  }
}

std::function<double(double)> make_evaluator(const ScanRequest& r) {
  validate(r);
  const PhysicalParams params = r.params;
  const double hk = params.ladder_momentum();
  const double T0 = r.talbot_multiple * params.talbot_time;

  switch (r.engine) {
    case Engine::Ladder: {
      return [r, params, hk, T0](double x) {
        SequenceSpec s{r.N, r.phi_d, T0 + r.eps, r.accel};
        double beta = r.p0 / hk;
        if (r.axis == ControlAxis::Detuning) s.T = T0 + x;
        if (r.axis == ControlAxis::InitialMomentum) beta = x / hk;
        if (r.axis == ControlAxis::Acceleration) s.accel = x;
        if (r.wavepacket) return gaussian_output(s, *r.wavepacket, params).output;
        return run_askrs(s, beta, params).output;
      };
    }
    case Engine::FirstOrder:
      return [r, params](double x) {
        switch (r.axis) {
          case ControlAxis::Detuning: return output_first_order(r.N, r.phi_d, x, 0, 0, params);
          case ControlAxis::InitialMomentum:
            return output_first_order(r.N, r.phi_d, 0, x, 0, params);
          case ControlAxis::Acceleration: return output_first_order(r.N, r.phi_d, 0, 0, x, params);
        }
        return 0.0;
      };
    case Engine::Closed:
    case Engine::Linearized: {
      const bool lin = r.engine == Engine::Linearized;
      return [r, params, lin](double x) {
        switch (r.axis) {
          case ControlAxis::Detuning: return I_eps_asymptotic(r.N, r.phi_d, x, params);
          case ControlAxis::InitialMomentum:
            return lin ? I_p0_linearized(r.N, r.phi_d, x, params)
                       : I_p0_closed(r.N, r.phi_d, x, params);
          case ControlAxis::Acceleration:
            return lin ? I_accel_linearized(r.N, r.phi_d, x, params)
                       : I_accel_closed(r.N, r.phi_d, x, params);
        }
        return 0.0;
      };
    }
    case Engine::FinitePulse: {
      const double beta = r.p0 / hk;
      if (r.wavepacket) {
        return [r, params, T0](double x) {
          const FinitePulseSpec spec{r.N, r.V0, r.tau_p, T0 + x, 0.0};
          auto amp = [&](double b) { return run_finite_askrs(spec, b, params).return_amplitude; };
          return integrate_fibers(amp, *r.wavepacket, params).output;
        };
      }
      const int hw = finite_half_width(r.N, r.V0, r.tau_p);
      auto seq = std::make_shared<const FiniteSequence>(
          r.N, r.tau_p, make_eigensystem(r.V0, beta, hw, params), params);
      return [r, params, T0, seq, beta](double x) {
        try {
          return seq->output(T0 + x);
        } catch (const TruncationError&) {
          return run_finite_askrs({r.N, r.V0, r.tau_p, T0 + x, 0.0}, beta, params).output;
        }
      };
    }
  }
  throw InvalidArgument("scan: unknown engine");
}

double predicted_fwhm(const ScanRequest& r) {
  const double phi =
      r.engine == Engine::FinitePulse ? r.V0 * r.tau_p / (2.0 * kHbar) : r.phi_d;
  if (!(phi > 0.0)) throw InvalidArgument("scan: automatic range needs a nonzero kick strength");
  switch (r.axis) {
    case ControlAxis::Detuning: return fwhm_eps_asymptotic(r.N, phi, r.params);
    case ControlAxis::InitialMomentum:
      try {
        return fwhm_p0_closed(r.N, phi, r.params);
      } catch (const PeakNotFoundError&) {
        return fwhm_p0_linearized(r.N, phi, r.params);
      }
    case ControlAxis::Acceleration:
      try {
        return fwhm_accel_closed(r.N, phi, r.params);
      } catch (const PeakNotFoundError&) {
        return fwhm_accel_linearized(r.N, phi, r.params);
      }
  }
  return 0.0;
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

ScanCurve sample(ControlAxis axis, const std::function<double(double)>& f, double lo, double hi,
                 int n, int workers) {
  ScanCurve c;
  c.axis = axis;
  c.control = linspace(lo, hi, n);
  c.output = parallel_map(c.control.size(), [&](std::size_t i) { return f(c.control[i]); }, workers);
  return c;
}

}  // namespace

ScanCurve scan(const ScanRequest& request) {
  const auto f = make_evaluator(request);
  double lo, hi;
  if (request.range) {
    lo = request.range->first;
    hi = request.range->second;
  } else {
    const double w = predicted_fwhm(request);
    lo = -2.0 * w;
    hi = 2.0 * w;
  }
  for (int attempt = 0;; ++attempt) {
    ScanCurve c = sample(request.axis, f, lo, hi, request.n_points, request.parallel);
    try {
      const PeakMetrics m = extract_fwhm(c);
      c.peak_center = m.center;
      c.peak_value = m.peak_value;
      c.fwhm = m.fwhm;
      return c;
    } catch (const PeakNotFoundError&) {
      if (attempt >= 1) throw;
      const double mid = 0.5 * (lo + hi);
      const double half = 2.0 * (hi - lo);
      lo = mid - half;
      hi = mid + half;
    }
  }
}

ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& points, double scale_factor,
                       double min_span) {
  if (points.size() < 4) throw InvalidArgument("fit_scaling: need at least four points");
  double xmin = points.front().first, xmax = xmin;
  for (const auto& [x, v] : points) {
    if (!(x > 0.0) || !(v * scale_factor > 0.0))
      throw InvalidArgument("fit_scaling: points must be positive");
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
  }
  if (xmax / xmin < min_span)
    throw InvalidArgument("fit_scaling: points span " + std::to_string(xmax / xmin) +
                          ", need at least " + std::to_string(min_span));
  const double n = static_cast<double>(points.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, v] : points) {
    const double lx = std::log(x), ly = std::log(v * scale_factor);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  ScalingFit fit;
  fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.prefactor = std::exp((sy - fit.exponent * sx) / n);
  for (const auto& [x, v] : points) {
    const double model = fit.prefactor * std::pow(x, fit.exponent);
    fit.residual = std::max(fit.residual, std::abs(model / (v * scale_factor) - 1.0));
  }
  return fit;
}

MinimumResult golden_section_minimize(const std::function<double(double)>& f, double a, double b,
                                      double rel_tol) {
  if (!(b > a)) throw InvalidArgument("golden_section_minimize: empty interval");
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  MinimumResult res;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  res.evaluations = 2;
  while ((b - a) > rel_tol * std::abs(0.5 * (a + b))) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
    ++res.evaluations;
  }
  if (fc <= fd) {
    res.x = c;
    res.value = fc;
  } else {
    res.x = d;
    res.value = fd;
  }
  return res;
}

PeakMetrics finite_peak(int N, double V0, double tau_p, const PhysicalParams& params,
                        int talbot_multiple, const FinitePeakOptions& options,
                        std::shared_ptr<const FiberEigensystem>* cache) {
  if (N < 1 || !(V0 > 0.0) || !(tau_p > 0.0) || talbot_multiple < 1)
    throw InvalidArgument("finite_peak: need N ≥ 1, V0 > 0, tau_p > 0, l ≥ 1");
  const double T0 = talbot_multiple * params.talbot_time;
  const double phi = V0 * tau_p / (2.0 * kHbar);
  int hw = finite_half_width(N, V0, tau_p);

  for (int tries = 0;; ++tries) {
    std::shared_ptr<const FiberEigensystem> eig;
    if (cache && *cache && (*cache)->V0() == V0 && (*cache)->beta() == 0.0 &&
        (*cache)->q_max() >= hw) {
      eig = *cache;
    } else {
      eig = make_eigensystem(V0, 0.0, hw, params);
      if (cache) *cache = eig;
    }
    try {
      const FiniteSequence seq(N, tau_p, eig, params);
      auto f = [&](double eps) { return seq.output(T0 + eps); };
      double center = 0.0;
      double width = 2.0 * fwhm_eps_asymptotic(N, phi, params);
      int n = options.n_points;
      // Shortest admissible detuning (period = pulse), nudged so T0 + eps does not round below tau_p.
      double eps_floor = tau_p - T0;
      while (T0 + eps_floor < tau_p) eps_floor = std::nextafter(eps_floor, 0.0);
      for (int widen = 0;; ++widen) {
        const double lo = std::max(center - width, eps_floor);
        ScanCurve c = sample(ControlAxis::Detuning, f, lo, center + width, n, options.parallel);
        try {
          return options.refine ? refine_fwhm(c, f) : extract_fwhm(c);
        } catch (const PeakNotFoundError&) {
          if (widen >= 3) throw;
          const auto it = std::max_element(c.output.begin(), c.output.end());
          center = c.control[static_cast<std::size_t>(it - c.output.begin())];
          width *= 4.0;
          n *= 2;
        }
      }
    } catch (const TruncationError&) {
      if (tries >= 4) throw;
      hw = static_cast<int>(std::ceil(1.5 * std::max(hw, eig->q_max())));
    }
  }
}

double measure_peak_shift(int N, double gamma, double tau_p, int talbot_multiple,
                          const PhysicalParams& params, const FinitePeakOptions& options) {
  return finite_peak(N, depth_from_gamma(gamma, params), tau_p, params, talbot_multiple, options)
      .center;
}

TauMinResult find_tau_min(int N, double gamma, const PhysicalParams& params,
                          const TauSearchOptions& options) {
  if (N < 1 || !(gamma > 0.0)) throw InvalidArgument("find_tau_min: need N ≥ 1 and gamma > 0");
  if (options.points_per_decade < 1 || !(options.rel_resolution > 0.0))
    throw InvalidArgument("find_tau_min: invalid search options");
  const double V0 = depth_from_gamma(gamma, params);
  const double tau_max = 0.5 * params.talbot_time;
  TauMinResult res;
  res.outside_scaling_regime = gamma * N <= 1.0;

  std::shared_ptr<const FiberEigensystem> cache;
  auto width_at = [&](double tau) {
    TauPoint p;
    p.tau_p = tau;
    ++res.evaluations;
    try {
      const PeakMetrics m = finite_peak(N, V0, tau, params, 1, options.peak, &cache);
      p.fwhm = m.fwhm;
      p.center = m.center;
      p.peak_value = m.peak_value;
    } catch (const PeakNotFoundError&) {
    }
    return p;
  };

  // Start where the δ-kick train has Nφ = 2.
  const double step = std::pow(10.0, 1.0 / options.points_per_decade);
  double tau = std::min(2.0 * params.talbot_time / (2.0 * std::numbers::pi * gamma * N), tau_max);
  // Points where the width is undefined (side lobes above half maximum at small
  // N·phi, split peaks at long pulses) are skipped; a long run of them ends the climb.
  bool seen = false;
  std::size_t best = 0;
  int failures = 0;
  for (;;) {
    res.coarse.push_back(width_at(tau));
    const std::size_t k = res.coarse.size() - 1;
    const bool ok = std::isfinite(res.coarse[k].fwhm);
    failures = ok ? 0 : failures + 1;
    if (ok && (!seen || res.coarse[k].fwhm < res.coarse[best].fwhm)) best = k;
    if (seen && ok && res.coarse[k].fwhm > res.coarse[best].fwhm) break;
    if (seen && failures > options.points_per_decade / 2)
      throw PeakNotFoundError("finite-pulse peak lost after the smallest measured width at tau_p = " +
                              sci(res.coarse[best].tau_p) + " s");
    seen = seen || ok;
    if (tau >= tau_max) {
      throw PeakNotFoundError(
          seen ? "finite-pulse width decreases monotonically up to T_T/2; no interior minimum"
               : "no finite-pulse resonance peak found for any pulse duration");
    }
    tau = std::min(tau * step, tau_max);
  }
  // Minimum below the starting point: extend the grid downward.
  for (int down = 0; best == 0; ++down) {
    if (down >= 3 * options.points_per_decade)
      throw PeakNotFoundError("finite-pulse width keeps decreasing towards short pulses");
    res.coarse.insert(res.coarse.begin(), width_at(res.coarse.front().tau_p / step));
    ++best;
    const TauPoint& p = res.coarse.front();
    if (std::isfinite(p.fwhm) && p.fwhm < res.coarse[best].fwhm) best = 0;
  }

  const double a = res.coarse[best - 1].tau_p;
  const double b = res.coarse[best + 1].tau_p;
  TauPoint at_min;
  auto w = [&](double t) {
    TauPoint p = width_at(t);
    if (p.fwhm < at_min.fwhm) at_min = p;
    return p.fwhm;
  };
  at_min = res.coarse[best];
  golden_section_minimize(w, a, b, options.rel_resolution);
  res.tau_min = at_min.tau_p;
  res.w_min = at_min.fwhm;
  res.delta_eps = at_min.center;
  res.peak_value = at_min.peak_value;
  return res;
}

}  // namespace kecho
