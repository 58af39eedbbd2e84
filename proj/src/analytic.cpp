#include "kecho/analytic.hpp"

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "kecho/bessel.hpp"
#include "kecho/errors.hpp"

namespace kecho {
namespace {

void check_n(int N) {
  if (N < 1) throw InvalidArgument("N must be at least 1");
}

double j0_squared(double x) {
  const double j = bessel_j(0, x);
  return j * j;
}

// ħκ²/(2m), the kinetic frequency per unit q².
double kinetic_unit(const PhysicalParams& p) { return kHbar * p.kappa * p.kappa / (2.0 * p.mass); }

// Signed value of J_n from a precomputed non-negative-order sequence.
double j_from(const std::vector<double>& seq, int n) {
  const int an = std::abs(n);
  const double v = seq[an];
  return (n < 0 && (an % 2 != 0)) ? -v : v;
}

PhaseSlopes eps_slopes_from(int N, double phi_d, int q, const std::vector<double>& seq,
                            const PhysicalParams& params) {
  const double jq = j_from(seq, q);
  if (std::abs(jq) < 1e-300)
    throw SingularCoefficientError("J_" + std::to_string(q) + "(" + std::to_string(N * phi_d) +
                                   ") vanishes; first-order ε phase undefined");
  const double ratio = j_from(seq, q - 1) / jq;
  const double n = N;
  const double g = kinetic_unit(params);
  const double common = (n - 1.0 / n) * q / 6.0 - phi_d * (n * n - 1.0) / 6.0 * ratio;
  const double q2 = static_cast<double>(q) * q;
  PhaseSlopes s;
  s.theta = g * (common - (n / 3.0 + 0.5 + 1.0 / (6.0 * n)) * q2);
  s.chi = -g * (common - (n / 3.0 - 0.5 + 1.0 / (6.0 * n)) * q2);
  return s;
}

std::vector<double> sequence_for(int q_abs_max, double z) { return bessel_j_sequence(q_abs_max, z); }

}  // namespace

PhaseSlopes eps_phase_slopes(int N, double phi_d, int q, const PhysicalParams& params) {
  check_n(N);
  const auto seq = sequence_for(std::abs(q) + 1, N * phi_d);
  return eps_slopes_from(N, phi_d, q, seq, params);
}

PhaseSlopes p0_phase_slopes(int N, int q, const PhysicalParams& params) {
  check_n(N);
  const double k = params.talbot_time * params.kappa / (2.0 * params.mass);
  return {-k * q * (N + 1.0), k * q * (N - 1.0)};
}

PhaseSlopes accel_phase_slopes(int N, int q, const PhysicalParams& params) {
  check_n(N);
  const double T = params.talbot_time;
  const double k = T * T * params.kappa / 12.0;
  const double n = N;
  return {k * q * (n + 1.0) * (4.0 * n - 1.0), -k * q * (n - 1.0) * (8.0 * n - 1.0)};
}

FirstOrderCoeffs first_order_coeffs(int N, double phi_d, int q, const PhysicalParams& params) {
  check_n(N);
  const auto seq = sequence_for(std::abs(q) + 1, N * phi_d);
  FirstOrderCoeffs c;
  c.q = q;
  c.magnitude = j_from(seq, q);
  const auto e = eps_slopes_from(N, phi_d, q, seq, params);
  const auto p = p0_phase_slopes(N, q, params);
  const auto a = accel_phase_slopes(N, q, params);
  c.theta_slope_eps = e.theta;
  c.chi_slope_eps = e.chi;
  c.theta_slope_p0 = p.theta;
  c.chi_slope_p0 = p.chi;
  c.theta_slope_a = a.theta;
  c.chi_slope_a = a.chi;
  return c;
}

double output_first_order(int N, double phi_d, double eps, double p0, double a,
                          const PhysicalParams& params) {
  check_n(N);
  const int nonzero = (eps != 0.0) + (p0 != 0.0) + (a != 0.0);
  if (nonzero > 1)
    throw InvalidArgument("output_first_order: at most one of eps, p0, a may be nonzero");
  const double z = N * phi_d;
  // Terms are J_q² ≤ 1e-20 beyond this order.
  const int reach = bessel_reach(z, 1e-10);
  const auto seq = sequence_for(reach + 1, z);

  std::complex<double> sum{0.0, 0.0};
  for (int q = -reach; q <= reach; ++q) {
    const double jq = j_from(seq, q);
    double dphase = 0.0;  // θ − χ, times the control value
    if (eps != 0.0) {
      const auto s = eps_slopes_from(N, phi_d, q, seq, params);
      dphase = (s.theta - s.chi) * eps;
    } else if (p0 != 0.0) {
      const auto s = p0_phase_slopes(N, q, params);
      dphase = (s.theta - s.chi) * p0;
    } else if (a != 0.0) {
      const auto s = accel_phase_slopes(N, q, params);
      dphase = (s.theta - s.chi) * a;
    }
    sum += jq * jq * std::polar(1.0, dphase);
  }
  return std::norm(sum);
}

double I_eps_asymptotic(int N, double phi_d, double eps, const PhysicalParams& params) {
  check_n(N);
  const double n = N;
  const double arg = n * n * n * phi_d * phi_d * kHbar * params.kappa * params.kappa * eps /
                     (6.0 * params.mass);
  return j0_squared(arg);
}

double I_p0_closed(int N, double phi_d, double p0, const PhysicalParams& params) {
  check_n(N);
  const double delta = N * params.kappa * params.talbot_time * p0 / params.mass;
  return j0_squared(N * phi_d * 2.0 * std::abs(std::sin(delta / 2.0)));
}

double I_p0_linearized(int N, double phi_d, double p0, const PhysicalParams& params) {
  check_n(N);
  const double n = N;
  return j0_squared(n * n * phi_d * params.kappa * params.talbot_time * p0 / params.mass);
}

double I_accel_closed(int N, double phi_d, double a, const PhysicalParams& params) {
  check_n(N);
  const double T = params.talbot_time;
  const double delta = N * (2.0 * N - 1.0) * params.kappa * T * T * a / 2.0;
  return j0_squared(N * phi_d * 2.0 * std::abs(std::sin(delta / 2.0)));
}

double I_accel_linearized(int N, double phi_d, double a, const PhysicalParams& params) {
  check_n(N);
  const double T = params.talbot_time;
  const double n = N;
  return j0_squared(n * n * (2.0 * n - 1.0) * phi_d * a * T * T * params.kappa / 2.0);
}

double x_half() {
  static const double root = [] {
    auto f = [](double x) { return j0_squared(x) - 0.5; };
    boost::math::tools::eps_tolerance<double> tol(52);
    std::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve(f, 0.5, 2.0, tol, iters);
    return 0.5 * (r.first + r.second);
  }();
  return root;
}

double fwhm_eps_asymptotic(int N, double phi_d, const PhysicalParams& params) {
  check_n(N);
  const double n = N;
  return 2.0 * x_half() * 6.0 * params.mass /
         (n * n * n * phi_d * phi_d * kHbar * params.kappa * params.kappa);
}

namespace {

// Δ in (0, π] with Nφ·2 sin(Δ/2) = x_half.
double closed_half_angle(int N, double phi_d) {
  const double s = x_half() / (2.0 * N * phi_d);
  if (!(s <= 1.0))
    throw PeakNotFoundError("closed-form output never falls to one half for Nφ = " +
                            std::to_string(N * phi_d));
  return 2.0 * std::asin(s);
}

}  // namespace

double fwhm_p0_closed(int N, double phi_d, const PhysicalParams& params) {
  check_n(N);
  const double delta = closed_half_angle(N, phi_d);
  return 2.0 * delta * params.mass / (N * params.kappa * params.talbot_time);
}

double fwhm_p0_linearized(int N, double phi_d, const PhysicalParams& params) {
  check_n(N);
  const double n = N;
  return 2.0 * x_half() * params.mass / (n * n * phi_d * params.kappa * params.talbot_time);
}

double fwhm_accel_closed(int N, double phi_d, const PhysicalParams& params) {
  check_n(N);
  const double delta = closed_half_angle(N, phi_d);
  const double T = params.talbot_time;
  return 2.0 * 2.0 * delta / (N * (2.0 * N - 1.0) * params.kappa * T * T);
}

double fwhm_accel_linearized(int N, double phi_d, const PhysicalParams& params) {
  check_n(N);
  const double n = N;
  const double T = params.talbot_time;
  return 2.0 * 2.0 * x_half() / (n * n * (2.0 * n - 1.0) * phi_d * T * T * params.kappa);
}

}  // namespace kecho
