#include "kecho/bessel.hpp"

#include <cmath>
#include <cstdlib>

#include "kecho/errors.hpp"

namespace kecho {
namespace {

// Start order for the downward recurrence. Past the turning point |x| the
// Bessel functions decay like Ai(t) with t ~ (n - x) / (x/2)^{1/3}; starting
// 16 (x)^{1/3} orders beyond it puts the seed below 1e-17 of the peak.
int start_order(int n_max, double ax) {
  const double top = std::max<double>(n_max, ax) + 20.0 + 16.0 * std::cbrt(ax);
  int m = static_cast<int>(std::ceil(top));
  if (m % 2 != 0) ++m;
  return m;
}

}  // namespace

std::vector<double> bessel_j_sequence(int n_max, double x) {
  if (n_max < 0) throw InvalidArgument("bessel_j_sequence: negative maximum order");
  if (!std::isfinite(x)) throw InvalidArgument("bessel_j_sequence: non-finite argument");

  std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const double ax = std::abs(x);
  const int m = start_order(n_max, ax);

  std::vector<double> j(static_cast<std::size_t>(m) + 2, 0.0);
  j[m + 1] = 0.0;
  j[m] = 1e-30;
  const double two_over_x = 2.0 / ax;
  for (int k = m; k >= 1; --k) {
    j[k - 1] = k * two_over_x * j[k] - j[k + 1];
    if (std::abs(j[k - 1]) > 1e250) {
      for (int i = k - 1; i <= m + 1; ++i) j[i] *= 1e-250;
    }
  }

  double norm = j[0];
  for (int k = 2; k <= m; k += 2) norm += 2.0 * j[k];

  for (int n = 0; n <= n_max; ++n) {
    double v = j[n] / norm;
    if (x < 0.0 && (n % 2 != 0)) v = -v;
    out[n] = v;
  }
  return out;
}

double bessel_j(int n, double x) {
  const int an = std::abs(n);
  const double v = bessel_j_sequence(an, x)[an];
  return (n < 0 && (an % 2 != 0)) ? -v : v;
}

int bessel_reach(double x, double threshold) {
  const double ax = std::abs(x);
  const int guess = static_cast<int>(std::ceil(ax + 20.0 + 16.0 * std::cbrt(ax)));
  const auto seq = bessel_j_sequence(guess, ax);
  for (int n = guess; n >= 0; --n) {
    if (std::abs(seq[n]) >= threshold) return n;
  }
  return 0;
}

}  // namespace kecho
