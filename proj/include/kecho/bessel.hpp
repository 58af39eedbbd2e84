#pragma once

#include <vector>

namespace kecho {

/// J_0(x) .. J_{n_max}(x) for integer orders, computed together by Miller's
/// downward recurrence normalized with J_0 + 2 Σ J_{2k} = 1.
///
/// Absolute accuracy is ~1e-14 for |x| ≤ 500. Works for any real x.
std::vector<double> bessel_j_sequence(int n_max, double x);

/// J_n(x) for any integer n (negative orders via J_{-n} = (-1)^n J_n).
double bessel_j(int n, double x);

/// Largest order n such that |J_n(x)| ≥ threshold (0 if none above J_0).
int bessel_reach(double x, double threshold);

}  // namespace kecho
