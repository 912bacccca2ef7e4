#pragma once

// Test-side oracles, deliberately independent of the library's quadrature
// and sampling machinery: a recursive adaptive Simpson integrator and a
// Kolmogorov-Smirnov distance for checking samplers against a cdf.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace oracles {

inline double simpson_rule(const std::function<double(double)>& f, double a,
                           double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4 * fm + fb);
}

inline double simpson_rec(const std::function<double(double)>& f, double a,
                          double b, double fa, double fm, double fb,
                          double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson_rule(f, a, m, fa, flm, fm);
  const double right = simpson_rule(f, m, b, fm, frm, fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15 * tol)
    return left + right + delta / 15;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

// Adaptive Simpson with absolute tolerance; good to ~1e-12 on smooth f.
inline double integrate_simpson(const std::function<double(double)>& f,
                                double a, double b, double tol = 1e-12) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = simpson_rule(f, a, b, fa, fm, fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48);
}

// One-sample KS statistic of `draws` against the cdf.
inline double ks_statistic(std::vector<double> draws,
                           const std::function<double(double)>& cdf) {
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  double d = 0;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double c = cdf(draws[i]);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(std::abs(c - lo), std::abs(c - hi)));
  }
  return d;
}

}  // namespace oracles
