#pragma once

// Huber's least-favorable scale gamma_r for r-contaminated normal models,
// and the least-favorable density g0 built from it.

#include <cmath>
#include <limits>
#include <numbers>

#include "rlpa/errors.hpp"
#include "rlpa/special.hpp"

namespace rlpa {

namespace detail {

// RHS(gamma) - 1/(1 - r) of the defining equation, arranged to avoid
// cancellation: erf(g/sqrt2) - 1 = -erfc(g/sqrt2).
inline double gamma_r_residual(double gamma, double r) {
  return 2.0 * special::normal_pdf(gamma) / gamma - std::erfc(gamma / std::numbers::sqrt2) -
         r / (1.0 - r);
}

}  // namespace detail

/// Solves 1/(1-r) = 2 int_0^g phi + 2 phi(g)/g for g on (1e-6, 50].
/// The residual is strictly decreasing in g; Newton steps are kept inside
/// a bisection bracket and iteration continues to machine precision.
inline double solve_gamma_r(double r, double tol = 1e-12) {
  if (!(r > 0.0 && r < 1.0)) throw DomainError("solve_gamma_r needs r in (0, 1)");
  double lo = 1e-6, hi = 50.0;
  double f_lo = detail::gamma_r_residual(lo, r);
  double f_hi = detail::gamma_r_residual(hi, r);
  if (!(f_lo > 0.0 && f_hi < 0.0)) throw NoBracket("gamma_r residual does not change sign");

  double g = 0.5 * (lo + hi);
  for (int it = 0; it < 500; ++it) {
    const double f = detail::gamma_r_residual(g, r);
    if (f == 0.0) return g;
    if (f > 0.0) lo = g; else hi = g;
    const double slope = -2.0 * special::normal_pdf(g) / (g * g);
    double next = g - f / slope;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    const bool settled = std::abs(next - g) <= 4.0 * std::numeric_limits<double>::epsilon() * g;
    g = next;
    if ((settled || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) &&
        std::abs(detail::gamma_r_residual(g, r)) <= tol) {
      return g;
    }
  }
  if (std::abs(detail::gamma_r_residual(g, r)) <= tol) return g;
  throw NoBracket("gamma_r iteration did not reach the requested residual");
}

struct ContaminationSpec {
  double r;
  double gamma_r;
  double tolerance;

  static ContaminationSpec solve(double r, double tol = 1e-12) { return {r, solve_gamma_r(r, tol), tol}; }
};

/// Least-favorable density g0 for contamination level r given its gamma_r.
/// r == 0 degenerates to the standard normal (gamma_r = infinity).
inline double g0_density_with(double t, double r, double gamma_r) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("contamination level must lie in [0, 1)");
  const double a = std::abs(t);
  const double c = (1.0 - r) / std::sqrt(2.0 * std::numbers::pi);
  if (a <= gamma_r) return c * std::exp(-0.5 * t * t);
  return c * std::exp(-gamma_r * a + 0.5 * gamma_r * gamma_r);
}

inline double g0_cdf_with(double t, double r, double gamma_r) {
  if (!std::isfinite(gamma_r)) return special::normal_cdf(t);
  if (t > 0.0) return 1.0 - g0_cdf_with(-t, r, gamma_r);
  const double c = 1.0 - r;
  if (t <= -gamma_r) {
    return c * std::exp(gamma_r * t + 0.5 * gamma_r * gamma_r) / (gamma_r * std::sqrt(2.0 * std::numbers::pi));
  }
  const double tail = c * special::normal_pdf(gamma_r) / gamma_r;
  return tail + c * (special::normal_cdf(t) - special::normal_cdf(-gamma_r));
}

}  // namespace rlpa
