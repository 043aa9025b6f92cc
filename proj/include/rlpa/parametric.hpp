#pragma once

// One-dimensional robust location: the M-estimate for a fixed contrast and
// the Huber scale chosen by minimizing the empirical variance.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "rlpa/contrast.hpp"
#include "rlpa/errors.hpp"
#include "rlpa/huber_minimax.hpp"
#include "rlpa/simulate.hpp"

namespace rlpa {

/// argmin over [-M, M] of sum_i rho(v_i - t). The derivative
/// -sum_i rho'(v_i - t) is nondecreasing, so bisection on its sign
/// brackets the minimizer; the bracket midpoint is returned.
template <ContrastLike C>
double fit_location(std::span<const double> values, const C& c, double M = 1e6, double tol = 1e-12) {
  if (values.empty()) throw EmptyInput();
  if (!(M > 0.0) || !(tol > 0.0)) throw DomainError("fit_location needs M > 0 and tol > 0");
  const auto slope = [&](double t) {
    double s = 0.0;
    for (double v : values) s -= c.rho_prime(v - t);
    return s;
  };
  double lo = -M, hi = M;
  if (slope(lo) >= 0.0) return lo;
  if (slope(hi) <= 0.0) return hi;
  // Shrink the bracket to the data range first; the minimizer lies inside it.
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mn > lo && slope(*mn) < 0.0) lo = *mn;
  if (*mx < hi && slope(*mx) > 0.0) hi = *mx;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double s = slope(mid);
    if (s == 0.0) return mid;
    if (s < 0.0) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct ParametricReport {
  double gamma = 0.0;
  double estimate = 0.0;
  double numerator_core = 0.0;
  double penalty = 0.0;
  double denominator = 0.0;
  double v_hat = std::numeric_limits<double>::infinity();
  bool valid = false;
};

struct ParametricResult {
  double estimate = 0.0;
  double gamma_hat = 0.0;
  std::size_t chosen = 0;
  std::vector<ParametricReport> reports;
};

/// Empirical variance of the location fit: the local formula with h = 1,
/// K = 1 and Pi_h = 1.
inline ParametricReport parametric_variance(std::span<const double> values, const ContrastSpec& c, double t) {
  if (values.empty()) throw EmptyInput();
  ParametricReport rep;
  rep.gamma = c.gamma();
  rep.estimate = t;
  const double n = static_cast<double>(values.size());
  double num = 0.0, den = 0.0;
  for (double v : values) {
    const double psi = c.rho_prime(v - t);
    num += psi * psi;
    den += c.rho_second(v - t);
  }
  const double ln = std::log(n);
  rep.numerator_core = std::sqrt(num / n);
  rep.penalty = c.rho_prime_sup() * ln * ln / std::sqrt(n);
  rep.denominator = den / n;
  rep.valid = rep.denominator > std::max(1e-12, 1.0 / n);
  if (rep.valid) {
    const double r = (rep.numerator_core + rep.penalty) / rep.denominator;
    rep.v_hat = r * r;
  }
  return rep;
}

/// Fits every Huber scale of the grid and keeps the one with the smallest
/// valid V_hat (ties toward the smaller scale).
inline ParametricResult adaptive_scale_location(std::span<const double> values, std::span<const double> gamma_grid,
                                                double M = 1e6, double tol = 1e-12) {
  if (values.empty()) throw EmptyInput();
  if (gamma_grid.empty()) throw DomainError("gamma grid must be nonempty");
  ParametricResult res;
  std::optional<std::size_t> best;
  for (double g : gamma_grid) {
    const auto c = ContrastSpec::huber(g);
    res.reports.push_back(parametric_variance(values, c, fit_location(values, c, M, tol)));
    const auto& r = res.reports.back();
    if (!r.valid) continue;
    if (!best || r.v_hat < res.reports[*best].v_hat ||
        (r.v_hat == res.reports[*best].v_hat && r.gamma < res.reports[*best].gamma)) {
      best = res.reports.size() - 1;
    }
  }
  if (!best) throw AllInvalid();
  res.chosen = *best;
  res.gamma_hat = res.reports[*best].gamma;
  res.estimate = res.reports[*best].estimate;
  return res;
}

inline void write_parametric_csv(std::ostream& os, const ParametricResult& r) {
  os << "gamma,estimate,numerator_core,penalty,denominator,v_hat,valid,chosen\n";
  for (std::size_t i = 0; i < r.reports.size(); ++i) {
    const auto& p = r.reports[i];
    os << format_double(p.gamma) << ',' << format_double(p.estimate) << ',' << format_double(p.numerator_core) << ','
       << format_double(p.penalty) << ',' << format_double(p.denominator) << ',' << format_double(p.v_hat) << ','
       << (p.valid ? 1 : 0) << ',' << (i == r.chosen ? 1 : 0) << '\n';
  }
}

}  // namespace rlpa
