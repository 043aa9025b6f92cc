#pragma once

// Two independent adaptive quadrature schemes (Simpson with Richardson
// extrapolation, and 10-point Gauss-Legendre bisection) behind one interface,
// plus helpers for breakpoints and infinite ranges.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "rlpa/errors.hpp"

namespace rlpa::quad {

enum class Rule { AdaptiveSimpson, GaussLegendre };

inline const char* to_string(Rule r) {
  return r == Rule::AdaptiveSimpson ? "adaptive-simpson" : "gauss-legendre";
}

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-15;
  int max_depth = 48;
};

using Integrand = std::function<double(double)>;

namespace detail {

// Panels whose two halves agree to a few ulps are converged whatever the
// requested tolerance; chasing further only refines rounding noise.
inline constexpr double kRoundoff = 64.0 * std::numeric_limits<double>::epsilon();

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Accumulator {
  double unresolved = 0.0;  // error estimates of panels that hit max_depth
};

inline double simpson_panel(double fa, double fm, double fb, double a, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double simpson_recurse(F& f, double a, double b, double fa, double fm, double fb, double whole,
                       double eps, int depth, Accumulator& acc) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_panel(fa, flm, fm, a, m);
  const double right = simpson_panel(fm, frm, fb, m, b);
  const double diff = left + right - whole;
  if (!std::isfinite(diff)) throw QuadratureFailure("non-finite integrand value");
  if (std::abs(diff) <= std::max(15.0 * eps, kRoundoff * (std::abs(left) + std::abs(right)))) {
    return left + right + diff / 15.0;
  }
  if (depth <= 0 || !(m > a && b > m)) {
    acc.unresolved += std::abs(diff) / 15.0;
    return left + right + diff / 15.0;
  }
  return simpson_recurse(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1, acc) +
         simpson_recurse(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1, acc);
}

inline constexpr std::array<double, 5> kGlNodes = {0.14887433898163122, 0.4333953941292472,
                                                   0.6794095682990244, 0.8650633666889845,
                                                   0.9739065285171717};
inline constexpr std::array<double, 5> kGlWeights = {0.295524224714753, 0.2692667193099965,
                                                     0.219086362515982, 0.14945134915058036,
                                                     0.06667134430868807};

template <class F>
double gl_panel(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < kGlNodes.size(); ++i) {
    s += kGlWeights[i] * (f(c - r * kGlNodes[i]) + f(c + r * kGlNodes[i]));
  }
  return s * r;
}

template <class F>
double gl_recurse(F& f, double a, double b, double whole, double eps, int depth, Accumulator& acc) {
  const double m = 0.5 * (a + b);
  const double left = gl_panel(f, a, m);
  const double right = gl_panel(f, m, b);
  const double diff = left + right - whole;
  if (!std::isfinite(diff)) throw QuadratureFailure("non-finite integrand value");
  if (std::abs(diff) <= std::max(eps, kRoundoff * (std::abs(left) + std::abs(right)))) return left + right;
  if (depth <= 0 || !(m > a && b > m)) {
    acc.unresolved += std::abs(diff);
    return left + right;
  }
  return gl_recurse(f, a, m, left, 0.5 * eps, depth - 1, acc) +
         gl_recurse(f, m, b, right, 0.5 * eps, depth - 1, acc);
}

// Piece ends are breakpoints, where the integrand may jump. Simpson takes
// the one-sided limit there by sampling a few ulps inside the piece.
inline double inward(double from, double to) {
  const double step = std::max(std::abs(to - from) * 1e-15, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(from));
  return from + std::copysign(std::min(step, 0.25 * std::abs(to - from)), to - from);
}

// Crude composite estimate used to turn a relative tolerance into an absolute one.
template <class F>
double coarse_estimate(Rule rule, F& f, double a, double b) {
  constexpr int panels = 16;
  const double w = (b - a) / panels;
  double s = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double lo = a + i * w;
    const double hi = (i + 1 == panels) ? b : lo + w;
    if (rule == Rule::GaussLegendre) {
      s += gl_panel(f, lo, hi);
    } else {
      const double flo = i == 0 ? f(inward(lo, hi)) : f(lo);
      const double fhi = i + 1 == panels ? f(inward(hi, lo)) : f(hi);
      s += simpson_panel(flo, f(0.5 * (lo + hi)), fhi, lo, hi);
    }
  }
  return s;
}

template <class F>
double adaptive(Rule rule, F& f, double a, double b, double eps, int max_depth, Accumulator& acc) {
  if (rule == Rule::GaussLegendre) {
    return gl_recurse(f, a, b, gl_panel(f, a, b), eps, max_depth, acc);
  }
  const double fa = f(inward(a, b)), fb = f(inward(b, a)), fm = f(0.5 * (a + b));
  return simpson_recurse(f, a, b, fa, fm, fb, simpson_panel(fa, fm, fb, a, b), eps, max_depth, acc);
}

}  // namespace detail

struct Piece {
  Integrand f;
  double a;
  double b;
};

/// Integrates a sum of pieces to a tolerance relative to the total.
/// Throws QuadratureFailure when panels at maximum depth leave more
/// unresolved error than the tolerance allows.
inline double integrate_pieces(Rule rule, const std::vector<Piece>& pieces, const Options& opt = {}) {
  if (pieces.empty()) return 0.0;
  double coarse = 0.0;
  for (const auto& p : pieces) {
    if (p.b > p.a) coarse += std::abs(detail::coarse_estimate(rule, p.f, p.a, p.b));
  }
  double eps = std::max(opt.abs_tol, opt.rel_tol * coarse);
  double total = 0.0;
  detail::Accumulator acc;
  // A spike at the end of a wide piece makes the coarse estimate overshoot;
  // redo the pass with the tolerance implied by the refined total.
  for (int pass = 0; pass < 4; ++pass) {
    const double per_piece = eps / static_cast<double>(pieces.size());
    total = 0.0;
    acc = {};
    for (const auto& p : pieces) {
      if (!(p.b > p.a)) continue;
      total += detail::adaptive(rule, p.f, p.a, p.b, per_piece, opt.max_depth, acc);
    }
    if (!std::isfinite(total)) throw QuadratureFailure("non-finite integral");
    const double target = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    if (eps <= 2.0 * target) break;
    eps = target;
  }
  if (acc.unresolved > eps) {
    throw QuadratureFailure(std::string(to_string(rule)) + ": unresolved error " +
                            detail::fmt_g(acc.unresolved) + " exceeds tolerance " + detail::fmt_g(eps));
  }
  return total;
}

inline double integrate(Rule rule, const Integrand& f, double a, double b, const Options& opt = {}) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(rule, f, b, a, opt);
  return integrate_pieces(rule, {{f, a, b}}, opt);
}

/// Splits [a, b] at the given interior points (others are ignored).
inline double integrate_with_breaks(Rule rule, const Integrand& f, double a, double b,
                                    std::vector<double> breaks, const Options& opt = {}) {
  if (a == b) return 0.0;
  if (b < a) return -integrate_with_breaks(rule, f, b, a, std::move(breaks), opt);
  std::vector<double> pts{a};
  std::sort(breaks.begin(), breaks.end());
  for (double x : breaks) {
    if (x > pts.back() && x < b) pts.push_back(x);
  }
  pts.push_back(b);
  std::vector<Piece> pieces;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) pieces.push_back({f, pts[i], pts[i + 1]});
  return integrate_pieces(rule, pieces, opt);
}

/// Integral over the real line. Tails beyond the outermost breakpoints are
/// mapped to [0, pi/2] by z = b +- S tan(theta) with S = max(1, |b|), so the
/// map follows the scale of the outermost break.
inline double integrate_real_line(Rule rule, const Integrand& f, std::vector<double> breaks,
                                  const Options& opt = {}) {
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [](double x) { return !std::isfinite(x); }),
               breaks.end());
  if (breaks.empty()) breaks.push_back(0.0);
  constexpr double half_pi = std::numbers::pi / 2.0;
  const double lo = breaks.front();
  const double hi = breaks.back();
  const double slo = std::max(1.0, std::abs(lo));
  const double shi = std::max(1.0, std::abs(hi));
  std::vector<Piece> pieces;
  pieces.push_back({[&f, lo, slo](double t) {
                      const double s = std::tan(t);
                      const double v = f(lo - slo * s);
                      return v == 0.0 ? 0.0 : v * slo * (1.0 + s * s);
                    },
                    0.0, half_pi});
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) pieces.push_back({f, breaks[i], breaks[i + 1]});
  pieces.push_back({[&f, hi, shi](double t) {
                      const double s = std::tan(t);
                      const double v = f(hi + shi * s);
                      return v == 0.0 ? 0.0 : v * shi * (1.0 + s * s);
                    },
                    0.0, half_pi});
  return integrate_pieces(rule, pieces, opt);
}

}  // namespace rlpa::quad
