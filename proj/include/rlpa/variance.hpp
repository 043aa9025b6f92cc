#pragma once

// Nonasymptotic variance of the local M-estimator: the data-driven estimate
// V_hat(lambda) used for contrast/kernel selection, the population value
// V(lambda) by nested quadrature, the entropy bound with its B constants,
// and the consistency-condition diagnostics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <span>
#include <tuple>
#include <vector>

#include <Eigen/Eigenvalues>

#include "rlpa/contrast.hpp"
#include "rlpa/errors.hpp"
#include "rlpa/kernel.hpp"
#include "rlpa/lpa.hpp"
#include "rlpa/quadrature.hpp"
#include "rlpa/simulate.hpp"

namespace rlpa {

// ---------------------------------------------------------------------------
// Empirical variance

struct VarianceReport {
  ContrastSpec contrast = ContrastSpec::huber(1.0);
  KernelSpec kernel = KernelSpec::symmetric(1);
  double numerator_core = 0.0;
  double penalty = 0.0;
  double denominator = 0.0;
  double v_hat = std::numeric_limits<double>::infinity();
  bool valid = false;
  bool excluded = false;  // window leaves the unit cube or holds no points
};

/// Denominators at or below one in-window point's worth of mass are degenerate.
inline double denom_floor(std::size_t n, double volume) {
  return std::max(1e-12, KernelSpec::sup_norm() / (static_cast<double>(n) * volume));
}

inline double variance_penalty(double rho_prime_sup, std::size_t n, double volume) {
  const double ln = std::log(static_cast<double>(n));
  return rho_prime_sup * KernelSpec::sup_norm() * ln * ln / std::sqrt(static_cast<double>(n) * volume);
}

/// V_hat from the given residuals (one per in-window point of ld).
inline VarianceReport variance_from_residuals(const LocalDesign& ld, const ContrastSpec& c, const KernelSpec& k,
                                              std::span<const double> residuals) {
  VarianceReport rep{c, k};
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ld.effective_n(); ++i) {
    const double psi = c.rho_prime(residuals[i]);
    num += psi * psi * ld.kh[i] * ld.kh[i];
    den += c.rho_second(residuals[i]) * ld.kh[i];
  }
  const double n = static_cast<double>(ld.n);
  rep.numerator_core = std::sqrt(num / n * ld.volume);
  rep.penalty = variance_penalty(c.rho_prime_sup(), ld.n, ld.volume);
  rep.denominator = den / n;
  rep.valid = rep.denominator > denom_floor(ld.n, ld.volume);
  if (rep.valid) {
    const double r = (rep.numerator_core + rep.penalty) / rep.denominator;
    rep.v_hat = r * r;
  }
  return rep;
}

inline std::vector<double> residuals_of(const LocalDesign& ld, std::span<const double> coeffs) {
  std::vector<double> r(ld.effective_n());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = ld.y[i] - ld.fitted(i, coeffs);
  return r;
}

inline VarianceReport empirical_variance(const LocalDesign& ld, const ContrastSpec& c, const KernelSpec& k,
                                         const LpaFit& fit) {
  return variance_from_residuals(ld, c, k, residuals_of(ld, fit.coeffs));
}

inline VarianceReport empirical_variance(const SampleSet& sample, const ContrastSpec& c, const KernelSpec& k,
                                         const Bandwidth& h, const LpaConfig& cfg, const LpaFit& fit) {
  return empirical_variance(make_local_design(sample, k, h, cfg), c, k, fit);
}

// ---------------------------------------------------------------------------
// Lambda selection

struct LambdaGrid {
  std::vector<ContrastSpec> contrasts;
  std::vector<KernelSpec> kernels;

  void validate() const {
    if (contrasts.empty() || kernels.empty()) throw DomainError("lambda grid must be nonempty");
  }

  double gamma_min() const {
    double g = std::numeric_limits<double>::infinity();
    for (const auto& c : contrasts) g = std::min(g, c.gamma());
    return g;
  }
  double gamma_max() const {
    double g = 0.0;
    for (const auto& c : contrasts) g = std::max(g, c.gamma());
    return g;
  }
};

inline std::vector<double> geometric_grid(double lo, double hi, int points) {
  if (!(lo > 0.0 && hi >= lo) || points < 1) throw DomainError("geometric grid needs 0 < lo <= hi");
  std::vector<double> g(static_cast<std::size_t>(points));
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  const double ratio = std::log(hi / lo) / (points - 1);
  for (int i = 0; i < points; ++i) g[i] = lo * std::exp(ratio * i);
  g.back() = hi;
  return g;
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) throw EmptyInput();
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

/// Median absolute deviation about the median (unscaled).
inline double mad_of(const std::vector<double>& v) {
  const double med = median_of(v);
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = std::abs(v[i] - med);
  return median_of(std::move(dev));
}

/// Geometric Huber scales on [0.25 MAD, 16 MAD] of the in-window responses
/// (symmetric kernel at h), widened so that the bracket contains 1.
inline std::vector<ContrastSpec> default_huber_grid(const SampleSet& sample, const Bandwidth& h,
                                                    const LpaConfig& cfg, int points = 12) {
  const auto ld = make_local_design(sample, KernelSpec::symmetric(sample.d), h, cfg);
  double mad = ld.effective_n() > 0 ? mad_of(ld.y) : 0.0;
  if (!(mad > 0.0)) mad = 1.0;
  const double lo = std::min(0.25 * mad, 1.0);
  const double hi = std::max(16.0 * mad, 1.0);
  std::vector<ContrastSpec> out;
  for (double g : geometric_grid(lo, hi, points)) out.push_back(ContrastSpec::huber(g));
  return out;
}

enum class VarianceMode {
  SelfResiduals,  // residuals of f_hat_lambda itself
  PreEstimator,   // residuals of an arctan(1) fit shared by every contrast
};

struct LambdaSelection {
  std::size_t chosen = 0;
  std::vector<VarianceReport> reports;  // kernel-major, contrast-minor
  std::vector<std::optional<LpaFit>> fits;

  const VarianceReport& best() const { return reports[chosen]; }
  const LpaFit& best_fit() const { return *fits[chosen]; }
};

namespace detail {

inline bool lambda_less(const VarianceReport& a, const VarianceReport& b) {
  return std::make_tuple(a.v_hat, a.contrast.gamma(), a.kernel.shift(), static_cast<int>(a.contrast.kind())) <
         std::make_tuple(b.v_hat, b.contrast.gamma(), b.kernel.shift(), static_cast<int>(b.contrast.kind()));
}

}  // namespace detail

/// Fits every lambda of the grid at bandwidth h and picks the valid report
/// with the smallest V_hat; ties go to the smaller scale, then the
/// lexicographically smaller kernel shift. Kernels whose window leaves the
/// unit cube are excluded.
inline LambdaSelection select_lambda(const SampleSet& sample, const LambdaGrid& grid, const Bandwidth& h,
                                     const LpaConfig& cfg, VarianceMode mode = VarianceMode::SelfResiduals) {
  grid.validate();
  LambdaSelection sel;
  std::optional<std::size_t> best;
  for (const auto& k : grid.kernels) {
    const bool inside = window_in_unit_cube(k, h, cfg.x0);
    const auto ld = inside ? make_local_design(sample, k, h, cfg) : LocalDesign{};
    const bool usable = inside && ld.effective_n() > 0;
    std::vector<double> shared_resid;
    if (usable && mode == VarianceMode::PreEstimator) {
      shared_resid = residuals_of(ld, fit_lpa(ld, ContrastSpec::arctan(1.0), cfg).coeffs);
    }
    for (const auto& c : grid.contrasts) {
      if (!usable) {
        VarianceReport rep{c, k};
        rep.excluded = true;
        sel.reports.push_back(rep);
        sel.fits.emplace_back();
        continue;
      }
      auto fit = fit_lpa(ld, c, cfg);
      auto rep = mode == VarianceMode::PreEstimator ? variance_from_residuals(ld, c, k, shared_resid)
                                                    : empirical_variance(ld, c, k, fit);
      sel.reports.push_back(rep);
      sel.fits.emplace_back(std::move(fit));
      const std::size_t idx = sel.reports.size() - 1;
      if (rep.valid && (!best || detail::lambda_less(rep, sel.reports[*best]))) best = idx;
    }
  }
  if (!best) throw AllInvalid();
  sel.chosen = *best;
  return sel;
}

inline std::string format_shift(const KernelSpec& k) {
  std::string s;
  for (std::size_t j = 0; j < k.dim(); ++j) s += (j ? ";" : "") + format_double(k.shift()[j]);
  return s;
}

/// One row per lambda: scale, kernel shift, the parts of V_hat and validity.
inline void write_lambda_trace_csv(std::ostream& os, const LambdaSelection& sel) {
  os << "contrast,gamma,kernel_shift,numerator_core,penalty,denominator,v_hat,valid,excluded,estimate,chosen\n";
  for (std::size_t i = 0; i < sel.reports.size(); ++i) {
    const auto& r = sel.reports[i];
    os << to_string(r.contrast.kind()) << ',' << format_double(r.contrast.gamma()) << ',' << format_shift(r.kernel)
       << ',' << format_double(r.numerator_core) << ',' << format_double(r.penalty) << ','
       << format_double(r.denominator) << ',' << format_double(r.v_hat) << ',' << (r.valid ? 1 : 0) << ','
       << (r.excluded ? 1 : 0) << ',' << (sel.fits[i] ? format_double(sel.fits[i]->estimate) : std::string())
       << ',' << (i == sel.chosen ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Population quantities by quadrature

/// A noise density with its non-smooth points; lets tests plug in stubs.
struct NoiseLaw {
  std::function<double(double)> pdf;
  std::vector<double> breaks;
  double sup_density = 1.0;

  static NoiseLaw from(const NoiseSpec& spec) {
    return {[spec](double t) { return spec.pdf(t); }, spec.breakpoints(), spec.sup_density()};
  }
};

struct PopulationModel {
  std::size_t d = 1;
  DesignSpec design = UniformDesign{};
  NoiseLevelSpec level = ConstantLevel{1.0};
  NoiseLaw noise;

  static PopulationModel from(const ModelSpec& m) {
    validate(m);
    return {m.d, m.design, m.noise_level, NoiseLaw::from(m.noise)};
  }
};

struct QuadratureSettings {
  quad::Rule rule = quad::Rule::AdaptiveSimpson;
  double outer_rel_tol = 1e-10;
  double inner_rel_tol = 1e-12;
};

namespace detail {

inline std::vector<double> scaled_kinks(const ContrastSpec& c, double sigma, const NoiseLaw& g) {
  auto b = g.breaks;
  for (double k : c.kinks()) b.push_back(k / sigma);
  b.push_back(0.0);
  // Decade points between the noise scale and the scaled kinks keep every
  // piece narrow relative to its distance from the density peak.
  double reach = 1.0;
  for (double k : c.kinks()) reach = std::max(reach, std::abs(k) / sigma);
  for (double t = 10.0; t < reach; t *= 10.0) {
    b.push_back(t);
    b.push_back(-t);
  }
  return b;
}

/// int rho'(sigma z)^2 g(z) dz
inline double psi_second_moment(const ContrastSpec& c, double sigma, const NoiseLaw& g,
                                const QuadratureSettings& qs) {
  if (sigma == 0.0) return 0.0;
  return quad::integrate_real_line(
      qs.rule,
      [&](double z) {
        const double p = g.pdf(z);
        if (p == 0.0) return 0.0;
        const double v = c.rho_prime(sigma * z);
        return v * v * p;
      },
      scaled_kinks(c, sigma, g), {qs.inner_rel_tol, 1e-300});
}

/// int rho''(sigma z) g(z) dz
inline double curvature_mean(const ContrastSpec& c, double sigma, const NoiseLaw& g, const QuadratureSettings& qs) {
  if (sigma == 0.0) return c.rho_second(0.0);
  return quad::integrate_real_line(
      qs.rule,
      [&](double z) {
        const double p = g.pdf(z);
        return p == 0.0 ? 0.0 : c.rho_second(sigma * z) * p;
      },
      scaled_kinks(c, sigma, g), {qs.inner_rel_tol, 1e-300});
}

using PointFn = std::function<double(std::span<const double>)>;

/// Exponent of the root-type behavior of the noise level at its center, or
/// zero when the level is smooth there.
inline double level_root_exponent(const NoiseLevelSpec& level) {
  double a = 0.0;
  if (const auto* p = std::get_if<PowerDistanceLevel>(&level)) a = p->alpha;
  if (const auto* o = std::get_if<OnePlusPowerLevel>(&level)) a = o->alpha;
  return (a > 0.0 && a < 1.0) ? a : 0.0;
}

/// int_{lo}^{hi} mu(x) R(x) dx in one dimension. Pieces ending at the design
/// center or at the noise-level center use x = e +- len v^p: a factor
/// 1/(s+1) of p removes a fractional density power |x - x0|^s and a factor
/// 1/alpha turns |x - c|^alpha into an integer power of v.
inline double integrate_against_design_1d(const DesignSpec& design, const NoiseLevelSpec& level, const PointFn& R,
                                          double lo, double hi, std::vector<double> breaks, const quad::Options& opt,
                                          quad::Rule rule) {
  const auto* deg = std::get_if<DegenerateDesign>(&design);
  const bool design_singular = deg && deg->s != 0.0;
  const auto level_center = noise_level_breakpoints(level);
  const double alpha = level_root_exponent(level);
  const auto is_design_center = [&](double x) { return design_singular && x == deg->x0; };
  const auto is_level_center = [&](double x) { return alpha > 0.0 && !level_center.empty() && x == level_center[0]; };
  const auto singular = [&](double x) { return is_design_center(x) || is_level_center(x); };

  std::vector<double> pts{lo};
  std::sort(breaks.begin(), breaks.end());
  for (double b : breaks)
    if (b > pts.back() && b < hi) pts.push_back(b);
  pts.push_back(hi);
  // Every piece gets at most one singular endpoint.
  std::vector<double> split{pts.front()};
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (singular(pts[i - 1]) && singular(pts[i])) split.push_back(0.5 * (pts[i - 1] + pts[i]));
    split.push_back(pts[i]);
  }

  std::vector<quad::Piece> pieces;
  for (std::size_t i = 0; i + 1 < split.size(); ++i) {
    const double a = split[i], b = split[i + 1];
    if (!singular(a) && !singular(b)) {
      pieces.push_back({[&R, &design](double x) {
                          const std::span<const double> xs(&x, 1);
                          return design_density(design, xs) * R(xs);
                        },
                        a, b});
      continue;
    }
    const double e = singular(a) ? a : b;
    const double len = b - a;
    const double dir = (a == e) ? 1.0 : -1.0;
    const bool at_design = is_design_center(e);
    const double s = at_design ? deg->s : 0.0;
    const double p_design = (at_design && s != std::floor(s)) ? 1.0 / (s + 1.0) : 1.0;
    const double p = p_design / (is_level_center(e) ? alpha : 1.0);
    // Off-center density: mu(x) dx/dv = mu(x) len p v^(p-1).
    // At the design center: mu(x) dx/dv = coef v^(p(s+1) - 1).
    const double coef = at_design ? (s + 1.0) / degenerate_normalizer(*deg) * std::pow(len, s + 1.0) * p : len * p;
    const double power = at_design ? p * (s + 1.0) - 1.0 : p - 1.0;
    pieces.push_back({[&R, &design, e, len, dir, p, coef, power, at_design](double v) {
                        const double x = e + dir * len * std::pow(v, p);
                        const std::span<const double> xs(&x, 1);
                        const double w = power == 0.0 ? coef : coef * std::pow(v, power);
                        return (at_design ? 1.0 : design_density(design, xs)) * w * R(xs);
                      },
                      0.0, 1.0});
  }
  return quad::integrate_pieces(rule, pieces, opt);
}

/// int_W mu(x) R(x) dx over an axis-aligned window inside the unit cube.
inline double integrate_over_window(const PopulationModel& pm, const Window& w, const PointFn& R,
                                    const QuadratureSettings& qs) {
  const quad::Options opt{qs.outer_rel_tol, 1e-300};
  std::vector<double> breaks = design_breakpoints(pm.design);
  for (double b : noise_level_breakpoints(pm.level)) breaks.push_back(b);
  if (pm.d == 1) return integrate_against_design_1d(pm.design, pm.level, R, w.lo[0], w.hi[0], breaks, opt, qs.rule);

  if (!std::holds_alternative<UniformDesign>(pm.design)) {
    throw DimensionError("multivariate integration supports the uniform design only");
  }
  // Tensor-product iterated integration, last axis innermost.
  std::vector<double> x(pm.d);
  std::function<double(std::size_t)> level = [&](std::size_t axis) -> double {
    std::vector<double> axis_breaks;
    if (const auto* p = std::get_if<PowerDistanceLevel>(&pm.level)) {
      axis_breaks.push_back(p->center.size() == 1 ? p->center[0] : p->center[axis]);
    } else if (const auto* o = std::get_if<OnePlusPowerLevel>(&pm.level)) {
      axis_breaks.push_back(o->center.size() == 1 ? o->center[0] : o->center[axis]);
    }
    return quad::integrate_with_breaks(
        qs.rule,
        [&, axis](double v) {
          x[axis] = v;
          return axis + 1 == pm.d ? R(x) : level(axis + 1);
        },
        w.lo[axis], w.hi[axis], axis_breaks, opt);
  };
  return level(0);
}

}  // namespace detail

struct OracleVariance {
  double numerator = 0.0;    // Pi_h E P_n [lambda'(f*)]^2
  double denominator = 0.0;  // E P_n lambda''(f*)
  double penalty = 0.0;
  double v = 0.0;
};

/// Population nonasymptotic variance for sample size n.
inline OracleVariance oracle_variance_parts(const PopulationModel& pm, const ContrastSpec& c, const KernelSpec& k,
                                            const Bandwidth& h, std::span<const double> x0, std::size_t n,
                                            const QuadratureSettings& qs = {}) {
  detail::require_same_dim(k.dim(), pm.d, "oracle_variance kernel");
  detail::require_same_dim(h.dim(), pm.d, "oracle_variance bandwidth");
  if (!window_in_unit_cube(k, h, x0)) throw DomainError("kernel window leaves the unit cube");
  const auto w = window_box(k, h, x0);
  const double vol = h.volume();
  const double kh = KernelSpec::sup_norm() / vol;

  OracleVariance out;
  if (is_constant_level(pm.level)) {
    const double sigma = std::get<ConstantLevel>(pm.level).sigma;
    const double mass = detail::integrate_over_window(pm, w, [](std::span<const double>) { return 1.0; }, qs);
    out.numerator = vol * kh * kh * mass * detail::psi_second_moment(c, sigma, pm.noise, qs);
    out.denominator = kh * mass * detail::curvature_mean(c, sigma, pm.noise, qs);
  } else {
    out.numerator = vol * kh * kh * detail::integrate_over_window(pm, w, [&](std::span<const double> x) {
      return detail::psi_second_moment(c, noise_level(pm.level, x), pm.noise, qs);
    }, qs);
    out.denominator = kh * detail::integrate_over_window(pm, w, [&](std::span<const double> x) {
      return detail::curvature_mean(c, noise_level(pm.level, x), pm.noise, qs);
    }, qs);
  }
  out.penalty = variance_penalty(c.rho_prime_sup(), n, vol);
  const double r = (std::sqrt(out.numerator) + out.penalty) / out.denominator;
  out.v = r * r;
  return out;
}

inline double oracle_variance(const ModelSpec& model, const ContrastSpec& c, const KernelSpec& k, const Bandwidth& h,
                              const LpaConfig& cfg, std::size_t n, const QuadratureSettings& qs = {}) {
  return oracle_variance_parts(PopulationModel::from(model), c, k, h, cfg.x0, n, qs).v;
}

// ---------------------------------------------------------------------------
// Entropy bound and B constants

struct EntropyConfig {
  double M = 10.0;
  std::size_t num_coeffs = 1;  // |P|
  double gamma_minus = 1.0;
  double gamma_plus = 1.0;
  double g_inf = 1.0;
  double n = 100.0;

  void validate() const {
    if (!(gamma_minus > 0.0 && gamma_minus <= 1.0 && gamma_plus >= 1.0)) {
      throw DomainError("entropy bound needs 0 < gamma_minus <= 1 <= gamma_plus");
    }
    if (!(g_inf > 0.0)) throw DomainError("g_inf must be positive");
    if (!(M > 0.0)) throw DomainError("M must be positive");
    if (num_coeffs == 0) throw DomainError("|P| must be positive");
  }
};

/// Bracketing-entropy bound for F x {Huber(gamma) : gamma in [gamma_-, gamma_+]}.
inline double entropy_bound(const EntropyConfig& cfg, double v) {
  if (!(v > 0.0 && v <= 1.0)) throw DomainError("entropy_bound needs v in (0, 1]");
  cfg.validate();
  // Log space: v * v underflows for v below about 1e-154.
  const double log_inner = std::log(16.0 * std::max(12.0, cfg.g_inf) * std::max(2.0 * cfg.M, cfg.gamma_plus) *
                                    cfg.gamma_plus * cfg.gamma_plus / std::pow(cfg.gamma_minus, 4)) -
                           2.0 * std::log(v);
  return std::max(0.0, (1.0 + static_cast<double>(cfg.num_coeffs)) * log_inner);
}

/// 27 int_0^1 sqrt(H(u)) du + 4 H(1) / ln^2(n), for any entropy function H.
inline double b0_constant(const std::function<double(double)>& entropy, double n,
                          quad::Rule rule = quad::Rule::AdaptiveSimpson) {
  if (!(n >= 3.0)) throw DomainError("b0_constant needs n >= 3");
  // u = exp(-w) maps the logarithmic singularity at u = 0 to a decaying tail.
  const double integral = quad::integrate_real_line(
      rule,
      [&](double w) {
        if (w < 0.0) return 0.0;
        const double e = std::exp(-w);
        return e == 0.0 ? 0.0 : std::sqrt(std::max(0.0, entropy(e))) * e;
      },
      {0.0, 1.0, 10.0}, {1e-12, 1e-300});
  const double ln = std::log(n);
  return 27.0 * integral + 4.0 * entropy(1.0) / (ln * ln);
}

inline double b0_constant(const EntropyConfig& cfg, quad::Rule rule = quad::Rule::AdaptiveSimpson) {
  cfg.validate();
  return b0_constant([&](double u) { return entropy_bound(cfg, u); }, cfg.n, rule);
}

/// B_z = B_0 + 7 sqrt(2z) + 2z / ln^2(n)
inline double bz_constant(const EntropyConfig& cfg, double z) {
  if (!(z >= 0.0)) throw DomainError("bz_constant needs z >= 0");
  const double ln = std::log(cfg.n);
  return b0_constant(cfg) + 7.0 * std::sqrt(2.0 * z) + 2.0 * z / (ln * ln);
}

/// Entropy configuration matching a Huber grid: the scale range is widened
/// to contain 1 as the bound requires.
inline EntropyConfig entropy_config_for(const LambdaGrid& grid, const LpaConfig& cfg, std::size_t d, std::size_t n,
                                        double g_inf = 1.0) {
  EntropyConfig e;
  e.M = cfg.box;
  e.num_coeffs = MultiIndexSet(d, cfg.degree).size();
  e.gamma_minus = std::min(grid.gamma_min(), 1.0);
  e.gamma_plus = std::max(grid.gamma_max(), 1.0);
  e.g_inf = g_inf;
  e.n = static_cast<double>(n);
  return e;
}

// ---------------------------------------------------------------------------
// Diagnostics

struct DiagnosticsReport {
  double phi_h = 0.0;
  double delta_h = 0.0;
  double delta_star_h = 0.0;
  double s_h = 0.0;
  double c_lambda = 0.0;          // E P_n lambda''(f*)
  double numerator = 0.0;         // Pi_h E P_n [lambda'(f*)]^2
  double bias_proxy = 0.0;        // L sum_j h_j^beta
  double expected_kh = 0.0;       // E K_h(X)
  double expected_pi_kh2 = 0.0;   // E Pi_h K_h(X)^2
  double inf_curvature = 0.0;     // inf_{x in V_h} E rho''(sigma(x) xi)
  double entropy_integral = 0.0;  // int_0^1 sqrt(H(u)) du
  double entropy_at_one = 0.0;    // H(1)
  bool condition1_ok = false;
  bool condition2_ok = false;
  bool condition3_ok = false;
};

/// Evaluates the quantities of the consistency conditions for one lambda.
/// The bias term uses the Taylor proxy L sum_j h_j^beta, and the entropy of
/// F alone is bounded by that of F x Lambda.
inline DiagnosticsReport diagnostics(const PopulationModel& pm, const ContrastSpec& c, const KernelSpec& k,
                                     const Bandwidth& h, const LpaConfig& cfg, std::size_t n, double beta, double L,
                                     const EntropyConfig& entropy, const QuadratureSettings& qs = {}) {
  cfg.validate(pm.d);
  if (!window_in_unit_cube(k, h, cfg.x0)) throw DomainError("kernel window leaves the unit cube");
  const MultiIndexSet P(pm.d, cfg.degree);
  const std::size_t p = P.size();
  const auto w = window_box(k, h, cfg.x0);
  const double vol = h.volume();
  const double kinf = KernelSpec::sup_norm();
  const double nd = static_cast<double>(n);

  DiagnosticsReport rep;
  const auto curvature_at = [&](std::span<const double> x) {
    return detail::curvature_mean(c, noise_level(pm.level, x), pm.noise, qs);
  };

  // Phi_h: smallest eigenvalue of (1/Pi_h) int_W U U^T mu(x) E rho''(sigma(x) xi) dx.
  Eigen::MatrixXd A(p, p);
  std::vector<double> u(pm.d), mono(p);
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a; b < p; ++b) {
      const double v = detail::integrate_over_window(pm, w, [&](std::span<const double> x) {
        for (std::size_t j = 0; j < pm.d; ++j) u[j] = (x[j] - cfg.x0[j]) / h[j];
        P.monomials_into(u, mono);
        return mono[a] * mono[b] * curvature_at(x);
      }, qs) / vol;
      A(a, b) = v;
      A(b, a) = v;
    }
  }
  rep.phi_h = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A, Eigen::EigenvaluesOnly).eigenvalues()(0);
  if (std::abs(rep.phi_h) < 1e-14) rep.phi_h = 0.0;

  const auto parts = oracle_variance_parts(pm, c, k, h, cfg.x0, n, qs);
  rep.c_lambda = parts.denominator;
  rep.numerator = parts.numerator;
  const double mass = detail::integrate_over_window(pm, w, [](std::span<const double>) { return 1.0; }, qs);
  rep.expected_kh = kinf / vol * mass;
  rep.expected_pi_kh2 = vol * (kinf / vol) * (kinf / vol) * mass;

  rep.bias_proxy = 0.0;
  for (double hj : h.values()) rep.bias_proxy += L * std::pow(hj, beta);

  // inf of E rho''(sigma(x) xi) over a grid on the window.
  const std::size_t per_axis = pm.d == 1 ? 41 : 11;
  rep.inf_curvature = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(pm.d, 0);
  std::vector<double> x(pm.d);
  while (true) {
    for (std::size_t j = 0; j < pm.d; ++j) {
      x[j] = w.lo[j] + (w.hi[j] - w.lo[j]) * static_cast<double>(idx[j]) / static_cast<double>(per_axis - 1);
    }
    rep.inf_curvature = std::min(rep.inf_curvature, curvature_at(x));
    std::size_t j = 0;
    while (j < pm.d && ++idx[j] == per_axis) idx[j++] = 0;
    if (j == pm.d) break;
  }

  rep.entropy_integral = (b0_constant([&](double v) { return entropy_bound(entropy, v); }, std::max(entropy.n, 3.0)) -
                          4.0 * entropy_bound(entropy, 1.0) / std::pow(std::log(std::max(entropy.n, 3.0)), 2)) /
                         27.0;
  rep.entropy_at_one = entropy_bound(entropy, 1.0);
  const double complexity = std::log(nd * static_cast<double>(p)) + rep.entropy_integral + rep.entropy_at_one;
  const double root_npi = std::sqrt(nd * vol);
  const double psi_sup = c.rho_prime_sup();

  if (rep.phi_h > 0.0) {
    const double stochastic =
        54.0 * psi_sup * (std::sqrt(rep.expected_pi_kh2) + kinf / root_npi) * complexity / root_npi;
    rep.delta_h = 2.0 * static_cast<double>(p * p) / rep.phi_h * (rep.expected_kh * rep.bias_proxy + stochastic);
  } else {
    rep.delta_h = std::numeric_limits<double>::infinity();
  }
  rep.delta_star_h = rep.delta_h;
  rep.s_h = std::max(1.0, 2.0 * kinf) * (rep.delta_star_h + rep.bias_proxy) +
            27.0 * std::max(1.0, kinf * psi_sup * psi_sup) / root_npi * complexity;

  const double ln = std::log(nd);
  rep.condition1_ok = rep.phi_h > 0.0 && nd * vol >= 1.0 &&
                      4.0 * (rep.bias_proxy + rep.delta_h) <= rep.inf_curvature;
  rep.condition2_ok = rep.phi_h > 0.0 && nd * vol >= std::pow(ln, 4) &&
                      4.0 * (rep.bias_proxy + rep.delta_star_h) <= rep.inf_curvature;
  rep.condition3_ok = rep.s_h <= std::min(rep.c_lambda, rep.numerator) / (2.0 * kinf);
  return rep;
}

}  // namespace rlpa
