#pragma once

// Local polynomial approximation: multi-index sets, monomial vectors, the
// kernel-weighted M-criterion and its box-constrained minimizer.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rlpa/contrast.hpp"
#include "rlpa/errors.hpp"
#include "rlpa/kernel.hpp"
#include "rlpa/simulate.hpp"

namespace rlpa {

/// All p in N^d with |p| <= m, graded by total degree; within a degree the
/// first exponent decreases (so (1,0) precedes (0,1)). The constant index
/// comes first.
class MultiIndexSet {
 public:
  MultiIndexSet(std::size_t d, int m) : d_(d), m_(m) {
    if (d == 0) throw DimensionError("multi-index dimension must be positive");
    if (m < 0) throw DomainError("polynomial degree must be nonnegative");
    std::vector<int> p(d, 0);
    for (int deg = 0; deg <= m; ++deg) append_degree(p, 0, deg);
  }

  std::size_t dim() const { return d_; }
  int degree() const { return m_; }
  std::size_t size() const { return indices_.size(); }
  const std::vector<std::vector<int>>& indices() const { return indices_; }

  /// u^p for every p, with 0^0 = 1.
  std::vector<double> monomials(std::span<const double> u) const {
    std::vector<double> out(size());
    monomials_into(u, out);
    return out;
  }

  void monomials_into(std::span<const double> u, std::span<double> out) const {
    detail::require_same_dim(u.size(), d_, "monomial_vector");
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      double v = 1.0;
      for (std::size_t j = 0; j < d_; ++j) {
        for (int e = 0; e < indices_[k][j]; ++e) v *= u[j];
      }
      out[k] = v;
    }
  }

 private:
  void append_degree(std::vector<int>& p, std::size_t axis, int remaining) {
    if (axis + 1 == d_) {
      p[axis] = remaining;
      indices_.push_back(p);
      return;
    }
    for (int e = remaining; e >= 0; --e) {
      p[axis] = e;
      append_degree(p, axis + 1, remaining - e);
    }
    p[axis] = 0;
  }

  std::size_t d_;
  int m_;
  std::vector<std::vector<int>> indices_;
};

inline std::vector<double> monomial_vector(const MultiIndexSet& P, std::span<const double> u) {
  return P.monomials(u);
}

struct LpaConfig {
  std::vector<double> x0{0.5};
  int degree = 0;
  double box = 10.0;  // M: coefficients live in [-M, M]^|P|
  double tol_grad = 1e-8;
  double tol_step = 1e-10;
  int max_iter = 20000;

  void validate(std::size_t d) const {
    detail::require_same_dim(x0.size(), d, "LpaConfig::x0");
    for (double v : x0)
      if (!(v > 0.0 && v < 1.0)) throw DomainError("x0 must lie in the open unit cube");
    if (degree < 0) throw DomainError("degree must be nonnegative");
    if (!(box > 0.0)) throw DomainError("coefficient box half-width must be positive");
    if (!(tol_grad > 0.0) || !(tol_step > 0.0)) throw DomainError("tolerances must be positive");
    if (max_iter < 1) throw DomainError("max_iter must be positive");
  }
};

struct LpaFit {
  std::vector<double> coeffs;
  double estimate = 0.0;
  int iterations = 0;
  double final_grad_norm = 0.0;
  bool converged = false;
  std::size_t effective_n = 0;
  double criterion = 0.0;
};

/// The in-window part of a sample, ready for repeated fits: one row of
/// monomials U((X_i - x0)/h) per point with K_h(X_i) > 0.
struct LocalDesign {
  std::size_t n = 0;        // full sample size (the 1/n normalization)
  std::size_t width = 0;    // |P|
  double volume = 1.0;      // Pi_h
  std::vector<double> U;    // effective_n x width, row-major
  std::vector<double> y;
  std::vector<double> kh;   // K_h(X_i)

  std::size_t effective_n() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {U.data() + i * width, width}; }

  double fitted(std::size_t i, std::span<const double> t) const {
    double s = 0.0;
    const double* u = U.data() + i * width;
    for (std::size_t k = 0; k < width; ++k) s += u[k] * t[k];
    return s;
  }
};

inline LocalDesign make_local_design(const SampleSet& sample, const KernelSpec& k, const Bandwidth& h,
                                     const LpaConfig& cfg) {
  detail::require_same_dim(k.dim(), sample.d, "make_local_design kernel");
  detail::require_same_dim(h.dim(), sample.d, "make_local_design bandwidth");
  cfg.validate(sample.d);
  const MultiIndexSet P(sample.d, cfg.degree);
  LocalDesign ld;
  ld.n = sample.size();
  ld.width = P.size();
  ld.volume = h.volume();
  std::vector<double> u(sample.d);
  std::vector<double> mono(P.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto x = sample.point(i);
    const double w = kernel_h_eval(k, h, cfg.x0, x);
    if (w <= 0.0) continue;
    for (std::size_t j = 0; j < sample.d; ++j) u[j] = (x[j] - cfg.x0[j]) / h[j];
    P.monomials_into(u, mono);
    ld.U.insert(ld.U.end(), mono.begin(), mono.end());
    ld.y.push_back(sample.y[i]);
    ld.kh.push_back(w);
  }
  return ld;
}

template <ContrastLike C>
double criterion_value(const LocalDesign& ld, const C& c, std::span<const double> t) {
  detail::require_same_dim(t.size(), ld.width, "criterion_value");
  if (ld.n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < ld.effective_n(); ++i) s += c.rho(ld.y[i] - ld.fitted(i, t)) * ld.kh[i];
  return s / static_cast<double>(ld.n);
}

/// Gradient of the criterion in t (the negative of the criterion derivative).
template <ContrastLike C>
std::vector<double> criterion_gradient(const LocalDesign& ld, const C& c, std::span<const double> t) {
  detail::require_same_dim(t.size(), ld.width, "criterion_gradient");
  std::vector<double> g(ld.width, 0.0);
  if (ld.n == 0) return g;
  for (std::size_t i = 0; i < ld.effective_n(); ++i) {
    const double w = c.rho_prime(ld.y[i] - ld.fitted(i, t)) * ld.kh[i];
    const double* u = ld.U.data() + i * ld.width;
    for (std::size_t k = 0; k < ld.width; ++k) g[k] -= w * u[k];
  }
  for (double& v : g) v /= static_cast<double>(ld.n);
  return g;
}

template <ContrastLike C>
double criterion_value(const SampleSet& sample, const C& c, const KernelSpec& k, const Bandwidth& h,
                       const LpaConfig& cfg, std::span<const double> t) {
  return criterion_value(make_local_design(sample, k, h, cfg), c, t);
}

template <ContrastLike C>
std::vector<double> criterion_gradient(const SampleSet& sample, const C& c, const KernelSpec& k,
                                       const Bandwidth& h, const LpaConfig& cfg, std::span<const double> t) {
  return criterion_gradient(make_local_design(sample, k, h, cfg), c, t);
}

/// Projected gradient descent with Armijo backtracking (factor 0.5, slope
/// 1e-4) over the box [-M, M]^|P|, starting from t = 0. The first trial step
/// is 1/L for the Lipschitz bound L = ||K||_inf max_i ||U_i||_1^2 (n_eff/n) / Pi_h;
/// later iterations first try twice the last accepted step.
template <ContrastLike C>
LpaFit fit_lpa(const LocalDesign& ld, const C& c, const LpaConfig& cfg) {
  if (ld.effective_n() == 0) throw EmptyWindow();
  const std::size_t p = ld.width;
  const double M = cfg.box;
  const double inv_n = 1.0 / static_cast<double>(ld.n);

  std::vector<double> t(p, 0.0), trial(p), grad(p), resid(ld.effective_n()), trial_resid(ld.effective_n());

  auto evaluate = [&](std::span<const double> at, std::vector<double>& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < ld.effective_n(); ++i) {
      r[i] = ld.y[i] - ld.fitted(i, at);
      s += c.rho(r[i]) * ld.kh[i];
    }
    return s * inv_n;
  };
  auto gradient_from = [&](const std::vector<double>& r) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < ld.effective_n(); ++i) {
      const double w = c.rho_prime(r[i]) * ld.kh[i];
      const double* u = ld.U.data() + i * p;
      for (std::size_t k = 0; k < p; ++k) grad[k] -= w * u[k];
    }
    for (double& v : grad) v *= inv_n;
  };

  double max_l1 = 0.0, kh_max = 0.0;
  for (std::size_t i = 0; i < ld.effective_n(); ++i) {
    double l1 = 0.0;
    for (double v : ld.row(i)) l1 += std::abs(v);
    max_l1 = std::max(max_l1, l1);
    kh_max = std::max(kh_max, ld.kh[i]);
  }
  const double lipschitz = kh_max * max_l1 * max_l1 * static_cast<double>(ld.effective_n()) * inv_n;
  const double base_step = 1.0 / lipschitz;
  const double min_step = base_step * 1e-30;

  double f = evaluate(t, resid);
  gradient_from(resid);

  LpaFit fit;
  fit.effective_n = ld.effective_n();
  double step = base_step;
  int iter = 0;
  bool converged = false;
  double pg_norm = 0.0;
  for (; iter < cfg.max_iter; ++iter) {
    pg_norm = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      pg_norm = std::max(pg_norm, std::abs(t[k] - std::clamp(t[k] - grad[k], -M, M)));
    }
    if (pg_norm <= cfg.tol_grad) {
      converged = true;
      break;
    }
    double alpha = iter == 0 ? base_step : 2.0 * step;
    double f_trial = f;
    double move = 0.0;
    bool accepted = false;
    while (alpha >= min_step) {
      double slope = 0.0;
      move = 0.0;
      for (std::size_t k = 0; k < p; ++k) {
        trial[k] = std::clamp(t[k] - alpha * grad[k], -M, M);
        const double dk = trial[k] - t[k];
        slope += grad[k] * dk;
        move = std::max(move, std::abs(dk));
      }
      if (move == 0.0) break;
      f_trial = evaluate(trial, trial_resid);
      if (f_trial <= f + 1e-4 * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // No descent step above the floor: the iterate cannot move further.
      converged = true;
      break;
    }
    assert(f_trial <= f);
    step = alpha;
    t.swap(trial);
    resid.swap(trial_resid);
    f = f_trial;
    gradient_from(resid);
    if (move <= cfg.tol_step) {
      ++iter;
      converged = true;
      break;
    }
  }

  pg_norm = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    pg_norm = std::max(pg_norm, std::abs(t[k] - std::clamp(t[k] - grad[k], -M, M)));
  }
  fit.coeffs = t;
  fit.estimate = t[0];
  fit.iterations = iter;
  fit.final_grad_norm = pg_norm;
  fit.converged = converged;
  fit.criterion = f;
  return fit;
}

template <ContrastLike C>
LpaFit fit_lpa(const SampleSet& sample, const C& c, const KernelSpec& k, const Bandwidth& h,
               const LpaConfig& cfg) {
  return fit_lpa(make_local_design(sample, k, h, cfg), c, cfg);
}

}  // namespace rlpa
