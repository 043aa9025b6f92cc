#pragma once

// Convex, symmetric contrast functions with 1-Lipschitz bounded derivative
// and second derivative bounded by one, plus a numerical checker for those
// axioms.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>
#include <string>
#include <vector>

#include "rlpa/errors.hpp"

namespace rlpa {

enum class ContrastKind { Huber, Arctan };

inline const char* to_string(ContrastKind kind) {
  return kind == ContrastKind::Huber ? "huber" : "arctan";
}

/// A member of the Huber or arctan family with scale gamma > 0.
///
/// Adding a kind means adding a branch to each evaluation below; a new kind
/// is admissible only if validate_contrast() passes for it on a wide grid.
class ContrastSpec {
 public:
  ContrastSpec(ContrastKind kind, double gamma) : kind_(kind), gamma_(gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      throw DomainError("contrast scale must be positive and finite");
    }
  }

  static ContrastSpec huber(double gamma) { return {ContrastKind::Huber, gamma}; }
  static ContrastSpec arctan(double gamma) { return {ContrastKind::Arctan, gamma}; }

  ContrastKind kind() const { return kind_; }
  double gamma() const { return gamma_; }

  double rho(double z) const {
    const double g = gamma_;
    if (kind_ == ContrastKind::Huber) {
      const double a = std::abs(z);
      return a <= g ? 0.5 * z * z : g * (a - 0.5 * g);
    }
    const double r = z / g;
    return g * z * std::atan(r) - 0.5 * g * g * std::log1p(r * r);
  }

  double rho_prime(double z) const {
    if (kind_ == ContrastKind::Huber) return std::clamp(z, -gamma_, gamma_);
    return gamma_ * std::atan(z / gamma_);
  }

  /// Huber uses the closed interval: value 1 at |z| == gamma.
  double rho_second(double z) const {
    if (kind_ == ContrastKind::Huber) return std::abs(z) <= gamma_ ? 1.0 : 0.0;
    const double r = z / gamma_;
    return 1.0 / (1.0 + r * r);
  }

  double rho_prime_sup() const {
    return kind_ == ContrastKind::Huber ? gamma_ : gamma_ * std::numbers::pi / 2.0;
  }

  /// Points where rho'' is discontinuous.
  std::vector<double> kinks() const {
    if (kind_ == ContrastKind::Huber) return {-gamma_, gamma_};
    return {};
  }

  friend bool operator==(const ContrastSpec&, const ContrastSpec&) = default;

 private:
  ContrastKind kind_;
  double gamma_;
};

template <class C>
concept ContrastLike = requires(const C& c, double z) {
  { c.rho(z) } -> std::convertible_to<double>;
  { c.rho_prime(z) } -> std::convertible_to<double>;
  { c.rho_second(z) } -> std::convertible_to<double>;
  { c.rho_prime_sup() } -> std::convertible_to<double>;
  { c.kinks() } -> std::convertible_to<std::vector<double>>;
};

struct AxiomCheck {
  std::string name;
  bool passed = true;
  double worst = 0.0;  // largest observed violation (or ratio, for lipschitz_ratio)
};

struct ContrastValidation {
  std::vector<AxiomCheck> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const AxiomCheck& c) { return c.passed; });
  }

  const AxiomCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct ContrastValidationOptions {
  double axiom_tol = 1e-10;
  double fd_step = 1e-6;
  double fd_tol = 1e-4;
};

/// Grid-checks the contrast axioms on [-halfwidth, halfwidth].
///
/// Finite-difference checks skip points within 2*fd_step of a kink.
template <ContrastLike C>
ContrastValidation validate_contrast(const C& c, double grid_halfwidth, int grid_points,
                                     const ContrastValidationOptions& opt = {}) {
  if (grid_points < 3) throw DomainError("validate_contrast needs at least 3 grid points");
  if (!(grid_halfwidth > 0.0)) throw DomainError("grid halfwidth must be positive");

  std::vector<double> z(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    z[i] = -grid_halfwidth + 2.0 * grid_halfwidth * i / (grid_points - 1);
  }
  const auto n = z.size();
  const double tol = opt.axiom_tol;
  const double sup = c.rho_prime_sup();
  const auto kinks = c.kinks();
  auto near_kink = [&](double x) {
    for (double k : kinks)
      if (std::abs(x - k) <= 2.0 * opt.fd_step) return true;
    return false;
  };

  AxiomCheck zero{"rho_zero"}, sym{"symmetry"}, nonneg{"nonnegative"}, odd{"rho_prime_odd"},
      mono{"rho_prime_monotone"}, lip{"lipschitz_ratio"}, bound{"rho_prime_bounded"},
      second{"rho_second_bound"}, convex{"convexity"}, fd1{"fd_first_derivative"},
      fd2{"fd_second_derivative"};

  zero.worst = std::abs(c.rho(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = z[i];
    sym.worst = std::max(sym.worst, std::abs(c.rho(x) - c.rho(-x)));
    nonneg.worst = std::max(nonneg.worst, -c.rho(x));
    odd.worst = std::max(odd.worst, std::abs(c.rho_prime(x) + c.rho_prime(-x)));
    bound.worst = std::max(bound.worst, std::abs(c.rho_prime(x)) - sup);
    const double s2 = c.rho_second(x);
    second.worst = std::max({second.worst, s2 - 1.0, -s2});
    if (i + 1 < n) {
      const double dp = c.rho_prime(z[i + 1]) - c.rho_prime(x);
      mono.worst = std::max(mono.worst, -dp);
      lip.worst = std::max(lip.worst, std::abs(dp) / (z[i + 1] - x));
    }
    // Secant test over spans of 1, 2, 4, ... grid steps.
    for (std::size_t span = 1; i >= span && i + span < n; span *= 2) {
      const double mid = c.rho(x);
      const double chord = 0.5 * (c.rho(z[i - span]) + c.rho(z[i + span]));
      convex.worst = std::max(convex.worst, mid - chord);
    }
    const double e = opt.fd_step;
    if (!near_kink(x)) {
      const double d1 = (c.rho(x + e) - c.rho(x - e)) / (2.0 * e);
      fd1.worst = std::max(fd1.worst, std::abs(d1 - c.rho_prime(x)));
      const double d2 = (c.rho_prime(x + e) - c.rho_prime(x - e)) / (2.0 * e);
      fd2.worst = std::max(fd2.worst, std::abs(d2 - s2));
    }
  }

  zero.passed = zero.worst <= tol;
  sym.passed = sym.worst <= tol;
  nonneg.passed = nonneg.worst <= tol;
  odd.passed = odd.worst <= tol;
  mono.passed = mono.worst <= tol;
  lip.passed = lip.worst <= 1.0 + tol;
  bound.passed = bound.worst <= tol;
  second.passed = second.worst <= tol;
  // Relative slack for the secant test: rho grows like z^2 on the grid.
  convex.passed = convex.worst <= tol * std::max(1.0, c.rho(grid_halfwidth));
  fd1.passed = fd1.worst <= opt.fd_tol;
  fd2.passed = fd2.worst <= opt.fd_tol;

  return {{zero, sym, nonneg, odd, mono, lip, bound, second, convex, fd1, fd2}};
}

}  // namespace rlpa
