#pragma once

// Indicator kernels on shifted unit hypercubes and bandwidth scaling.

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "rlpa/errors.hpp"

namespace rlpa {

/// Indicator of S(u) = prod_j [-1/2 + u_j, 1/2 + u_j], u in [-1/2, 1/2]^d.
class KernelSpec {
 public:
  explicit KernelSpec(std::vector<double> shift) : shift_(std::move(shift)) {
    if (shift_.empty()) throw DimensionError("kernel shift must have at least one axis");
    for (double u : shift_) {
      if (!(u >= -0.5 && u <= 0.5)) throw DomainError("kernel shift must lie in [-1/2, 1/2]");
    }
  }

  static KernelSpec symmetric(std::size_t d) { return KernelSpec(std::vector<double>(d, 0.0)); }

  std::size_t dim() const { return shift_.size(); }
  const std::vector<double>& shift() const { return shift_; }
  double lower(std::size_t j) const { return -0.5 + shift_[j]; }
  double upper(std::size_t j) const { return 0.5 + shift_[j]; }

  /// Sup norm of the kernel; indicators of unit-volume boxes have norm one.
  static constexpr double sup_norm() { return 1.0; }

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
  friend auto operator<=>(const KernelSpec& a, const KernelSpec& b) { return a.shift_ <=> b.shift_; }

 private:
  std::vector<double> shift_;
};

class Bandwidth {
 public:
  explicit Bandwidth(std::vector<double> h) : h_(std::move(h)) {
    if (h_.empty()) throw DimensionError("bandwidth must have at least one axis");
    for (double v : h_) {
      if (!(v > 0.0 && v <= 1.0)) throw DomainError("bandwidth components must lie in (0, 1]");
    }
  }

  static Bandwidth isotropic(double h, std::size_t d) { return Bandwidth(std::vector<double>(d, h)); }

  std::size_t dim() const { return h_.size(); }
  double operator[](std::size_t j) const { return h_[j]; }
  const std::vector<double>& values() const { return h_; }

  double volume() const {
    return std::accumulate(h_.begin(), h_.end(), 1.0, std::multiplies<>());
  }

  /// Coordinatewise maximum.
  Bandwidth join(const Bandwidth& other) const {
    detail::require_same_dim(dim(), other.dim(), "Bandwidth::join");
    std::vector<double> out(h_.size());
    for (std::size_t j = 0; j < h_.size(); ++j) out[j] = std::max(h_[j], other.h_[j]);
    return Bandwidth(std::move(out));
  }

  friend bool operator==(const Bandwidth&, const Bandwidth&) = default;
  friend auto operator<=>(const Bandwidth& a, const Bandwidth& b) { return a.h_ <=> b.h_; }

 private:
  std::vector<double> h_;
};

/// Closed-box membership: 1 when u lies in S(shift), 0 otherwise.
inline double kernel_eval(const KernelSpec& k, std::span<const double> u) {
  detail::require_same_dim(u.size(), k.dim(), "kernel_eval");
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (u[j] < k.lower(j) || u[j] > k.upper(j)) return 0.0;
  }
  return 1.0;
}

/// K((x - x0) / h) / Pi_h.
inline double kernel_h_eval(const KernelSpec& k, const Bandwidth& h, std::span<const double> x0,
                            std::span<const double> x) {
  detail::require_same_dim(h.dim(), k.dim(), "kernel_h_eval");
  detail::require_same_dim(x0.size(), k.dim(), "kernel_h_eval");
  detail::require_same_dim(x.size(), k.dim(), "kernel_h_eval");
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double u = (x[j] - x0[j]) / h[j];
    if (u < k.lower(j) || u > k.upper(j)) return 0.0;
  }
  return KernelSpec::sup_norm() / h.volume();
}

inline bool in_neighborhood(const KernelSpec& k, const Bandwidth& h, std::span<const double> x0,
                            std::span<const double> x) {
  return kernel_h_eval(k, h, x0, x) > 0.0;
}

/// Axis-aligned box V_h = x0 + h * S(shift).
struct Window {
  std::vector<double> lo;
  std::vector<double> hi;
};

inline Window window_box(const KernelSpec& k, const Bandwidth& h, std::span<const double> x0) {
  detail::require_same_dim(h.dim(), k.dim(), "window_box");
  detail::require_same_dim(x0.size(), k.dim(), "window_box");
  Window w{std::vector<double>(k.dim()), std::vector<double>(k.dim())};
  for (std::size_t j = 0; j < k.dim(); ++j) {
    w.lo[j] = x0[j] + h[j] * k.lower(j);
    w.hi[j] = x0[j] + h[j] * k.upper(j);
  }
  return w;
}

/// True when V_h is contained in the unit cube. Candidates failing this are
/// excluded from selection rather than clipped.
inline bool window_in_unit_cube(const KernelSpec& k, const Bandwidth& h, std::span<const double> x0) {
  const auto w = window_box(k, h, x0);
  for (std::size_t j = 0; j < k.dim(); ++j) {
    if (w.lo[j] < 0.0 || w.hi[j] > 1.0) return false;
  }
  return true;
}

/// Default kernel candidates: symmetric box, plus quarter shifts when d == 1.
inline std::vector<KernelSpec> default_kernels(std::size_t d) {
  if (d == 1) return {KernelSpec({-0.25}), KernelSpec({0.0}), KernelSpec({0.25})};
  return {KernelSpec::symmetric(d)};
}

}  // namespace rlpa
