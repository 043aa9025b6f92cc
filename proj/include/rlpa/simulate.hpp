#pragma once

// Regression model Y_i = f*(X_i) + sigma(X_i) xi_i: target functions,
// design densities, noise levels, symmetric noise laws, and seeded sample
// generation.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "rlpa/errors.hpp"
#include "rlpa/huber_minimax.hpp"
#include "rlpa/rng.hpp"
#include "rlpa/special.hpp"

namespace rlpa {

// ---------------------------------------------------------------------------
// Target functions

/// Hoelder metadata (beta, L, M) carried by each target.
struct HolderInfo {
  double beta;
  double L;
  double M;
};

struct ConstantTarget {
  double value = 0.0;
};

/// sum_k coeffs[k] * (x[axis] - center)^k
struct PolynomialTarget {
  std::vector<double> coeffs;
  std::size_t axis = 0;
  double center = 0.0;
};

/// sum_j weight[j] * |x[j] - center[j]|^exponent[j]; rough where exponents are below one.
struct CuspTarget {
  std::vector<double> center;
  std::vector<double> exponent;
  std::vector<double> weight;
};

/// amplitude * sin(2 pi frequency x[axis] + phase)
struct SinusoidTarget {
  double amplitude = 1.0;
  double frequency = 1.0;
  double phase = 0.0;
  std::size_t axis = 0;
};

class TargetSpec {
 public:
  using Variant = std::variant<ConstantTarget, PolynomialTarget, CuspTarget, SinusoidTarget>;

  TargetSpec(Variant fn = ConstantTarget{}) : fn_(std::move(fn)) {}
  TargetSpec(Variant fn, HolderInfo holder) : fn_(std::move(fn)), holder_override_(holder), has_override_(true) {}

  const Variant& function() const { return fn_; }
  bool has_holder_override() const { return has_override_; }

  double operator()(std::span<const double> x) const {
    return std::visit([&](const auto& f) { return eval(f, x); }, fn_);
  }

  HolderInfo holder() const {
    if (has_override_) return holder_override_;
    return std::visit([](const auto& f) { return default_holder(f); }, fn_);
  }

 private:
  static double eval(const ConstantTarget& f, std::span<const double>) { return f.value; }
  static double eval(const PolynomialTarget& f, std::span<const double> x) {
    if (f.axis >= x.size()) throw DimensionError("polynomial target axis out of range");
    const double u = x[f.axis] - f.center;
    double acc = 0.0;
    for (auto it = f.coeffs.rbegin(); it != f.coeffs.rend(); ++it) acc = acc * u + *it;
    return acc;
  }
  static double eval(const CuspTarget& f, std::span<const double> x) {
    detail::require_same_dim(f.center.size(), x.size(), "cusp target");
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (f.weight[j] != 0.0) acc += f.weight[j] * std::pow(std::abs(x[j] - f.center[j]), f.exponent[j]);
    }
    return acc;
  }
  static double eval(const SinusoidTarget& f, std::span<const double> x) {
    if (f.axis >= x.size()) throw DimensionError("sinusoid target axis out of range");
    return f.amplitude * std::sin(2.0 * std::numbers::pi * f.frequency * x[f.axis] + f.phase);
  }

  static HolderInfo default_holder(const ConstantTarget& f) {
    return {std::numeric_limits<double>::infinity(), 0.0, std::abs(f.value)};
  }
  static HolderInfo default_holder(const PolynomialTarget& f) {
    double m = 0.0;
    for (double c : f.coeffs) m += std::abs(c);
    const double deg = f.coeffs.empty() ? 0.0 : static_cast<double>(f.coeffs.size() - 1);
    double fact = 1.0;
    for (int k = 2; k <= static_cast<int>(deg); ++k) fact *= k;
    const double lead = f.coeffs.empty() ? 0.0 : std::abs(f.coeffs.back());
    return {std::max(deg, 1.0), fact * lead, m};
  }
  static HolderInfo default_holder(const CuspTarget& f) {
    double beta = std::numeric_limits<double>::infinity(), L = 0.0, M = 0.0;
    for (std::size_t j = 0; j < f.weight.size(); ++j) {
      if (f.weight[j] == 0.0) continue;
      beta = std::min(beta, f.exponent[j]);
      L = std::max(L, std::abs(f.weight[j]));
      M += std::abs(f.weight[j]);
    }
    return {beta, L, M};
  }
  static HolderInfo default_holder(const SinusoidTarget& f) {
    const double w = 2.0 * std::numbers::pi * f.frequency;
    return {2.0, std::abs(f.amplitude) * w * w, std::abs(f.amplitude)};
  }

  Variant fn_;
  HolderInfo holder_override_{};
  bool has_override_ = false;
};

// ---------------------------------------------------------------------------
// Design

struct UniformDesign {};

/// mu(x) = (s+1) / (x0^(s+1) + (1-x0)^(s+1)) * |x - x0|^s on [0, 1], d = 1.
struct DegenerateDesign {
  double s;
  double x0;
};

using DesignSpec = std::variant<UniformDesign, DegenerateDesign>;

inline void validate(const DegenerateDesign& d) {
  if (!(d.s > -1.0)) throw DomainError("degenerate design needs s > -1");
  if (!(d.x0 >= 0.0 && d.x0 <= 1.0)) throw DomainError("degenerate design center must lie in [0, 1]");
}

inline double degenerate_normalizer(const DegenerateDesign& d) {
  return std::pow(d.x0, d.s + 1.0) + std::pow(1.0 - d.x0, d.s + 1.0);
}

inline double design_density(const DesignSpec& spec, std::span<const double> x) {
  for (double v : x)
    if (v < 0.0 || v > 1.0) return 0.0;
  if (std::holds_alternative<UniformDesign>(spec)) return 1.0;
  const auto& d = std::get<DegenerateDesign>(spec);
  if (x.size() != 1) throw DimensionError("degenerate design is one-dimensional");
  return (d.s + 1.0) / degenerate_normalizer(d) * std::pow(std::abs(x[0] - d.x0), d.s);
}

inline double design_cdf(const DesignSpec& spec, double x) {
  x = std::clamp(x, 0.0, 1.0);
  if (std::holds_alternative<UniformDesign>(spec)) return x;
  const auto& d = std::get<DegenerateDesign>(spec);
  const double a = d.s + 1.0;
  const double z = degenerate_normalizer(d);
  if (x <= d.x0) return (std::pow(d.x0, a) - std::pow(d.x0 - x, a)) / z;
  return (std::pow(d.x0, a) + std::pow(x - d.x0, a)) / z;
}

inline double design_cdf_inverse(const DesignSpec& spec, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("design_cdf_inverse needs p in [0, 1]");
  if (std::holds_alternative<UniformDesign>(spec)) return p;
  const auto& d = std::get<DegenerateDesign>(spec);
  validate(d);
  const double a = d.s + 1.0;
  const double z = degenerate_normalizer(d);
  const double left = std::pow(d.x0, a);
  const double pz = p * z;
  double x;
  if (pz <= left) {
    x = d.x0 - std::pow(std::max(left - pz, 0.0), 1.0 / a);
  } else {
    x = d.x0 + std::pow(pz - left, 1.0 / a);
  }
  return std::clamp(x, 0.0, 1.0);
}

/// Breakpoints of the design density along axis 0 (singular or kinked points).
inline std::vector<double> design_breakpoints(const DesignSpec& spec) {
  if (const auto* d = std::get_if<DegenerateDesign>(&spec)) return {d->x0};
  return {};
}

// ---------------------------------------------------------------------------
// Noise level

struct ConstantLevel {
  double sigma = 1.0;
};

/// sigma(x) = ||x - center||^alpha
struct PowerDistanceLevel {
  double alpha;
  std::vector<double> center;
};

/// sigma(x) = 1 + ||x - center||^alpha
struct OnePlusPowerLevel {
  double alpha;
  std::vector<double> center;
};

using NoiseLevelSpec = std::variant<ConstantLevel, PowerDistanceLevel, OnePlusPowerLevel>;

namespace detail {

inline double distance_to(std::span<const double> x, const std::vector<double>& center) {
  if (center.size() != 1) require_same_dim(center.size(), x.size(), "noise level center");
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double c = center.size() == 1 ? center[0] : center[j];
    s += (x[j] - c) * (x[j] - c);
  }
  return std::sqrt(s);
}

}  // namespace detail

inline double noise_level(const NoiseLevelSpec& spec, std::span<const double> x) {
  if (const auto* c = std::get_if<ConstantLevel>(&spec)) return c->sigma;
  if (const auto* p = std::get_if<PowerDistanceLevel>(&spec)) {
    const double r = detail::distance_to(x, p->center);
    return p->alpha == 0.0 ? 1.0 : std::pow(r, p->alpha);
  }
  const auto& o = std::get<OnePlusPowerLevel>(spec);
  const double r = detail::distance_to(x, o.center);
  return 1.0 + (o.alpha == 0.0 ? 1.0 : std::pow(r, o.alpha));
}

inline bool is_constant_level(const NoiseLevelSpec& spec) {
  return std::holds_alternative<ConstantLevel>(spec);
}

inline std::vector<double> noise_level_breakpoints(const NoiseLevelSpec& spec) {
  if (const auto* p = std::get_if<PowerDistanceLevel>(&spec)) return {p->center[0]};
  if (const auto* o = std::get_if<OnePlusPowerLevel>(&spec)) return {o->center[0]};
  return {};
}

// ---------------------------------------------------------------------------
// Noise laws. All densities are symmetric about zero.

struct NoiseSpec;

struct GaussianNoise {
  double sd = 1.0;
};

struct StudentTNoise {
  double dof;
};

struct CauchyNoise {
  double scale = 1.0;
};

/// (1 - r) N(0, 1) + r * contaminant
struct ContaminatedNoise {
  double r;
  std::shared_ptr<const NoiseSpec> contaminant;
};

/// Huber's least-favorable density g0 for level r; gamma_r is solved on construction.
struct LeastFavorableNoise {
  double r;
  double gamma_r;

  explicit LeastFavorableNoise(double level)
      : r(level), gamma_r(level == 0.0 ? std::numeric_limits<double>::infinity() : solve_gamma_r(level)) {
    if (!(level >= 0.0 && level < 1.0)) throw DomainError("contamination level must lie in [0, 1)");
  }
};

struct NoiseSpec {
  std::variant<GaussianNoise, StudentTNoise, CauchyNoise, ContaminatedNoise, LeastFavorableNoise> law;

  double pdf(double t) const;
  double cdf(double t) const;
  double sample(CounterRng& rng) const;
  /// Points where the density is not smooth.
  std::vector<double> breakpoints() const;
  /// sup_t pdf(t).
  double sup_density() const;
};

inline NoiseSpec gaussian_noise(double sd = 1.0) { return {GaussianNoise{sd}}; }
inline NoiseSpec student_t_noise(double dof) { return {StudentTNoise{dof}}; }
inline NoiseSpec cauchy_noise(double scale = 1.0) { return {CauchyNoise{scale}}; }
inline NoiseSpec contaminated_noise(double r, NoiseSpec contaminant) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("contamination level must lie in [0, 1)");
  return {ContaminatedNoise{r, std::make_shared<const NoiseSpec>(std::move(contaminant))}};
}
inline NoiseSpec least_favorable_noise(double r) { return {LeastFavorableNoise(r)}; }

inline double NoiseSpec::pdf(double t) const {
  struct V {
    double t;
    double operator()(const GaussianNoise& g) const { return special::normal_pdf(t / g.sd) / g.sd; }
    double operator()(const StudentTNoise& s) const {
      const double nu = s.dof;
      const double log_c =
          std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi);
      return std::exp(log_c - 0.5 * (nu + 1.0) * std::log1p(t * t / nu));
    }
    double operator()(const CauchyNoise& c) const {
      const double u = t / c.scale;
      return 1.0 / (std::numbers::pi * c.scale * (1.0 + u * u));
    }
    double operator()(const ContaminatedNoise& c) const {
      return (1.0 - c.r) * special::normal_pdf(t) + (c.r > 0.0 ? c.r * c.contaminant->pdf(t) : 0.0);
    }
    double operator()(const LeastFavorableNoise& l) const { return g0_density_with(t, l.r, l.gamma_r); }
  };
  return std::visit(V{t}, law);
}

inline double NoiseSpec::cdf(double t) const {
  struct V {
    double t;
    double operator()(const GaussianNoise& g) const { return special::normal_cdf(t / g.sd); }
    double operator()(const StudentTNoise& s) const {
      return boost::math::cdf(boost::math::students_t(s.dof), t);
    }
    double operator()(const CauchyNoise& c) const { return 0.5 + std::atan(t / c.scale) / std::numbers::pi; }
    double operator()(const ContaminatedNoise& c) const {
      return (1.0 - c.r) * special::normal_cdf(t) + (c.r > 0.0 ? c.r * c.contaminant->cdf(t) : 0.0);
    }
    double operator()(const LeastFavorableNoise& l) const { return g0_cdf_with(t, l.r, l.gamma_r); }
  };
  return std::visit(V{t}, law);
}

namespace detail {

// Bisection on a continuous CDF to a 1e-12 bracket.
template <class Cdf>
double invert_cdf(const Cdf& cdf, double p) {
  double lo = -1.0, hi = 1.0;
  while (cdf(lo) > p) lo *= 2.0;
  while (cdf(hi) < p) hi *= 2.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline double NoiseSpec::sample(CounterRng& rng) const {
  struct V {
    CounterRng& rng;
    double operator()(const GaussianNoise& g) const { return g.sd * special::normal_quantile(rng.uniform()); }
    double operator()(const StudentTNoise& s) const {
      return boost::math::quantile(boost::math::students_t(s.dof), rng.uniform());
    }
    double operator()(const CauchyNoise& c) const {
      return c.scale * std::tan(std::numbers::pi * (rng.uniform() - 0.5));
    }
    double operator()(const ContaminatedNoise& c) const {
      const bool contaminated = rng.uniform() < c.r;
      if (contaminated) return c.contaminant->sample(rng);
      return special::normal_quantile(rng.uniform());
    }
    double operator()(const LeastFavorableNoise& l) const {
      const double p = rng.uniform();
      return detail::invert_cdf([&](double t) { return g0_cdf_with(t, l.r, l.gamma_r); }, p);
    }
  };
  return std::visit(V{rng}, law);
}

inline std::vector<double> NoiseSpec::breakpoints() const {
  if (const auto* c = std::get_if<ContaminatedNoise>(&law)) return c->contaminant->breakpoints();
  if (const auto* l = std::get_if<LeastFavorableNoise>(&law)) {
    if (std::isfinite(l->gamma_r)) return {-l->gamma_r, l->gamma_r};
  }
  return {};
}

inline double NoiseSpec::sup_density() const { return pdf(0.0); }

inline double g0_density(double t, double r) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("g0_density needs r in [0, 1)");
  const double gamma = r == 0.0 ? std::numeric_limits<double>::infinity() : solve_gamma_r(r);
  return g0_density_with(t, r, gamma);
}

// ---------------------------------------------------------------------------
// Model and samples

struct ModelSpec {
  std::size_t d = 1;
  TargetSpec target;
  DesignSpec design = UniformDesign{};
  NoiseLevelSpec noise_level = ConstantLevel{1.0};
  NoiseSpec noise = gaussian_noise();
};

inline void validate(const ModelSpec& m) {
  if (m.d == 0) throw DimensionError("model dimension must be positive");
  if (const auto* d = std::get_if<DegenerateDesign>(&m.design)) {
    validate(*d);
    if (m.d != 1) throw DimensionError("degenerate design is one-dimensional");
  }
}

/// n points in [0,1]^d stored row-major, with responses.
struct SampleSet {
  std::size_t d = 1;
  std::vector<double> x;
  std::vector<double> y;
  std::uint64_t seed = 0;

  std::size_t size() const { return y.size(); }
  std::span<const double> point(std::size_t i) const { return {x.data() + i * d, d}; }
};

/// Draws n design points by inverse CDF (one uniform per coordinate).
inline std::vector<double> sample_design(const DesignSpec& spec, std::size_t d, std::size_t n, CounterRng& rng) {
  if (n == 0) throw DomainError("sample_design needs n >= 1");
  std::vector<double> x(n * d);
  for (auto& v : x) v = design_cdf_inverse(spec, rng.uniform());
  return x;
}

inline std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t n, CounterRng& rng) {
  if (n == 0) throw DomainError("sample_noise needs n >= 1");
  std::vector<double> xi(n);
  for (auto& v : xi) v = spec.sample(rng);
  return xi;
}

/// Design and noise come from separate streams, so changing only
/// noise_seed leaves the design unchanged.
inline SampleSet generate_sample(const ModelSpec& model, std::size_t n, std::uint64_t seed,
                                 std::uint64_t noise_seed, std::uint64_t replication) {
  validate(model);
  auto design_rng = CounterRng::stream(seed, design_stream(replication));
  auto noise_rng = CounterRng::stream(noise_seed, noise_stream(replication));
  SampleSet s;
  s.d = model.d;
  s.seed = seed;
  s.x = sample_design(model.design, model.d, n, design_rng);
  const auto xi = sample_noise(model.noise, n, noise_rng);
  s.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xp = s.point(i);
    const double sigma = noise_level(model.noise_level, xp);
    s.y[i] = model.target(xp) + (sigma == 0.0 ? 0.0 : sigma * xi[i]);
  }
  return s;
}

inline SampleSet generate_sample(const ModelSpec& model, std::size_t n, std::uint64_t seed,
                                 std::uint64_t replication = 0) {
  return generate_sample(model, n, seed, seed, replication);
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_sample_csv(std::ostream& os, const SampleSet& s) {
  for (std::size_t j = 0; j < s.d; ++j) os << 'x' << (j + 1) << ',';
  os << "y\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.d; ++j) os << format_double(s.x[i * s.d + j]) << ',';
    os << format_double(s.y[i]) << '\n';
  }
}

inline SampleSet read_sample_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("sample CSV is empty");
  std::size_t cols = 1 + static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (cols < 2) throw ConfigError("sample CSV needs at least one x column and y");
  {
    std::istringstream hs(line);
    std::string name;
    for (std::size_t j = 0; j < cols; ++j) {
      std::getline(hs, name, ',');
      const std::string want = j + 1 == cols ? "y" : "x" + std::to_string(j + 1);
      if (name != want) throw ConfigError("unexpected CSV header column '" + name + "'");
    }
  }
  SampleSet s;
  s.d = cols - 1;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    for (std::size_t j = 0; j < cols; ++j) {
      double v;
      auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) throw ConfigError("bad number in CSV row " + std::to_string(row));
      (j + 1 == cols ? s.y : s.x).push_back(v);
      p = res.ptr;
      if (j + 1 < cols) {
        if (p == end || *p != ',') throw ConfigError("short CSV row " + std::to_string(row));
        ++p;
      }
    }
    if (p != end) throw ConfigError("trailing data in CSV row " + std::to_string(row));
  }
  return s;
}

inline void save_sample_csv(const std::string& path, const SampleSet& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  write_sample_csv(os, s);
}

inline SampleSet load_sample_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path);
  return read_sample_csv(is);
}

}  // namespace rlpa
