#pragma once

// Bandwidth selection by Lepski's method: the isotropic rule for local
// polynomial fits over a geometric net, and the anisotropic rule for locally
// constant fits built on the auxiliary estimators at h v h'.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rlpa/errors.hpp"
#include "rlpa/kernel.hpp"
#include "rlpa/lpa.hpp"
#include "rlpa/simulate.hpp"
#include "rlpa/variance.hpp"

namespace rlpa {

enum class NetKind { Iso, Aniso };

inline const char* to_string(NetKind k) { return k == NetKind::Iso ? "iso" : "aniso"; }

struct BandwidthNet {
  NetKind kind = NetKind::Iso;
  std::size_t d = 1;
  double epsilon = 0.8;  // ratio actually used, after any coarsening
  double h_minus = 0.0;
  double h_plus = 0.0;
  std::vector<Bandwidth> members;  // iso: descending; aniso: descending by volume, then lexicographically

  std::size_t size() const { return members.size(); }
};

inline double default_h_minus(std::size_t n, std::size_t d) {
  const double ln = std::log(static_cast<double>(n));
  const double dd = static_cast<double>(d);
  return std::pow(ln, 6.0 / dd) / std::pow(static_cast<double>(n), 1.0 / dd);
}

inline double default_h_plus(std::size_t n) { return 1.0 / std::log(static_cast<double>(n)); }

namespace detail {

// Powers h_plus * eps^m that stay at or above h_minus.
inline std::vector<double> geometric_axis(double h_minus, double h_plus, double eps) {
  std::vector<double> out;
  for (double h = h_plus; h >= h_minus * (1.0 - 1e-12); h *= eps) out.push_back(h);
  return out;
}

inline std::size_t net_cardinality(NetKind kind, std::size_t axis_size, std::size_t d) {
  if (kind == NetKind::Iso) return axis_size;
  double c = std::pow(static_cast<double>(axis_size), static_cast<double>(d));
  return c > 1e18 ? static_cast<std::size_t>(-1) : static_cast<std::size_t>(c) + 1;
}

inline bool aniso_before(const Bandwidth& a, const Bandwidth& b) {
  const double va = a.volume(), vb = b.volume();
  if (va != vb) return va > vb;
  return a.values() > b.values();
}

}  // namespace detail

/// Geometric net between explicit bounds. The ratio is lowered when needed
/// so that the net has at most n members.
inline BandwidthNet build_net(NetKind kind, std::size_t n, std::size_t d, double epsilon, double h_minus,
                              double h_plus) {
  if (d == 0) throw DimensionError("net dimension must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("net ratio epsilon must lie in (0, 1)");
  if (!(h_minus > 0.0) || !(h_plus <= 1.0)) throw DomainError("net bounds must satisfy 0 < h_minus, h_plus <= 1");
  if (!(h_minus < h_plus)) throw NetEmpty("bandwidth net is empty: h_minus >= h_plus");
  if (n == 0) throw NetEmpty("bandwidth net needs n >= 1");

  auto axis = detail::geometric_axis(h_minus, h_plus, epsilon);
  while (detail::net_cardinality(kind, axis.size(), d) > n) {
    if (axis.size() <= 1) throw NetEmpty("bandwidth net cannot respect the cardinality cap");
    epsilon *= epsilon;
    axis = detail::geometric_axis(h_minus, h_plus, epsilon);
  }

  BandwidthNet net{kind, d, epsilon, h_minus, h_plus, {}};
  if (kind == NetKind::Iso) {
    for (double h : axis) net.members.push_back(Bandwidth::isotropic(h, d));
    return net;
  }
  std::vector<std::size_t> idx(d, 0);
  while (true) {
    std::vector<double> h(d);
    for (std::size_t j = 0; j < d; ++j) h[j] = axis[idx[j]];
    net.members.emplace_back(std::move(h));
    std::size_t j = 0;
    while (j < d && ++idx[j] == axis.size()) idx[j++] = 0;
    if (j == d) break;
  }
  const auto corner = Bandwidth::isotropic(h_minus, d);
  if (std::find(net.members.begin(), net.members.end(), corner) == net.members.end()) net.members.push_back(corner);
  std::sort(net.members.begin(), net.members.end(), detail::aniso_before);
  return net;
}

/// Net with the default bounds h_- = ln^(6/d)(n) / n^(1/d) and h+ = 1/ln(n).
inline BandwidthNet build_net(NetKind kind, std::size_t n, std::size_t d, double epsilon = 0.8) {
  if (n < 3) throw NetEmpty("bandwidth net needs n >= 3");
  return build_net(kind, n, d, epsilon, default_h_minus(n, d), default_h_plus(n));
}

/// 11 sqrt(ln(n |net|)); the same form serves both rules.
inline double epsilon_term(std::size_t n, std::size_t net_size) {
  if (net_size == 0) throw NetEmpty("epsilon term needs a nonempty net");
  return 11.0 * std::sqrt(std::log(static_cast<double>(n) * static_cast<double>(net_size)));
}

inline double iso_epsilon_term(std::size_t n, const BandwidthNet& net) { return epsilon_term(n, net.size()); }
inline double ani_epsilon_term(std::size_t n, const BandwidthNet& net) { return epsilon_term(n, net.size()); }

struct LepskiConfig {
  double q = 2.0;
  double threshold_multiplier = 1.0;
  std::optional<double> b_constant;  // defaults to B_0 of the grid's entropy bound
  double g_inf = 1.0;

  void validate() const {
    if (!(threshold_multiplier > 0.0)) throw DomainError("threshold multiplier must be positive");
    if (!(q > 0.0)) throw DomainError("risk power q must be positive");
    if (b_constant && !(*b_constant >= 0.0)) throw DomainError("B constant must be nonnegative");
  }

  double resolve_b(const LambdaGrid& grid, const LpaConfig& cfg, std::size_t d, std::size_t n) const {
    if (b_constant) return *b_constant;
    return b0_constant(entropy_config_for(grid, cfg, d, n, g_inf));
  }
};

// ---------------------------------------------------------------------------
// Isotropic rule

struct IsoMemberTrace {
  double h = 0.0;
  bool excluded = false;
  double estimate = 0.0;
  double v_hat = 0.0;
  double variance_term = 0.0;  // V_hat(lambda_h) / (n h^d)
  double threshold = 0.0;      // used when this member plays h'
  std::optional<ContrastSpec> contrast;
  std::optional<KernelSpec> kernel;
  bool admissible = false;
};

struct IsoPairTrace {
  std::size_t h_index;
  std::size_t h_prime_index;
  double difference;
  double threshold;
  bool pass;
};

struct IsoSelection {
  std::size_t chosen = 0;
  double h_hat = 0.0;
  double estimate = 0.0;
  bool fallback = false;
  bool variance_monotone = true;
  double b_constant = 0.0;
  double epsilon_term = 0.0;
  std::vector<IsoMemberTrace> members;
  std::vector<IsoPairTrace> pairs;
};

/// For each net member: D-adaptive fit at h, then the largest h whose
/// estimate stays within the threshold of every estimate at h' <= h.
/// Members where no lambda is valid (or the window leaves the unit cube or
/// holds no points) are excluded.
inline IsoSelection select_bandwidth_iso(const SampleSet& sample, const LambdaGrid& grid, const BandwidthNet& net,
                                         const LpaConfig& cfg, const LepskiConfig& lcfg,
                                         VarianceMode mode = VarianceMode::SelfResiduals) {
  lcfg.validate();
  if (net.members.empty()) throw NetEmpty("bandwidth net is empty");
  detail::require_same_dim(net.d, sample.d, "select_bandwidth_iso net");
  const double n = static_cast<double>(sample.size());
  const double d = static_cast<double>(sample.d);

  IsoSelection sel;
  sel.b_constant = lcfg.resolve_b(grid, cfg, sample.d, sample.size());
  sel.epsilon_term = iso_epsilon_term(sample.size(), net);
  const double scale = lcfg.threshold_multiplier * 15.0 * std::sqrt(2.0) * (sel.b_constant + sel.epsilon_term);

  for (const auto& h : net.members) {
    IsoMemberTrace t;
    t.h = h[0];
    try {
      const auto ls = select_lambda(sample, grid, h, cfg, mode);
      t.estimate = ls.best_fit().estimate;
      t.v_hat = ls.best().v_hat;
      t.contrast = ls.best().contrast;
      t.kernel = ls.best().kernel;
      t.variance_term = t.v_hat / (n * std::pow(t.h, d));
      t.threshold = scale * std::sqrt(t.variance_term);
    } catch (const AllInvalid&) {
      t.excluded = true;
    } catch (const EmptyWindow&) {
      t.excluded = true;
    }
    sel.members.push_back(t);
  }

  // Variance should grow as the bandwidth shrinks (members are descending).
  std::optional<double> prev;
  for (const auto& t : sel.members) {
    if (t.excluded) continue;
    if (prev && t.variance_term < *prev) sel.variance_monotone = false;
    prev = t.variance_term;
  }

  std::optional<std::size_t> chosen, smallest;
  for (std::size_t i = 0; i < sel.members.size(); ++i) {
    auto& ti = sel.members[i];
    if (ti.excluded) continue;
    smallest = i;
    bool ok = true;
    for (std::size_t j = i; j < sel.members.size(); ++j) {
      const auto& tj = sel.members[j];
      if (tj.excluded) continue;
      const double diff = std::abs(ti.estimate - tj.estimate);
      const bool pass = diff <= tj.threshold;
      sel.pairs.push_back({i, j, diff, tj.threshold, pass});
      ok = ok && pass;
    }
    ti.admissible = ok;
    if (ok && !chosen) chosen = i;
  }
  if (!smallest) throw NetUnusable("no bandwidth of the net admits a valid fit");
  sel.fallback = !chosen;
  sel.chosen = chosen ? *chosen : *smallest;
  sel.h_hat = sel.members[sel.chosen].h;
  sel.estimate = sel.members[sel.chosen].estimate;
  return sel;
}

// ---------------------------------------------------------------------------
// Anisotropic rule (locally constant)

/// Locally constant fit at the coordinatewise maximum of h and h'.
inline LpaFit fit_lca_sup(const SampleSet& sample, const ContrastSpec& c, const KernelSpec& k, const Bandwidth& h,
                          const Bandwidth& h_prime, const LpaConfig& cfg) {
  if (cfg.degree != 0) throw DomainError("the anisotropic rule needs a locally constant fit (degree 0)");
  return fit_lpa(sample, c, k, h.join(h_prime), cfg);
}

struct AnisoLambdaTrace {
  ContrastSpec contrast;
  KernelSpec kernel;
  double v_hat;
  bool valid;
};

struct AnisoPairTrace {
  std::size_t h_index;
  std::size_t h_prime_index;
  double joint_estimate;  // f_hat^(h v h')
  double difference;
  double threshold;
  bool pass;
};

struct AnisoSelection {
  std::size_t chosen = 0;
  Bandwidth h_hat = Bandwidth::isotropic(1.0, 1);
  double estimate = 0.0;
  bool fallback = false;
  ContrastSpec contrast = ContrastSpec::huber(1.0);
  KernelSpec kernel = KernelSpec::symmetric(1);
  double v_hat = 0.0;
  double b_constant = 0.0;
  double epsilon_term = 0.0;
  std::vector<AnisoLambdaTrace> lambdas;
  std::vector<std::optional<double>> estimates;  // f_hat^h per member; empty when excluded
  std::vector<AnisoPairTrace> pairs;
};

namespace detail {

/// Bandwidth-free variance estimate from residuals of the constant fit at h+
/// over the whole sample, penalized at h_-.
inline AnisoLambdaTrace aniso_variance(const SampleSet& sample, const ContrastSpec& c, const KernelSpec& k,
                                       const BandwidthNet& net, const LpaConfig& cfg) {
  AnisoLambdaTrace tr{c, k, std::numeric_limits<double>::infinity(), false};
  const auto hp = Bandwidth::isotropic(net.h_plus, sample.d);
  if (!window_in_unit_cube(k, hp, cfg.x0)) return tr;
  const auto ld = make_local_design(sample, k, hp, cfg);
  if (ld.effective_n() == 0) return tr;
  const double t = fit_lpa(ld, c, cfg).estimate;
  const double n = static_cast<double>(sample.size());
  double num = 0.0, den = 0.0;
  for (double y : sample.y) {
    const double psi = c.rho_prime(y - t);
    num += psi * psi;
    den += c.rho_second(y - t);
  }
  num /= n;
  den /= n;
  const double ln = std::log(n);
  const double pen = c.rho_prime_sup() * KernelSpec::sup_norm() * ln * ln /
                     std::sqrt(n * std::pow(net.h_minus, static_cast<double>(sample.d)));
  if (den > denom_floor(sample.size(), 1.0)) {
    const double r = (std::sqrt(num) + pen) / den;
    tr.v_hat = r * r;
    tr.valid = true;
  }
  return tr;
}

}  // namespace detail

/// Picks (rho, K) once from the bandwidth-free variance estimate, then the
/// largest member under the volume order whose auxiliary estimates at h v h'
/// stay within the threshold of f_hat^h' for every h' of no larger volume.
/// Equal volumes are broken toward the larger h_1, then h_2, and so on.
inline AnisoSelection select_bandwidth_aniso(const SampleSet& sample, const LambdaGrid& grid,
                                             const BandwidthNet& net, const LpaConfig& cfg,
                                             const LepskiConfig& lcfg) {
  lcfg.validate();
  grid.validate();
  if (cfg.degree != 0) throw DomainError("the anisotropic rule needs a locally constant fit (degree 0)");
  if (net.members.empty()) throw NetEmpty("bandwidth net is empty");
  detail::require_same_dim(net.d, sample.d, "select_bandwidth_aniso net");
  const double n = static_cast<double>(sample.size());

  AnisoSelection sel;
  std::optional<std::size_t> best;
  for (const auto& k : grid.kernels) {
    for (const auto& c : grid.contrasts) {
      sel.lambdas.push_back(detail::aniso_variance(sample, c, k, net, cfg));
      const auto& tr = sel.lambdas.back();
      if (!tr.valid) continue;
      if (!best) {
        best = sel.lambdas.size() - 1;
        continue;
      }
      const auto& b = sel.lambdas[*best];
      if (std::make_tuple(tr.v_hat, tr.contrast.gamma(), tr.kernel.shift(), static_cast<int>(tr.contrast.kind())) <
          std::make_tuple(b.v_hat, b.contrast.gamma(), b.kernel.shift(), static_cast<int>(b.contrast.kind()))) {
        best = sel.lambdas.size() - 1;
      }
    }
  }
  if (!best) throw NetUnusable("no contrast/kernel pair yields a valid variance estimate at h+");
  sel.contrast = sel.lambdas[*best].contrast;
  sel.kernel = sel.lambdas[*best].kernel;
  sel.v_hat = sel.lambdas[*best].v_hat;
  sel.b_constant = lcfg.resolve_b(grid, cfg, sample.d, sample.size());
  sel.epsilon_term = ani_epsilon_term(sample.size(), net);
  const double scale = lcfg.threshold_multiplier * 16.0 * (sel.b_constant + sel.epsilon_term);

  // f_hat at every bandwidth needed, fitted once per distinct bandwidth.
  std::map<std::vector<double>, std::optional<double>> cache;
  auto estimate_at = [&](const Bandwidth& h) -> std::optional<double> {
    auto it = cache.find(h.values());
    if (it != cache.end()) return it->second;
    std::optional<double> v;
    if (window_in_unit_cube(sel.kernel, h, cfg.x0)) {
      const auto ld = make_local_design(sample, sel.kernel, h, cfg);
      if (ld.effective_n() > 0) v = fit_lpa(ld, sel.contrast, cfg).estimate;
    }
    cache.emplace(h.values(), v);
    return v;
  };

  const auto& m = net.members;
  for (const auto& h : m) sel.estimates.push_back(estimate_at(h));

  std::optional<std::size_t> chosen, corner;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!sel.estimates[i]) continue;
    if (m[i] == Bandwidth::isotropic(net.h_minus, net.d)) corner = i;
    bool ok = true;
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (!sel.estimates[j] || m[j].volume() > m[i].volume()) continue;
      const auto joint = estimate_at(m[i].join(m[j]));
      const double threshold = scale * std::sqrt(sel.v_hat / (n * m[j].volume()));
      const double diff = std::abs(*joint - *sel.estimates[j]);
      const bool pass = diff <= threshold;
      sel.pairs.push_back({i, j, *joint, diff, threshold, pass});
      ok = ok && pass;
    }
    if (ok && !chosen) chosen = i;
  }
  if (!chosen && !corner) throw NetUnusable("no bandwidth of the net admits a valid fit");
  sel.fallback = !chosen;
  sel.chosen = chosen ? *chosen : *corner;
  sel.h_hat = m[sel.chosen];
  sel.estimate = *sel.estimates[sel.chosen];
  return sel;
}

// ---------------------------------------------------------------------------
// Trace export

inline void write_iso_trace_csv(std::ostream& os, const IsoSelection& sel) {
  os << "h,excluded,estimate,v_hat,variance_term,threshold,contrast,gamma,kernel_shift,admissible,chosen\n";
  for (std::size_t i = 0; i < sel.members.size(); ++i) {
    const auto& t = sel.members[i];
    os << format_double(t.h) << ',' << (t.excluded ? 1 : 0) << ',';
    if (t.excluded) {
      os << ",,,,,,,0,0\n";
      continue;
    }
    os << format_double(t.estimate) << ',' << format_double(t.v_hat) << ',' << format_double(t.variance_term) << ','
       << format_double(t.threshold) << ',' << to_string(t.contrast->kind()) << ','
       << format_double(t.contrast->gamma()) << ',';
    for (std::size_t j = 0; j < t.kernel->dim(); ++j) os << (j ? ";" : "") << format_double(t.kernel->shift()[j]);
    os << ',' << (t.admissible ? 1 : 0) << ',' << (i == sel.chosen ? 1 : 0) << '\n';
  }
}

inline void write_iso_pairs_csv(std::ostream& os, const IsoSelection& sel) {
  os << "h,h_prime,difference,threshold,pass\n";
  for (const auto& p : sel.pairs) {
    os << format_double(sel.members[p.h_index].h) << ',' << format_double(sel.members[p.h_prime_index].h) << ','
       << format_double(p.difference) << ',' << format_double(p.threshold) << ',' << (p.pass ? 1 : 0) << '\n';
  }
}

inline std::string format_bandwidth(const Bandwidth& h) {
  std::string s;
  for (std::size_t j = 0; j < h.dim(); ++j) s += (j ? ";" : "") + format_double(h[j]);
  return s;
}

inline void write_aniso_trace_csv(std::ostream& os, const AnisoSelection& sel, const BandwidthNet& net) {
  os << "h,h_prime,joint,estimate_joint,estimate_h_prime,difference,threshold,pass\n";
  for (const auto& p : sel.pairs) {
    const auto& h = net.members[p.h_index];
    const auto& hp = net.members[p.h_prime_index];
    const auto joint = h.join(hp);
    os << format_bandwidth(h) << ',' << format_bandwidth(hp) << ',' << format_bandwidth(joint) << ','
       << format_double(p.joint_estimate) << ',' << format_double(*sel.estimates[p.h_prime_index]) << ',' << format_double(p.difference) << ','
       << format_double(p.threshold) << ',' << (p.pass ? 1 : 0) << '\n';
  }
}

}  // namespace rlpa
