#pragma once

// Experiment configuration as a JSON document. Reading is strict: unknown
// keys and wrong types raise ConfigError. Writing is canonical (sorted keys,
// two-space indent, shortest round-trip numbers), so a file produced by
// save_config reloads and re-saves byte-identically.

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rlpa/contrast.hpp"
#include "rlpa/errors.hpp"
#include "rlpa/kernel.hpp"
#include "rlpa/lepski.hpp"
#include "rlpa/simulate.hpp"
#include "rlpa/variance.hpp"

namespace rlpa {

using Json = nlohmann::json;

/// h = constant * n^(-exponent) on every axis, or explicit per-axis values.
struct BandwidthRule {
  std::vector<double> values;
  double constant = 1.0;
  double exponent = 0.0;

  Bandwidth at(std::size_t n, std::size_t d) const {
    if (!values.empty()) {
      if (values.size() == 1) return Bandwidth::isotropic(values[0], d);
      detail::require_same_dim(values.size(), d, "bandwidth");
      return Bandwidth(values);
    }
    return Bandwidth::isotropic(constant * std::pow(static_cast<double>(n), -exponent), d);
  }
};

struct NetConfig {
  double epsilon = 0.8;
  std::optional<double> h_minus;  // defaults to ln^(6/d)(n) / n^(1/d)
  std::optional<double> h_plus;   // defaults to 1 / ln(n)

  BandwidthNet build(NetKind kind, std::size_t n, std::size_t d) const {
    const double lo = h_minus ? *h_minus : default_h_minus(n, d);
    const double hi = h_plus ? *h_plus : default_h_plus(n);
    if (!h_minus && !h_plus && n < 3) throw NetEmpty("bandwidth net needs n >= 3");
    return build_net(kind, n, d, epsilon, lo, hi);
  }
};

enum class Method { Fixed, DAdaptive, LepskiIso, LepskiAniso };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Fixed: return "fixed";
    case Method::DAdaptive: return "d-adaptive";
    case Method::LepskiIso: return "lepski-iso";
    case Method::LepskiAniso: return "lepski-aniso";
  }
  return "fixed";
}

struct EstimatorConfig {
  Method method = Method::Fixed;
  int degree = 0;
  double box = 10.0;
  std::vector<ContrastSpec> contrasts;  // empty: data-driven Huber grid
  int huber_grid_points = 12;
  std::vector<KernelSpec> kernels;  // empty: default kernels for d
  BandwidthRule bandwidth;
  VarianceMode variance_mode = VarianceMode::SelfResiduals;
  NetConfig net;
  double threshold_multiplier = 1.0;
  std::optional<double> b_constant;
  double g_inf = 1.0;
};

struct DiagnoseConfig {
  std::optional<double> beta;  // defaults to the target's Hoelder metadata
  std::optional<double> L;
};

struct ParametricConfig {
  std::vector<double> gammas;  // empty: 12 geometric scales on [0.1, 10]
  double box = 1e6;
};

struct ExperimentConfig {
  std::string scenario = "unnamed";
  ModelSpec model;
  std::size_t n = 1000;
  std::vector<std::size_t> n_list;
  std::size_t replications = 1;
  double q = 2.0;
  std::vector<double> x0;  // defaults to the cube center
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> noise_seed;
  std::optional<std::string> data;  // CSV dataset used instead of simulation
  EstimatorConfig estimator;
  DiagnoseConfig diagnose;
  ParametricConfig parametric;

  std::vector<double> point() const { return x0.empty() ? std::vector<double>(model.d, 0.5) : x0; }
  std::uint64_t effective_noise_seed() const { return noise_seed ? *noise_seed : seed; }
};

// ---------------------------------------------------------------------------
// Strict reader

namespace detail {

class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(where() + " is missing key '" + key + "'");
    used_.insert(key);
    return j_.at(key);
  }

  ObjectReader child(const std::string& key) { return ObjectReader(raw(key), path_ + "." + key); }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
    return v.get<double>();
  }
  double number_or(const std::string& key, double def) { return has(key) ? number(key) : def; }
  std::optional<double> opt_number(const std::string& key) {
    return has(key) ? std::optional<double>(number(key)) : std::nullopt;
  }

  std::uint64_t unsigned_int(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_unsigned()) throw ConfigError(where(key) + " must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  std::uint64_t unsigned_or(const std::string& key, std::uint64_t def) { return has(key) ? unsigned_int(key) : def; }

  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
    return v.get<std::string>();
  }
  std::string string_or(const std::string& key, const std::string& def) { return has(key) ? string(key) : def; }

  std::vector<double> numbers(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) throw ConfigError(where(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(where(key) + " must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<double> numbers_or(const std::string& key) { return has(key) ? numbers(key) : std::vector<double>{}; }

  std::string where(const std::string& key = "") const { return key.empty() ? path_ : path_ + "." + key; }

  /// Every key of the object must have been consumed.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + path_);
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline std::size_t as_size(double v, const std::string& what) {
  if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError(what + " must be a nonnegative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model pieces

inline TargetSpec target_from_json(detail::ObjectReader r, std::size_t d) {
  const auto type = r.string("type");
  TargetSpec::Variant fn;
  if (type == "constant") {
    fn = ConstantTarget{r.number_or("value", 0.0)};
  } else if (type == "polynomial") {
    fn = PolynomialTarget{r.numbers("coeffs"), detail::as_size(r.number_or("axis", 0), "axis"),
                          r.number_or("center", 0.0)};
  } else if (type == "cusp") {
    CuspTarget c{r.numbers("center"), r.numbers("exponent"), r.numbers("weight")};
    if (c.center.size() != d || c.exponent.size() != d || c.weight.size() != d) {
      throw ConfigError(r.where() + ": cusp center, exponent and weight need one entry per axis");
    }
    fn = c;
  } else if (type == "sinusoid") {
    fn = SinusoidTarget{r.number_or("amplitude", 1.0), r.number_or("frequency", 1.0), r.number_or("phase", 0.0),
                        detail::as_size(r.number_or("axis", 0), "axis")};
  } else {
    throw ConfigError(r.where("type") + ": unknown target '" + type + "'");
  }
  std::optional<HolderInfo> holder;
  if (r.has("holder")) {
    auto h = r.child("holder");
    holder = HolderInfo{h.number("beta"), h.number("L"), h.number("M")};
    h.finish();
  }
  r.finish();
  return holder ? TargetSpec(fn, *holder) : TargetSpec(fn);
}

inline Json target_to_json(const TargetSpec& t) {
  Json j;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ConstantTarget>) {
          j = {{"type", "constant"}, {"value", f.value}};
        } else if constexpr (std::is_same_v<T, PolynomialTarget>) {
          j = {{"type", "polynomial"}, {"coeffs", f.coeffs}, {"axis", f.axis}, {"center", f.center}};
        } else if constexpr (std::is_same_v<T, CuspTarget>) {
          j = {{"type", "cusp"}, {"center", f.center}, {"exponent", f.exponent}, {"weight", f.weight}};
        } else {
          j = {{"type", "sinusoid"}, {"amplitude", f.amplitude}, {"frequency", f.frequency}, {"phase", f.phase},
               {"axis", f.axis}};
        }
      },
      t.function());
  if (t.has_holder_override()) {
    const auto h = t.holder();
    j["holder"] = {{"beta", h.beta}, {"L", h.L}, {"M", h.M}};
  }
  return j;
}

inline DesignSpec design_from_json(detail::ObjectReader r) {
  const auto type = r.string("type");
  DesignSpec out;
  if (type == "uniform") {
    out = UniformDesign{};
  } else if (type == "degenerate") {
    DegenerateDesign d{r.number("s"), r.number_or("x0", 0.5)};
    validate(d);
    out = d;
  } else {
    throw ConfigError(r.where("type") + ": unknown design '" + type + "'");
  }
  r.finish();
  return out;
}

inline Json design_to_json(const DesignSpec& d) {
  if (const auto* g = std::get_if<DegenerateDesign>(&d)) return {{"type", "degenerate"}, {"s", g->s}, {"x0", g->x0}};
  return {{"type", "uniform"}};
}

inline NoiseLevelSpec level_from_json(detail::ObjectReader r) {
  const auto type = r.string("type");
  NoiseLevelSpec out;
  if (type == "constant") {
    const double s = r.number_or("sigma", 1.0);
    if (!(s >= 0.0)) throw ConfigError(r.where("sigma") + " must be nonnegative");
    out = ConstantLevel{s};
  } else if (type == "power_distance" || type == "one_plus_power") {
    const double a = r.number("alpha");
    auto c = r.numbers("center");
    if (c.empty()) throw ConfigError(r.where("center") + " must be nonempty");
    if (type == "power_distance") out = PowerDistanceLevel{a, c}; else out = OnePlusPowerLevel{a, c};
  } else {
    throw ConfigError(r.where("type") + ": unknown noise level '" + type + "'");
  }
  r.finish();
  return out;
}

inline Json level_to_json(const NoiseLevelSpec& l) {
  if (const auto* c = std::get_if<ConstantLevel>(&l)) return {{"type", "constant"}, {"sigma", c->sigma}};
  if (const auto* p = std::get_if<PowerDistanceLevel>(&l)) {
    return {{"type", "power_distance"}, {"alpha", p->alpha}, {"center", p->center}};
  }
  const auto& o = std::get<OnePlusPowerLevel>(l);
  return {{"type", "one_plus_power"}, {"alpha", o.alpha}, {"center", o.center}};
}

inline NoiseSpec noise_from_json(detail::ObjectReader r) {
  const auto type = r.string("type");
  NoiseSpec out;
  if (type == "gaussian") {
    const double sd = r.number_or("sd", 1.0);
    if (!(sd > 0.0)) throw ConfigError(r.where("sd") + " must be positive");
    out = gaussian_noise(sd);
  } else if (type == "student_t") {
    const double dof = r.number("dof");
    if (!(dof > 0.0)) throw ConfigError(r.where("dof") + " must be positive");
    out = student_t_noise(dof);
  } else if (type == "cauchy") {
    const double s = r.number_or("scale", 1.0);
    if (!(s > 0.0)) throw ConfigError(r.where("scale") + " must be positive");
    out = cauchy_noise(s);
  } else if (type == "contaminated") {
    const double level = r.number("r");
    out = contaminated_noise(level, noise_from_json(r.child("contaminant")));
  } else if (type == "least_favorable") {
    out = least_favorable_noise(r.number("r"));
  } else {
    throw ConfigError(r.where("type") + ": unknown noise '" + type + "'");
  }
  r.finish();
  return out;
}

inline Json noise_to_json(const NoiseSpec& n) {
  struct V {
    Json operator()(const GaussianNoise& g) const { return {{"type", "gaussian"}, {"sd", g.sd}}; }
    Json operator()(const StudentTNoise& s) const { return {{"type", "student_t"}, {"dof", s.dof}}; }
    Json operator()(const CauchyNoise& c) const { return {{"type", "cauchy"}, {"scale", c.scale}}; }
    Json operator()(const ContaminatedNoise& c) const {
      return {{"type", "contaminated"}, {"r", c.r}, {"contaminant", noise_to_json(*c.contaminant)}};
    }
    Json operator()(const LeastFavorableNoise& l) const { return {{"type", "least_favorable"}, {"r", l.r}}; }
  };
  return std::visit(V{}, n.law);
}

inline ModelSpec model_from_json(detail::ObjectReader r) {
  ModelSpec m;
  m.d = detail::as_size(r.number_or("d", 1), "model.d");
  if (m.d == 0) throw ConfigError("model.d must be positive");
  m.target = target_from_json(r.child("target"), m.d);
  if (r.has("design")) m.design = design_from_json(r.child("design"));
  if (r.has("noise_level")) m.noise_level = level_from_json(r.child("noise_level"));
  if (r.has("noise")) m.noise = noise_from_json(r.child("noise"));
  r.finish();
  try {
    validate(m);
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return m;
}

inline Json model_to_json(const ModelSpec& m) {
  return {{"d", m.d},
          {"target", target_to_json(m.target)},
          {"design", design_to_json(m.design)},
          {"noise_level", level_to_json(m.noise_level)},
          {"noise", noise_to_json(m.noise)}};
}

// ---------------------------------------------------------------------------
// Estimator and experiment

inline ContrastSpec contrast_from_json(detail::ObjectReader r) {
  const auto type = r.string("type");
  const double g = r.number("gamma");
  r.finish();
  if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError("contrast gamma must be positive and finite");
  if (type == "huber") return ContrastSpec::huber(g);
  if (type == "arctan") return ContrastSpec::arctan(g);
  throw ConfigError("unknown contrast '" + type + "'");
}

inline Json contrast_to_json(const ContrastSpec& c) { return {{"type", to_string(c.kind())}, {"gamma", c.gamma()}}; }

inline Method method_from_string(const std::string& s) {
  for (auto m : {Method::Fixed, Method::DAdaptive, Method::LepskiIso, Method::LepskiAniso}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown estimator method '" + s + "'");
}

inline EstimatorConfig estimator_from_json(detail::ObjectReader r, std::size_t d) {
  EstimatorConfig e;
  e.method = method_from_string(r.string_or("method", "fixed"));
  e.degree = static_cast<int>(detail::as_size(r.number_or("degree", 0), "estimator.degree"));
  e.box = r.number_or("box", 10.0);
  if (!(e.box > 0.0)) throw ConfigError("estimator.box must be positive");
  if (r.has("contrasts")) {
    const auto& arr = r.raw("contrasts");
    if (!arr.is_array()) throw ConfigError("estimator.contrasts must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      e.contrasts.push_back(contrast_from_json(detail::ObjectReader(arr[i], "estimator.contrasts")));
    }
  }
  e.huber_grid_points =
      static_cast<int>(detail::as_size(r.number_or("huber_grid_points", 12), "estimator.huber_grid_points"));
  if (e.huber_grid_points < 1) throw ConfigError("estimator.huber_grid_points must be positive");
  if (r.has("kernels")) {
    const auto& arr = r.raw("kernels");
    if (!arr.is_array()) throw ConfigError("estimator.kernels must be an array of shift vectors");
    for (const auto& k : arr) {
      if (!k.is_array()) throw ConfigError("estimator.kernels must be an array of shift vectors");
      std::vector<double> shift;
      for (const auto& v : k) {
        if (!v.is_number()) throw ConfigError("kernel shifts must be numbers");
        shift.push_back(v.get<double>());
      }
      if (shift.size() != d) throw ConfigError("kernel shift needs one entry per axis");
      try {
        e.kernels.emplace_back(shift);
      } catch (const Error& err) {
        throw ConfigError(std::string("estimator.kernels: ") + err.what());
      }
    }
  }
  if (r.has("bandwidth")) {
    auto b = r.child("bandwidth");
    e.bandwidth.values = b.numbers_or("h");
    e.bandwidth.constant = b.number_or("constant", 1.0);
    e.bandwidth.exponent = b.number_or("exponent", 0.0);
    b.finish();
    for (double h : e.bandwidth.values)
      if (!(h > 0.0 && h <= 1.0)) throw ConfigError("bandwidth values must lie in (0, 1]");
    if (!(e.bandwidth.constant > 0.0)) throw ConfigError("bandwidth constant must be positive");
  }
  const auto mode = r.string_or("variance_mode", "self");
  if (mode == "self") e.variance_mode = VarianceMode::SelfResiduals;
  else if (mode == "pre-estimator") e.variance_mode = VarianceMode::PreEstimator;
  else throw ConfigError("estimator.variance_mode must be 'self' or 'pre-estimator'");
  if (r.has("net")) {
    auto n = r.child("net");
    e.net.epsilon = n.number_or("epsilon", 0.8);
    e.net.h_minus = n.opt_number("h_minus");
    e.net.h_plus = n.opt_number("h_plus");
    n.finish();
  }
  e.threshold_multiplier = r.number_or("threshold_multiplier", 1.0);
  e.b_constant = r.opt_number("b_constant");
  e.g_inf = r.number_or("g_inf", 1.0);
  r.finish();
  return e;
}

inline Json estimator_to_json(const EstimatorConfig& e) {
  Json j = {{"method", to_string(e.method)},
            {"degree", e.degree},
            {"box", e.box},
            {"huber_grid_points", e.huber_grid_points},
            {"variance_mode", e.variance_mode == VarianceMode::SelfResiduals ? "self" : "pre-estimator"},
            {"threshold_multiplier", e.threshold_multiplier},
            {"g_inf", e.g_inf}};
  if (!e.contrasts.empty()) {
    j["contrasts"] = Json::array();
    for (const auto& c : e.contrasts) j["contrasts"].push_back(contrast_to_json(c));
  }
  if (!e.kernels.empty()) {
    j["kernels"] = Json::array();
    for (const auto& k : e.kernels) j["kernels"].push_back(k.shift());
  }
  Json b = {{"constant", e.bandwidth.constant}, {"exponent", e.bandwidth.exponent}};
  if (!e.bandwidth.values.empty()) b["h"] = e.bandwidth.values;
  j["bandwidth"] = b;
  Json net = {{"epsilon", e.net.epsilon}};
  if (e.net.h_minus) net["h_minus"] = *e.net.h_minus;
  if (e.net.h_plus) net["h_plus"] = *e.net.h_plus;
  j["net"] = net;
  if (e.b_constant) j["b_constant"] = *e.b_constant;
  return j;
}

inline ExperimentConfig config_from_json(const Json& root) {
  detail::ObjectReader r(root, "config");
  ExperimentConfig c;
  c.scenario = r.string_or("scenario", "unnamed");
  c.model = model_from_json(r.child("model"));
  c.n = detail::as_size(r.number_or("n", 1000), "n");
  if (c.n == 0) throw ConfigError("n must be positive");
  for (double v : r.numbers_or("n_list")) c.n_list.push_back(detail::as_size(v, "n_list"));
  for (std::size_t i = 0; i < c.n_list.size(); ++i) {
    if (c.n_list[i] == 0 || (i > 0 && c.n_list[i] <= c.n_list[i - 1])) {
      throw ConfigError("n_list must be positive and strictly ascending");
    }
  }
  c.replications = detail::as_size(r.number_or("replications", 1), "replications");
  if (c.replications == 0) throw ConfigError("replications must be at least 1");
  c.q = r.number_or("q", 2.0);
  if (!(c.q > 0.0)) throw ConfigError("q must be positive");
  c.x0 = r.numbers_or("x0");
  if (!c.x0.empty()) {
    if (c.x0.size() != c.model.d) throw ConfigError("x0 needs one entry per axis");
    for (double v : c.x0)
      if (!(v > 0.0 && v < 1.0)) throw ConfigError("x0 must lie in the open unit cube");
  }
  c.seed = r.unsigned_or("seed", 1);
  if (r.has("noise_seed")) c.noise_seed = r.unsigned_int("noise_seed");
  if (r.has("data")) c.data = r.string("data");
  if (r.has("estimator")) c.estimator = estimator_from_json(r.child("estimator"), c.model.d);
  if (r.has("diagnose")) {
    auto d = r.child("diagnose");
    c.diagnose.beta = d.opt_number("beta");
    c.diagnose.L = d.opt_number("L");
    d.finish();
  }
  if (r.has("parametric")) {
    auto p = r.child("parametric");
    c.parametric.gammas = p.numbers_or("gammas");
    for (double g : c.parametric.gammas)
      if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError("parametric.gammas must be positive and finite");
    c.parametric.box = p.number_or("box", 1e6);
    p.finish();
  }
  r.finish();
  return c;
}

inline Json config_to_json(const ExperimentConfig& c) {
  Json j = {{"scenario", c.scenario},
            {"model", model_to_json(c.model)},
            {"n", c.n},
            {"replications", c.replications},
            {"q", c.q},
            {"seed", c.seed},
            {"estimator", estimator_to_json(c.estimator)}};
  if (!c.n_list.empty()) j["n_list"] = c.n_list;
  if (!c.x0.empty()) j["x0"] = c.x0;
  if (c.noise_seed) j["noise_seed"] = *c.noise_seed;
  if (c.data) j["data"] = *c.data;
  Json d = Json::object();
  if (c.diagnose.beta) d["beta"] = *c.diagnose.beta;
  if (c.diagnose.L) d["L"] = *c.diagnose.L;
  j["diagnose"] = d;
  Json p = {{"box", c.parametric.box}};
  if (!c.parametric.gammas.empty()) p["gammas"] = c.parametric.gammas;
  j["parametric"] = p;
  return j;
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

inline ExperimentConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string serialize_config(const ExperimentConfig& c) { return dump_json(config_to_json(c)); }

inline void save_config(const std::string& path, const ExperimentConfig& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write config file " + path);
  out << serialize_config(c);
}

}  // namespace rlpa
