#pragma once

// The command-line subcommands as library functions. Each command reads an
// ExperimentConfig, writes its outputs into a directory and returns the
// paths written. Outputs carry no timestamps or thread counts, so a re-run
// with the same config and seed reproduces them byte for byte.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rlpa/config.hpp"
#include "rlpa/experiment.hpp"
#include "rlpa/lepski.hpp"
#include "rlpa/parametric.hpp"
#include "rlpa/simulate.hpp"
#include "rlpa/variance.hpp"

namespace rlpa {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitMethod = 2, kExitInternal = 3 };

/// Command-line overrides applied on top of the config file.
struct CommandOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out_dir = "out";
  std::optional<double> threshold_multiplier;
  std::optional<double> epsilon;
  std::optional<double> q;
  std::optional<std::string> data;
};

inline void apply_overrides(ExperimentConfig& c, const CommandOptions& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.threshold_multiplier) {
    if (!(*o.threshold_multiplier > 0.0)) throw ConfigError("--threshold-multiplier must be positive");
    c.estimator.threshold_multiplier = *o.threshold_multiplier;
  }
  if (o.epsilon) {
    if (!(*o.epsilon > 0.0 && *o.epsilon < 1.0)) throw ConfigError("--epsilon must lie in (0, 1)");
    c.estimator.net.epsilon = *o.epsilon;
  }
  if (o.q) {
    if (!(*o.q > 0.0)) throw ConfigError("--q must be positive");
    c.q = *o.q;
  }
  if (o.data) c.data = *o.data;
}

// ---------------------------------------------------------------------------
// Shared estimation path

inline LpaConfig lpa_config_for(const ExperimentConfig& c) {
  LpaConfig l;
  l.x0 = c.point();
  l.degree = c.estimator.degree;
  l.box = c.estimator.box;
  return l;
}

inline SampleSet obtain_sample(const ExperimentConfig& c, std::uint64_t replication = 0) {
  if (c.data) {
    auto s = load_sample_csv(*c.data);
    if (s.d != c.model.d) throw ConfigError("dataset dimension does not match model.d");
    return s;
  }
  return generate_sample(c.model, c.n, c.seed, c.effective_noise_seed(), replication);
}

/// Candidate set: configured contrasts (or the data-driven Huber grid at
/// h_ref) times configured kernels (or the defaults for d).
inline LambdaGrid resolve_grid(const SampleSet& s, const ExperimentConfig& c, const Bandwidth& h_ref) {
  LambdaGrid g;
  g.kernels = c.estimator.kernels.empty() ? default_kernels(s.d) : c.estimator.kernels;
  g.contrasts = c.estimator.contrasts.empty()
                    ? default_huber_grid(s, h_ref, lpa_config_for(c), c.estimator.huber_grid_points)
                    : c.estimator.contrasts;
  return g;
}

inline LepskiConfig lepski_config_for(const ExperimentConfig& c) {
  LepskiConfig l;
  l.q = c.q;
  l.threshold_multiplier = c.estimator.threshold_multiplier;
  l.b_constant = c.estimator.b_constant;
  l.g_inf = c.estimator.g_inf;
  return l;
}

struct EstimateOutcome {
  double estimate = 0.0;
  Json report;
  std::vector<std::pair<std::string, std::string>> files;  // name, content
};

inline Json bandwidth_json(const Bandwidth& h) { return h.values(); }

inline EstimateOutcome run_estimator(const SampleSet& s, const ExperimentConfig& c, bool with_traces) {
  const auto cfg = lpa_config_for(c);
  const auto& e = c.estimator;
  EstimateOutcome out;
  out.report["method"] = to_string(e.method);
  out.report["n"] = s.size();
  out.report["x0"] = cfg.x0;
  out.report["degree"] = cfg.degree;

  switch (e.method) {
    case Method::Fixed: {
      if (e.contrasts.size() != 1) throw ConfigError("the fixed method needs exactly one contrast");
      if (e.kernels.size() > 1) throw ConfigError("the fixed method takes at most one kernel");
      const auto k = e.kernels.empty() ? KernelSpec::symmetric(s.d) : e.kernels[0];
      const auto h = e.bandwidth.at(s.size(), s.d);
      const auto ld = make_local_design(s, k, h, cfg);
      const auto fit = fit_lpa(ld, e.contrasts[0], cfg);
      out.estimate = fit.estimate;
      out.report["bandwidth"] = bandwidth_json(h);
      out.report["contrast"] = contrast_to_json(e.contrasts[0]);
      out.report["kernel_shift"] = k.shift();
      out.report["estimate"] = fit.estimate;
      out.report["coefficients"] = fit.coeffs;
      out.report["iterations"] = fit.iterations;
      out.report["converged"] = fit.converged;
      out.report["effective_n"] = fit.effective_n;
      return out;
    }
    case Method::DAdaptive: {
      const auto h = e.bandwidth.at(s.size(), s.d);
      const auto grid = resolve_grid(s, c, h);
      const auto sel = select_lambda(s, grid, h, cfg, e.variance_mode);
      out.estimate = sel.best_fit().estimate;
      out.report["bandwidth"] = bandwidth_json(h);
      out.report["contrast"] = contrast_to_json(sel.best().contrast);
      out.report["kernel_shift"] = sel.best().kernel.shift();
      out.report["v_hat"] = sel.best().v_hat;
      out.report["estimate"] = out.estimate;
      out.report["candidates"] = sel.reports.size();
      if (with_traces) {
        std::ostringstream os;
        write_lambda_trace_csv(os, sel);
        out.files.emplace_back("lambda_trace.csv", os.str());
      }
      return out;
    }
    case Method::LepskiIso: {
      const auto net = e.net.build(NetKind::Iso, s.size(), s.d);
      const auto grid = resolve_grid(s, c, Bandwidth::isotropic(net.h_plus, s.d));
      const auto sel = select_bandwidth_iso(s, grid, net, cfg, lepski_config_for(c), e.variance_mode);
      out.estimate = sel.estimate;
      out.report["h_hat"] = sel.h_hat;
      out.report["estimate"] = sel.estimate;
      out.report["fallback"] = sel.fallback;
      out.report["variance_monotone"] = sel.variance_monotone;
      out.report["b_constant"] = sel.b_constant;
      out.report["epsilon_term"] = sel.epsilon_term;
      out.report["net"] = {{"epsilon", net.epsilon}, {"h_minus", net.h_minus}, {"h_plus", net.h_plus},
                           {"size", net.size()}};
      if (const auto& m = sel.members[sel.chosen]; m.contrast) {
        out.report["contrast"] = contrast_to_json(*m.contrast);
        out.report["kernel_shift"] = m.kernel->shift();
      }
      if (with_traces) {
        std::ostringstream a, b;
        write_iso_trace_csv(a, sel);
        write_iso_pairs_csv(b, sel);
        out.files.emplace_back("iso_trace.csv", a.str());
        out.files.emplace_back("iso_pairs.csv", b.str());
      }
      return out;
    }
    case Method::LepskiAniso: {
      const auto net = e.net.build(NetKind::Aniso, s.size(), s.d);
      const auto grid = resolve_grid(s, c, Bandwidth::isotropic(net.h_plus, s.d));
      const auto sel = select_bandwidth_aniso(s, grid, net, cfg, lepski_config_for(c));
      out.estimate = sel.estimate;
      out.report["h_hat"] = bandwidth_json(sel.h_hat);
      out.report["estimate"] = sel.estimate;
      out.report["fallback"] = sel.fallback;
      out.report["v_hat"] = sel.v_hat;
      out.report["contrast"] = contrast_to_json(sel.contrast);
      out.report["kernel_shift"] = sel.kernel.shift();
      out.report["b_constant"] = sel.b_constant;
      out.report["epsilon_term"] = sel.epsilon_term;
      out.report["net"] = {{"epsilon", net.epsilon}, {"h_minus", net.h_minus}, {"h_plus", net.h_plus},
                           {"size", net.size()}};
      if (with_traces) {
        std::ostringstream a, b;
        write_aniso_trace_csv(a, sel, net);
        b << "contrast,gamma,kernel_shift,v_hat,valid\n";
        for (const auto& l : sel.lambdas) {
          b << to_string(l.contrast.kind()) << ',' << format_double(l.contrast.gamma()) << ','
            << format_shift(l.kernel) << ',' << format_double(l.v_hat) << ',' << (l.valid ? 1 : 0) << '\n';
        }
        out.files.emplace_back("aniso_trace.csv", a.str());
        out.files.emplace_back("aniso_lambdas.csv", b.str());
      }
      return out;
    }
  }
  throw Error("unhandled estimator method");
}

// ---------------------------------------------------------------------------
// Output

class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir_.string());
  }

  void write(const std::string& name, const std::string& content) {
    const auto p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << content;
    if (!out) throw ConfigError("failed writing " + p.string());
    written_.push_back(p.string());
  }

  void write_json(const std::string& name, const Json& j) { write(name, dump_json(j)); }

  void metadata(const std::string& command, const ExperimentConfig& c) {
    Json files = Json::array();
    for (const auto& w : written_) files.push_back(std::filesystem::path(w).filename().string());
    write_json("metadata.json", {{"schema_version", kSchemaVersion},
                                 {"command", command},
                                 {"seed", c.seed},
                                 {"files", files},
                                 {"config", config_to_json(c)}});
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

// ---------------------------------------------------------------------------
// Commands

inline std::vector<std::string> cmd_simulate(ExperimentConfig c, const CommandOptions& o) {
  apply_overrides(c, o);
  OutputDir out(o.out_dir);
  const auto s = generate_sample(c.model, c.n, c.seed, c.effective_noise_seed(), 0);
  std::ostringstream os;
  write_sample_csv(os, s);
  out.write("sample.csv", os.str());
  out.metadata("simulate", c);
  return out.written();
}

inline std::vector<std::string> run_estimation_command(const std::string& name, ExperimentConfig c,
                                                       const CommandOptions& o) {
  apply_overrides(c, o);
  const auto s = obtain_sample(c);
  const auto res = run_estimator(s, c, true);
  OutputDir out(o.out_dir);
  for (const auto& [file, content] : res.files) out.write(file, content);
  out.write_json(name + ".json", res.report);
  out.metadata(name, c);
  return out.written();
}

inline std::vector<std::string> cmd_fit(ExperimentConfig c, const CommandOptions& o) {
  return run_estimation_command("fit", std::move(c), o);
}

inline std::vector<std::string> cmd_select_lambda(ExperimentConfig c, const CommandOptions& o) {
  c.estimator.method = Method::DAdaptive;
  return run_estimation_command("select_lambda", std::move(c), o);
}

inline std::vector<std::string> cmd_lepski_iso(ExperimentConfig c, const CommandOptions& o) {
  c.estimator.method = Method::LepskiIso;
  return run_estimation_command("lepski_iso", std::move(c), o);
}

inline std::vector<std::string> cmd_lepski_aniso(ExperimentConfig c, const CommandOptions& o) {
  c.estimator.method = Method::LepskiAniso;
  return run_estimation_command("lepski_aniso", std::move(c), o);
}

inline Json diagnostics_json(const DiagnosticsReport& d) {
  return {{"phi_h", d.phi_h},
          {"delta_h", d.delta_h},
          {"delta_star_h", d.delta_star_h},
          {"s_h", d.s_h},
          {"c_lambda", d.c_lambda},
          {"numerator", d.numerator},
          {"bias_proxy", d.bias_proxy},
          {"expected_kh", d.expected_kh},
          {"expected_pi_kh2", d.expected_pi_kh2},
          {"inf_curvature", d.inf_curvature},
          {"entropy_integral", d.entropy_integral},
          {"entropy_at_one", d.entropy_at_one},
          {"condition1_ok", d.condition1_ok},
          {"condition2_ok", d.condition2_ok},
          {"condition3_ok", d.condition3_ok}};
}

/// Diagnostics for every configured contrast and kernel at the configured
/// bandwidth and n. Kernels whose window leaves the unit cube are marked.
inline std::vector<std::string> cmd_diagnose(ExperimentConfig c, const CommandOptions& o) {
  apply_overrides(c, o);
  const auto& e = c.estimator;
  if (e.contrasts.empty()) throw ConfigError("diagnose needs at least one contrast");
  const auto kernels = e.kernels.empty() ? std::vector<KernelSpec>{KernelSpec::symmetric(c.model.d)} : e.kernels;
  const auto h = e.bandwidth.at(c.n, c.model.d);
  const auto cfg = lpa_config_for(c);
  const auto holder = c.model.target.holder();
  const double beta = c.diagnose.beta.value_or(holder.beta);
  const double L = c.diagnose.L.value_or(holder.L);
  const LambdaGrid grid{e.contrasts, kernels};
  const auto ent = entropy_config_for(grid, cfg, c.model.d, c.n, e.g_inf);
  const auto pm = PopulationModel::from(c.model);

  Json lambdas = Json::array();
  for (const auto& k : kernels) {
    for (const auto& ct : e.contrasts) {
      Json j;
      if (window_in_unit_cube(k, h, cfg.x0)) {
        j = diagnostics_json(diagnostics(pm, ct, k, h, cfg, c.n, beta, L, ent));
        j["excluded"] = false;
      } else {
        j["excluded"] = true;
      }
      j["contrast"] = contrast_to_json(ct);
      j["kernel_shift"] = k.shift();
      lambdas.push_back(j);
    }
  }
  Json j = {{"n", c.n}, {"bandwidth", bandwidth_json(h)}, {"beta", beta}, {"L", L}, {"lambdas", lambdas}};
  OutputDir out(o.out_dir);
  out.write_json("diagnostics.json", j);
  out.metadata("diagnose", c);
  return out.written();
}

inline std::vector<double> default_parametric_grid() { return geometric_grid(0.1, 10.0, 12); }

inline std::vector<std::string> cmd_parametric(ExperimentConfig c, const CommandOptions& o) {
  apply_overrides(c, o);
  if (c.data && c.replications > 1) throw ConfigError("a dataset supports a single replication only");
  const auto gammas = c.parametric.gammas.empty() ? default_parametric_grid() : c.parametric.gammas;
  const double truth = c.model.target(c.point());
  const std::size_t R = c.replications;

  struct Rep {
    ParametricResult result;
    double mean;
  };
  const auto reps = parallel_map<Rep>(R, resolve_threads(o.threads), [&](std::size_t r) {
    const auto s = obtain_sample(c, r);
    double mean = 0.0;
    for (double v : s.y) mean += v;
    mean /= static_cast<double>(s.size());
    return Rep{adaptive_scale_location(s.y, gammas, c.parametric.box), mean};
  });

  OutputDir out(o.out_dir);
  std::ostringstream os;
  write_parametric_csv(os, reps[0].result);
  out.write("parametric.csv", os.str());

  Json j = {{"gamma_hat", reps[0].result.gamma_hat},
            {"estimate", reps[0].result.estimate},
            {"replications", R},
            {"gammas", gammas}};
  if (R > 1) {
    double mse_adaptive = 0.0, mse_mean = 0.0;
    std::size_t largest = 0;
    std::vector<double> mse_fixed(gammas.size(), 0.0);
    for (const auto& rep : reps) {
      mse_adaptive += std::pow(rep.result.estimate - truth, 2);
      mse_mean += std::pow(rep.mean - truth, 2);
      for (std::size_t k = 0; k < gammas.size(); ++k) mse_fixed[k] += std::pow(rep.result.reports[k].estimate - truth, 2);
      if (rep.result.chosen + 1 == gammas.size()) ++largest;
    }
    for (auto& v : mse_fixed) v /= static_cast<double>(R);
    j["truth"] = truth;
    j["mse_adaptive"] = mse_adaptive / static_cast<double>(R);
    j["mse_mean"] = mse_mean / static_cast<double>(R);
    j["mse_fixed"] = mse_fixed;
    j["fraction_largest_gamma"] = static_cast<double>(largest) / static_cast<double>(R);
  }
  out.write_json("parametric.json", j);
  out.metadata("parametric", c);
  return out.written();
}

/// Monte Carlo risk (1/R) sum |f_hat(x0) - f*(x0)|^q for each n, plus the
/// least-squares slope of log-risk on log-n. Every n reuses the same seed.
inline RiskReport run_rates(const ExperimentConfig& c, std::size_t threads) {
  if (c.data) throw ConfigError("rates simulates its own samples; remove 'data'");
  const auto ns = c.n_list.empty() ? std::vector<std::size_t>{c.n} : c.n_list;
  const double truth = c.model.target(c.point());
  RiskReport rep;
  rep.q = c.q;
  for (std::size_t n : ns) {
    auto cn = c;
    cn.n = n;
    const auto errors = parallel_map<double>(c.replications, threads, [&](std::size_t r) {
      return run_estimator(obtain_sample(cn, r), cn, false).estimate - truth;
    });
    rep.rows.push_back(empirical_risk(n, errors, c.q));
  }
  if (rep.rows.size() >= 2) rep.fit = fit_log_slope(rep);
  return rep;
}

inline std::vector<std::string> cmd_rates(ExperimentConfig c, const CommandOptions& o) {
  apply_overrides(c, o);
  const auto rep = run_rates(c, resolve_threads(o.threads));
  OutputDir out(o.out_dir);
  std::ostringstream os;
  write_risk_csv(os, rep);
  out.write("risk.csv", os.str());
  Json j = {{"q", rep.q}, {"sample_sizes", rep.rows.size()}};
  if (rep.rows.size() >= 2) {
    j["slope"] = rep.fit.slope;
    j["slope_se"] = rep.fit.slope_se;
    j["intercept"] = rep.fit.intercept;
  } else {
    j["slope"] = nullptr;
  }
  out.write_json("rates.json", j);
  out.metadata("rates", c);
  return out.written();
}

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate",     "fit",      "select-lambda", "lepski-iso",
                                              "lepski-aniso", "diagnose", "parametric",    "rates"};
  return names;
}

inline std::vector<std::string> run_command(const std::string& name, const ExperimentConfig& c,
                                            const CommandOptions& o) {
  if (name == "simulate") return cmd_simulate(c, o);
  if (name == "fit") return cmd_fit(c, o);
  if (name == "select-lambda") return cmd_select_lambda(c, o);
  if (name == "lepski-iso") return cmd_lepski_iso(c, o);
  if (name == "lepski-aniso") return cmd_lepski_aniso(c, o);
  if (name == "diagnose") return cmd_diagnose(c, o);
  if (name == "parametric") return cmd_parametric(c, o);
  if (name == "rates") return cmd_rates(c, o);
  throw ConfigError("unknown command '" + name + "'");
}

/// Maps an exception to the process exit code.
inline int exit_code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const ConfigError&) {
    return kExitConfig;
  } catch (const DomainError&) {
    return kExitConfig;
  } catch (const DimensionError&) {
    return kExitConfig;
  } catch (const MethodError&) {
    return kExitMethod;
  } catch (...) {
    return kExitInternal;
  }
}

}  // namespace rlpa
