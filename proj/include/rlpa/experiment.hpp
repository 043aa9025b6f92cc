#pragma once

// Monte Carlo plumbing: worker-count resolution, an index-ordered parallel
// map over replications, empirical risks and log-log slope fits.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "rlpa/errors.hpp"
#include "rlpa/simulate.hpp"

namespace rlpa {

inline constexpr const char* kThreadsEnv = "ROBUST_LPA_THREADS";

/// Flag value if given, else the environment variable, else the hardware
/// concurrency (at least one).
inline std::size_t resolve_threads(std::optional<std::size_t> flag) {
  if (flag) {
    if (*flag == 0) throw ConfigError("--threads must be positive");
    return *flag;
  }
  if (const char* env = std::getenv(kThreadsEnv); env && *env) {
    std::size_t v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto res = std::from_chars(env, end, v);
    if (res.ec != std::errc() || res.ptr != end || v == 0) {
      throw ConfigError(std::string(kThreadsEnv) + " must be a positive integer");
    }
    return v;
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Evaluates fn(0), ..., fn(count-1) on up to `threads` workers. Results are
/// stored by index, so the output does not depend on scheduling. If any call
/// throws, the exception of the lowest failing index is rethrown.
template <class T>
std::vector<T> parallel_map(std::size_t count, std::size_t threads, const std::function<T(std::size_t)>& fn) {
  std::vector<std::optional<T>> slots(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, count));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct RiskRow {
  std::size_t n = 0;
  std::size_t replications = 0;
  double risk = 0.0;       // (1/R) sum |error|^q
  double std_error = 0.0;  // standard error of that mean
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

struct RiskReport {
  double q = 2.0;
  std::vector<RiskRow> rows;
  SlopeFit fit;
};

inline RiskRow empirical_risk(std::size_t n, std::span<const double> errors, double q) {
  if (errors.empty()) throw EmptyInput();
  RiskRow row;
  row.n = n;
  row.replications = errors.size();
  std::vector<double> loss(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) loss[i] = std::pow(std::abs(errors[i]), q);
  double mean = 0.0;
  for (double v : loss) mean += v;
  mean /= static_cast<double>(loss.size());
  row.risk = mean;
  if (loss.size() > 1) {
    double ss = 0.0;
    for (double v : loss) ss += (v - mean) * (v - mean);
    row.std_error = std::sqrt(ss / static_cast<double>(loss.size() - 1) / static_cast<double>(loss.size()));
  }
  return row;
}

/// Ordinary least squares of log(risk) on log(n).
inline SlopeFit fit_log_slope(std::span<const double> ns, std::span<const double> risks) {
  detail::require_same_dim(ns.size(), risks.size(), "fit_log_slope");
  if (ns.size() < 2) throw DomainError("slope fit needs at least two sample sizes");
  const std::size_t k = ns.size();
  std::vector<double> x(k), y(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(ns[i] > 0.0) || !(risks[i] > 0.0)) throw DomainError("slope fit needs positive sizes and risks");
    x[i] = std::log(ns[i]);
    y[i] = std::log(risks[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("slope fit needs distinct sample sizes");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (k > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double e = y[i] - f.intercept - f.slope * x[i];
      rss += e * e;
    }
    f.slope_se = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
  }
  return f;
}

inline SlopeFit fit_log_slope(const RiskReport& r) {
  std::vector<double> ns, risks;
  for (const auto& row : r.rows) {
    ns.push_back(static_cast<double>(row.n));
    risks.push_back(row.risk);
  }
  return fit_log_slope(ns, risks);
}

inline void write_risk_csv(std::ostream& os, const RiskReport& r) {
  os << "n,replications,q,risk,std_error\n";
  for (const auto& row : r.rows) {
    os << row.n << ',' << row.replications << ',' << format_double(r.q) << ',' << format_double(row.risk) << ','
       << format_double(row.std_error) << '\n';
  }
}

}  // namespace rlpa
