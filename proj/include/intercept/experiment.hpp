#pragma once

// Seeded sweeps over one config key, per-trial and per-value CSV output.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "intercept/config.hpp"
#include "intercept/errors.hpp"
#include "intercept/sim/mission.hpp"

namespace intercept::experiment {

using config::Json;

struct ExperimentSpec {
  Json base = config::defaults();  // fully resolved tree
  std::string variable = "target.speed";
  std::vector<double> values;
  std::size_t trials = 1;
  std::uint64_t seed_base = 0;

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (values.empty()) throw ConfigError("sweep values must be non-empty");
  }
};

/// Spec document: {"base": {...}, "variable": "a.b", "values": [...],
/// "trials": n, "seed_base": s}. Extra config layers (e.g. --config files)
/// apply under the document's own base.
inline ExperimentSpec parse_spec(const Json& doc, const std::vector<Json>& layers = {},
                                 const std::vector<std::string>& overrides = {}) {
  if (!doc.is_object()) throw ConfigError("experiment spec must be a JSON object");
  for (const auto& [k, v] : doc.items()) {
    if (k != "base" && k != "variable" && k != "values" && k != "trials" && k != "seed_base") {
      throw ConfigError("unknown experiment key: " + k);
    }
  }
  ExperimentSpec spec;
  std::vector<Json> all = layers;
  if (doc.contains("base")) all.push_back(doc.at("base"));
  spec.base = config::resolve(all, overrides);

  if (!doc.contains("variable") || !doc.at("variable").is_string()) {
    throw ConfigError("experiment needs a string 'variable'");
  }
  spec.variable = doc.at("variable").get<std::string>();
  if (!doc.contains("values") || !doc.at("values").is_array()) {
    throw ConfigError("experiment needs a 'values' array");
  }
  for (const auto& v : doc.at("values")) {
    if (!v.is_number()) throw ConfigError("sweep values must be numbers");
    spec.values.push_back(v.get<double>());
  }
  if (doc.contains("trials")) {
    if (!doc.at("trials").is_number_unsigned()) throw ConfigError("trials must be a non-negative integer");
    spec.trials = doc.at("trials").get<std::size_t>();
  }
  if (doc.contains("seed_base")) {
    if (!doc.at("seed_base").is_number_unsigned()) throw ConfigError("seed_base must be a non-negative integer");
    spec.seed_base = doc.at("seed_base").get<std::uint64_t>();
  }
  spec.validate();
  return spec;
}

struct Trial {
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  sim::MissionResult result;
};

struct Quartiles {
  double median = std::numeric_limits<double>::quiet_NaN();
  double q25 = std::numeric_limits<double>::quiet_NaN();
  double q75 = std::numeric_limits<double>::quiet_NaN();
  double min = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
  std::size_t outliers = 0;  // beyond 1.5 IQR from the quartiles
  std::size_t count = 0;     // finite samples
};

struct SummaryRow {
  double sweep_value = 0.0;
  std::size_t trials = 0;
  double success_rate = 0.0;
  double mean_loops = 0.0;
  Quartiles intercept_error;
  Quartiles focal_error;
};

/// Linear interpolation between order statistics (h = (n-1)p). `sorted` must
/// be ascending and non-empty.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw InvalidInput("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Box-plot statistics of the finite entries; all NaN when there are none.
inline Quartiles quartiles(std::span<const double> values) {
  std::vector<double> v;
  for (double x : values) {
    if (std::isfinite(x)) v.push_back(x);
  }
  Quartiles q;
  q.count = v.size();
  if (v.empty()) return q;
  std::sort(v.begin(), v.end());
  q.median = quantile_sorted(v, 0.5);
  q.q25 = quantile_sorted(v, 0.25);
  q.q75 = quantile_sorted(v, 0.75);
  q.min = v.front();
  q.max = v.back();
  const double iqr = q.q75 - q.q25;
  for (double x : v) {
    if (x < q.q25 - 1.5 * iqr || x > q.q75 + 1.5 * iqr) ++q.outliers;
  }
  return q;
}

/// One row per distinct sweep value, in order of first appearance.
inline std::vector<SummaryRow> summarize(std::span<const Trial> trials) {
  std::vector<SummaryRow> rows;
  std::vector<double> seen;
  for (const auto& t : trials) {
    if (std::find(seen.begin(), seen.end(), t.sweep_value) == seen.end()) seen.push_back(t.sweep_value);
  }
  for (double value : seen) {
    SummaryRow row;
    row.sweep_value = value;
    std::vector<double> ie, fe;
    double successes = 0.0, loops = 0.0;
    for (const auto& t : trials) {
      if (t.sweep_value != value) continue;
      ++row.trials;
      successes += t.result.success ? 1.0 : 0.0;
      loops += t.result.loops_used;
      ie.push_back(t.result.intercept_error);
      fe.push_back(t.result.focal_error);
    }
    const auto n = static_cast<double>(row.trials);
    row.success_rate = successes / n;
    row.mean_loops = loops / n;
    row.intercept_error = quartiles(ie);
    row.focal_error = quartiles(fe);
    rows.push_back(row);
  }
  return rows;
}

struct SweepResult {
  std::vector<Trial> trials;  // value-major, trial-minor
  std::vector<SummaryRow> summary;
};

/// Mission configs for every sweep value; all of them are validated before
/// anything runs.
inline std::vector<sim::MissionConfig> sweep_configs(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<sim::MissionConfig> out;
  for (double v : spec.values) {
    Json tree = spec.base;
    std::string pointer = "/" + spec.variable;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    const Json::json_pointer ptr(pointer);
    if (!tree.contains(ptr) || !tree.at(ptr).is_number()) {
      throw ConfigError("sweep variable is not a numeric config key: " + spec.variable);
    }
    if (tree.at(ptr).is_number_integer()) {
      if (v != std::floor(v) || v < 0.0) throw ConfigError(spec.variable + " takes non-negative integers");
      tree[ptr] = static_cast<std::uint64_t>(v);
    } else {
      tree[ptr] = v;
    }
    out.push_back(config::from_json(tree));
  }
  return out;
}

/// Runs values × trials missions on up to `jobs` threads. Trial i of every
/// value uses seed seed_base + i, so values are compared on common scenarios.
/// Output order is fixed by index, not by completion.
inline SweepResult run_sweep(const ExperimentSpec& spec, std::size_t jobs = 1) {
  const auto configs = sweep_configs(spec);
  const std::size_t total = configs.size() * spec.trials;
  SweepResult out;
  out.trials.resize(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const std::size_t v = i / spec.trials;
      const std::uint64_t seed = spec.seed_base + i % spec.trials;
      try {
        out.trials[i] = {spec.values[v], seed, sim::run_mission(configs[v], seed)};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(total, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  out.summary = summarize(out.trials);
  return out;
}

/// %.9g, with "nan" / "inf" / "-inf" spelled the same on every platform.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline void write_trials_csv(std::ostream& os, std::span<const Trial> trials) {
  os << "sweep_value,seed,success,loops_used,intercept_error_m,focal_error_m,final_dH_m,"
        "final_ratio,n_observations,mission_duration_s\n";
  for (const auto& t : trials) {
    const auto& r = t.result;
    os << format_number(t.sweep_value) << ',' << t.seed << ',' << (r.success ? 1 : 0) << ','
       << format_number(r.loops_used) << ',' << format_number(r.intercept_error) << ','
       << format_number(r.focal_error) << ',' << format_number(r.final_dh) << ','
       << format_number(r.final_ratio) << ',' << r.n_observations << ','
       << format_number(r.duration) << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, std::span<const SummaryRow> rows) {
  os << "sweep_value,trials,success_rate,mean_loops_used";
  for (const char* m : {"intercept_error", "focal_error"}) {
    for (const char* s : {"median", "q25", "q75", "min", "max"}) os << ',' << m << '_' << s << "_m";
    os << ',' << m << "_outliers";
  }
  os << '\n';
  auto put = [&os](const Quartiles& q) {
    os << ',' << format_number(q.median) << ',' << format_number(q.q25) << ','
       << format_number(q.q75) << ',' << format_number(q.min) << ',' << format_number(q.max)
       << ',' << q.outliers;
  };
  for (const auto& r : rows) {
    os << format_number(r.sweep_value) << ',' << r.trials << ',' << format_number(r.success_rate)
       << ',' << format_number(r.mean_loops);
    put(r.intercept_error);
    put(r.focal_error);
    os << '\n';
  }
}

}  // namespace intercept::experiment
