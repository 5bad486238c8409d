#pragma once

// Offline depth-filter replay over recorded patches, one JSON object per line:
//   {"samples": [...], "truth": 7.5, "range_min": 2, "range_max": 15, "bins": 40}
// Only "samples" is required. Bad lines are reported and skipped.

#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "intercept/depth_filter.hpp"
#include "intercept/errors.hpp"

namespace intercept::replay {

struct PatchOutcome {
  std::size_t line = 0;
  std::optional<double> depth;   // set when the filter produced an estimate
  std::optional<double> truth;
  double bin_width = 0.0;
  std::string error;             // parse or filter failure, empty otherwise

  std::optional<double> abs_error() const {
    if (!depth || !truth) return std::nullopt;
    return std::abs(*depth - *truth);
  }
};

struct ReplayReport {
  std::vector<PatchOutcome> patches;
  std::size_t malformed = 0;     // lines that failed to parse or validate
  std::size_t no_estimate = 0;   // valid patches with nothing in range
  std::size_t with_truth = 0;
  std::size_t within_one_bin = 0;
  double mean_abs_error = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline DepthPatch parse_patch(const nlohmann::json& j, DepthFilterConfig& cfg,
                              std::optional<double>& truth) {
  if (!j.is_object()) throw InvalidInput("record is not a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k != "samples" && k != "truth" && k != "range_min" && k != "range_max" && k != "bins") {
      throw InvalidInput("unknown field '" + k + "'");
    }
  }
  if (!j.contains("samples") || !j.at("samples").is_array()) {
    throw InvalidInput("'samples' must be an array");
  }
  DepthPatch patch;
  for (const auto& s : j.at("samples")) {
    if (!s.is_number()) throw InvalidInput("samples must be numbers");
    patch.samples.push_back(s.get<double>());
  }
  auto number = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number()) throw InvalidInput(std::string("'") + key + "' must be a number");
    out = j.at(key).get<double>();
  };
  number("range_min", cfg.range_min);
  number("range_max", cfg.range_max);
  if (j.contains("bins")) {
    if (!j.at("bins").is_number_unsigned()) throw InvalidInput("'bins' must be a positive integer");
    cfg.bins = j.at("bins").get<std::size_t>();
  }
  if (j.contains("truth")) {
    if (!j.at("truth").is_number()) throw InvalidInput("'truth' must be a number");
    truth = j.at("truth").get<double>();
  }
  patch.range_min = cfg.range_min;
  patch.range_max = cfg.range_max;
  patch.validate();
  return patch;
}

}  // namespace detail

/// Blank lines and lines starting with '#' are skipped.
inline ReplayReport replay_patches(std::istream& in, const DepthFilterConfig& defaults = {}) {
  ReplayReport report;
  std::string text;
  double err_sum = 0.0;
  std::size_t err_n = 0;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos || text[first] == '#') continue;

    PatchOutcome out;
    out.line = line;
    DepthFilterConfig cfg = defaults;
    DepthPatch patch;
    try {
      patch = detail::parse_patch(nlohmann::json::parse(text), cfg, out.truth);
      if (cfg.bins < 3) throw InvalidInput("need at least 3 bins");
    } catch (const std::exception& e) {
      out.error = e.what();
      ++report.malformed;
      report.patches.push_back(std::move(out));
      continue;
    }
    out.bin_width = (cfg.range_max - cfg.range_min) / static_cast<double>(cfg.bins);
    try {
      out.depth = estimate_depth(patch, cfg);
    } catch (const NoData& e) {
      out.error = e.what();
      ++report.no_estimate;
    }
    if (out.truth) {
      ++report.with_truth;
      if (const auto e = out.abs_error()) {
        err_sum += *e;
        ++err_n;
        if (*e <= out.bin_width) ++report.within_one_bin;
      }
    }
    report.patches.push_back(std::move(out));
  }
  if (err_n > 0) report.mean_abs_error = err_sum / static_cast<double>(err_n);
  return report;
}

}  // namespace intercept::replay
