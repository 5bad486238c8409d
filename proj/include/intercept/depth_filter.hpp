#pragma once

// Robust depth of a detected object from the noisy depth samples inside its
// bounding box. Samples are binned over the sensor range, local maxima of the
// histogram become candidates, candidates below the mean candidate count are
// pruned, and the nearest survivor's mean depth is returned (nothing is
// assumed to sit between the sensor and the target).

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "intercept/errors.hpp"

namespace intercept {

struct DepthPatch {
  std::vector<double> samples;
  double range_min = 2.0;
  double range_max = 15.0;

  void validate() const {
    if (!(range_min > 0.0 && range_min < range_max)) throw InvalidInput("invalid depth range");
  }
};

struct DepthFilterConfig {
  std::size_t bins = 40;
  double range_min = 2.0;
  double range_max = 15.0;
  // Bounding-box area / image area at or above which an out-of-range target
  // is taken to be too close rather than too far.
  double close_area_fraction = 0.25;
};

struct DepthHistogram {
  double range_min = 0.0;
  double range_max = 0.0;
  std::vector<double> bin_edges;  // bin_count + 1 entries
  std::vector<std::size_t> counts;
  std::vector<double> bin_means;  // NaN for empty bins

  std::size_t bin_count() const { return counts.size(); }
  double bin_width() const { return (range_max - range_min) / static_cast<double>(bin_count()); }
};

inline DepthHistogram build_histogram(const DepthPatch& patch, std::size_t bin_count = 40) {
  if (bin_count < 3) throw InvalidInput("histogram needs at least 3 bins");
  patch.validate();
  if (patch.samples.empty()) throw NoData("empty depth patch");

  DepthHistogram h;
  h.range_min = patch.range_min;
  h.range_max = patch.range_max;
  h.counts.assign(bin_count, 0);
  h.bin_means.assign(bin_count, 0.0);
  h.bin_edges.resize(bin_count + 1);
  const double width = h.bin_width();
  for (std::size_t i = 0; i <= bin_count; ++i) {
    h.bin_edges[i] = h.range_min + width * static_cast<double>(i);
  }
  h.bin_edges.back() = h.range_max;

  std::vector<double> sums(bin_count, 0.0);
  for (double s : patch.samples) {
    if (!std::isfinite(s) || s < h.range_min || s > h.range_max) continue;
    auto idx = static_cast<std::size_t>((s - h.range_min) / width);
    if (idx >= bin_count) idx = bin_count - 1;
    ++h.counts[idx];
    sums[idx] += s;
  }
  for (std::size_t i = 0; i < bin_count; ++i) {
    h.bin_means[i] = h.counts[i] > 0 ? sums[i] / static_cast<double>(h.counts[i]) : NAN;
  }
  return h;
}

/// Strict local maxima. Edge bins only need to beat their single neighbour;
/// plateaus (equal adjacent counts) never qualify.
inline std::vector<std::size_t> find_peaks(std::span<const std::size_t> counts) {
  std::vector<std::size_t> peaks;
  const std::size_t n = counts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool above_left = i == 0 || counts[i] > counts[i - 1];
    const bool above_right = i + 1 == n || counts[i] > counts[i + 1];
    if (above_left && above_right) peaks.push_back(i);
  }
  return peaks;
}

inline std::vector<std::size_t> find_peaks(const DepthHistogram& h) { return find_peaks(h.counts); }

/// Candidate bins for depth selection: the strict peaks plus flat-topped
/// peaks (a run of equal counts with strictly lower bins on both outer sides,
/// edges again needing only one side). A run is represented by its nearest
/// bin. Ascending order.
inline std::vector<std::size_t> candidate_peaks(std::span<const std::size_t> counts) {
  std::vector<std::size_t> out;
  const std::size_t n = counts.size();
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && counts[j + 1] == counts[i]) ++j;
    const bool above_left = i == 0 || counts[i] > counts[i - 1];
    const bool above_right = j + 1 == n || counts[j] > counts[j + 1];
    if (counts[i] > 0 && above_left && above_right) out.push_back(i);
    i = j + 1;
  }
  return out;
}

inline double select_depth(const DepthHistogram& h) {
  const auto peaks = candidate_peaks(h.counts);
  if (peaks.empty()) throw NoData("depth histogram has no peaks");
  double mean_count = 0.0;
  for (auto p : peaks) mean_count += static_cast<double>(h.counts[p]);
  mean_count /= static_cast<double>(peaks.size());
  // Candidates are in ascending bin order, so the first survivor is nearest.
  for (auto p : peaks) {
    if (static_cast<double>(h.counts[p]) >= mean_count) return h.bin_means[p];
  }
  throw NoData("no peak survived pruning");  // unreachable: the largest candidate survives
}

/// Fallback when the target's depth is outside the measurable range: a large
/// box means the target is close, a small one that it is far away.
inline double out_of_range_depth(double bbox_area_fraction, double threshold, double range_min,
                                 double range_max) {
  return bbox_area_fraction >= threshold ? range_min : range_max;
}

inline double estimate_depth(const DepthPatch& patch, const DepthFilterConfig& cfg) {
  return select_depth(build_histogram(patch, cfg.bins));
}

}  // namespace intercept
