#pragma once

#include "breakscope/dataset.hpp"
#include "breakscope/mdl.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace breakscope {

enum class Method { BS, WBS, BSMDL, WBSMDL, PGMDL, GMDL, ORACLE };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct DetectorConfig {
  // Acceptance threshold for the marginal-likelihood-ratio statistic; at 3
  // the posterior probability of the split model exceeds e^3/(1+e^3).
  double threshold_delta = 3.0;
  // Threshold on the cumsum scale; 0 selects the universal default
  // 1.3 sqrt(2 ln T) * sigma_hat with sigma_hat the MAD scale of first
  // differences.
  double cumsum_threshold = 0.0;
  int wbs_intervals = 1000;  // random intervals per active segment
  int min_duration = 0;      // 0 => max(10K, ceil(sqrt(T))/2)
  int max_breaks = 50;
  int scan_radius = 0;       // 0 => nearest integer to ln T
  int gmdl_max_T = 8192;     // refuse the O(T^2) table above this
  // When true the split sweep thresholds the exact local Bayes factor
  // (model-size terms included), so delta = 0 accepts exactly when the
  // two-segment marginal likelihood wins.  The default fit-ratio form
  // leaves the size economics to the threshold, which is what reproduces
  // the reference benchmark detection rates.
  bool bayes_factor_split = false;
  // Backward elimination for the marginal-ratio methods: drop accepted
  // breaks whose removal raises the final marginal likelihood.  Greedy
  // forward splitting can strand a first-round split that later, more
  // precise breaks make redundant.
  bool prune_splits = true;
  std::uint64_t rng_seed = 0;

  int resolved_min_duration(const TimeSeriesDataset& ds) const;
  int resolved_scan_radius(int T) const;
  double resolved_cumsum_threshold(const TimeSeriesDataset& ds) const;
  void validate() const;
};

// One entry of a detector's statistic trace: the interval searched (1-based
// inclusive observation range), the maximizing split and its statistic, and
// whether the split was accepted.
struct StatTraceEntry {
  int a = 0, b = 0, tau = 0;
  double stat = 0.0;
  bool accepted = false;
};

struct MethodResult {
  Method method = Method::BSMDL;
  Segmentation segmentation{std::vector<int>{}, 1};
  MdlScore score;  // marginal log-likelihood of the found segmentation
  std::int64_t runtime_ms = 0;
  std::vector<StatTraceEntry> diagnostics;
};

// Scaled partial-sum difference over observations [a, b] split after tau
// (all 1-based, a <= tau < b).  Positive when the left-segment mean
// dominates.
double cumsum_statistic(const TimeSeriesDataset& ds, int a, int b, int tau);

// Log marginal-likelihood ratio of the two-segment model {a-1, tau, b}
// against the single segment (a-1, b], both scored with the local sample
// size b-a+1. Returns -infinity when either induced side violates
// min_duration or is degenerate.
double bsmdl_statistic(const TimeSeriesDataset& ds, int a, int b, int tau,
                       int min_duration = 0);

enum class SplitStat { Cumsum, MarginalRatio };

MethodResult binary_segmentation(const TimeSeriesDataset& ds,
                                 const DetectorConfig& cfg, SplitStat stat);
MethodResult wild_binary_segmentation(const TimeSeriesDataset& ds,
                                      const DetectorConfig& cfg,
                                      SplitStat stat);

// Local maxima of the full-sample split statistic under a sliding window
// of radius h; the candidate set fed to the pruned global method.
std::vector<int> scan_candidates(const TimeSeriesDataset& ds,
                                 const DetectorConfig& cfg);

MethodResult pgmdl(const TimeSeriesDataset& ds, const DetectorConfig& cfg);
MethodResult gmdl(const TimeSeriesDataset& ds, const DetectorConfig& cfg);

// Exhaustive enumeration of every admissible segmentation; the test oracle.
// Refuses runs with more than 10^7 candidates.
MethodResult brute_force(const TimeSeriesDataset& ds,
                         const DetectorConfig& cfg);

MethodResult run_method(const TimeSeriesDataset& ds, const DetectorConfig& cfg,
                        Method method);

// Number of admissible segmentations with m <= max_breaks and all segment
// lengths >= min_duration (includes the null model).
double count_segmentations(int T, int min_duration, int max_breaks);

}  // namespace breakscope
