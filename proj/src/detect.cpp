#include "breakscope/detect.hpp"

#include "breakscope/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace breakscope {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                               t0)
      .count();
}

MethodResult finalize(Method method, const TimeSeriesDataset& ds,
                      std::vector<int> breaks, Clock::time_point t0,
                      std::vector<StatTraceEntry> trace) {
  std::sort(breaks.begin(), breaks.end());
  MethodResult res;
  res.method = method;
  res.segmentation = Segmentation(std::move(breaks), ds.T());
  res.score = mdl_marginal_loglik(ds, res.segmentation);
  res.diagnostics = std::move(trace);
  res.runtime_ms = elapsed_ms(t0);
  return res;
}

// Shared sweep state: the split statistic over a boundary interval
// (lo, hi], candidates tau in [lo + min_d, hi - min_d].
class SplitSearch {
 public:
  SplitSearch(const TimeSeriesDataset& ds, const DetectorConfig& cfg,
              SplitStat kind)
      : ds_(ds),
        kind_(kind),
        min_d_(cfg.resolved_min_duration(ds)),
        size_penalty_(cfg.bayes_factor_split),
        threshold_(kind == SplitStat::Cumsum
                       ? cfg.resolved_cumsum_threshold(ds)
                       : cfg.threshold_delta) {
    if (kind_ == SplitStat::MarginalRatio)
      cache_.emplace(ds);
  }

  int min_duration() const { return min_d_; }
  double threshold() const { return threshold_; }

  // Statistic of a split at boundary tau on the interval (lo, hi].
  double stat(int lo, int hi, int tau) const {
    if (kind_ == SplitStat::Cumsum) {
      const int n = hi - lo, nl = tau - lo, nr = hi - tau;
      const double left = ds_.sum_y(lo, tau), right = ds_.sum_y(tau, hi);
      return std::abs(
          std::sqrt(static_cast<double>(nr) / (static_cast<double>(n) * nl)) *
              left -
          std::sqrt(static_cast<double>(nl) / (static_cast<double>(n) * nr)) *
              right);
    }
    const double whole = cache_->cost(lo, hi);
    if (whole == kNegInf) return kNegInf;
    double s = cache_->cost(lo, tau) + cache_->cost(tau, hi) - whole;
    if (size_penalty_) s -= std::log(static_cast<double>(hi - lo));
    return s;
  }

  // argmax of the statistic over admissible tau; smallest tau on ties.
  // Returns {tau, value}; tau = -1 when no candidate exists.
  std::pair<int, double> best_split(int lo, int hi) const {
    return best_split(lo, hi, lo + min_d_, hi - min_d_);
  }
  std::pair<int, double> best_split(int lo, int hi, int tau_lo,
                                    int tau_hi) const {
    int best_tau = -1;
    double best = kNegInf;
    for (int tau = std::max(tau_lo, lo + min_d_);
         tau <= std::min(tau_hi, hi - min_d_); ++tau) {
      const double v = stat(lo, hi, tau);
      if (v > best) {
        best = v;
        best_tau = tau;
      }
    }
    return {best_tau, best};
  }

 private:
  const TimeSeriesDataset& ds_;
  SplitStat kind_;
  int min_d_;
  bool size_penalty_;
  double threshold_;
  std::optional<SegmentCostCache> cache_;
};

// Removes breaks whose deletion raises the marginal likelihood of the
// final segmentation, one at a time until stable.
void backward_eliminate(const TimeSeriesDataset& ds, std::vector<int>& breaks) {
  std::sort(breaks.begin(), breaks.end());
  bool changed = true;
  while (changed && !breaks.empty()) {
    changed = false;
    const double current =
        mdl_marginal_loglik(ds, Segmentation(breaks, ds.T())).value;
    for (std::size_t i = 0; i < breaks.size(); ++i) {
      std::vector<int> reduced = breaks;
      reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(i));
      if (mdl_marginal_loglik(ds, Segmentation(reduced, ds.T())).value >
          current) {
        breaks = std::move(reduced);
        changed = true;
        break;
      }
    }
  }
}

Method method_for(SplitStat stat, bool wild) {
  if (stat == SplitStat::Cumsum) return wild ? Method::WBS : Method::BS;
  return wild ? Method::WBSMDL : Method::BSMDL;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::BS: return "bs";
    case Method::WBS: return "wbs";
    case Method::BSMDL: return "bsmdl";
    case Method::WBSMDL: return "wbsmdl";
    case Method::PGMDL: return "pgmdl";
    case Method::GMDL: return "gmdl";
    case Method::ORACLE: return "oracle";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  for (Method m : {Method::BS, Method::WBS, Method::BSMDL, Method::WBSMDL,
                   Method::PGMDL, Method::GMDL, Method::ORACLE})
    if (name == method_name(m)) return m;
  throw std::invalid_argument("unknown method: " + name);
}

int DetectorConfig::resolved_min_duration(const TimeSeriesDataset& ds) const {
  if (min_duration > 0) return min_duration;
  const int half_root =
      (static_cast<int>(std::ceil(std::sqrt(static_cast<double>(ds.T())))) +
       1) /
      2;
  return std::max(10 * ds.K(), half_root);
}

int DetectorConfig::resolved_scan_radius(int T) const {
  if (scan_radius > 0) return scan_radius;
  return std::max(1, static_cast<int>(std::lround(std::log(static_cast<double>(T)))));
}

double DetectorConfig::resolved_cumsum_threshold(
    const TimeSeriesDataset& ds) const {
  if (cumsum_threshold > 0.0) return cumsum_threshold;
  // MAD scale of first differences; the differencing removes slow level
  // shifts so the scale reflects the noise, and /sqrt(2) undoes the
  // variance doubling.
  const int T = ds.T();
  if (T < 3) return 0.0;
  std::vector<double> d(T - 1);
  for (int t = 0; t + 1 < T; ++t) d[t] = ds.y()[t + 1] - ds.y()[t];
  auto median = [](std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
      std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
      return 0.5 * (hi + v[mid - 1]);
    }
    return hi;
  };
  const double med = median(d);
  for (double& x : d) x = std::abs(x - med);
  const double sigma = 1.4826 * median(d) / std::sqrt(2.0);
  return 1.3 * std::sqrt(2.0 * std::log(static_cast<double>(T))) * sigma;
}

void DetectorConfig::validate() const {
  if (threshold_delta < 0.0)
    throw std::invalid_argument("config: threshold_delta must be >= 0");
  if (cumsum_threshold < 0.0)
    throw std::invalid_argument("config: cumsum_threshold must be >= 0");
  if (wbs_intervals < 1)
    throw std::invalid_argument("config: wbs_intervals must be >= 1");
  if (max_breaks < 0)
    throw std::invalid_argument("config: max_breaks must be >= 0");
  if (min_duration < 0 || scan_radius < 0)
    throw std::invalid_argument("config: negative min_duration/scan_radius");
}

double cumsum_statistic(const TimeSeriesDataset& ds, int a, int b, int tau) {
  if (a < 1 || b > ds.T() || a >= b)
    throw std::invalid_argument("cumsum_statistic: need 1 <= a < b <= T");
  if (tau < a || tau >= b)
    throw std::invalid_argument("cumsum_statistic: tau outside [a, b)");
  const int lo = a - 1;
  const int n = b - lo, nl = tau - lo, nr = b - tau;
  return std::sqrt(static_cast<double>(nr) / (static_cast<double>(n) * nl)) *
             ds.sum_y(lo, tau) -
         std::sqrt(static_cast<double>(nl) / (static_cast<double>(n) * nr)) *
             ds.sum_y(tau, b);
}

double bsmdl_statistic(const TimeSeriesDataset& ds, int a, int b, int tau,
                       int min_duration) {
  if (a < 1 || b > ds.T() || a >= b)
    throw std::invalid_argument("bsmdl_statistic: need 1 <= a < b <= T");
  DetectorConfig cfg;
  cfg.min_duration = min_duration;
  const int min_d = cfg.resolved_min_duration(ds);
  const int lo = a - 1;
  if (tau < lo + min_d || tau > b - min_d) return kNegInf;
  SegmentCostCache cache(ds);
  const double whole = cache.cost(lo, b);
  if (whole == kNegInf) return kNegInf;
  return cache.cost(lo, tau) + cache.cost(tau, b) - whole -
         std::log(static_cast<double>(b - lo));
}

MethodResult binary_segmentation(const TimeSeriesDataset& ds,
                                 const DetectorConfig& cfg, SplitStat stat) {
  const auto t0 = Clock::now();
  cfg.validate();
  SplitSearch search(ds, cfg, stat);

  std::vector<int> breaks;
  std::vector<StatTraceEntry> trace;
  // Depth-first, left interval first; explicit stack keeps it iterative.
  std::vector<std::pair<int, int>> stack{{0, ds.T()}};
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    if (static_cast<int>(breaks.size()) >= cfg.max_breaks) break;
    const auto [tau, value] = search.best_split(lo, hi);
    if (tau < 0) continue;
    const bool accept = value > search.threshold();
    trace.push_back({lo + 1, hi, tau, value, accept});
    if (accept) {
      breaks.push_back(tau);
      stack.emplace_back(tau, hi);
      stack.emplace_back(lo, tau);
    }
  }
  if (cfg.prune_splits && stat == SplitStat::MarginalRatio)
    backward_eliminate(ds, breaks);
  return finalize(method_for(stat, false), ds, std::move(breaks), t0,
                  std::move(trace));
}

MethodResult wild_binary_segmentation(const TimeSeriesDataset& ds,
                                      const DetectorConfig& cfg,
                                      SplitStat stat) {
  const auto t0 = Clock::now();
  cfg.validate();
  SplitSearch search(ds, cfg, stat);
  const int min_d = search.min_duration();
  Rng rng(seed_hash({cfg.rng_seed, 0x77627331ULL}));

  std::vector<int> breaks;
  std::vector<StatTraceEntry> trace;
  std::vector<std::pair<int, int>> stack{{0, ds.T()}};
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    if (static_cast<int>(breaks.size()) >= cfg.max_breaks) continue;
    if (hi - lo < 2 * min_d) continue;

    // Fresh draws on every active interval; endpoints uniform over
    // admissible pairs via rejection.
    double best = kNegInf;
    int best_a = -1, best_b = -1;
    for (int n = 0; n < cfg.wbs_intervals; ++n) {
      int a = lo, b = hi;
      for (int attempt = 0; attempt < 10000; ++attempt) {
        const int u = static_cast<int>(rng.uniform_int(lo, hi));
        const int v = static_cast<int>(rng.uniform_int(lo, hi));
        a = std::min(u, v);
        b = std::max(u, v);
        if (b - a >= 2 * min_d) break;
        a = lo;
        b = hi;
      }
      const auto [tau, value] = search.best_split(a, b);
      if (tau >= 0 && value > best) {
        best = value;
        best_a = a;
        best_b = b;
      }
    }
    if (best_a < 0) continue;

    const bool accept = best > search.threshold();
    // Break location refined on the full interval, restricted to the
    // winning sub-interval.
    const auto [tau, full_value] =
        search.best_split(lo, hi, best_a + min_d, best_b - min_d);
    trace.push_back({best_a + 1, best_b, tau, best, accept});
    if (accept && tau >= 0) {
      breaks.push_back(tau);
      stack.emplace_back(tau, hi);
      stack.emplace_back(lo, tau);
    }
  }
  if (cfg.prune_splits && stat == SplitStat::MarginalRatio)
    backward_eliminate(ds, breaks);
  return finalize(method_for(stat, true), ds, std::move(breaks), t0,
                  std::move(trace));
}

std::vector<int> scan_candidates(const TimeSeriesDataset& ds,
                                 const DetectorConfig& cfg) {
  cfg.validate();
  const int T = ds.T();
  const int h = cfg.resolved_scan_radius(T);
  if (T <= 2 * h) return {};

  SplitSearch search(ds, cfg, SplitStat::MarginalRatio);
  const int min_d = search.min_duration();
  std::vector<double> stat(T, kNegInf);  // stat[tau] for boundaries 1..T-1
  for (int tau = min_d; tau + min_d <= T; ++tau)
    stat[tau] = search.stat(0, T, tau);

  // Sliding maximum over the open window (l-h, l+h) with a monotone deque.
  std::vector<int> out;
  std::deque<int> dq;
  auto push = [&](int t) {
    while (!dq.empty() && stat[dq.back()] <= stat[t]) dq.pop_back();
    dq.push_back(t);
  };
  for (int t = 1; t <= std::min(2 * h - 1, T - 1); ++t) push(t);
  for (int l = h; l <= T - h; ++l) {
    while (dq.front() < l - h + 1) dq.pop_front();
    if (stat[l] != kNegInf && stat[dq.front()] == stat[l]) out.push_back(l);
    const int next = l + h;  // entering the window of l+1
    if (next <= T - 1) push(next);
  }
  return out;
}

namespace {

// Optimal-partition recursion over an explicit boundary set; boundaries[0]
// must be 0 and boundaries.back() T.  Segment costs are break-count-free,
// u(m, T) is added per candidate m afterwards.  Smallest m, then smallest
// boundaries, win ties.
std::vector<int> optimal_partition(const SegmentCostCache& cache,
                                   const std::vector<int>& bounds, int min_d,
                                   int max_breaks, int T) {
  const int B = static_cast<int>(bounds.size());
  const int max_segs =
      std::min(max_breaks + 1, B - 1);  // breaks live on interior bounds

  // cost[j][i] = w(bounds[i], bounds[j]) for i < j.
  std::vector<std::vector<double>> cost(B);
  for (int j = 1; j < B; ++j) {
    cost[j].assign(j, kNegInf);
    for (int i = 0; i < j; ++i)
      if (bounds[j] - bounds[i] >= min_d) cost[j][i] = cache.cost(bounds[i], bounds[j]);
  }

  std::vector<std::vector<double>> best(max_segs + 1,
                                        std::vector<double>(B, kNegInf));
  std::vector<std::vector<int>> parent(max_segs + 1, std::vector<int>(B, -1));
  for (int j = 1; j < B; ++j) best[1][j] = cost[j][0];
  for (int k = 2; k <= max_segs; ++k)
    for (int j = k; j < B; ++j) {
      double b = kNegInf;
      int arg = -1;
      for (int i = k - 1; i < j; ++i) {
        if (best[k - 1][i] == kNegInf || cost[j][i] == kNegInf) continue;
        const double v = best[k - 1][i] + cost[j][i];
        if (v > b) {
          b = v;
          arg = i;
        }
      }
      best[k][j] = b;
      parent[k][j] = arg;
    }

  int best_m = -1;
  double best_total = kNegInf;
  for (int k = 1; k <= max_segs; ++k) {
    if (best[k][B - 1] == kNegInf) continue;
    const double total = best[k][B - 1] + model_size_term(k - 1, T);
    if (total > best_total) {
      best_total = total;
      best_m = k - 1;
    }
  }
  if (best_m < 0)
    throw std::runtime_error("optimal_partition: no admissible segmentation");

  std::vector<int> breaks;
  int j = B - 1;
  for (int k = best_m + 1; k >= 2; --k) {
    j = parent[k][j];
    breaks.push_back(bounds[j]);
  }
  std::reverse(breaks.begin(), breaks.end());
  return breaks;
}

}  // namespace

MethodResult pgmdl(const TimeSeriesDataset& ds, const DetectorConfig& cfg) {
  const auto t0 = Clock::now();
  cfg.validate();
  const int min_d = cfg.resolved_min_duration(ds);
  const std::vector<int> candidates = scan_candidates(ds, cfg);

  std::vector<StatTraceEntry> trace;
  trace.reserve(candidates.size());
  for (int c : candidates) trace.push_back({1, ds.T(), c, 0.0, false});

  std::vector<int> bounds{0};
  bounds.insert(bounds.end(), candidates.begin(), candidates.end());
  bounds.push_back(ds.T());

  SegmentCostCache cache(ds);
  std::vector<int> breaks =
      optimal_partition(cache, bounds,  min_d,
                        std::min<int>(cfg.max_breaks, candidates.size()),
                        ds.T());
  for (auto& e : trace)
    e.accepted =
        std::find(breaks.begin(), breaks.end(), e.tau) != breaks.end();
  return finalize(Method::PGMDL, ds, std::move(breaks), t0, std::move(trace));
}

MethodResult gmdl(const TimeSeriesDataset& ds, const DetectorConfig& cfg) {
  const auto t0 = Clock::now();
  cfg.validate();
  const int T = ds.T();
  if (T > cfg.gmdl_max_T)
    throw std::invalid_argument(
        "gmdl: T exceeds the O(T^2) cost-table cap (" +
        std::to_string(cfg.gmdl_max_T) + "); use pgmdl for long series");
  const int min_d = std::max(1, cfg.resolved_min_duration(ds));
  const int max_segs = std::min(cfg.max_breaks + 1, T / min_d);
  SegmentCostCache cache(ds);

  // cost_by_end[t] holds w(s, t) for s = 0..t-min_d, contiguous in s.
  std::vector<std::vector<double>> cost_by_end(T + 1);
  for (int t = min_d; t <= T; ++t) {
    auto& row = cost_by_end[t];
    row.resize(t - min_d + 1);
    for (int s = 0; s + min_d <= t; ++s) row[s] = cache.cost(s, t);
  }

  std::vector<double> prev(T + 1, kNegInf), cur(T + 1, kNegInf);
  std::vector<std::vector<int>> parent(max_segs + 1);
  std::vector<double> best_at_T(max_segs + 1, kNegInf);
  for (int t = min_d; t <= T; ++t) prev[t] = cost_by_end[t][0];
  best_at_T[1] = prev[T];
  for (int k = 2; k <= max_segs; ++k) {
    parent[k].assign(T + 1, -1);
    std::fill(cur.begin(), cur.end(), kNegInf);
    for (int t = k * min_d; t <= T; ++t) {
      const auto& row = cost_by_end[t];
      double b = kNegInf;
      int arg = -1;
      for (int s = (k - 1) * min_d; s + min_d <= t; ++s) {
        if (prev[s] == kNegInf || row[s] == kNegInf) continue;
        const double v = prev[s] + row[s];
        if (v > b) {
          b = v;
          arg = s;
        }
      }
      cur[t] = b;
      parent[k][t] = arg;
    }
    best_at_T[k] = cur[T];
    std::swap(prev, cur);
  }

  int best_m = -1;
  double best_total = kNegInf;
  for (int k = 1; k <= max_segs; ++k) {
    if (best_at_T[k] == kNegInf) continue;
    const double total = best_at_T[k] + model_size_term(k - 1, T);
    if (total > best_total) {
      best_total = total;
      best_m = k - 1;
    }
  }
  if (best_m < 0)
    throw std::runtime_error("gmdl: every segmentation is degenerate");

  std::vector<int> breaks;
  int t = T;
  for (int k = best_m + 1; k >= 2; --k) {
    t = parent[k][t];
    breaks.push_back(t);
  }
  std::reverse(breaks.begin(), breaks.end());
  return finalize(Method::GMDL, ds, std::move(breaks), t0, {});
}

double count_segmentations(int T, int min_duration, int max_breaks) {
  const int min_d = std::max(1, min_duration);
  const int max_segs = std::min(max_breaks + 1, T / min_d);
  // ways[k][t] = number of cuts of (0, t] into k admissible segments.
  std::vector<double> prev(T + 1, 0.0), cur(T + 1, 0.0);
  double total = 0.0;
  for (int t = min_d; t <= T; ++t) prev[t] = 1.0;
  total += prev[T];
  for (int k = 2; k <= max_segs; ++k) {
    std::fill(cur.begin(), cur.end(), 0.0);
    // running sum over s of prev[s] with s <= t - min_d
    double run = 0.0;
    for (int t = min_d; t <= T; ++t) {
      run += prev[t - min_d];
      cur[t] = run;
    }
    // prev contributes only from s >= (k-1)*min_d, but prev is zero below
    // that by construction.
    total += cur[T];
    std::swap(prev, cur);
  }
  return total;
}

namespace {

void enumerate_breaks(int T, int min_d, int max_breaks,
                      std::vector<int>& current,
                      const std::function<void(const std::vector<int>&)>& fn) {
  fn(current);
  if (static_cast<int>(current.size()) >= max_breaks) return;
  const int lo = (current.empty() ? 0 : current.back()) + min_d;
  for (int tau = lo; tau + min_d <= T; ++tau) {
    current.push_back(tau);
    enumerate_breaks(T, min_d, max_breaks, current, fn);
    current.pop_back();
  }
}

}  // namespace

MethodResult brute_force(const TimeSeriesDataset& ds,
                         const DetectorConfig& cfg) {
  const auto t0 = Clock::now();
  cfg.validate();
  const int T = ds.T();
  const int min_d = std::max(1, cfg.resolved_min_duration(ds));
  if (count_segmentations(T, min_d, cfg.max_breaks) > 1e7)
    throw std::invalid_argument(
        "brute_force: more than 1e7 admissible segmentations");

  double best = kNegInf;
  std::vector<int> best_breaks;
  bool found = false;
  std::vector<int> current;
  enumerate_breaks(T, min_d, cfg.max_breaks, current,
                   [&](const std::vector<int>& breaks) {
                     const Segmentation seg(breaks, T);
                     const double v = mdl_marginal_loglik(ds, seg).value;
                     if (v == kNegInf) return;
                     if (!found || v > best) {
                       found = true;
                       best = v;
                       best_breaks = breaks;
                     }
                   });
  if (!found)
    throw std::runtime_error("brute_force: every segmentation is degenerate");
  return finalize(Method::ORACLE, ds, std::move(best_breaks), t0, {});
}

MethodResult run_method(const TimeSeriesDataset& ds, const DetectorConfig& cfg,
                        Method method) {
  switch (method) {
    case Method::BS: return binary_segmentation(ds, cfg, SplitStat::Cumsum);
    case Method::WBS:
      return wild_binary_segmentation(ds, cfg, SplitStat::Cumsum);
    case Method::BSMDL:
      return binary_segmentation(ds, cfg, SplitStat::MarginalRatio);
    case Method::WBSMDL:
      return wild_binary_segmentation(ds, cfg, SplitStat::MarginalRatio);
    case Method::PGMDL: return pgmdl(ds, cfg);
    case Method::GMDL: return gmdl(ds, cfg);
    case Method::ORACLE: return brute_force(ds, cfg);
  }
  throw std::invalid_argument("run_method: unknown method");
}

}  // namespace breakscope
