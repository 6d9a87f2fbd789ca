#include "breakscope/mdl.hpp"

#include <cmath>
#include <limits>

namespace breakscope {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112353;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double ln_plus(int m) { return m >= 1 ? std::log(static_cast<double>(m)) : 0.0; }

// Gaussian maximum log-likelihood of one segment, conditional form:
// -(n/2) ln(2 pi ssr / n) - n/2.
double segment_mle_loglik(int n, double ssr) {
  if (ssr <= 0.0) return kNegInf;
  return -0.5 * n * (kLog2Pi + std::log(ssr / n) + 1.0);
}

// Length-only part C(n) of the segment cost w = C(n) - (n/2) ln ssr; see
// SegmentCostCache.  Derived by substituting the calibrated constants
// nu = sqrt(n), s_under = ssr/sqrt(n), s_bar = ssr (1 + 1/sqrt(n)) into the
// segment marginal and collecting everything that does not involve ssr, m,
// or T.
double length_constant(int n, int K) {
  const double nd = n;
  const double root = std::sqrt(nd);
  const double nu = root;                      // nu_under
  const double nu_bar = nd + nu;
  const double dr4 = stirling_remainder_r4(0.5 * nu_bar) -
                     stirling_remainder_r4(0.5 * nu);
  return -0.5 * nd * kLog2Pi - 0.5 * K * std::log(nd) - 0.25 * std::log(nd) +
         0.5 * std::log1p(1.0 / root) - dr4 + std::lgamma(0.5 * nu_bar) -
         std::lgamma(0.5 * nu) - 0.5 * nu * std::log(2.0 * root) -
         0.5 * nu_bar * std::log(0.5 * (1.0 + 1.0 / root));
}

}  // namespace

double stirling_remainder_r4(double x) {
  if (!(x > 0.0))
    throw std::invalid_argument("stirling_remainder_r4: x must be positive");
  const double x2 = x * x;
  return 1.0 / (12.0 * x) - 1.0 / (360.0 * x * x2) +
         1.0 / (1260.0 * x * x2 * x2);
}

CalibratedPrior calibrate(const SegmentStats& stats, int m, int T, int K) {
  if (m < 0 || T < stats.n)
    throw std::invalid_argument("calibrate: need m >= 0 and T >= n");
  const double n = stats.n;
  const double root = std::sqrt(n);

  CalibratedPrior p;
  p.m_plus = std::max(1, m);
  p.k_under = 1.0 / root;
  p.nu_under = root;  // k_under * n
  p.s_under = stats.ssr / root;
  p.delta_r4 = stirling_remainder_r4(0.5 * (n + p.nu_under)) -
               stirling_remainder_r4(0.5 * p.nu_under);
  // log f = (2/K) [ ln(m+)/(m+1) + (1/4) ln n + ln T - (1/2) ln(1/sqrt(n)+1)
  //                 + DeltaR4 ].
  p.log_f_under =
      (2.0 / K) * (std::log(static_cast<double>(p.m_plus)) / (m + 1) +
                   0.25 * std::log(n) + std::log(static_cast<double>(T)) -
                   0.5 * std::log1p(p.k_under) + p.delta_r4);
  p.f_under = std::exp(p.log_f_under);
  p.g_under = p.f_under * n - 1.0;
  if (!(p.g_under > 0.0))
    throw std::invalid_argument("calibrate: segment too short, g_under <= 0");
  return p;
}

double segment_log_marginal(const SegmentStats& stats,
                            const CalibratedPrior& prior) {
  if (stats.ssr <= 0.0) return kNegInf;
  const double n = stats.n;
  const double nu_bar = n + prior.nu_under;
  const double s_bar = prior.s_under + stats.ssr;
  return -0.5 * n * kLog2Pi - 0.5 * stats.beta_hat.size() *
             std::log1p(prior.g_under) +
         std::lgamma(0.5 * nu_bar) - std::lgamma(0.5 * prior.nu_under) +
         0.5 * prior.nu_under * std::log(0.5 * prior.s_under) -
         0.5 * nu_bar * std::log(0.5 * s_bar);
}

MdlScore mdl_criterion(const TimeSeriesDataset& ds, const Segmentation& seg) {
  const int m = seg.num_breaks();
  const int K = ds.K();
  MdlScore out;
  out.per_segment.reserve(seg.num_segments());
  out.penalties.ln_plus_m = ln_plus(m);
  out.penalties.break_count_log_T = (m + 1) * std::log(static_cast<double>(ds.T()));

  double ll = 0.0, len_sum = 0.0;
  for (int i = 0; i < seg.num_segments(); ++i) {
    const SegmentStats st = ds.segment_stats(seg.boundary(i), seg.boundary(i + 1));
    const double seg_ll = segment_mle_loglik(st.n, st.ssr);
    out.per_segment.push_back(seg_ll);
    ll += seg_ll;
    len_sum += std::log(static_cast<double>(st.n));
  }
  out.penalties.segment_length_sum = 0.5 * (K + 1) * len_sum;
  out.value = ll - out.penalties.total();
  out.penalties_in_segments = false;
  return out;
}

MdlScore mdl_marginal_loglik(const TimeSeriesDataset& ds,
                             const Segmentation& seg) {
  const int m = seg.num_breaks();
  const int K = ds.K();
  MdlScore out;
  out.per_segment.reserve(seg.num_segments());
  out.penalties.ln_plus_m = ln_plus(m);
  out.penalties.break_count_log_T = (m + 1) * std::log(static_cast<double>(ds.T()));

  double total = 0.0, len_sum = 0.0;
  for (int i = 0; i < seg.num_segments(); ++i) {
    const SegmentStats st = ds.segment_stats(seg.boundary(i), seg.boundary(i + 1));
    const double lm = segment_log_marginal(st, calibrate(st, m, ds.T(), K));
    out.per_segment.push_back(lm);
    total += lm;
    len_sum += std::log(static_cast<double>(st.n));
  }
  out.penalties.segment_length_sum = 0.5 * (K + 1) * len_sum;
  out.value = total;
  out.penalties_in_segments = true;
  return out;
}

double model_size_term(int m, int T) {
  return -ln_plus(m) - (m + 1) * std::log(static_cast<double>(T));
}

SegmentCostCache::SegmentCostCache(const TimeSeriesDataset& ds) : ds_(&ds) {
  length_const_.assign(static_cast<std::size_t>(ds.T()) + 1, kNegInf);
  for (int n = 1; n <= ds.T(); ++n)
    length_const_[n] = length_constant(n, ds.K());
}

double SegmentCostCache::cost(int a, int b) const {
  const auto ssr = ds_->segment_ssr(a, b);
  if (!ssr || *ssr <= 0.0) return kNegInf;
  const int n = b - a;
  return length_const_[n] - 0.5 * n * std::log(*ssr);
}

double SegmentCostCache::cost_from(const SegmentStats& stats) const {
  if (stats.ssr <= 0.0) return kNegInf;
  return length_const_[stats.n] - 0.5 * stats.n * std::log(stats.ssr);
}

}  // namespace breakscope
