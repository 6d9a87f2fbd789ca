#pragma once

#include "breakscope/dataset.hpp"

#include <vector>

namespace breakscope {

// Hyperparameters of the conjugate normal-inverse-gamma prior calibrated so
// that the segment marginal likelihood reproduces the MDL criterion.  The
// normal scale is g_under * (X'X)^{-1} centered at the OLS estimate, which
// makes the posterior mean coincide with beta_hat.
struct CalibratedPrior {
  double nu_under = 0.0;  // sqrt(n)
  double s_under = 0.0;   // ssr / sqrt(n)
  double k_under = 0.0;   // 1 / sqrt(n)
  double g_under = 0.0;   // f_under * n - 1
  double f_under = 0.0;
  double log_f_under = 0.0;  // exact log of f_under, overflow-safe
  double delta_r4 = 0.0;     // R4((n + nu)/2) - R4(nu/2)
  int m_plus = 1;            // max{1, m}
};

// Truncated Stirling remainder R4(x) = 1/(12x) - 1/(360x^3) + 1/(1260x^5).
double stirling_remainder_r4(double x);

// Prior constants for one segment inside a model with m breaks over a
// sample of size T and K regressors.
CalibratedPrior calibrate(const SegmentStats& stats, int m, int T, int K);

// Log marginal likelihood of one segment under its calibrated prior,
// using exact log-gamma terms.  Returns -infinity when ssr <= 0 (perfect
// fit degenerates the scale posterior); sweeps skip such candidates.
double segment_log_marginal(const SegmentStats& stats,
                            const CalibratedPrior& prior);

struct MdlPenaltyTerms {
  double ln_plus_m = 0.0;            // ln+(m)
  double break_count_log_T = 0.0;    // (m+1) ln T
  double segment_length_sum = 0.0;   // ((K+1)/2) sum_i ln n_i
  double total() const {
    return ln_plus_m + break_count_log_T + segment_length_sum;
  }
};

struct MdlScore {
  double value = 0.0;
  std::vector<double> per_segment;
  MdlPenaltyTerms penalties;
  // True when value already equals the sum of per-segment terms (marginal
  // form); false when the penalties still have to be subtracted (criterion
  // form).  Keeps the additive bookkeeping reconstructible either way.
  bool penalties_in_segments = false;
};

// Two-stage code-length criterion: conditional Gaussian maximum
// log-likelihood minus the per-break and per-segment penalties.
MdlScore mdl_criterion(const TimeSeriesDataset& ds, const Segmentation& seg);

// Sum of calibrated segment marginal log-likelihoods; the canonical score
// behind every detector and model posterior.  Differs from mdl_criterion
// only by the residual of the order-4 Stirling truncation.
MdlScore mdl_marginal_loglik(const TimeSeriesDataset& ds,
                             const Segmentation& seg);

// Model-level part of the marginal log-likelihood: u(m, T) = -ln+(m) -
// (m+1) ln T.  Only this piece depends on the break count, so dynamic
// programs can optimize break-count-free segment costs and add it per m.
double model_size_term(int m, int T);

// Per-segment cost w(a, b) with the model-level dependence stripped out:
//   segment log marginal = w(a, b) - ln(m+)/(m+1) - ln T.
// Everything length-dependent is tabulated once per dataset, leaving one
// Cholesky and one log per query; this is the fuel of the detectors.
class SegmentCostCache {
 public:
  explicit SegmentCostCache(const TimeSeriesDataset& ds);

  // w(a, b) over observations (a, b]; -infinity when X'X is singular or
  // the fit is degenerate (ssr == 0).
  double cost(int a, int b) const;

  // Same decomposition evaluated from precomputed stats.
  double cost_from(const SegmentStats& stats) const;

  const TimeSeriesDataset& dataset() const { return *ds_; }

 private:
  const TimeSeriesDataset* ds_;
  std::vector<double> length_const_;  // C(n), n = 1..T
};

}  // namespace breakscope
