#pragma once

#include "breakscope/dataset.hpp"
#include "breakscope/mdl.hpp"
#include "breakscope/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace breakscope {

// Conjugate posterior of one segment under the calibrated g-prior.  The
// prior is centered at the OLS estimate, so the posterior location is
// beta_hat itself and only the scale shrinks.
struct NigPosterior {
  double nu_bar = 0.0;     // n + nu_under
  double s_bar = 0.0;      // s_under + ssr
  VectorXd beta_bar;       // = beta_hat
  MatrixXd scale_matrix;   // (X'X)^{-1} / (1 + 1/g_under), times sigma^2
  double sigma2_mean() const { return s_bar / (nu_bar - 2.0); }
};

NigPosterior nig_posterior(const SegmentStats& stats,
                           const CalibratedPrior& prior);

// One draw of (beta, sigma^2): sigma^2 ~ IG((n+nu)/2, (s_under+s)/2), then
// beta | sigma^2 ~ N(beta_hat, sigma^2/(1+1/g) (X'X)^{-1}).
std::pair<VectorXd, double> gibbs_segment_draw(const SegmentStats& stats,
                                               const CalibratedPrior& prior,
                                               Rng& rng);

// Independent truncated-binomial priors on the break dates, anchored at a
// detector's estimate tau_hat.  Supports partition (0, T) at the midpoints
// between adjacent estimated breaks, so draws cannot cross.
struct BreakPrior {
  std::vector<int> tau_hat;
  std::vector<int> r;           // binomial size, floor((tau_i+tau_{i+1})/2)
  std::vector<double> e;        // success probability, tau_i / r_i
  std::vector<int> support_lo;  // ceil((tau_{i-1}+tau_i)/2)
  std::vector<int> support_hi;  // floor((tau_i+tau_{i+1})/2)
  int T = 0;

  int m() const { return static_cast<int>(tau_hat.size()); }
  // Binomial log-pmf at x (untruncated; the truncation constant cancels in
  // Metropolis ratios and in normalized enumerations).
  double log_pmf(int i, int x) const;
};

BreakPrior build_break_prior(const Segmentation& tau_hat);

// Unnormalized log posterior of a candidate break vector: marginal
// log-likelihood plus binomial prior mass, -infinity outside the supports
// or when a segment is shorter than min_segment/degenerate.
double log_posterior_tau(const TimeSeriesDataset& ds,
                         const std::vector<int>& tau, const BreakPrior& prior,
                         int min_segment = 0);

struct SamplerConfig {
  int chains = 10;
  int iterations = 1000;
  int burn_in = -1;      // -1 => iterations / 2
  int min_segment = 0;   // 0 => K + 1
  // Probability of a +/-1 random-walk proposal instead of the differential
  // move; keeps the integer-valued sampler irreducible when chains agree.
  double unit_walk_prob = 0.1;
  std::uint64_t seed = 0;

  int resolved_burn_in() const { return burn_in >= 0 ? burn_in : iterations / 2; }
};

struct TauDraws {
  Eigen::MatrixXi draws;             // pooled post-burn-in, one row per draw
  std::vector<double> accept_rate;   // per chain
  double pooled_accept_rate = 0.0;
};

// Differential-evolution jump scale, 2.38 / sqrt(2 delta m).
double ddream_gamma(int delta, int m);

// Multi-chain differential-evolution Metropolis sampler for the break
// dates: proposals are rounded scaled differences of other chains' states
// plus a small normal jitter.  Chains update sequentially against the
// sweep-start snapshot; the whole run is deterministic given the seed.
TauDraws ddream_sample(const TimeSeriesDataset& ds, const BreakPrior& prior,
                       const SamplerConfig& cfg);

// Hierarchical prior for a single out-of-sample break: geometric arrival
// past T, new coefficients centered on the average in-sample estimate with
// their across-regime dispersion, new variance anchored at the average
// in-sample residual sum.
struct FutureBreakPrior {
  double geom_rate = 0.0;   // m / T
  VectorXd beta_mean;       // average of in-sample beta_hat
  VectorXd beta_var;        // per-coefficient empirical variance (ddof 1)
  double sigma2_shape = 0.0;  // T / 2
  double sigma2_scale = 0.0;  // mean of in-sample ssr, over 2
};

// Requires at least two in-sample breaks; with fewer there is nothing to
// learn the break process from.
FutureBreakPrior build_future_break_prior(const TimeSeriesDataset& ds,
                                          const Segmentation& seg);

// Simulates y_{T+1..T+h} for an AR design: the terminal regime's
// (beta, sigma2) drive the recursion until the geometric break time, after
// which freshly drawn post-break parameters take over.  Returns the path;
// break_time_out (optional) receives the drawn date (> T + h if unused).
VectorXd future_break_draw(const TimeSeriesDataset& ds, const VectorXd& beta,
                           double sigma2, const FutureBreakPrior& fb, int h,
                           Rng& rng, std::int64_t* break_time_out = nullptr);

// Plain h-step-ahead simulation from one (beta, sigma2) draw.
VectorXd simulate_ar_path(const TimeSeriesDataset& ds, const VectorXd& beta,
                          double sigma2, int h, Rng& rng);

// Draws with attached normalized weights; columns are named parameters.
struct WeightedDraws {
  MatrixXd draws;
  VectorXd weights;
  std::vector<std::string> names;
};

struct CredibleInterval {
  std::string name;
  double lower = 0.0, upper = 0.0;
};

// Weighted equal-tailed intervals per column.
std::vector<CredibleInterval> credible_intervals(const WeightedDraws& draws,
                                                 double level);

}  // namespace breakscope
