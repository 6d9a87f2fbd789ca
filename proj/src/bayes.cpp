#include "breakscope/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace breakscope {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

NigPosterior nig_posterior(const SegmentStats& stats,
                           const CalibratedPrior& prior) {
  NigPosterior post;
  post.nu_bar = stats.n + prior.nu_under;
  post.s_bar = prior.s_under + stats.ssr;
  post.beta_bar = stats.beta_hat;
  auto chol = cholesky_with_threshold(stats.xtx);
  if (!chol) throw std::runtime_error("nig_posterior: singular X'X");
  const MatrixXd inv = chol->transpose()
                           .triangularView<Eigen::Upper>()
                           .solve(chol->triangularView<Eigen::Lower>().solve(
                               MatrixXd::Identity(stats.xtx.rows(),
                                                  stats.xtx.cols())));
  post.scale_matrix = inv / (1.0 + 1.0 / prior.g_under);
  return post;
}

std::pair<VectorXd, double> gibbs_segment_draw(const SegmentStats& stats,
                                               const CalibratedPrior& prior,
                                               Rng& rng) {
  const double sigma2 = rng.inverse_gamma(0.5 * (stats.n + prior.nu_under),
                                          0.5 * (prior.s_under + stats.ssr));
  auto chol = cholesky_with_threshold(stats.xtx);
  if (!chol) throw std::runtime_error("gibbs_segment_draw: singular X'X");
  const int K = static_cast<int>(stats.xtx.rows());
  VectorXd z(K);
  for (int i = 0; i < K; ++i) z[i] = rng.normal();
  // cov = c (X'X)^{-1} = c L^{-T} L^{-1}  =>  draw = beta_hat + sqrt(c) L^{-T} z.
  const double c = sigma2 / (1.0 + 1.0 / prior.g_under);
  VectorXd beta = stats.beta_hat +
                  std::sqrt(c) * chol->transpose()
                                     .triangularView<Eigen::Upper>()
                                     .solve(z);
  return {std::move(beta), sigma2};
}

double BreakPrior::log_pmf(int i, int x) const {
  const double ri = r[i], ei = e[i];
  return std::lgamma(ri + 1.0) - std::lgamma(x + 1.0) -
         std::lgamma(ri - x + 1.0) + x * std::log(ei) +
         (ri - x) * std::log1p(-ei);
}

BreakPrior build_break_prior(const Segmentation& tau_hat) {
  const int m = tau_hat.num_breaks();
  if (m < 1)
    throw std::invalid_argument("build_break_prior: need at least one break");
  BreakPrior prior;
  prior.T = tau_hat.T();
  prior.tau_hat = tau_hat.breaks();
  for (int i = 1; i <= m; ++i) {
    const int lo_anchor = tau_hat.boundary(i - 1), hi_anchor = tau_hat.boundary(i + 1);
    const int ti = tau_hat.boundary(i);
    const int lo = (lo_anchor + ti + 1) / 2;   // ceil
    const int hi = (ti + hi_anchor) / 2;       // floor
    const int r = hi;                          // r_i = floor((tau_i + tau_{i+1})/2)
    const double e = static_cast<double>(ti) / r;
    if (!(e > 0.0 && e < 1.0))
      throw std::invalid_argument(
          "build_break_prior: e outside (0,1); break too close to the edge");
    prior.support_lo.push_back(lo);
    prior.support_hi.push_back(hi);
    prior.r.push_back(r);
    prior.e.push_back(e);
  }
  return prior;
}

double log_posterior_tau(const TimeSeriesDataset& ds,
                         const std::vector<int>& tau, const BreakPrior& prior,
                         int min_segment) {
  const int m = prior.m();
  if (static_cast<int>(tau.size()) != m)
    throw std::invalid_argument("log_posterior_tau: dimension mismatch");
  if (min_segment <= 0) min_segment = ds.K() + 1;

  double log_prior = 0.0;
  int prev = 0;
  for (int i = 0; i < m; ++i) {
    if (tau[i] < prior.support_lo[i] || tau[i] > prior.support_hi[i])
      return kNegInf;
    if (tau[i] - prev < min_segment) return kNegInf;
    log_prior += prior.log_pmf(i, tau[i]);
    prev = tau[i];
  }
  if (ds.T() - prev < min_segment) return kNegInf;

  const Segmentation seg(tau, ds.T());
  double log_ml = 0.0;
  for (int i = 0; i < seg.num_segments(); ++i) {
    const auto stats = ds.try_segment_stats(seg.boundary(i), seg.boundary(i + 1));
    if (!stats) return kNegInf;
    const double lm =
        segment_log_marginal(*stats, calibrate(*stats, m, ds.T(), ds.K()));
    if (lm == kNegInf) return kNegInf;
    log_ml += lm;
  }
  return log_ml + log_prior;
}

namespace {

// Inverse-cdf draw from the truncated binomial prior of coordinate i.
int draw_truncated_binomial(const BreakPrior& prior, int i, Rng& rng) {
  const int lo = prior.support_lo[i], hi = prior.support_hi[i];
  std::vector<double> w(hi - lo + 1);
  double max_lp = kNegInf;
  for (int x = lo; x <= hi; ++x)
    max_lp = std::max(max_lp, prior.log_pmf(i, x));
  double total = 0.0;
  for (int x = lo; x <= hi; ++x)
    total += (w[x - lo] = std::exp(prior.log_pmf(i, x) - max_lp));
  double u = rng.uniform() * total;
  for (int x = lo; x <= hi; ++x) {
    u -= w[x - lo];
    if (u <= 0.0) return x;
  }
  return hi;
}

}  // namespace

double ddream_gamma(int delta, int m) {
  return 2.38 / std::sqrt(2.0 * delta * m);
}

TauDraws ddream_sample(const TimeSeriesDataset& ds, const BreakPrior& prior,
                       const SamplerConfig& cfg) {
  const int m = prior.m();
  const int R = cfg.chains;
  if (R < 7)
    throw std::invalid_argument(
        "ddream_sample: need >= 7 chains (2*delta distinct partners at delta=3)");
  const int I = cfg.iterations;
  const int burn = cfg.resolved_burn_in();
  Rng rng(seed_hash({cfg.seed, 0x64647265616dULL}));

  // Chains start from the prior; redraw until the posterior is finite so
  // acceptance ratios are always well-defined.
  std::vector<std::vector<int>> state(R, std::vector<int>(m));
  std::vector<double> lp(R);
  for (int j = 0; j < R; ++j) {
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      for (int i = 0; i < m; ++i)
        state[j][i] = draw_truncated_binomial(prior, i, rng);
      lp[j] = log_posterior_tau(ds, state[j], prior, cfg.min_segment);
      ok = lp[j] != kNegInf;
    }
    if (!ok)
      throw std::runtime_error(
          "ddream_sample: could not initialize a chain with finite posterior");
  }

  TauDraws out;
  out.draws.resize(static_cast<Eigen::Index>(R) * std::max(0, I - burn), m);
  out.accept_rate.assign(R, 0.0);
  Eigen::Index row = 0;

  std::vector<std::vector<int>> snapshot;
  std::vector<int> partners(2 * 3);
  std::vector<int> proposal(m);
  for (int iter = 0; iter < I; ++iter) {
    snapshot = state;  // one sweep reads the sweep-start states
    for (int j = 0; j < R; ++j) {
      bool moved = false;
      if (rng.uniform() < cfg.unit_walk_prob) {
        // Unit random-walk move.  The rounded differential move is
        // reducible on the integer lattice once chains coincide (the
        // jitter all but never rounds away from zero), so a small
        // symmetric +/-1 mixture keeps the sampler irreducible.
        for (int i = 0; i < m; ++i) {
          proposal[i] = state[j][i] + (rng.uniform() < 0.5 ? -1 : 1);
          moved = true;
        }
      } else {
        const int delta = static_cast<int>(rng.uniform_int(1, 3));
        const double gamma = ddream_gamma(delta, m);
        // 2*delta distinct partner chains, none equal to j.
        int filled = 0;
        while (filled < 2 * delta) {
          const int c = static_cast<int>(rng.uniform_int(0, R - 1));
          if (c == j) continue;
          bool dup = false;
          for (int k = 0; k < filled; ++k) dup |= (partners[k] == c);
          if (!dup) partners[filled++] = c;
        }
        for (int i = 0; i < m; ++i) {
          double diff = 0.0;
          for (int g = 0; g < delta; ++g)
            diff += snapshot[partners[g]][i] - snapshot[partners[delta + g]][i];
          const double xi = rng.normal(0.0, 0.01);
          const long step = std::lround(gamma * diff + xi);
          proposal[i] = snapshot[j][i] + static_cast<int>(step);
          moved |= (step != 0);
        }
      }
      if (moved) {
        const double lp_new =
            log_posterior_tau(ds, proposal, prior, cfg.min_segment);
        if (lp_new != kNegInf &&
            std::log(rng.uniform_pos()) < lp_new - lp[j]) {
          state[j] = proposal;
          lp[j] = lp_new;
          out.accept_rate[j] += 1.0;
        }
      }
      if (iter >= burn) {
        for (int i = 0; i < m; ++i) out.draws(row, i) = state[j][i];
        ++row;
      }
    }
  }
  double pooled = 0.0;
  for (double& a : out.accept_rate) {
    a /= I;
    pooled += a;
  }
  out.pooled_accept_rate = pooled / R;
  return out;
}

FutureBreakPrior build_future_break_prior(const TimeSeriesDataset& ds,
                                          const Segmentation& seg) {
  const int m = seg.num_breaks();
  if (m < 2)
    throw std::invalid_argument(
        "future-break prior: need more than two regimes in sample (m >= 2)");
  const int K = ds.K();
  const int n_regimes = seg.num_segments();

  MatrixXd betas(n_regimes, K);
  double ssr_sum = 0.0;
  for (int i = 0; i < n_regimes; ++i) {
    const SegmentStats st = ds.segment_stats(seg.boundary(i), seg.boundary(i + 1));
    betas.row(i) = st.beta_hat.transpose();
    ssr_sum += st.ssr;
  }

  FutureBreakPrior fb;
  fb.geom_rate = static_cast<double>(m) / ds.T();
  fb.beta_mean = betas.colwise().mean();
  fb.beta_var.resize(K);
  for (int k = 0; k < K; ++k)
    fb.beta_var[k] =
        (betas.col(k).array() - fb.beta_mean[k]).square().sum() /
        (n_regimes - 1);
  fb.sigma2_shape = 0.5 * ds.T();
  fb.sigma2_scale = 0.5 * (ssr_sum / n_regimes);
  return fb;
}

VectorXd simulate_ar_path(const TimeSeriesDataset& ds, const VectorXd& beta,
                          double sigma2, int h, Rng& rng) {
  const int p = ds.ar_order();
  if (p < 1)
    throw std::invalid_argument("simulate_ar_path: AR design required");
  if (h < 1) throw std::invalid_argument("simulate_ar_path: horizon >= 1");
  const double sd = std::sqrt(sigma2);
  std::vector<double> lags(p);
  for (int l = 0; l < p; ++l) lags[l] = ds.y()[ds.T() - 1 - l];
  VectorXd path(h);
  for (int s = 0; s < h; ++s) {
    double mean = beta[0];
    for (int l = 0; l < p; ++l) mean += beta[l + 1] * lags[l];
    const double ynew = mean + sd * rng.normal();
    path[s] = ynew;
    for (int l = p - 1; l > 0; --l) lags[l] = lags[l - 1];
    lags[0] = ynew;
  }
  return path;
}

VectorXd future_break_draw(const TimeSeriesDataset& ds, const VectorXd& beta,
                           double sigma2, const FutureBreakPrior& fb, int h,
                           Rng& rng, std::int64_t* break_time_out) {
  const int p = ds.ar_order();
  if (p < 1)
    throw std::invalid_argument("future_break_draw: AR design required");
  if (h < 1) throw std::invalid_argument("future_break_draw: horizon >= 1");

  const std::int64_t break_at = ds.T() + rng.geometric(fb.geom_rate);
  if (break_time_out) *break_time_out = break_at;

  VectorXd cur_beta = beta;
  double cur_sd = std::sqrt(sigma2);
  std::vector<double> lags(p);
  for (int l = 0; l < p; ++l) lags[l] = ds.y()[ds.T() - 1 - l];
  VectorXd path(h);
  bool switched = false;
  for (int s = 0; s < h; ++s) {
    const std::int64_t t = ds.T() + s + 1;
    if (!switched && t > break_at) {
      // Post-break regime drawn from the hierarchical prior.
      for (int k = 0; k < cur_beta.size(); ++k)
        cur_beta[k] = rng.normal(fb.beta_mean[k], std::sqrt(fb.beta_var[k]));
      cur_sd = std::sqrt(rng.inverse_gamma(fb.sigma2_shape, fb.sigma2_scale));
      switched = true;
    }
    double mean = cur_beta[0];
    for (int l = 0; l < p; ++l) mean += cur_beta[l + 1] * lags[l];
    const double ynew = mean + cur_sd * rng.normal();
    path[s] = ynew;
    for (int l = p - 1; l > 0; --l) lags[l] = lags[l - 1];
    lags[0] = ynew;
  }
  return path;
}

std::vector<CredibleInterval> credible_intervals(const WeightedDraws& draws,
                                                 double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("credible_intervals: level must be in (0,1)");
  const Eigen::Index n = draws.draws.rows(), d = draws.draws.cols();
  if (n == 0) throw std::invalid_argument("credible_intervals: empty draws");

  const double wtotal = draws.weights.sum();
  const double lo_q = 0.5 * (1.0 - level), hi_q = 1.0 - lo_q;

  std::vector<CredibleInterval> out;
  out.reserve(d);
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index c = 0; c < d; ++c) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
      return draws.draws(i, c) < draws.draws(j, c);
    });
    // Weighted quantile with the midpoint convention, interpolating
    // between adjacent order statistics.
    auto quantile = [&](double q) {
      const double target = q * wtotal;
      double cum = 0.0;
      double prev_mid = 0.0;
      double prev_val = draws.draws(order.front(), c);
      for (Eigen::Index i : order) {
        const double w = draws.weights[i];
        const double mid = cum + 0.5 * w;
        const double val = draws.draws(i, c);
        if (mid >= target) {
          if (mid == prev_mid) return val;
          const double t = (target - prev_mid) / (mid - prev_mid);
          return prev_val + std::clamp(t, 0.0, 1.0) * (val - prev_val);
        }
        cum += w;
        prev_mid = mid;
        prev_val = val;
      }
      return draws.draws(order.back(), c);
    };
    CredibleInterval ci;
    ci.name = c < static_cast<Eigen::Index>(draws.names.size())
                  ? draws.names[c]
                  : "param" + std::to_string(c);
    ci.lower = quantile(lo_q);
    ci.upper = quantile(hi_q);
    out.push_back(std::move(ci));
  }
  return out;
}

}  // namespace breakscope
