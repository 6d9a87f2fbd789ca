#include "breakscope/bayes.hpp"

#include "breakscope/simlab.hpp"
#include "testutil.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace breakscope;

namespace {

// Two-regime fixture with a clear variance shift; T small enough to
// enumerate the posterior exactly.
TimeSeriesDataset enumeration_fixture(int T, int break_at, std::uint64_t seed) {
  Rng rng(seed_hash({seed, 0x656e756dULL}));
  VectorXd y(T);
  for (int t = 0; t < T; ++t)
    y[t] = (t < break_at ? 1.0 + 0.6 * rng.normal() : -1.2 + 1.4 * rng.normal());
  return build_dataset(y, MatrixXd::Ones(T, 1));
}

}  // namespace

TEST_SUITE_BEGIN("bayes");

TEST_CASE("posterior mean of the variance matches the closed form") {
  SegmentStats st;
  st.n = 100;
  st.ssr = 50.0;
  st.beta_hat = VectorXd::Zero(1);
  st.xtx = MatrixXd::Identity(1, 1) * 100.0;
  st.log_det_xtx = std::log(100.0);
  const auto prior = calibrate(st, 0, 100, 1);
  CHECK(prior.nu_under == doctest::Approx(10.0));
  CHECK(prior.s_under == doctest::Approx(5.0));

  const auto post = nig_posterior(st, prior);
  CHECK(post.sigma2_mean() == doctest::Approx(55.0 / 108.0).epsilon(1e-12));
  CHECK(post.beta_bar == st.beta_hat);

  Rng rng(seed_hash({4, 2}));
  const int n_draws = 50000;
  double sum = 0.0, sum2 = 0.0, beta_sum = 0.0, beta_sum2 = 0.0;
  for (int d = 0; d < n_draws; ++d) {
    const auto [beta, sigma2] = gibbs_segment_draw(st, prior, rng);
    sum += sigma2;
    sum2 += sigma2 * sigma2;
    beta_sum += beta[0];
    beta_sum2 += beta[0] * beta[0];
  }
  const double mean = sum / n_draws;
  const double se = std::sqrt((sum2 / n_draws - mean * mean) / n_draws);
  CHECK(std::abs(mean - 55.0 / 108.0) <= 3.0 * se);

  // posterior of beta is centered at beta_hat with the g-prior shrinkage
  const double beta_mean = beta_sum / n_draws;
  const double beta_var = beta_sum2 / n_draws - beta_mean * beta_mean;
  const double beta_se = std::sqrt(beta_var / n_draws);
  CHECK(std::abs(beta_mean - 0.0) <= 3.0 * beta_se);
  const double expected_var =
      post.sigma2_mean() / (1.0 + 1.0 / prior.g_under) / 100.0;
  CHECK(beta_var == doctest::Approx(expected_var).epsilon(0.05));
}

TEST_CASE("break prior calibration on the benchmark dates") {
  const Segmentation tau_hat({400, 612}, 1024);
  const auto prior = build_break_prior(tau_hat);
  CHECK(prior.r[0] == 506);
  CHECK(prior.e[0] == doctest::Approx(400.0 / 506.0).epsilon(1e-12));
  CHECK(prior.support_lo[0] == 200);
  CHECK(prior.support_hi[0] == 506);
  CHECK(prior.r[1] == 818);
  CHECK(prior.support_lo[1] == 506);
  CHECK(prior.support_hi[1] == 818);

  // prior mode sits on the anchor
  for (int i = 0; i < 2; ++i) {
    int arg = prior.support_lo[i];
    for (int x = prior.support_lo[i]; x <= prior.support_hi[i]; ++x)
      if (prior.log_pmf(i, x) > prior.log_pmf(i, arg)) arg = x;
    CHECK(std::abs(arg - tau_hat.breaks()[i]) <= 2);
  }

  const Segmentation single({512}, 1024);
  const auto sp = build_break_prior(single);
  CHECK(sp.support_lo[0] == 256);
  CHECK(sp.support_hi[0] == 768);
}

TEST_CASE("posterior kernel is the likelihood-prior product inside support") {
  const auto ds = enumeration_fixture(80, 40, 5);
  const Segmentation tau_hat({40}, 80);
  const auto prior = build_break_prior(tau_hat);

  CHECK(log_posterior_tau(ds, {19}, prior) ==
        -std::numeric_limits<double>::infinity());

  const double lp_a = log_posterior_tau(ds, {38}, prior);
  const double lp_b = log_posterior_tau(ds, {44}, prior);
  const double delta_ml =
      mdl_marginal_loglik(ds, Segmentation({38}, 80)).value -
      mdl_marginal_loglik(ds, Segmentation({44}, 80)).value;
  const double delta_prior = prior.log_pmf(0, 38) - prior.log_pmf(0, 44);
  CHECK(lp_a - lp_b == doctest::Approx(delta_ml + delta_prior).epsilon(1e-10));
}

TEST_CASE("jump scale arithmetic") {
  CHECK(ddream_gamma(1, 2) == doctest::Approx(1.19).epsilon(1e-12));
  CHECK(ddream_gamma(3, 4) == doctest::Approx(2.38 / std::sqrt(24.0)).epsilon(1e-12));
}

TEST_CASE("sampler reproduces the enumerated posterior") {
  const auto ds = enumeration_fixture(60, 30, 12);
  const Segmentation tau_hat({30}, 60);
  const auto prior = build_break_prior(tau_hat);

  // exact single-coordinate posterior over the support
  std::map<int, double> exact;
  double max_lp = -std::numeric_limits<double>::infinity();
  for (int x = prior.support_lo[0]; x <= prior.support_hi[0]; ++x) {
    const double lp = log_posterior_tau(ds, {x}, prior);
    if (std::isfinite(lp)) {
      exact[x] = lp;
      max_lp = std::max(max_lp, lp);
    }
  }
  double total = 0.0;
  for (auto& [x, lp] : exact) total += (lp = std::exp(lp - max_lp));
  for (auto& [x, lp] : exact) lp /= total;

  SamplerConfig cfg;
  cfg.iterations = 3000;
  cfg.seed = 99;
  const TauDraws draws = ddream_sample(ds, prior, cfg);
  const double n = static_cast<double>(draws.draws.rows());

  std::map<int, int> counts;
  for (Eigen::Index r = 0; r < draws.draws.rows(); ++r) {
    const int x = draws.draws(r, 0);
    REQUIRE(x >= prior.support_lo[0]);
    REQUIRE(x <= prior.support_hi[0]);
    counts[x]++;
  }
  // every support point with nontrivial mass within 3 binomial SEs, with a
  // small slack for chain autocorrelation
  for (const auto& [x, p] : exact) {
    if (p < 0.005) continue;
    const double freq = counts.count(x) ? counts[x] / n : 0.0;
    const double se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::abs(freq - p) <= 3.0 * se + 0.02);
  }
  CHECK(draws.pooled_accept_rate > 0.0);
}

TEST_CASE("future-break prior learns the break process") {
  const VectorXd y = simulate_dgp(dgp_table('C'), 1024, 3);
  const auto ds = build_ar_dataset(y, 1);
  const Segmentation seg({399, 611}, ds.T());
  const auto fb = build_future_break_prior(ds, seg);
  CHECK(fb.geom_rate == doctest::Approx(2.0 / 1023.0).epsilon(1e-12));
  CHECK(fb.sigma2_shape == doctest::Approx(0.5 * 1023.0));
  CHECK(fb.beta_mean.size() == 2);
  CHECK(fb.beta_var.minCoeff() > 0.0);

  const Segmentation one_break({500}, ds.T());
  CHECK_THROWS_AS(build_future_break_prior(ds, one_break),
                  std::invalid_argument);

  // the documented rate at the empirical scale of the long application
  CHECK(38.0 / 14979.0 == doctest::Approx(0.002537).epsilon(1e-3));
}

TEST_CASE("geometric break arrival has the stated cdf") {
  Rng rng(seed_hash({8, 1}));
  const double r = 0.05;
  const int h = 10, n = 100000;
  int within = 0;
  for (int i = 0; i < n; ++i)
    if (rng.geometric(r) <= h) ++within;
  const double p = 1.0 - std::pow(1.0 - r, h);
  const double se = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(within / static_cast<double>(n) - p) <= 3.0 * se);
}

TEST_CASE("a vanishing break rate reduces to the terminal regime") {
  const VectorXd y = simulate_dgp(dgp_table('C'), 512, 21);
  const auto ds = build_ar_dataset(y, 1);
  const Segmentation seg({199, 305}, ds.T());
  auto fb = build_future_break_prior(ds, seg);
  fb.geom_rate = 1e-12;  // the break never lands inside the horizon

  const auto st = ds.segment_stats(seg.boundary(2), ds.T());
  const auto prior = calibrate(st, 2, ds.T(), ds.K());
  Rng rng(seed_hash({77, 1}));
  const auto [beta, sigma2] = gibbs_segment_draw(st, prior, rng);

  const int n = 20000;
  double sum_fb = 0.0, sum2_fb = 0.0, sum_plain = 0.0, sum2_plain = 0.0;
  for (int i = 0; i < n; ++i) {
    std::int64_t break_time = 0;
    const double a = future_break_draw(ds, beta, sigma2, fb, 1, rng, &break_time)[0];
    CHECK(break_time > ds.T() + 1);
    const double b = simulate_ar_path(ds, beta, sigma2, 1, rng)[0];
    sum_fb += a;
    sum2_fb += a * a;
    sum_plain += b;
    sum2_plain += b * b;
  }
  const double mean_fb = sum_fb / n, mean_plain = sum_plain / n;
  const double var_fb = sum2_fb / n - mean_fb * mean_fb;
  const double se = std::sqrt(2.0 * var_fb / n);
  CHECK(std::abs(mean_fb - mean_plain) <= 3.0 * se);
  CHECK(var_fb == doctest::Approx(sum2_plain / n - mean_plain * mean_plain)
                      .epsilon(0.1));
}

TEST_CASE("credible intervals from weighted draws") {
  WeightedDraws point;
  point.draws = MatrixXd::Constant(10, 1, 3.25);
  point.weights = VectorXd::Constant(10, 0.1);
  point.names = {"x"};
  const auto ci = credible_intervals(point, 0.95);
  CHECK(ci[0].lower == doctest::Approx(3.25));
  CHECK(ci[0].upper == doctest::Approx(3.25));

  Rng rng(seed_hash({13, 4}));
  WeightedDraws normal;
  const int n = 200000;
  normal.draws.resize(n, 1);
  for (int i = 0; i < n; ++i) normal.draws(i, 0) = rng.normal();
  normal.weights = VectorXd::Constant(n, 1.0 / n);
  normal.names = {"z"};
  const auto zi = credible_intervals(normal, 0.95);
  CHECK(zi[0].lower == doctest::Approx(-1.96).epsilon(0.02));
  CHECK(zi[0].upper == doctest::Approx(1.96).epsilon(0.02));

  CHECK_THROWS_AS(credible_intervals(point, 1.5), std::invalid_argument);
}

TEST_CASE("posterior intervals cover the terminal coefficients") {
  // five-factor fixture: K = 6, two breaks, known terminal coefficients
  const int T = 800, reps = 200;
  VectorXd true_beta(6);
  true_beta << 0.1, 1.2, -0.4, 0.3, 0.5, -0.2;
  int covered = 0;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(seed_hash({static_cast<std::uint64_t>(rep), 0x636f76ULL}));
    MatrixXd X(T, 6);
    X.col(0).setOnes();
    for (int t = 0; t < T; ++t)
      for (int k = 1; k < 6; ++k) X(t, k) = rng.normal();
    VectorXd y(T);
    const Segmentation seg({200, 400}, T);
    for (int t = 0; t < T; ++t) {
      VectorXd beta = true_beta;
      if (t < 200) beta.array() += 0.8;
      else if (t < 400) beta.array() -= 0.5;
      y[t] = X.row(t).dot(beta) + rng.normal();
    }
    const auto ds = build_dataset(y, X);
    const auto st = ds.segment_stats(400, T);
    const auto prior = calibrate(st, 2, T, 6);

    WeightedDraws draws;
    const int n_draws = 3000;
    draws.draws.resize(n_draws, 1);
    draws.weights = VectorXd::Constant(n_draws, 1.0 / n_draws);
    draws.names = {"beta1"};
    for (int d = 0; d < n_draws; ++d)
      draws.draws(d, 0) = gibbs_segment_draw(st, prior, rng).first[1];
    const auto ci = credible_intervals(draws, 0.95);
    if (ci[0].lower <= true_beta[1] && true_beta[1] <= ci[0].upper) ++covered;
  }
  CHECK(covered >= static_cast<int>(0.93 * reps));
}

TEST_SUITE_END();
