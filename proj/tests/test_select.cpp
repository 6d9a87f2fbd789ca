#include "breakscope/select.hpp"

#include "breakscope/simlab.hpp"
#include "testutil.hpp"

#include <doctest.h>

#include <cmath>

using namespace breakscope;

TEST_SUITE_BEGIN("select");

TEST_CASE("posterior probabilities are a stable softmax") {
  CHECK(posterior_probabilities({-12.3}) == std::vector<double>{1.0});

  const auto two = posterior_probabilities({0.0, std::log(3.0)});
  CHECK(two[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(two[1] == doctest::Approx(0.75).epsilon(1e-12));

  for (double c : {-1e6, -17.0, 0.0, 400.0, 1e6}) {
    const auto thirds = posterior_probabilities({c, c, c});
    for (double p : thirds) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
  }

  // shift invariance
  const std::vector<double> base{-3.0, 1.5, 0.0, -20.0};
  const auto p0 = posterior_probabilities(base);
  std::vector<double> shifted = base;
  for (double& v : shifted) v += 123456.789;
  const auto p1 = posterior_probabilities(shifted);
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK(p0[i] == doctest::Approx(p1[i]).epsilon(1e-12));

  // adversarial spans: no NaN, normalized to 1e-12
  const auto wide = posterior_probabilities({-1e6, 1e6, 0.0, -123.0});
  double total = 0.0;
  for (double p : wide) {
    CHECK(!std::isnan(p));
    total += p;
  }
  CHECK(std::abs(total - 1.0) <= 1e-12);
  CHECK(wide[1] == doctest::Approx(1.0));

  // -inf candidates carry zero weight; all -inf is an error
  const double neg_inf = -std::numeric_limits<double>::infinity();
  const auto with_inf = posterior_probabilities({neg_inf, 2.0});
  CHECK(with_inf[0] == 0.0);
  CHECK(with_inf[1] == 1.0);
  CHECK_THROWS_AS(posterior_probabilities({neg_inf, neg_inf}),
                  std::invalid_argument);
  CHECK_THROWS_AS(posterior_probabilities({}), std::invalid_argument);
}

TEST_CASE("selection picks the highest-posterior method") {
  const VectorXd y = simulate_dgp(dgp_table('C'), 512, 77);
  const auto ds = build_ar_dataset(y, 1);
  DetectorConfig cfg;
  cfg.rng_seed = 5;
  cfg.wbs_intervals = 200;

  std::vector<double> posts;
  const auto pick =
      sel(ds, cfg, {Method::BSMDL, Method::WBSMDL, Method::PGMDL}, &posts);
  REQUIRE(posts.size() == 3);

  // the winner's score dominates every member's score
  for (Method m : {Method::BSMDL, Method::WBSMDL, Method::PGMDL}) {
    const auto res = run_method(ds, cfg, m);
    CHECK(pick.score.value >= res.score.value - 1e-9);
  }

  // identical methods share the posterior mass evenly
  std::vector<double> equal_posts;
  const auto same = sel(ds, cfg, {Method::BSMDL, Method::BSMDL}, &equal_posts);
  CHECK(equal_posts[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(same.segmentation.breaks() ==
        run_method(ds, cfg, Method::BSMDL).segmentation.breaks());

  CHECK_THROWS_AS(sel(ds, cfg, {}), std::invalid_argument);
}

TEST_CASE("selection holds up on the hardest benchmark process") {
  // near-unit-root variance breaks; picking the best-posterior local method
  // should find both regimes about as often as the reference rate
  const auto spec = dgp_table('E');
  int correct = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    const VectorXd y = simulate_dgp(spec, 1024, seed_hash({0x5e1ULL, static_cast<std::uint64_t>(rep)}));
    const auto ds = build_ar_dataset(y, 1);
    DetectorConfig cfg;
    cfg.rng_seed = seed_hash({0x5e1ULL, static_cast<std::uint64_t>(rep), 9});
    const auto pick = sel(ds, cfg, {Method::BSMDL, Method::WBSMDL, Method::PGMDL});
    if (pick.segmentation.num_breaks() == 2) ++correct;
  }
  CHECK(std::abs(100.0 * correct / reps - 92.1) <= 10.0);
}

TEST_CASE("mixture of parameter posteriors") {
  const VectorXd y = simulate_dgp(dgp_table('B'), 1024, 3);
  const auto ds = build_ar_dataset(y, 2);
  DetectorConfig cfg;
  cfg.rng_seed = 11;

  std::vector<MethodResult> cands;
  cands.push_back(run_method(ds, cfg, Method::BSMDL));
  cands.push_back(run_method(ds, cfg, Method::GMDL));
  const ModelEnsemble ensemble = make_ensemble(cands);

  // weight normalization across the pooled draw set
  Rng rng(seed_hash({31, 7}));
  std::vector<WeightedDraws> sets;
  const int t = 600;  // inside regime 2 (raw break dates 514 and 768)
  for (const auto& c : ensemble.candidates)
    sets.push_back(regime_parameter_draws(ds, c.segmentation, t, 4000, rng));
  const auto mix = mixture_parameter_density(ensemble, sets);
  CHECK(mix.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));

  // mixture mean of the first lag coefficient is near the regime-2 value
  const Eigen::Index col = 1;
  const double mean = mix.draws.col(col).dot(mix.weights);
  double var = 0.0;
  for (Eigen::Index i = 0; i < mix.draws.rows(); ++i) {
    const double d = mix.draws(i, col) - mean;
    var += mix.weights[i] * d * d;
  }
  CHECK(std::abs(mean - 1.69) <= 2.0 * std::sqrt(var));

  // one candidate with all the weight reproduces that candidate
  ModelEnsemble lone;
  lone.candidates.push_back(ensemble.candidates[0]);
  lone.log_ml = {ensemble.log_ml[0]};
  lone.posterior = {1.0};
  const auto single = mixture_parameter_density(lone, {sets[0]});
  CHECK(single.draws.rows() == sets[0].draws.rows());
  CHECK(single.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));

  // two candidates with equal weight average the per-model means
  ModelEnsemble pair;
  pair.candidates = {ensemble.candidates[0], ensemble.candidates[0]};
  pair.log_ml = {0.0, 0.0};
  pair.posterior = {0.5, 0.5};
  const auto mixed = mixture_parameter_density(pair, {sets[0], sets[1]});
  const double m0 = sets[0].draws.col(col).mean();
  const double m1 = sets[1].draws.col(col).mean();
  const double mm = mixed.draws.col(col).dot(mixed.weights);
  CHECK(mm == doctest::Approx(0.5 * m0 + 0.5 * m1).epsilon(1e-9));

  CHECK_THROWS_AS(mixture_parameter_density(ensemble, {sets[0]}),
                  std::invalid_argument);
}

TEST_CASE("combined predictive draws") {
  // no-break AR(1) with a known strong signal: one-step mean is b0 + b1 y_T
  const VectorXd y = testutil::ar1_series(800, 0.8, 0.5, 4242);
  const auto ds = build_ar_dataset(y, 1);
  const auto seg = Segmentation::none(ds.T());

  Rng rng(seed_hash({1, 2}));
  const MatrixXd paths = simulate_predictive(ds, seg, 3, 20000, rng);
  const auto st = ds.segment_stats(0, ds.T());
  const double expected =
      st.beta_hat[0] + st.beta_hat[1] * ds.y()[ds.T() - 1];
  const double sd = std::sqrt(st.ssr / ds.T());
  CHECK(std::abs(paths.col(0).mean() - expected) <=
        4.0 * sd / std::sqrt(20000.0));

  // single candidate with weight one reduces to that model's predictive
  MethodResult only;
  only.segmentation = seg;
  only.score = mdl_marginal_loglik(ds, seg);
  ModelEnsemble lone = make_ensemble({only});
  const auto combined = combined_predictive(lone, {paths});
  CHECK(combined.paths.rows() == paths.rows());
  const VectorXd point = combined.point_forecast();
  CHECK(point[0] == doctest::Approx(paths.col(0).mean()).epsilon(1e-12));

  // all weight on one model: pooled draws are indistinguishable from that
  // model's own predictive
  Rng rng2(seed_hash({1, 3}));
  const MatrixXd fresh = simulate_predictive(ds, seg, 3, 5000, rng2);
  std::vector<double> a(fresh.rows()), b(paths.rows());
  for (Eigen::Index i = 0; i < fresh.rows(); ++i) a[i] = fresh(i, 0);
  for (Eigen::Index i = 0; i < paths.rows(); ++i) b[i] = paths(i, 0);
  b.resize(5000);
  CHECK(testutil::ks_two_sample_pvalue(a, b) > 0.01);
}

TEST_CASE("expanding-window harness on a predictable series") {
  // near-constant series: forecasts should be near-perfect at all horizons
  Rng rng(seed_hash({5, 5}));
  VectorXd y(260);
  for (int t = 0; t < 260; ++t) y[t] = 5.0 + 1e-4 * rng.normal();

  ForecastSpec spec;
  spec.ar_orders = {1};
  spec.methods = {Method::BSMDL};
  spec.horizons = {1, 3};
  spec.n_draws = 50;
  spec.origin_stride = 25;
  spec.seed = 7;
  const auto scores = forecast_harness(y, spec);

  REQUIRE(!scores.models.empty());
  for (std::size_t m = 0; m < scores.models.size(); ++m)
    for (std::size_t h = 0; h < scores.horizons.size(); ++h) {
      if (std::isnan(scores.rmsfe[m][h])) continue;
      CHECK(scores.rmsfe[m][h] < 0.01);
      // power-mean inequality
      CHECK(scores.rmsfe[m][h] >= scores.mafe[m][h] - 1e-12);
    }
}

TEST_CASE("future-break combination beats the no-break model far out") {
  // piecewise AR(1) with level regimes; the post-break layer keeps its
  // long-horizon edge when regime dynamics are comfortably stationary
  DgpSpec dgp;
  dgp.id = 'C';
  dgp.ar_order = 1;
  dgp.breaks_at_1024 = {512, 768};
  dgp.coeffs = {{0.0, 0.5, 0.0}, {1.2, 0.4, 0.0}, {-0.8, 0.5, 0.0}};
  dgp.sigma2 = {1.0, 1.0, 1.0};
  const VectorXd y = simulate_dgp(dgp, 700, 404);

  ForecastSpec spec;
  spec.ar_orders = {1};
  spec.methods = {Method::BSMDL};
  spec.horizons = {12};
  spec.n_draws = 300;
  spec.origin_stride = 5;
  spec.start_fraction = 0.15;
  spec.future_break = true;
  spec.seed = 77;
  const auto scores = forecast_harness(y, spec);

  int base = -1, fb = -1;
  for (std::size_t m = 0; m < scores.models.size(); ++m) {
    if (scores.models[m] == "ar1") base = static_cast<int>(m);
    if (scores.models[m] == "ar1-local-fb") fb = static_cast<int>(m);
  }
  REQUIRE(base >= 0);
  REQUIRE(fb >= 0);
  CHECK(scores.rmsfe[fb][0] <= scores.rmsfe[base][0]);
}

TEST_CASE("harness scores a piecewise series and orders the losses") {
  const VectorXd y = simulate_dgp(dgp_table('B'), 600, 2024);

  ForecastSpec spec;
  spec.ar_orders = {2};
  spec.methods = {Method::BSMDL};
  spec.horizons = {1, 3};
  spec.n_draws = 120;
  spec.origin_stride = 10;
  spec.start_fraction = 0.5;
  spec.seed = 31;
  const auto scores = forecast_harness(y, spec);

  // rows: ar2 baseline, ar2-bsmdl, ar2-local
  REQUIRE(scores.models.size() == 3);
  for (std::size_t m = 0; m < scores.models.size(); ++m)
    for (std::size_t h = 0; h < scores.horizons.size(); ++h) {
      REQUIRE(!std::isnan(scores.rmsfe[m][h]));
      CHECK(scores.rmsfe[m][h] >= scores.mafe[m][h] - 1e-12);
    }

  // deterministic in the seed
  const auto again = forecast_harness(y, spec);
  CHECK(again.rmsfe == scores.rmsfe);
}

TEST_SUITE_END();
