// breakscope: change-point detection, simulation, posterior sampling and
// forecast combination for piecewise-linear Gaussian regression.

#include "breakscope/csv.hpp"
#include "breakscope/json_io.hpp"
#include "breakscope/parallel.hpp"
#include "breakscope/select.hpp"
#include "breakscope/simlab.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

namespace {

using namespace breakscope;
using Clock = std::chrono::steady_clock;

std::uint64_t auto_seed(std::uint64_t requested) {
  if (requested != 0) return requested;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Method> parse_methods(const std::string& csv) {
  std::vector<Method> out;
  for (const auto& name : split_list(csv)) {
    if (name == "all") {
      for (Method m : {Method::BS, Method::WBS, Method::BSMDL, Method::WBSMDL,
                       Method::PGMDL, Method::GMDL})
        out.push_back(m);
    } else {
      out.push_back(method_from_name(name));
    }
  }
  if (out.empty()) throw CLI::ValidationError("--method", "empty method list");
  return out;
}

std::vector<int> parse_ints(const std::string& csv, const char* flag) {
  std::vector<int> out;
  for (const auto& item : split_list(csv)) {
    try {
      out.push_back(std::stoi(item));
    } catch (...) {
      throw CLI::ValidationError(flag, "not an integer: " + item);
    }
  }
  if (out.empty()) throw CLI::ValidationError(flag, "empty list");
  return out;
}

std::vector<double> parse_doubles(const std::string& csv, const char* flag) {
  std::vector<double> out;
  for (const auto& item : split_list(csv)) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      throw CLI::ValidationError(flag, "not a number: " + item);
    }
  }
  if (out.empty()) throw CLI::ValidationError(flag, "empty list");
  return out;
}

struct DetectorFlags {
  double threshold = 3.0;
  double cumsum_threshold = 0.0;
  int min_duration = 0;
  int max_breaks = 50;
  int wbs_intervals = 1000;
  int scan_radius = 0;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--threshold", threshold,
                    "acceptance threshold for the marginal-ratio statistic");
    cmd->add_option("--cumsum-threshold", cumsum_threshold,
                    "cumsum threshold (0 = MAD-based default)");
    cmd->add_option("--min-duration", min_duration,
                    "minimum regime duration (0 = max(10K, ceil(sqrt(T))/2))");
    cmd->add_option("--max-breaks", max_breaks, "maximum number of breaks");
    cmd->add_option("--wbs-intervals", wbs_intervals,
                    "random intervals per segment for the wild variants");
    cmd->add_option("--scan-radius", scan_radius,
                    "scan window radius (0 = nearest integer to ln T)");
    cmd->add_option("--seed", seed, "RNG seed (0 = draw one and echo it)");
  }
  DetectorConfig config() const {
    DetectorConfig cfg;
    cfg.threshold_delta = threshold;
    cfg.cumsum_threshold = cumsum_threshold;
    cfg.min_duration = min_duration;
    cfg.max_breaks = max_breaks;
    cfg.wbs_intervals = wbs_intervals;
    cfg.scan_radius = scan_radius;
    cfg.rng_seed = seed;
    return cfg;
  }
  json echo() const {
    return {{"threshold", threshold},
            {"cumsum_threshold", cumsum_threshold},
            {"min_duration", min_duration},
            {"max_breaks", max_breaks},
            {"wbs_intervals", wbs_intervals},
            {"scan_radius", scan_radius},
            {"seed", seed}};
  }
};

TimeSeriesDataset load_input(const std::string& path, int ar_order,
                             bool no_intercept) {
  const CsvData csv = read_csv(path);
  if (ar_order >= 1) return build_ar_dataset(csv.y, ar_order);
  return dataset_from_csv(csv, !no_intercept);
}

int cmd_detect(const std::string& input, const std::string& method_list,
               int ar_order, bool no_intercept, DetectorFlags flags,
               int threads, const std::string& output) {
  const auto t0 = Clock::now();
  flags.seed = auto_seed(flags.seed);
  const TimeSeriesDataset ds = load_input(input, ar_order, no_intercept);
  const int offset = ar_order >= 1 ? ar_order : 0;
  const std::vector<Method> methods = parse_methods(method_list);

  json results = json::array();
  for (Method m : methods) {
    const MethodResult res = run_method(ds, flags.config(), m);
    results.push_back(method_result_json(res, ds, offset));
  }
  json config = flags.echo();
  config["input"] = input;
  config["ar_order"] = ar_order;
  config["threads"] = resolve_threads(threads);
  const auto doc = result_envelope(
      "detect", config, {{"runs", results}, {"T", ds.T()}, {"K", ds.K()}},
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0)
          .count());
  write_json(output, doc);
  return 0;
}

int cmd_simulate(char dgp, int T, int reps, const std::string& method_list,
                 DetectorFlags flags, int threads, int exact_distance,
                 const std::string& output, bool with_posteriors) {
  const auto t0 = Clock::now();
  flags.seed = auto_seed(flags.seed);
  const DgpSpec spec = dgp_table(dgp);
  const std::vector<Method> methods = parse_methods(method_list);
  const ReplicationReport report = run_replications(
      spec, methods, reps, T, flags.seed, flags.config(), threads,
      exact_distance);
  json results = replication_report_json(report);
  if (with_posteriors && methods.size() >= 2) {
    const PosteriorProbStudy study = posterior_prob_study(
        spec, methods, reps, T, flags.seed, flags.config(), threads);
    results["posterior_study"] = posterior_study_json(study);
  }
  json config = flags.echo();
  config["dgp"] = std::string(1, dgp);
  config["T"] = T;
  config["reps"] = reps;
  config["threads"] = resolve_threads(threads);
  const auto doc = result_envelope(
      "simulate", config, results,
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0)
          .count());
  write_json(output, doc);
  return 0;
}

int cmd_sample(const std::string& input, const std::string& breaks_list,
               int ar_order, bool no_intercept, int iters, int chains,
               std::uint64_t seed, bool future_break, double level,
               int param_draws, const std::string& output) {
  const auto t0 = Clock::now();
  seed = auto_seed(seed);
  const TimeSeriesDataset ds = load_input(input, ar_order, no_intercept);
  const int offset = ar_order >= 1 ? ar_order : 0;

  std::vector<int> raw_breaks = parse_ints(breaks_list, "--breaks");
  for (int& b : raw_breaks) b -= offset;  // raw time axis -> effective
  const Segmentation tau_hat(raw_breaks, ds.T());

  const BreakPrior prior = build_break_prior(tau_hat);
  SamplerConfig cfg;
  cfg.iterations = iters;
  cfg.chains = chains;
  cfg.seed = seed;
  const TauDraws draws = ddream_sample(ds, prior, cfg);

  // Parameter draws conditional on sampled break vectors: one (beta,
  // sigma2) draw per regime per retained tau draw.
  const int m = tau_hat.num_breaks();
  const int K = ds.K();
  Rng rng(seed_hash({seed, 0x706172616dULL}));
  const Eigen::Index n_tau = draws.draws.rows();
  const int use = std::min<Eigen::Index>(n_tau, param_draws);
  std::vector<WeightedDraws> per_regime(m + 1);
  for (int i = 0; i <= m; ++i) {
    per_regime[i].draws.resize(use, K + 1);
    per_regime[i].weights = VectorXd::Constant(use, 1.0 / use);
    for (int k = 0; k < K; ++k)
      per_regime[i].names.push_back("beta" + std::to_string(k));
    per_regime[i].names.push_back("sigma2");
  }
  WeightedDraws tau_cols;
  tau_cols.draws.resize(use, m);
  tau_cols.weights = VectorXd::Constant(use, 1.0 / use);
  for (int i = 0; i < m; ++i)
    tau_cols.names.push_back("tau" + std::to_string(i + 1));

  const Eigen::Index stride = std::max<Eigen::Index>(1, n_tau / use);
  for (int d = 0; d < use; ++d) {
    const Eigen::Index row = std::min(n_tau - 1, d * stride);
    std::vector<int> tau(m);
    for (int i = 0; i < m; ++i) tau[i] = draws.draws(row, i);
    const Segmentation seg(tau, ds.T());
    for (int i = 0; i <= m; ++i) {
      const SegmentStats st =
          ds.segment_stats(seg.boundary(i), seg.boundary(i + 1));
      const auto [beta, sigma2] =
          gibbs_segment_draw(st, calibrate(st, m, ds.T(), K), rng);
      per_regime[i].draws.row(d).head(K) = beta.transpose();
      per_regime[i].draws(d, K) = sigma2;
    }
    for (int i = 0; i < m; ++i)
      tau_cols.draws(d, i) = tau[i] + offset;
  }

  json results;
  results["tau"] = tau_draws_json(draws, offset);
  // break dates are integers; snap interval ends outward
  auto tau_ci = credible_intervals(tau_cols, level);
  for (auto& ci : tau_ci) {
    ci.lower = std::floor(ci.lower);
    ci.upper = std::ceil(ci.upper);
  }
  results["tau_intervals"] = intervals_json(tau_ci);
  json regimes = json::array();
  for (int i = 0; i <= m; ++i) {
    json rj;
    rj["regime"] = i + 1;
    rj["intervals"] = intervals_json(credible_intervals(per_regime[i], level));
    regimes.push_back(std::move(rj));
  }
  results["regime_intervals"] = regimes;

  if (future_break) {
    const FutureBreakPrior fb = build_future_break_prior(ds, tau_hat);
    Rng rng_fb(seed_hash({seed, 0x6662ULL}));
    const int n_fb = 5000;
    WeightedDraws fb_draws;
    fb_draws.draws.resize(n_fb, K + 1);
    fb_draws.weights = VectorXd::Constant(n_fb, 1.0 / n_fb);
    for (int k = 0; k < K; ++k)
      fb_draws.names.push_back("beta" + std::to_string(k) + "_post_break");
    fb_draws.names.push_back("sigma2_post_break");
    for (int d = 0; d < n_fb; ++d) {
      for (int k = 0; k < K; ++k)
        fb_draws.draws(d, k) =
            rng_fb.normal(fb.beta_mean[k], std::sqrt(fb.beta_var[k]));
      fb_draws.draws(d, K) =
          rng_fb.inverse_gamma(fb.sigma2_shape, fb.sigma2_scale);
    }
    results["future_break"] = {
        {"geom_rate", fb.geom_rate},
        {"intervals", intervals_json(credible_intervals(fb_draws, level))}};
  }

  json config = {{"input", input},       {"breaks", breaks_list},
                 {"ar_order", ar_order}, {"iters", iters},
                 {"chains", chains},     {"seed", seed},
                 {"future_break", future_break}, {"level", level}};
  const auto doc = result_envelope(
      "sample", config, results,
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0)
          .count());
  write_json(output, doc);
  return 0;
}

int cmd_forecast(const std::string& input, const std::string& ar_list,
                 const std::string& method_list, const std::string& horizons,
                 const std::string& threshold_list, double start_frac,
                 bool future_break, int n_draws, int stride,
                 std::uint64_t seed, int threads, DetectorFlags flags,
                 const std::string& output, const std::string& loss_csv) {
  const auto t0 = Clock::now();
  seed = auto_seed(seed);
  const CsvData csv = read_csv(input);

  ForecastSpec spec;
  spec.ar_orders = parse_ints(ar_list, "--ar");
  spec.methods = parse_methods(method_list);
  spec.thresholds = parse_doubles(threshold_list, "--thresholds");
  spec.horizons = parse_ints(horizons, "--horizons");
  spec.start_fraction = start_frac;
  spec.future_break = future_break;
  spec.n_draws = n_draws;
  spec.origin_stride = stride;
  spec.seed = seed;
  spec.threads = threads;
  spec.detector = flags.config();

  const ForecastScores scores = forecast_harness(csv.y, spec);

  if (!loss_csv.empty()) {
    std::vector<std::string> header{"origin"};
    for (std::size_t m = 0; m < scores.models.size(); ++m)
      for (int h : scores.horizons)
        header.push_back(scores.models[m] + "_h" + std::to_string(h));
    std::vector<std::vector<double>> rows;
    for (std::size_t oi = 0; oi < scores.origins.size(); ++oi) {
      std::vector<double> row{static_cast<double>(scores.origins[oi])};
      for (std::size_t m = 0; m < scores.models.size(); ++m)
        for (std::size_t hi = 0; hi < scores.horizons.size(); ++hi)
          row.push_back(scores.errors[m][oi][hi]);
      rows.push_back(std::move(row));
    }
    write_csv(loss_csv, header, rows);
  }

  json config = flags.echo();
  config["input"] = input;
  config["ar"] = ar_list;
  config["methods"] = method_list;
  config["thresholds"] = threshold_list;
  config["horizons"] = horizons;
  config["start_frac"] = start_frac;
  config["future_break"] = future_break;
  config["draws"] = n_draws;
  config["stride"] = stride;
  config["seed"] = seed;
  const auto doc = result_envelope(
      "forecast", config, forecast_scores_json(scores),
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0)
          .count());
  write_json(output, doc);
  return 0;
}

int cmd_oracle(const std::string& input, int ar_order, bool no_intercept,
               DetectorFlags flags, const std::string& output) {
  const auto t0 = Clock::now();
  flags.seed = auto_seed(flags.seed);
  const TimeSeriesDataset ds = load_input(input, ar_order, no_intercept);
  const int offset = ar_order >= 1 ? ar_order : 0;
  const MethodResult res = brute_force(ds, flags.config());
  json config = flags.echo();
  config["input"] = input;
  config["ar_order"] = ar_order;
  const auto doc = result_envelope(
      "oracle", config, {{"runs", json::array({method_result_json(res, ds, offset)})}},
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0)
          .count());
  write_json(output, doc);
  return 0;
}

int cmd_equiv_check(int fixtures, int min_segment, std::uint64_t seed,
                    double tolerance, const std::string& output) {
  const auto t0 = Clock::now();
  seed = auto_seed(seed);
  double worst = 0.0;
  int worst_fixture = -1;
  Rng rng(seed_hash({seed, 0x65717576ULL}));
  for (int f = 0; f < fixtures; ++f) {
    const int K = 1 + static_cast<int>(rng.uniform_int(0, 2));
    const int m = static_cast<int>(rng.uniform_int(0, 4));
    const int T = (m + 1) * min_segment +
                  static_cast<int>(rng.uniform_int(0, 4 * min_segment));
    std::vector<int> breaks;
    // segment lengths >= min_segment, remainder spread uniformly
    {
      std::vector<double> cuts(m);
      for (int i = 0; i < m; ++i) cuts[i] = rng.uniform();
      std::sort(cuts.begin(), cuts.end());
      const int slack = T - (m + 1) * min_segment;
      int acc = 0;
      for (int i = 0; i < m; ++i) {
        acc = std::max(acc + min_segment,
                       (i + 1) * min_segment +
                           static_cast<int>(cuts[i] * slack));
        breaks.push_back(acc);
      }
    }
    MatrixXd X(T, K);
    X.col(0).setOnes();
    for (int k = 1; k < K; ++k)
      for (int t = 0; t < T; ++t) X(t, k) = rng.normal();
    VectorXd y(T);
    const Segmentation seg(breaks, T);
    for (int i = 0; i < seg.num_segments(); ++i) {
      VectorXd beta(K);
      for (int k = 0; k < K; ++k) beta[k] = 2.0 * rng.normal();
      const double sd = 0.5 + 1.5 * rng.uniform();
      for (int t = seg.boundary(i); t < seg.boundary(i + 1); ++t)
        y[t] = X.row(t).dot(beta) + sd * rng.normal();
    }
    const TimeSeriesDataset ds = build_dataset(y, X);
    const double diff =
        std::abs(mdl_marginal_loglik(ds, seg).value - mdl_criterion(ds, seg).value);
    if (diff > worst) {
      worst = diff;
      worst_fixture = f;
    }
  }
  const bool pass = worst <= tolerance;
  json results = {{"fixtures", fixtures},
                  {"min_segment", min_segment},
                  {"max_abs_diff", worst},
                  {"worst_fixture", worst_fixture},
                  {"tolerance", tolerance},
                  {"pass", pass}};
  json config = {{"fixtures", fixtures},
                 {"min_segment", min_segment},
                 {"seed", seed},
                 {"tolerance", tolerance}};
  const auto doc = result_envelope(
      "equiv-check", config, results,
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0)
          .count());
  write_json(output, doc);
  return pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"breakscope: MDL marginal-likelihood change-point toolkit"};
  app.require_subcommand(1);

  std::string input, output, loss_csv;
  std::string method_list = "bsmdl", ar_list = "1", horizons = "1,3,6,12";
  std::string breaks_list, threshold_list = "3";
  int ar_order = 0, threads = 0, reps = 200, T = 1024;
  int iters = 1000, chains = 10, param_draws = 2000, n_draws = 300, stride = 1;
  int fixtures = 500, min_segment = 30, exact_distance = 50;
  char dgp = 'B';
  bool no_intercept = false, future_break = false, with_posteriors = false;
  double start_frac = 0.1, level = 0.95, tolerance = 1e-4;
  std::uint64_t seed = 0;
  DetectorFlags flags;

  auto* detect = app.add_subcommand("detect", "detect change points");
  detect->add_option("--input", input, "CSV input")->required();
  detect->add_option("--method", method_list,
                     "bs|wbs|bsmdl|wbsmdl|pgmdl|gmdl|all (comma separated)");
  detect->add_option("--ar-order", ar_order, "build a lagged AR(p) design");
  detect->add_flag("--no-intercept", no_intercept,
                   "CSV already contains the intercept column");
  detect->add_option("--threads", threads, "worker threads");
  detect->add_option("--output", output, "output JSON path (default stdout)");
  flags.attach(detect);

  auto* simulate = app.add_subcommand("simulate", "replication study on a DGP");
  simulate->add_option("--dgp", dgp, "A..F")->required();
  simulate->add_option("--T", T, "sample size");
  simulate->add_option("--reps", reps, "replications");
  simulate->add_option("--methods", method_list, "methods (comma separated)");
  simulate->add_option("--threads", threads, "worker threads");
  simulate->add_option("--exact-distance", exact_distance,
                       "break-location tolerance for the exact metric");
  simulate->add_flag("--posteriors", with_posteriors,
                     "add the model posterior probability study");
  simulate->add_option("--output", output, "output JSON path");
  flags.attach(simulate);

  auto* sample = app.add_subcommand("sample", "posterior sampling of breaks");
  sample->add_option("--input", input, "CSV input")->required();
  sample->add_option("--breaks", breaks_list, "initial break dates (raw axis)")
      ->required();
  sample->add_option("--ar-order", ar_order, "build a lagged AR(p) design");
  sample->add_flag("--no-intercept", no_intercept,
                   "CSV already contains the intercept column");
  sample->add_option("--iters", iters, "MCMC iterations");
  sample->add_option("--chains", chains, "number of chains");
  sample->add_option("--seed", seed, "RNG seed (0 = draw one and echo it)");
  sample->add_option("--level", level, "credible-interval level");
  sample->add_option("--param-draws", param_draws,
                     "parameter draws taken along the chain");
  sample->add_flag("--future-break", future_break,
                   "add the out-of-sample break layer");
  sample->add_option("--output", output, "output JSON path");

  auto* forecast = app.add_subcommand("forecast", "expanding-window forecasts");
  forecast->add_option("--input", input, "CSV input (first column)")->required();
  forecast->add_option("--ar", ar_list, "AR orders, e.g. 1,2");
  forecast->add_option("--methods", method_list, "methods to combine");
  forecast->add_option("--thresholds", threshold_list,
                       "split thresholds spanned by the combination");
  forecast->add_option("--horizons", horizons, "forecast horizons");
  forecast->add_option("--start-frac", start_frac, "first window fraction");
  forecast->add_flag("--future-break", future_break,
                     "add future-break combination rows");
  forecast->add_option("--draws", n_draws, "predictive draws per model");
  forecast->add_option("--stride", stride, "evaluate every k-th origin");
  forecast->add_option("--threads", threads, "worker threads");
  forecast->add_option("--output", output, "output JSON path");
  forecast->add_option("--loss-csv", loss_csv, "forecast-error CSV path");
  flags.attach(forecast);

  auto* oracle = app.add_subcommand("oracle", "brute-force exact search");
  oracle->add_option("--input", input, "CSV input")->required();
  oracle->add_option("--ar-order", ar_order, "build a lagged AR(p) design");
  oracle->add_flag("--no-intercept", no_intercept,
                   "CSV already contains the intercept column");
  oracle->add_option("--output", output, "output JSON path");
  flags.attach(oracle);

  auto* equiv = app.add_subcommand(
      "equiv-check", "verify the criterion/marginal-likelihood equivalence");
  equiv->add_option("--fixtures", fixtures, "number of random fixtures");
  equiv->add_option("--min-seg", min_segment, "minimum segment length");
  equiv->add_option("--tolerance", tolerance, "max allowed |difference|");
  equiv->add_option("--seed", seed, "RNG seed (0 = draw one and echo it)");
  equiv->add_option("--output", output, "output JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (detect->parsed())
      return cmd_detect(input, method_list, ar_order, no_intercept, flags,
                        threads, output);
    if (simulate->parsed())
      return cmd_simulate(dgp, T, reps, method_list, flags, threads,
                          exact_distance, output, with_posteriors);
    if (sample->parsed())
      return cmd_sample(input, breaks_list, ar_order, no_intercept, iters,
                        chains, seed, future_break, level, param_draws, output);
    if (forecast->parsed())
      return cmd_forecast(input, ar_list, method_list, horizons,
                          threshold_list, start_frac, future_break, n_draws,
                          stride, flags.seed, threads, flags, output,
                          loss_csv);
    if (oracle->parsed())
      return cmd_oracle(input, ar_order, no_intercept, flags, output);
    if (equiv->parsed())
      return cmd_equiv_check(fixtures, min_segment, seed, tolerance, output);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
