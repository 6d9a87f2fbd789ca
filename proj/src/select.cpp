#include "breakscope/select.hpp"

#include "breakscope/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace breakscope {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> posterior_probabilities(const std::vector<double>& log_ml) {
  if (log_ml.empty())
    throw std::invalid_argument("posterior_probabilities: empty input");
  double max_lp = kNegInf;
  for (double v : log_ml) {
    if (std::isnan(v))
      throw std::invalid_argument("posterior_probabilities: NaN entry");
    max_lp = std::max(max_lp, v);
  }
  if (max_lp == kNegInf)
    throw std::invalid_argument(
        "posterior_probabilities: all candidates degenerate (-inf)");
  double total = 0.0;
  std::vector<double> out(log_ml.size());
  for (std::size_t i = 0; i < log_ml.size(); ++i)
    total += (out[i] = std::exp(log_ml[i] - max_lp));
  for (double& p : out) p /= total;
  return out;
}

ModelEnsemble make_ensemble(std::vector<MethodResult> candidates) {
  ModelEnsemble e;
  e.candidates = std::move(candidates);
  e.log_ml.reserve(e.candidates.size());
  for (const auto& c : e.candidates) e.log_ml.push_back(c.score.value);
  e.posterior = posterior_probabilities(e.log_ml);
  return e;
}

MethodResult sel(const TimeSeriesDataset& ds, const DetectorConfig& cfg,
                 const std::vector<Method>& methods,
                 std::vector<double>* diagnostics) {
  if (methods.empty()) throw std::invalid_argument("sel: no methods given");
  std::vector<MethodResult> results;
  results.reserve(methods.size());
  for (Method m : methods) results.push_back(run_method(ds, cfg, m));
  ModelEnsemble e = make_ensemble(std::move(results));
  if (diagnostics) *diagnostics = e.posterior;
  std::size_t best = 0;
  for (std::size_t i = 1; i < e.posterior.size(); ++i)
    if (e.posterior[i] > e.posterior[best]) best = i;
  return e.candidates[best];
}

WeightedDraws mixture_parameter_density(
    const ModelEnsemble& ensemble,
    const std::vector<WeightedDraws>& per_model_draws) {
  if (per_model_draws.size() != ensemble.candidates.size())
    throw std::invalid_argument(
        "mixture_parameter_density: one draw set per candidate required");
  Eigen::Index total_rows = 0, cols = -1;
  for (const auto& d : per_model_draws) {
    if (d.draws.rows() == 0)
      throw std::invalid_argument(
          "mixture_parameter_density: candidate with empty draw set");
    if (cols < 0) cols = d.draws.cols();
    if (d.draws.cols() != cols)
      throw std::invalid_argument(
          "mixture_parameter_density: parameter dimension mismatch");
    total_rows += d.draws.rows();
  }
  WeightedDraws out;
  out.draws.resize(total_rows, cols);
  out.weights.resize(total_rows);
  out.names = per_model_draws.front().names;
  Eigen::Index row = 0;
  for (std::size_t p = 0; p < per_model_draws.size(); ++p) {
    const auto& d = per_model_draws[p];
    const double wsum = d.weights.sum();
    out.draws.middleRows(row, d.draws.rows()) = d.draws;
    out.weights.segment(row, d.draws.rows()) =
        d.weights * (ensemble.posterior[p] / wsum);
    row += d.draws.rows();
  }
  return out;
}

WeightedDraws regime_parameter_draws(const TimeSeriesDataset& ds,
                                     const Segmentation& seg, int t,
                                     int n_draws, Rng& rng) {
  if (t < 1 || t > ds.T())
    throw std::invalid_argument("regime_parameter_draws: t outside [1, T]");
  int regime = 0;
  while (seg.boundary(regime + 1) < t) ++regime;
  const SegmentStats stats =
      ds.segment_stats(seg.boundary(regime), seg.boundary(regime + 1));
  const CalibratedPrior prior =
      calibrate(stats, seg.num_breaks(), ds.T(), ds.K());

  WeightedDraws out;
  out.draws.resize(n_draws, ds.K() + 1);
  out.weights = VectorXd::Constant(n_draws, 1.0 / n_draws);
  for (int k = 0; k < ds.K(); ++k) out.names.push_back("beta" + std::to_string(k));
  out.names.push_back("sigma2");
  for (int d = 0; d < n_draws; ++d) {
    auto [beta, sigma2] = gibbs_segment_draw(stats, prior, rng);
    out.draws.row(d).head(ds.K()) = beta.transpose();
    out.draws(d, ds.K()) = sigma2;
  }
  return out;
}

VectorXd PredictiveDraws::point_forecast() const {
  const double wsum = weights.sum();
  return paths.transpose() * weights / wsum;
}

PredictiveDraws combined_predictive(
    const ModelEnsemble& ensemble,
    const std::vector<MatrixXd>& per_model_paths) {
  if (per_model_paths.size() != ensemble.candidates.size())
    throw std::invalid_argument(
        "combined_predictive: one path set per candidate required");
  Eigen::Index total_rows = 0, h = -1;
  for (const auto& p : per_model_paths) {
    if (p.rows() == 0)
      throw std::invalid_argument("combined_predictive: empty path set");
    if (h < 0) h = p.cols();
    if (p.cols() != h)
      throw std::invalid_argument("combined_predictive: horizon mismatch");
    total_rows += p.rows();
  }
  PredictiveDraws out;
  out.paths.resize(total_rows, h);
  out.weights.resize(total_rows);
  Eigen::Index row = 0;
  for (std::size_t p = 0; p < per_model_paths.size(); ++p) {
    const auto& paths = per_model_paths[p];
    out.paths.middleRows(row, paths.rows()) = paths;
    out.weights.segment(row, paths.rows())
        .setConstant(ensemble.posterior[p] / paths.rows());
    row += paths.rows();
  }
  return out;
}

MatrixXd simulate_predictive(const TimeSeriesDataset& ds,
                             const Segmentation& seg, int h, int n_draws,
                             Rng& rng, const FutureBreakPrior* fb) {
  if (h < 1) throw std::invalid_argument("simulate_predictive: horizon >= 1");
  const int m = seg.num_breaks();
  const SegmentStats stats = ds.segment_stats(seg.boundary(m), ds.T());
  const CalibratedPrior prior = calibrate(stats, m, ds.T(), ds.K());
  MatrixXd paths(n_draws, h);
  for (int d = 0; d < n_draws; ++d) {
    auto [beta, sigma2] = gibbs_segment_draw(stats, prior, rng);
    const VectorXd path =
        fb ? future_break_draw(ds, beta, sigma2, *fb, h, rng)
           : simulate_ar_path(ds, beta, sigma2, h, rng);
    paths.row(d) = path.transpose();
  }
  return paths;
}

namespace {

struct ModelDef {
  std::string label;
  int p = 0;                     // AR order; 0 for combination rows
  Method method = Method::BSMDL;
  bool is_baseline = false;      // no-break AR
  bool is_combo = false;
  bool with_future_break = false;
  std::vector<int> members;      // indices into the member slot table
};

}  // namespace

ForecastScores forecast_harness(const VectorXd& series,
                                const ForecastSpec& spec) {
  const int n = static_cast<int>(series.size());
  if (spec.ar_orders.empty() || spec.methods.empty())
    throw std::invalid_argument("forecast_harness: need AR orders and methods");
  const int max_p = *std::max_element(spec.ar_orders.begin(), spec.ar_orders.end());
  const int max_k = max_p + 1;
  const int h_max = *std::max_element(spec.horizons.begin(), spec.horizons.end());

  // Member slots: every (p, method, threshold) triple plus a no-break
  // baseline per p.  Combination rows mix member forecasts by posterior
  // probability.  The threshold axis only applies to the split-statistic
  // methods; the global/pruned searches enter once.
  struct Member {
    int p;
    bool baseline;
    Method method;
    double threshold;
    std::string label;
  };
  const std::vector<double> deltas =
      spec.thresholds.empty() ? std::vector<double>{3.0} : spec.thresholds;
  std::vector<Member> members;
  for (int p : spec.ar_orders) {
    members.push_back({p, true, Method::BSMDL, 0.0, "ar" + std::to_string(p)});
    for (Method m : spec.methods) {
      const bool thresholded = m == Method::BS || m == Method::WBS ||
                               m == Method::BSMDL || m == Method::WBSMDL;
      if (!thresholded) {
        members.push_back({p, false, m, spec.detector.threshold_delta,
                           "ar" + std::to_string(p) + "-" + method_name(m)});
        continue;
      }
      for (double d : deltas) {
        std::string label = "ar" + std::to_string(p) + "-" + method_name(m);
        if (deltas.size() > 1) {
          char buf[16];
          std::snprintf(buf, sizeof(buf), "%g", d);
          label += std::string("-d") + buf;
        }
        members.push_back({p, false, m, d, label});
      }
    }
  }

  std::vector<ModelDef> models;
  for (std::size_t i = 0; i < members.size(); ++i) {
    ModelDef def;
    def.label = members[i].label;
    def.p = members[i].p;
    def.is_baseline = members[i].baseline;
    def.members = {static_cast<int>(i)};
    models.push_back(def);
  }
  auto add_combo = [&](const std::string& label, const std::vector<int>& idx,
                       bool fb) {
    ModelDef def;
    def.label = label;
    def.is_combo = true;
    def.with_future_break = fb;
    def.members = idx;
    models.push_back(def);
  };
  for (int p : spec.ar_orders) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < members.size(); ++i)
      if (members[i].p == p && !members[i].baseline)
        idx.push_back(static_cast<int>(i));
    add_combo("ar" + std::to_string(p) + "-local", idx, false);
    if (spec.future_break)
      add_combo("ar" + std::to_string(p) + "-local-fb", idx, true);
  }
  if (spec.ar_orders.size() > 1) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < members.size(); ++i)
      if (!members[i].baseline) idx.push_back(static_cast<int>(i));
    add_combo("local", idx, false);
    if (spec.future_break) add_combo("local-fb", idx, true);
  }

  const int first_origin =
      std::max(static_cast<int>(std::ceil(spec.start_fraction * n)),
               10 * max_k + max_p);
  std::vector<int> origins;
  for (int t0 = first_origin; t0 + 1 <= n; t0 += std::max(1, spec.origin_stride))
    origins.push_back(t0);
  if (origins.empty())
    throw std::invalid_argument("forecast_harness: series too short");

  ForecastScores out;
  for (const auto& m : models) out.models.push_back(m.label);
  out.horizons = spec.horizons;
  out.origins = origins;
  out.errors.assign(models.size(),
                    std::vector<std::vector<double>>(
                        origins.size(),
                        std::vector<double>(spec.horizons.size(), kNaN)));
  std::vector<int> skipped(origins.size(), 0);

  parallel_for(static_cast<int>(origins.size()), spec.threads, [&](int oi) {
    const int t0 = origins[oi];
    const VectorXd head = series.head(t0);

    // Per-member fits: common effective sample of t0 - max_p observations.
    std::vector<double> log_ml(members.size(), kNegInf);
    std::vector<VectorXd> mean_path(members.size());
    std::vector<VectorXd> mean_path_fb(members.size());
    bool window_ok = true;
    for (std::size_t mi = 0; mi < members.size() && window_ok; ++mi) {
      const auto& mem = members[mi];
      try {
        const TimeSeriesDataset ds = build_ar_dataset(head, mem.p, max_p);
        DetectorConfig cfg = spec.detector;
        cfg.threshold_delta = mem.threshold;
        cfg.rng_seed = seed_hash({spec.seed, static_cast<std::uint64_t>(t0),
                                  static_cast<std::uint64_t>(mi)});
        Segmentation seg = Segmentation::none(ds.T());
        if (!mem.baseline) seg = run_method(ds, cfg, mem.method).segmentation;
        log_ml[mi] = mdl_marginal_loglik(ds, seg).value;

        Rng rng(seed_hash({spec.seed, static_cast<std::uint64_t>(t0),
                           static_cast<std::uint64_t>(mi), 0x647261ULL}));
        const MatrixXd paths =
            simulate_predictive(ds, seg, h_max, spec.n_draws, rng);
        mean_path[mi] = paths.colwise().mean();
        if (spec.future_break && !mem.baseline) {
          if (seg.num_breaks() >= 2) {
            const FutureBreakPrior fb = build_future_break_prior(ds, seg);
            Rng rng_fb(seed_hash({spec.seed, static_cast<std::uint64_t>(t0),
                                  static_cast<std::uint64_t>(mi), 0x6662ULL}));
            const MatrixXd fb_paths =
                simulate_predictive(ds, seg, h_max, spec.n_draws, rng_fb, &fb);
            mean_path_fb[mi] = fb_paths.colwise().mean();
          } else {
            mean_path_fb[mi] = mean_path[mi];
          }
        }
      } catch (const std::exception& e) {
        // Ill-conditioned window: drop the whole origin so that model
        // comparisons always cover an identical window set.
        std::cerr << "forecast_harness: skipping origin " << t0 << " ("
                  << e.what() << ")\n";
        window_ok = false;
      }
    }
    if (!window_ok) {
      skipped[oi] = 1;
      return;
    }

    for (std::size_t md = 0; md < models.size(); ++md) {
      const auto& def = models[md];
      VectorXd forecast = VectorXd::Zero(h_max);
      if (def.is_combo) {
        std::vector<double> lps;
        for (int mi : def.members) lps.push_back(log_ml[mi]);
        const std::vector<double> w = posterior_probabilities(lps);
        for (std::size_t k = 0; k < def.members.size(); ++k) {
          const auto& path = def.with_future_break
                                 ? mean_path_fb[def.members[k]]
                                 : mean_path[def.members[k]];
          forecast += w[k] * path;
        }
      } else {
        forecast = mean_path[def.members[0]];
      }
      for (std::size_t hi = 0; hi < spec.horizons.size(); ++hi) {
        const int h = spec.horizons[hi];
        if (t0 + h > n) continue;
        out.errors[md][oi][hi] = series[t0 + h - 1] - forecast[h - 1];
      }
    }
  });

  out.skipped_windows = std::accumulate(skipped.begin(), skipped.end(), 0);
  out.rmsfe.assign(models.size(),
                   std::vector<double>(spec.horizons.size(), kNaN));
  out.mafe = out.rmsfe;
  for (std::size_t md = 0; md < models.size(); ++md)
    for (std::size_t hi = 0; hi < spec.horizons.size(); ++hi) {
      double se = 0.0, ae = 0.0;
      int cnt = 0;
      for (std::size_t oi = 0; oi < origins.size(); ++oi) {
        const double e = out.errors[md][oi][hi];
        if (std::isnan(e)) continue;
        se += e * e;
        ae += std::abs(e);
        ++cnt;
      }
      if (cnt > 0) {
        out.rmsfe[md][hi] = std::sqrt(se / cnt);
        out.mafe[md][hi] = ae / cnt;
      }
    }
  return out;
}

}  // namespace breakscope
