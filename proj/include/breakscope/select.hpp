#pragma once

#include "breakscope/bayes.hpp"
#include "breakscope/detect.hpp"

#include <map>
#include <string>
#include <vector>

namespace breakscope {

// Softmax of marginal log-likelihoods under a uniform model prior, via
// log-sum-exp.  -infinity entries get weight zero; throws when every entry
// is -infinity.
std::vector<double> posterior_probabilities(const std::vector<double>& log_ml);

// Competing segmentations (typically one per detection method) with their
// marginal log-likelihoods and posterior weights.
struct ModelEnsemble {
  std::vector<MethodResult> candidates;
  std::vector<double> log_ml;
  std::vector<double> posterior;
};

ModelEnsemble make_ensemble(std::vector<MethodResult> candidates);

// Runs every listed detector and returns the result with the highest
// posterior probability; ties go to the earlier method in the given order.
// When diagnostics is non-null it receives the per-method posteriors.
MethodResult sel(const TimeSeriesDataset& ds, const DetectorConfig& cfg,
                 const std::vector<Method>& methods,
                 std::vector<double>* diagnostics = nullptr);

// Pools per-candidate posterior draws of the parameters active at one time
// index, attaching the model posterior probabilities as weights.
WeightedDraws mixture_parameter_density(
    const ModelEnsemble& ensemble,
    const std::vector<WeightedDraws>& per_model_draws);

// Posterior draws of the regime parameters (beta..., sigma2) active at
// time t (1-based) under one fixed segmentation.
WeightedDraws regime_parameter_draws(const TimeSeriesDataset& ds,
                                     const Segmentation& seg, int t,
                                     int n_draws, Rng& rng);

struct PredictiveDraws {
  MatrixXd paths;    // one row per draw, h columns
  VectorXd weights;  // normalized
  VectorXd point_forecast() const;  // weighted mean per horizon
};

// Posterior-weight-mixed predictive draws for y_{T+1..T+h}; candidates
// must share the horizon.
PredictiveDraws combined_predictive(const ModelEnsemble& ensemble,
                                    const std::vector<MatrixXd>& per_model_paths);

// Predictive simulation for one model: draws (beta, sigma2) from the
// terminal regime's posterior and iterates the AR recursion; with fb, each
// path may switch to a freshly drawn post-break regime.
MatrixXd simulate_predictive(const TimeSeriesDataset& ds,
                             const Segmentation& seg, int h, int n_draws,
                             Rng& rng, const FutureBreakPrior* fb = nullptr);

struct ForecastSpec {
  std::vector<int> ar_orders{1};
  std::vector<Method> methods{Method::BSMDL};
  // Acceptance thresholds spanned by the split-statistic methods; each
  // (order, method, threshold) triple is one combination member.  Low
  // thresholds react quickly after a break, high ones are conservative,
  // and the posterior weights arbitrate.
  std::vector<double> thresholds{3.0};
  bool future_break = false;
  std::vector<int> horizons{1};
  double start_fraction = 0.1;
  int n_draws = 300;          // predictive draws per model per origin
  int origin_stride = 1;      // evaluate every k-th origin
  std::uint64_t seed = 0;
  int threads = 0;
  DetectorConfig detector;
};

struct ForecastScores {
  // Model label -> per-horizon losses; entries are NaN where the horizon
  // ran past the sample or the window was skipped.
  std::vector<std::string> models;
  std::vector<int> horizons;
  std::vector<int> origins;  // estimation-sample end per evaluated window
  // errors[model][origin_index][horizon_index] = y_actual - forecast
  std::vector<std::vector<std::vector<double>>> errors;
  std::vector<std::vector<double>> rmsfe;  // [model][horizon]
  std::vector<std::vector<double>> mafe;
  int skipped_windows = 0;
};

// Expanding-window forecast study on a raw series: at every origin each
// (AR order x method) pair is refit, scored on the common effective sample,
// and combined by posterior probability; no-break AR baselines are always
// included.
ForecastScores forecast_harness(const VectorXd& series,
                                const ForecastSpec& spec);

}  // namespace breakscope
