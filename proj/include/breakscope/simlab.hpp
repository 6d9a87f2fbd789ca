#pragma once

#include "breakscope/detect.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace breakscope {

// Piecewise AR(<=2) generating process.  Break dates are stored for the
// canonical sample size 1024 and rescaled proportionally for other T
// (process B pins its breaks at 0.5T and 0.75T).
struct DgpSpec {
  char id = 'A';
  int ar_order = 1;
  std::vector<int> breaks_at_1024;
  std::vector<std::array<double, 3>> coeffs;  // per regime {b0, b1, b2}
  std::vector<double> sigma2;                 // per regime
  int burn_in = 200;

  int num_regimes() const { return static_cast<int>(sigma2.size()); }
  void validate() const;  // regime counts and stationarity (roots outside
                          // the unit circle, near-unit roots allowed)
};

// The six benchmark processes, id in 'A'..'F'.
DgpSpec dgp_table(char id);

// Break dates for a simulated sample of size T (raw time scale).
std::vector<int> dgp_breaks_for_T(const DgpSpec& spec, int T);

// Simulates T observations after a burn-in in the first regime; the lag
// state carries across breaks without re-initialization.
VectorXd simulate_dgp(const DgpSpec& spec, int T, std::uint64_t seed);

struct MethodReport {
  std::string method;
  // Histogram over the detected break count: m = 0, 1, 2, >= 3.
  std::array<int, 4> m_histogram{0, 0, 0, 0};
  int n_correct_m = 0;
  int n_exact = 0;  // correct m and every |tau_hat - tau| <= distance
  int n_failed = 0;
  double mean_mdl = 0.0;       // over successful replications
  double mean_runtime_ms = 0.0;
  // Mean absolute break-date error per true break, over replications with
  // the correct break count.
  std::vector<double> mean_abs_break_err;
  double correct_m_rate(int n_reps) const {
    return 100.0 * n_correct_m / n_reps;
  }
  double exact_rate(int n_reps) const { return 100.0 * n_exact / n_reps; }
};

struct ReplicationReport {
  char dgp = 'A';
  int T = 0;
  int n_reps = 0;
  std::uint64_t base_seed = 0;
  int exact_distance = 50;
  std::vector<MethodReport> methods;
};

// Monte Carlo study: n_reps independent series, every method run on each,
// detection quality aggregated.  Deterministic in base_seed; replications
// are processed in parallel.
ReplicationReport run_replications(const DgpSpec& spec,
                                   const std::vector<Method>& methods,
                                   int n_reps, int T, std::uint64_t base_seed,
                                   const DetectorConfig& cfg, int threads = 0,
                                   int exact_distance = 50);

struct PosteriorProbStudy {
  char dgp = 'A';
  int n_reps = 0;
  std::vector<std::string> methods;
  std::vector<double> mean_posterior;  // per method
  double mix_rate = 0.0;  // % of replications with >= 2 posteriors above 10%
};

// Averages the model posterior probabilities of the competing methods'
// segmentations across replications.
PosteriorProbStudy posterior_prob_study(const DgpSpec& spec,
                                        const std::vector<Method>& methods,
                                        int n_reps, int T,
                                        std::uint64_t base_seed,
                                        const DetectorConfig& cfg,
                                        int threads = 0);

}  // namespace breakscope
