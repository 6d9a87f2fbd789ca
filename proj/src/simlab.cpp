#include "breakscope/simlab.hpp"

#include "breakscope/parallel.hpp"
#include "breakscope/rng.hpp"
#include "breakscope/select.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <mutex>

namespace breakscope {

void DgpSpec::validate() const {
  const int r = num_regimes();
  if (r < 1 || static_cast<int>(coeffs.size()) != r ||
      static_cast<int>(breaks_at_1024.size()) != r - 1)
    throw std::invalid_argument("DgpSpec: regime counts inconsistent");
  if (ar_order < 1 || ar_order > 2)
    throw std::invalid_argument("DgpSpec: AR order must be 1 or 2");
  for (const auto& c : coeffs) {
    // Characteristic roots of 1 - b1 z - b2 z^2 must lie outside the unit
    // circle (near-unit roots like 0.999 pass).
    const double b1 = c[1], b2 = c[2];
    if (b2 == 0.0) {
      if (std::abs(b1) >= 1.0)
        throw std::invalid_argument("DgpSpec: non-stationary AR(1) regime");
    } else {
      const std::complex<double> disc =
          std::sqrt(std::complex<double>(b1 * b1 + 4.0 * b2, 0.0));
      const std::complex<double> r1 = (b1 + disc) / (-2.0 * b2);
      const std::complex<double> r2 = (b1 - disc) / (-2.0 * b2);
      if (std::abs(r1) <= 1.0 || std::abs(r2) <= 1.0)
        throw std::invalid_argument("DgpSpec: non-stationary AR(2) regime");
    }
  }
  for (double s : sigma2)
    if (!(s > 0.0))
      throw std::invalid_argument("DgpSpec: regime variances must be positive");
}

DgpSpec dgp_table(char id) {
  DgpSpec s;
  s.id = id;
  switch (id) {
    case 'A':
      s.ar_order = 1;
      s.coeffs = {{0.0, -0.7, 0.0}};
      s.sigma2 = {1.0};
      break;
    case 'B':
      s.ar_order = 2;
      s.breaks_at_1024 = {514, 768};
      s.coeffs = {{0.0, 0.9, 0.0}, {0.0, 1.69, -0.81}, {0.0, 1.32, -0.81}};
      s.sigma2 = {1.0, 1.0, 1.0};
      break;
    case 'C':
      s.ar_order = 1;
      s.breaks_at_1024 = {400, 612};
      s.coeffs = {{0.0, 0.4, 0.0}, {0.0, -0.6, 0.0}, {0.0, 0.5, 0.0}};
      s.sigma2 = {1.0, 1.0, 1.0};
      break;
    case 'D':
      s.ar_order = 1;
      s.breaks_at_1024 = {50};
      s.coeffs = {{0.0, 0.75, 0.0}, {0.0, -0.5, 0.0}};
      s.sigma2 = {1.0, 1.0};
      break;
    case 'E':
      s.ar_order = 1;
      s.breaks_at_1024 = {400, 750};
      s.coeffs = {{0.0, 0.999, 0.0}, {0.0, 0.999, 0.0}, {0.0, 0.999, 0.0}};
      s.sigma2 = {1.0, 2.25, 1.0};
      break;
    case 'F':
      s.ar_order = 2;
      s.breaks_at_1024 = {400, 750};
      s.coeffs = {{0.0, 1.399, -0.4}, {0.0, 0.999, 0.0}, {0.0, 0.699, 0.3}};
      s.sigma2 = {1.0, 2.25, 1.0};
      break;
    default:
      throw std::invalid_argument(std::string("unknown DGP id: ") + id);
  }
  s.validate();
  return s;
}

std::vector<int> dgp_breaks_for_T(const DgpSpec& spec, int T) {
  if (T == 1024 || spec.breaks_at_1024.empty()) return spec.breaks_at_1024;
  std::vector<int> out;
  if (spec.id == 'B') {
    out = {static_cast<int>(std::lround(0.5 * T)),
           static_cast<int>(std::lround(0.75 * T))};
  } else {
    for (int b : spec.breaks_at_1024)
      out.push_back(static_cast<int>(std::lround(b * (T / 1024.0))));
  }
  return out;
}

VectorXd simulate_dgp(const DgpSpec& spec, int T, std::uint64_t seed) {
  spec.validate();
  if (T < 100) throw std::invalid_argument("simulate_dgp: T >= 100 required");
  const std::vector<int> breaks = dgp_breaks_for_T(spec, T);
  Rng rng(seed_hash({seed, 0x646770ULL, static_cast<std::uint64_t>(spec.id)}));

  VectorXd y(T);
  double l1 = 0.0, l2 = 0.0;  // lag state, shared across regimes
  const auto& c0 = spec.coeffs.front();
  const double sd0 = std::sqrt(spec.sigma2.front());
  for (int t = 0; t < spec.burn_in; ++t) {
    const double v = c0[0] + c0[1] * l1 + c0[2] * l2 + sd0 * rng.normal();
    l2 = l1;
    l1 = v;
  }
  int regime = 0;
  for (int t = 1; t <= T; ++t) {
    while (regime < static_cast<int>(breaks.size()) && t > breaks[regime])
      ++regime;
    const auto& c = spec.coeffs[regime];
    const double v = c[0] + c[1] * l1 + c[2] * l2 +
                     std::sqrt(spec.sigma2[regime]) * rng.normal();
    y[t - 1] = v;
    l2 = l1;
    l1 = v;
  }
  return y;
}

ReplicationReport run_replications(const DgpSpec& spec,
                                   const std::vector<Method>& methods,
                                   int n_reps, int T, std::uint64_t base_seed,
                                   const DetectorConfig& cfg, int threads,
                                   int exact_distance) {
  if (n_reps < 1) throw std::invalid_argument("run_replications: n_reps >= 1");
  const std::vector<int> true_breaks_raw = dgp_breaks_for_T(spec, T);
  const int m0 = static_cast<int>(true_breaks_raw.size());
  const int p = spec.ar_order;

  struct RepOutcome {
    int m = -1;  // -1 marks failure
    double mdl = 0.0;
    double runtime = 0.0;
    std::vector<double> abs_err;
  };
  std::vector<std::vector<RepOutcome>> outcomes(
      methods.size(), std::vector<RepOutcome>(n_reps));
  std::mutex log_mutex;

  parallel_for(n_reps, threads, [&](int rep) {
    const VectorXd series =
        simulate_dgp(spec, T, seed_hash({base_seed, static_cast<std::uint64_t>(rep)}));
    const TimeSeriesDataset ds = build_ar_dataset(series, p);
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      DetectorConfig run_cfg = cfg;
      run_cfg.rng_seed =
          seed_hash({base_seed, static_cast<std::uint64_t>(rep),
                     static_cast<std::uint64_t>(methods[mi])});
      RepOutcome& o = outcomes[mi][rep];
      try {
        const MethodResult res = run_method(ds, run_cfg, methods[mi]);
        o.m = res.segmentation.num_breaks();
        o.mdl = res.score.value;
        o.runtime = static_cast<double>(res.runtime_ms);
        if (o.m == m0) {
          o.abs_err.resize(m0);
          for (int i = 0; i < m0; ++i) {
            const int est_raw = res.segmentation.breaks()[i] + p;
            o.abs_err[i] = std::abs(est_raw - true_breaks_raw[i]);
          }
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cerr << "replication " << rep << " " << method_name(methods[mi])
                  << " failed: " << e.what() << "\n";
        o.m = -1;
      }
    }
  });

  ReplicationReport report;
  report.dgp = spec.id;
  report.T = T;
  report.n_reps = n_reps;
  report.base_seed = base_seed;
  report.exact_distance = exact_distance;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    MethodReport mr;
    mr.method = method_name(methods[mi]);
    mr.mean_abs_break_err.assign(m0, 0.0);
    double mdl_sum = 0.0, rt_sum = 0.0;
    int ok = 0, correct = 0;
    for (const RepOutcome& o : outcomes[mi]) {
      if (o.m < 0) {
        ++mr.n_failed;
        continue;
      }
      ++ok;
      mdl_sum += o.mdl;
      rt_sum += o.runtime;
      ++mr.m_histogram[std::min(o.m, 3)];
      if (o.m == m0) {
        ++correct;
        bool exact = true;
        for (int i = 0; i < m0; ++i) {
          mr.mean_abs_break_err[i] += o.abs_err[i];
          exact = exact && o.abs_err[i] <= exact_distance;
        }
        if (exact) ++mr.n_exact;
      }
    }
    mr.n_correct_m = correct;
    if (ok > 0) {
      mr.mean_mdl = mdl_sum / ok;
      mr.mean_runtime_ms = rt_sum / ok;
    }
    if (correct > 0)
      for (double& e : mr.mean_abs_break_err) e /= correct;
    report.methods.push_back(std::move(mr));
  }
  return report;
}

PosteriorProbStudy posterior_prob_study(const DgpSpec& spec,
                                        const std::vector<Method>& methods,
                                        int n_reps, int T,
                                        std::uint64_t base_seed,
                                        const DetectorConfig& cfg,
                                        int threads) {
  if (methods.size() < 2)
    throw std::invalid_argument("posterior_prob_study: need >= 2 methods");
  const int p = spec.ar_order;

  std::vector<std::vector<double>> posteriors(n_reps);
  parallel_for(n_reps, threads, [&](int rep) {
    const VectorXd series =
        simulate_dgp(spec, T, seed_hash({base_seed, static_cast<std::uint64_t>(rep)}));
    const TimeSeriesDataset ds = build_ar_dataset(series, p);
    std::vector<double> log_ml;
    for (Method m : methods) {
      DetectorConfig run_cfg = cfg;
      run_cfg.rng_seed = seed_hash({base_seed, static_cast<std::uint64_t>(rep),
                                    static_cast<std::uint64_t>(m)});
      log_ml.push_back(run_method(ds, run_cfg, m).score.value);
    }
    posteriors[rep] = posterior_probabilities(log_ml);
  });

  PosteriorProbStudy study;
  study.dgp = spec.id;
  study.n_reps = n_reps;
  study.mean_posterior.assign(methods.size(), 0.0);
  for (Method m : methods) study.methods.push_back(method_name(m));
  int mixed = 0;
  for (const auto& post : posteriors) {
    int above = 0;
    for (std::size_t i = 0; i < post.size(); ++i) {
      study.mean_posterior[i] += post[i] / n_reps;
      if (post[i] > 0.10) ++above;
    }
    if (above >= 2) ++mixed;
  }
  study.mix_rate = 100.0 * mixed / n_reps;
  return study;
}

}  // namespace breakscope
