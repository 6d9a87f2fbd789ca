#pragma once

#include "breakscope/dataset.hpp"
#include "breakscope/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace testutil {

using breakscope::MatrixXd;
using breakscope::VectorXd;

struct NaiveOls {
  VectorXd beta;
  double ssr;
  MatrixXd xtx;
};

// Independent per-segment regression on the raw slice (QR, no prefix
// sums); the oracle the cache path is checked against.
inline NaiveOls naive_ols(const VectorXd& y, const MatrixXd& X, int a, int b) {
  const MatrixXd Xi = X.middleRows(a, b - a);
  const VectorXd yi = y.segment(a, b - a);
  NaiveOls out;
  out.beta = Xi.colPivHouseholderQr().solve(yi);
  out.ssr = (yi - Xi * out.beta).squaredNorm();
  out.xtx = Xi.transpose() * Xi;
  return out;
}

// Regularized incomplete gamma functions (series / continued fraction),
// enough accuracy for p-values.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 0.0;
  const double lga = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-14) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lga);
  }
  // continued fraction for Q, return 1 - Q
  double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-14) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lga) * h;
}

// Chi-square survival function P(X > x) with k degrees of freedom.
inline double chi2_sf(double x, double k) {
  return 1.0 - gamma_p(0.5 * k, 0.5 * x);
}

// Asymptotic two-sample Kolmogorov-Smirnov p-value.
inline double ks_two_sample_pvalue(std::vector<double> a,
                                   std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = a.size(), nb = b.size();
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  double p = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    p += sign * 2.0 * std::exp(-2.0 * lambda * lambda * k * k);
    sign = -sign;
  }
  return std::clamp(p, 0.0, 1.0);
}

// Gaussian AR(1) series for quick fixtures.
inline VectorXd ar1_series(int n, double phi, double sigma,
                           std::uint64_t seed) {
  breakscope::Rng rng(breakscope::seed_hash({seed, 0x617231ULL}));
  VectorXd y(n);
  double state = 0.0;
  for (int t = 0; t < 100; ++t) state = phi * state + sigma * rng.normal();
  for (int t = 0; t < n; ++t) {
    state = phi * state + sigma * rng.normal();
    y[t] = state;
  }
  return y;
}

inline VectorXd normal_vector(int n, breakscope::Rng& rng, double sd = 1.0) {
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = sd * rng.normal();
  return v;
}

// Random piecewise regression fixture with all segment lengths >= min_seg.
struct Fixture {
  breakscope::TimeSeriesDataset ds;
  breakscope::Segmentation seg;
};

inline Fixture random_fixture(std::uint64_t seed, int min_seg, int max_m = 4,
                              int max_k = 3) {
  breakscope::Rng rng(breakscope::seed_hash({seed, 0x666978ULL}));
  const int K = 1 + static_cast<int>(rng.uniform_int(0, max_k - 1));
  const int m = static_cast<int>(rng.uniform_int(0, max_m));
  const int T =
      (m + 1) * min_seg + static_cast<int>(rng.uniform_int(0, 4 * min_seg));
  std::vector<int> breaks;
  int acc = 0;
  const int slack = T - (m + 1) * min_seg;
  std::vector<double> cuts(m);
  for (int i = 0; i < m; ++i) cuts[i] = rng.uniform();
  std::sort(cuts.begin(), cuts.end());
  for (int i = 0; i < m; ++i) {
    acc = std::max(acc + min_seg,
                   (i + 1) * min_seg + static_cast<int>(cuts[i] * slack));
    breaks.push_back(acc);
  }
  MatrixXd X(T, K);
  X.col(0).setOnes();
  for (int k = 1; k < K; ++k)
    for (int t = 0; t < T; ++t) X(t, k) = rng.normal();
  VectorXd y(T);
  breakscope::Segmentation seg(breaks, T);
  for (int i = 0; i < seg.num_segments(); ++i) {
    VectorXd beta = normal_vector(K, rng, 2.0);
    const double sd = 0.5 + 1.5 * rng.uniform();
    for (int t = seg.boundary(i); t < seg.boundary(i + 1); ++t)
      y[t] = X.row(t).dot(beta) + sd * rng.normal();
  }
  return Fixture{breakscope::build_dataset(y, X), seg};
}

}  // namespace testutil
