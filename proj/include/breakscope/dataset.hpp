#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

namespace breakscope {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Data-level failures (malformed CSV, dimension mismatches, non-finite
// input).  The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered interior break dates tau_1 < ... < tau_m on the open interval
// (0, T).  Segment i covers the observations (tau_{i-1}, tau_i] with the
// conventions tau_0 = 0 and tau_{m+1} = T.
class Segmentation {
 public:
  Segmentation(std::vector<int> breaks, int T);
  static Segmentation none(int T) { return Segmentation({}, T); }

  int T() const { return T_; }
  int num_breaks() const { return static_cast<int>(breaks_.size()); }
  int num_segments() const { return num_breaks() + 1; }
  const std::vector<int>& breaks() const { return breaks_; }

  // boundary(0) = 0, boundary(m+1) = T.
  int boundary(int i) const {
    if (i == 0) return 0;
    if (i == num_segments()) return T_;
    return breaks_[static_cast<std::size_t>(i) - 1];
  }
  int segment_length(int i) const { return boundary(i + 1) - boundary(i); }
  int min_segment_length() const;

  bool operator==(const Segmentation& o) const {
    return T_ == o.T_ && breaks_ == o.breaks_;
  }

 private:
  std::vector<int> breaks_;
  int T_;
};

// Exact least-squares summary of one segment.
struct SegmentStats {
  int n = 0;            // segment length
  VectorXd beta_hat;    // OLS coefficient estimate
  double ssr = 0.0;     // sum of squared residuals
  MatrixXd xtx;         // X_i' X_i
  double log_det_xtx = 0.0;
};

// Immutable regression sample with prefix-sum caches that make any
// segment's OLS statistics an O(K^2) query.  Queries are read-only and
// safe to issue from concurrent workers.
class TimeSeriesDataset {
 public:
  // X must carry the intercept in its first column.
  TimeSeriesDataset(VectorXd y, MatrixXd X, int ar_order = 0);

  int T() const { return static_cast<int>(y_.size()); }
  int K() const { return static_cast<int>(X_.cols()); }
  int ar_order() const { return ar_order_; }
  const VectorXd& y() const { return y_; }
  const MatrixXd& X() const { return X_; }

  // OLS statistics over observations (a, b], 0 <= a < b <= T.  Throws on
  // invalid ranges and on singular X_i'X_i.
  SegmentStats segment_stats(int a, int b) const;

  // Sweep-friendly variant: nullopt instead of throwing on singularity.
  std::optional<SegmentStats> try_segment_stats(int a, int b) const;

  // Residual sum of squares only; nullopt when X_i'X_i is singular.
  // Allocation-free for K <= kMaxFastK, the hot path of every detector.
  std::optional<double> segment_ssr(int a, int b) const;

  // Partial sums over (a, b] used by the cumsum statistic.
  double sum_y(int a, int b) const { return pre_y_[b] - pre_y_[a]; }
  double sum_yy(int a, int b) const { return pre_yy_[b] - pre_yy_[a]; }

  static constexpr int kMaxFastK = 12;

 private:
  VectorXd y_;
  MatrixXd X_;
  int ar_order_;
  // Caches indexed so that entry t holds the sum over observations 1..t
  // (entry 0 is zero).  xtx stores the upper triangle column-major.
  std::vector<double> pre_y_, pre_yy_;
  std::vector<double> pre_xtx_;  // (T+1) x (K(K+1)/2)
  std::vector<double> pre_xty_;  // (T+1) x K
  int tri_;                      // K(K+1)/2
};

// Builds a dataset from a response vector and design matrix whose first
// column is the intercept.
TimeSeriesDataset build_dataset(VectorXd y, MatrixXd X);

// Conditional AR(p) design: dependent variable y_raw[presample+1..] with
// columns [1, y_{t-1}, ..., y_{t-p}].  The first `presample` observations
// (default p) are consumed as conditioning values, so T = len - presample.
TimeSeriesDataset build_ar_dataset(const VectorXd& y_raw, int p,
                                   int presample = -1);

// Cholesky of a symmetric positive-definite matrix with a scale-aware
// pivot threshold: a pivot below 1e-10 * trace(A)/K signals singularity.
std::optional<MatrixXd> cholesky_with_threshold(const MatrixXd& a);

}  // namespace breakscope
