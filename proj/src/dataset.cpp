#include "breakscope/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace breakscope {

namespace {

constexpr double kPivotRel = 1e-10;

// Compensated (Kahan) accumulator; prefix caches at T ~ 2^14 need the
// extra digits to keep the 1e-8 reconstruction tolerance.
struct Kahan {
  double sum = 0.0, carry = 0.0;
  void add(double x) {
    const double t = x - carry;
    const double s = sum + t;
    carry = (s - sum) - t;
    sum = s;
  }
};

}  // namespace

Segmentation::Segmentation(std::vector<int> breaks, int T)
    : breaks_(std::move(breaks)), T_(T) {
  if (T_ < 1) throw std::invalid_argument("Segmentation: T must be >= 1");
  int prev = 0;
  for (int b : breaks_) {
    if (b <= prev || b >= T_)
      throw std::invalid_argument(
          "Segmentation: breaks must be strictly increasing inside (0, T)");
    prev = b;
  }
}

int Segmentation::min_segment_length() const {
  int best = T_;
  for (int i = 0; i < num_segments(); ++i)
    best = std::min(best, segment_length(i));
  return best;
}

TimeSeriesDataset::TimeSeriesDataset(VectorXd y, MatrixXd X, int ar_order)
    : y_(std::move(y)), X_(std::move(X)), ar_order_(ar_order) {
  const int T = static_cast<int>(y_.size());
  const int K = static_cast<int>(X_.cols());
  if (T < 1 || K < 1) throw DataError("dataset: T >= 1 and K >= 1 required");
  if (X_.rows() != T)
    throw DataError("dataset: X must have exactly one row per observation");
  if (!y_.allFinite() || !X_.allFinite())
    throw DataError("dataset: input contains non-finite values");
  if ((X_.col(0).array() != 1.0).any())
    throw DataError("dataset: first column of X must be the intercept (all 1)");

  tri_ = K * (K + 1) / 2;
  pre_y_.assign(T + 1, 0.0);
  pre_yy_.assign(T + 1, 0.0);
  pre_xty_.assign(static_cast<std::size_t>(T + 1) * K, 0.0);
  pre_xtx_.assign(static_cast<std::size_t>(T + 1) * tri_, 0.0);

  Kahan acc_y, acc_yy;
  std::vector<Kahan> acc_xty(K), acc_xtx(tri_);
  for (int t = 0; t < T; ++t) {
    const double yt = y_[t];
    acc_y.add(yt);
    acc_yy.add(yt * yt);
    pre_y_[t + 1] = acc_y.sum;
    pre_yy_[t + 1] = acc_yy.sum;
    int idx = 0;
    for (int j = 0; j < K; ++j) {
      const double xj = X_(t, j);
      acc_xty[j].add(xj * yt);
      pre_xty_[static_cast<std::size_t>(t + 1) * K + j] = acc_xty[j].sum;
      for (int i = 0; i <= j; ++i, ++idx) {
        acc_xtx[idx].add(X_(t, i) * xj);
        pre_xtx_[static_cast<std::size_t>(t + 1) * tri_ + idx] =
            acc_xtx[idx].sum;
      }
    }
  }
}

SegmentStats TimeSeriesDataset::segment_stats(int a, int b) const {
  auto s = try_segment_stats(a, b);
  if (!s)
    throw std::runtime_error(
        "segment_stats: singular X'X on (" + std::to_string(a) + ", " +
        std::to_string(b) + "] (segment too short or collinear covariates)");
  return *std::move(s);
}

std::optional<SegmentStats> TimeSeriesDataset::try_segment_stats(int a,
                                                                 int b) const {
  const int K = this->K();
  if (a < 0 || b > T() || a >= b)
    throw std::invalid_argument("segment_stats: need 0 <= a < b <= T");

  SegmentStats st;
  st.n = b - a;
  st.xtx.resize(K, K);
  const double* hi = &pre_xtx_[static_cast<std::size_t>(b) * tri_];
  const double* lo = &pre_xtx_[static_cast<std::size_t>(a) * tri_];
  int idx = 0;
  for (int j = 0; j < K; ++j)
    for (int i = 0; i <= j; ++i, ++idx) {
      const double v = hi[idx] - lo[idx];
      st.xtx(i, j) = v;
      st.xtx(j, i) = v;
    }
  VectorXd xty(K);
  for (int j = 0; j < K; ++j)
    xty[j] = pre_xty_[static_cast<std::size_t>(b) * K + j] -
             pre_xty_[static_cast<std::size_t>(a) * K + j];

  auto chol = cholesky_with_threshold(st.xtx);
  if (!chol) return std::nullopt;
  const MatrixXd& L = *chol;
  st.log_det_xtx = 2.0 * L.diagonal().array().log().sum();
  st.beta_hat = L.transpose()
                    .triangularView<Eigen::Upper>()
                    .solve(L.triangularView<Eigen::Lower>().solve(xty));
  // ssr = y'y - beta_hat' X'y, exact at the normal-equation solution.
  st.ssr = std::max(0.0, sum_yy(a, b) - st.beta_hat.dot(xty));
  return st;
}

std::optional<double> TimeSeriesDataset::segment_ssr(int a, int b) const {
  const int K = this->K();
  if (K > kMaxFastK) {
    auto st = try_segment_stats(a, b);
    if (!st) return std::nullopt;
    return st->ssr;
  }
  double m[kMaxFastK * (kMaxFastK + 1) / 2];
  double v[kMaxFastK];
  const double* hi = &pre_xtx_[static_cast<std::size_t>(b) * tri_];
  const double* lo = &pre_xtx_[static_cast<std::size_t>(a) * tri_];
  double trace = 0.0;
  {
    int idx = 0;
    for (int j = 0; j < K; ++j) {
      for (int i = 0; i <= j; ++i, ++idx) m[idx] = hi[idx] - lo[idx];
      trace += m[idx - 1];
    }
  }
  for (int j = 0; j < K; ++j)
    v[j] = pre_xty_[static_cast<std::size_t>(b) * K + j] -
           pre_xty_[static_cast<std::size_t>(a) * K + j];

  // In-place upper-triangular Cholesky m = U'U with the scale-aware pivot
  // check, then two triangular solves for beta' X'y.
  const double thresh = kPivotRel * trace / K;
  auto at = [&m](int i, int j) -> double& { return m[j * (j + 1) / 2 + i]; };
  for (int j = 0; j < K; ++j) {
    double d = at(j, j);
    for (int k = 0; k < j; ++k) d -= at(k, j) * at(k, j);
    if (!(d > thresh)) return std::nullopt;
    const double root = std::sqrt(d);
    at(j, j) = root;
    for (int c = j + 1; c < K; ++c) {
      double s = at(j, c);
      for (int k = 0; k < j; ++k) s -= at(k, j) * at(k, c);
      at(j, c) = s / root;
    }
  }
  for (int i = 0; i < K; ++i) {  // solve U' w = v
    double s = v[i];
    for (int k = 0; k < i; ++k) s -= at(k, i) * v[k];
    v[i] = s / at(i, i);
  }
  // beta' X'y = w'w since U beta = w.
  double quad = 0.0;
  for (int i = 0; i < K; ++i) quad += v[i] * v[i];
  return std::max(0.0, sum_yy(a, b) - quad);
}

TimeSeriesDataset build_dataset(VectorXd y, MatrixXd X) {
  if (y.size() != X.rows())
    throw DataError("build_dataset: rows(X) must equal length(y)");
  return TimeSeriesDataset(std::move(y), std::move(X));
}

TimeSeriesDataset build_ar_dataset(const VectorXd& y_raw, int p,
                                   int presample) {
  if (p < 1) throw std::invalid_argument("build_ar_dataset: need p >= 1");
  if (presample < 0) presample = p;
  if (presample < p)
    throw std::invalid_argument("build_ar_dataset: presample must be >= p");
  const int n = static_cast<int>(y_raw.size());
  const int T = n - presample;
  if (T < 1)
    throw DataError("build_ar_dataset: series shorter than presample + 1");

  VectorXd y(T);
  MatrixXd X(T, p + 1);
  for (int t = 0; t < T; ++t) {
    const int raw = presample + t;  // 0-based position of observation t+1
    y[t] = y_raw[raw];
    X(t, 0) = 1.0;
    for (int lag = 1; lag <= p; ++lag) X(t, lag) = y_raw[raw - lag];
  }
  return TimeSeriesDataset(std::move(y), std::move(X), p);
}

std::optional<MatrixXd> cholesky_with_threshold(const MatrixXd& a) {
  const int K = static_cast<int>(a.rows());
  const double thresh = kPivotRel * a.trace() / K;
  MatrixXd L = MatrixXd::Zero(K, K);
  for (int j = 0; j < K; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > thresh)) return std::nullopt;
    L(j, j) = std::sqrt(d);
    for (int i = j + 1; i < K; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / L(j, j);
    }
  }
  return L;
}

}  // namespace breakscope
