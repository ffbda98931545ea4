// Test-only reference computations, independent of the library's own
// implementation paths.
#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracles {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Gauss-Hermite nodes/weights via the Golub-Welsch eigendecomposition of the
// Jacobi matrix. Integrates int exp(-x^2) f(x) dx ~= sum w_i f(x_i).
struct GaussHermite {
  VectorXd nodes, weights;

  explicit GaussHermite(int m) {
    MatrixXd jacobi = MatrixXd::Zero(m, m);
    for (int k = 1; k < m; ++k) {
      double b = std::sqrt(k / 2.0);
      jacobi(k, k - 1) = b;
      jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(jacobi);
    nodes = es.eigenvalues();
    weights.resize(m);
    const double mu0 = std::sqrt(M_PI);
    for (int i = 0; i < m; ++i) {
      double v0 = es.eigenvectors()(0, i);
      weights[i] = mu0 * v0 * v0;
    }
  }

  // E_{z ~ N(mean, var)}[f(z)]
  template <typename F>
  double expect(double mean, double var, F&& f) const {
    double acc = 0.0;
    const double scale = std::sqrt(2.0 * var);
    for (Index i = 0; i < nodes.size(); ++i)
      acc += weights[i] * f(mean + scale * nodes[i]);
    return acc / std::sqrt(M_PI);
  }
};

// closed-form KL between univariate Gaussians, written out directly
inline double kl_univariate(double mq, double vq, double mp, double vp) {
  return 0.5 * (std::log(vp / vq) + (vq + (mq - mp) * (mq - mp)) / vp - 1.0);
}

inline double gaussian_log_pdf(double y, double mean, double var) {
  const double d = y - mean;
  return -0.5 * std::log(2.0 * M_PI * var) - d * d / (2.0 * var);
}

// Exact optimal transport cost between uniform point clouds (columns are
// points). Points are replicated up to lcm(|A|, |B|) equal-mass copies and a
// min-cost perfect matching is found by exhaustive bitmask DP; exact for
// lcm <= ~22.
inline double exact_ot_cost(const MatrixXd& a, const MatrixXd& b) {
  const Index ka = a.cols(), kb = b.cols();
  const long l = std::lcm(static_cast<long>(ka), static_cast<long>(kb));
  std::vector<Index> ai, bi;
  for (Index i = 0; i < ka; ++i)
    for (long r = 0; r < l / ka; ++r) ai.push_back(i);
  for (Index j = 0; j < kb; ++j)
    for (long r = 0; r < l / kb; ++r) bi.push_back(j);

  MatrixXd cost(l, l);
  for (long i = 0; i < l; ++i)
    for (long j = 0; j < l; ++j)
      cost(i, j) = (a.col(ai[static_cast<std::size_t>(i)]) -
                    b.col(bi[static_cast<std::size_t>(j)]))
                       .squaredNorm();

  const std::size_t full = (std::size_t{1} << l) - 1;
  std::vector<double> dp(full + 1, std::numeric_limits<double>::infinity());
  dp[0] = 0.0;
  for (std::size_t mask = 0; mask < full; ++mask) {
    if (!std::isfinite(dp[mask])) continue;
    const int i = __builtin_popcountll(mask);  // next row to assign
    for (long j = 0; j < l; ++j) {
      if (mask & (std::size_t{1} << j)) continue;
      const std::size_t nxt = mask | (std::size_t{1} << j);
      const double c = dp[mask] + cost(i, j);
      if (c < dp[nxt]) dp[nxt] = c;
    }
  }
  return dp[full] / static_cast<double>(l);
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracles
