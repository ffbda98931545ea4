#include "intact/sinkhorn.hpp"

#include <cmath>

namespace intact {

namespace {

double lse(const VectorXd& v) {
  double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

struct OtSolution {
  double value = 0.0;  // regularized OT value (dual objective at the optimum)
  bool converged = false;
  int iterations = 0;
  MatrixXd plan;
};

// Log-domain Sinkhorn for uniform weights; squared-Euclidean ground cost.
OtSolution entropic_ot(const MatrixXd& a_points, const MatrixXd& b_points,
                       const BalanceConfig& cfg, bool want_plan) {
  const Index ka = a_points.cols();
  const Index kb = b_points.cols();
  MatrixXd cost(ka, kb);
  for (Index j = 0; j < kb; ++j)
    for (Index i = 0; i < ka; ++i)
      cost(i, j) = (a_points.col(i) - b_points.col(j)).squaredNorm();

  const double eps = cfg.sinkhorn_epsilon;
  const double log_wa = -std::log(static_cast<double>(ka));
  const double log_wb = -std::log(static_cast<double>(kb));

  VectorXd f = VectorXd::Zero(ka);
  VectorXd g = VectorXd::Zero(kb);

  OtSolution sol;
  for (int it = 0; it < cfg.sinkhorn_max_iters; ++it) {
    VectorXd f_prev = f;
    VectorXd g_prev = g;
    for (Index i = 0; i < ka; ++i)
      f[i] = -eps * lse(((g.transpose() - cost.row(i)).array() / eps + log_wb)
                            .matrix()
                            .transpose());
    for (Index j = 0; j < kb; ++j)
      g[j] = -eps * lse(((f - cost.col(j)).array() / eps + log_wa).matrix());
    sol.iterations = it + 1;
    // convergence measured on the log-scaling vectors f/eps, g/eps
    double delta = std::max((f - f_prev).cwiseAbs().maxCoeff(),
                            (g - g_prev).cwiseAbs().maxCoeff()) /
                   eps;
    if (delta < cfg.sinkhorn_tol) {
      sol.converged = true;
      break;
    }
  }

  sol.value = f.mean() + g.mean();
  if (want_plan) {
    sol.plan.resize(ka, kb);
    for (Index j = 0; j < kb; ++j)
      for (Index i = 0; i < ka; ++i)
        sol.plan(i, j) =
            std::exp((f[i] + g[j] - cost(i, j)) / eps + log_wa + log_wb);
  }
  return sol;
}

}  // namespace

SinkhornResult sinkhorn_distance(const MatrixXd& a_points,
                                 const MatrixXd& b_points,
                                 const BalanceConfig& cfg) {
  if (a_points.cols() == 0 || b_points.cols() == 0)
    throw std::invalid_argument("sinkhorn_distance: empty point set");
  if (a_points.rows() != b_points.rows())
    throw std::invalid_argument("sinkhorn_distance: point dimension mismatch");
  if (cfg.sinkhorn_epsilon <= 0.0 || cfg.sinkhorn_max_iters < 1 ||
      cfg.sinkhorn_tol <= 0.0)
    throw std::invalid_argument("sinkhorn_distance: invalid configuration");

  // Debiased divergence OT(A,B) - (OT(A,A) + OT(B,B)) / 2 of the regularized
  // values: exactly zero on identical sets, nonnegative, and it approaches
  // the exact transport cost as epsilon shrinks. The raw entropic cost would
  // carry a positive self-transport bias.
  OtSolution ab = entropic_ot(a_points, b_points, cfg, /*want_plan=*/true);
  OtSolution aa = entropic_ot(a_points, a_points, cfg, /*want_plan=*/false);
  OtSolution bb = entropic_ot(b_points, b_points, cfg, /*want_plan=*/false);

  SinkhornResult res;
  res.cost = std::max(0.0, ab.value - 0.5 * (aa.value + bb.value));
  res.converged = ab.converged && aa.converged && bb.converged;
  res.iterations = std::max(ab.iterations, std::max(aa.iterations, bb.iterations));
  res.plan = std::move(ab.plan);
  return res;
}

std::pair<MatrixXd, MatrixXd> sinkhorn_point_gradients(
    const MatrixXd& a_points, const MatrixXd& b_points, const MatrixXd& plan) {
  // dOT/dA_i = sum_j plan_ij * 2 (A_i - B_j); the plan is the converged
  // optimum, so this is the envelope gradient of the regularized value
  VectorXd row_mass = plan.rowwise().sum();
  VectorXd col_mass = plan.colwise().sum();
  MatrixXd grad_a =
      2.0 * (a_points * row_mass.asDiagonal() - b_points * plan.transpose());
  MatrixXd grad_b =
      2.0 * (b_points * col_mass.asDiagonal() - a_points * plan);
  return {grad_a, grad_b};
}

std::pair<MatrixXd, MatrixXd> sinkhorn_divergence_gradients(
    const MatrixXd& a_points, const MatrixXd& b_points,
    const BalanceConfig& cfg) {
  OtSolution ab = entropic_ot(a_points, b_points, cfg, true);
  OtSolution aa = entropic_ot(a_points, a_points, cfg, true);
  OtSolution bb = entropic_ot(b_points, b_points, cfg, true);
  auto [gab_a, gab_b] = sinkhorn_point_gradients(a_points, b_points, ab.plan);
  auto [gaa_l, gaa_r] = sinkhorn_point_gradients(a_points, a_points, aa.plan);
  auto [gbb_l, gbb_r] = sinkhorn_point_gradients(b_points, b_points, bb.plan);
  MatrixXd grad_a = gab_a - 0.5 * (gaa_l + gaa_r);
  MatrixXd grad_b = gab_b - 0.5 * (gbb_l + gbb_r);
  return {grad_a, grad_b};
}

double balanced_objective(double elbo_value, const MatrixXd& prior_means_t0,
                          const MatrixXd& prior_means_t1,
                          const BalanceConfig& cfg) {
  if (cfg.gamma < 0.0)
    throw std::invalid_argument("balanced_objective: gamma must be >= 0");
  if (cfg.gamma == 0.0) return elbo_value;
  SinkhornResult r = sinkhorn_distance(prior_means_t0, prior_means_t1, cfg);
  return elbo_value - cfg.gamma * r.cost;
}

}  // namespace intact
