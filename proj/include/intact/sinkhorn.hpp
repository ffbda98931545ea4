#pragma once

#include <utility>

#include "intact/types.hpp"

namespace intact {

struct BalanceConfig {
  double gamma = 1.0;            // weight of the penalty in the objective
  double sinkhorn_epsilon = 0.1;
  int sinkhorn_max_iters = 500;
  double sinkhorn_tol = 1e-6;
};

struct SinkhornResult {
  double cost = 0.0;   // <plan, C> with squared-Euclidean ground cost
  bool converged = false;
  int iterations = 0;
  MatrixXd plan;       // |A| x |B|, uniform marginals
};

// Entropic optimal transport between two uniform point clouds (columns are
// points), log-domain iterations, debiased by the self-transport terms so
// identical clouds have distance exactly zero. Non-convergence is reported
// via the flag, not an error.
SinkhornResult sinkhorn_distance(const MatrixXd& a_points,
                                 const MatrixXd& b_points,
                                 const BalanceConfig& cfg);

// Envelope gradients of the regularized transport value with respect to the
// point coordinates, at a converged plan.
std::pair<MatrixXd, MatrixXd> sinkhorn_point_gradients(
    const MatrixXd& a_points, const MatrixXd& b_points, const MatrixXd& plan);

// Gradients of the debiased divergence (the quantity sinkhorn_distance
// reports) with respect to both point sets.
std::pair<MatrixXd, MatrixXd> sinkhorn_divergence_gradients(
    const MatrixXd& a_points, const MatrixXd& b_points,
    const BalanceConfig& cfg);

// elbo_value - gamma * sinkhorn_distance(prior means by treatment group)
double balanced_objective(double elbo_value, const MatrixXd& prior_means_t0,
                          const MatrixXd& prior_means_t1,
                          const BalanceConfig& cfg);

}  // namespace intact
