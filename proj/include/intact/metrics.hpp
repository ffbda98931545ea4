#pragma once

#include <optional>
#include <string>
#include <vector>

#include "intact/estimate.hpp"
#include "intact/types.hpp"

namespace intact {

// |mean(y1 - y0) - mean(tau_hat)|
double eps_ate(const VectorXd& y0, const VectorXd& y1, const VectorXd& tau_hat);

// sqrt of the mean squared per-unit difference between (y1 - y0) and tau_hat
double sqrt_pehe(const VectorXd& y0, const VectorXd& y1,
                 const VectorXd& tau_hat);

// Per-group and pooled OLS fits of z_hat on z_true. group_consistency
// measures how far apart the two per-group slopes are; it is 0 when both
// groups share one affine map.
struct AffineFit {
  double a0 = 0, b0 = 0, r2_0 = 0;
  double a1 = 0, b1 = 0, r2_1 = 0;
  double a_pooled = 0, b_pooled = 0, r2_pooled = 0;
  double group_consistency = 0;  // |a0 - a1| / max(|a0|, |a1|)
};

AffineFit affine_recovery(const VectorXd& z_hat, const VectorXd& z_true,
                          const VectorXi& t);

// n > 1: per-coordinate fits after one-time coordinate matching by absolute
// pooled correlation (greedy, each true coordinate claimed once).
std::vector<AffineFit> affine_recovery_multi(const MatrixXd& z_hat,
                                             const MatrixXd& z_true,
                                             const VectorXi& t);

struct EvalReport {
  double eps_ate = 0.0;
  double sqrt_pehe = 0.0;
  EstimateMode mode = EstimateMode::pre;
  std::string split;  // descriptor, e.g. "test" or "train+val"
  std::optional<AffineFit> affine;
  std::uint64_t seed = 0;
  std::string config_hash;

  // JSON record; keys documented in schema/run_record.schema.v1.json
  std::string to_json_string() const;
  static std::string csv_header();
  std::string csv_row() const;
};

// builds the (post or pre) report for a dataset carrying true potential
// outcomes; d = 1 outcomes
EvalReport evaluate_estimate(const EffectEstimate& est, const Dataset& truth,
                             const std::string& split_descriptor);

}  // namespace intact
