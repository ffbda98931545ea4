#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "intact/model.hpp"
#include "intact/sinkhorn.hpp"
#include "intact/types.hpp"

namespace intact {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 100;
  int max_epochs = 300;
  int patience = 10;  // epochs without validation improvement
  std::uint64_t seed = 0;
  double balance_gamma = 0.0;  // 0 disables the balancing penalty
  double sinkhorn_epsilon = 0.1;
  int sinkhorn_max_iters = 500;
  double sinkhorn_tol = 1e-6;
  int elbo_samples = 1;
  // Epochs during which the encoder's (y, t) first-layer columns stay
  // frozen, so the latent frame is anchored by the covariates before the
  // outcome coupling grows; see the matching note in init_params.
  int encoder_warmup_epochs = 25;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  double clip_norm = 10.0;  // applied only after a non-finite event

  void validate() const;
  BalanceConfig balance_config() const {
    return {balance_gamma, sinkhorn_epsilon, sinkhorn_max_iters, sinkhorn_tol};
  }
};

struct TrainTrace {
  std::vector<double> train_elbo;  // per-epoch mean over training units
  std::vector<double> val_elbo;    // plain ELBO, dedicated fixed noise stream
  double wall_seconds = 0.0;       // informational, not part of determinism
  int stopped_epoch = 0;           // epochs actually run
  int best_epoch = -1;             // argmax of val_elbo
  bool grad_clip_enabled = false;
  int balance_skipped_batches = 0;  // batches with a treatment group missing

  double best_val_elbo() const;
};

// Stochastic gradient ascent on the ELBO (optionally minus the Sinkhorn
// balancing penalty) with Adam, early stopping on validation ELBO. Returns
// the parameters recorded at the best validation epoch. Everything except
// wall_seconds is a deterministic function of (configs, data, seed).
std::pair<ModelParams, TrainTrace> train(const ModelConfig& model_config,
                                         const Dataset& train_set,
                                         const Dataset& val_set,
                                         const TrainConfig& cfg);

// Max relative error between backprop and central finite differences of the
// ELBO over a sampled parameter subset, with common random numbers across
// the +/- evaluations. coords, when given, overrides the sampled subset.
double grad_check(const ModelParams& params, const MatrixXd& x,
                  const MatrixXd& y, const VectorXi& t, double eps,
                  int n_coords = 200, std::uint64_t seed = 17,
                  const std::vector<Index>* coords = nullptr);

}  // namespace intact
