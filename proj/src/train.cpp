#include "intact/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace intact {

namespace {

struct Adam {
  double lr, b1, b2, eps;
  VectorXd m, v;
  long step_count = 0;

  Adam(double lr_, double b1_, double b2_, double eps_, Index dim)
      : lr(lr_), b1(b1_), b2(b2_), eps(eps_), m(VectorXd::Zero(dim)),
        v(VectorXd::Zero(dim)) {}

  // ascent step along grad
  void step(VectorXd& theta, const VectorXd& grad) {
    ++step_count;
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count));
    theta += (lr / c1) * m.cwiseQuotient(
                             ((v / c2).cwiseSqrt().array() + eps).matrix());
  }
};

MatrixXd gather_cols_idx(const MatrixXd& m, const std::vector<Index>& idx) {
  MatrixXd out(m.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k)
    out.col(static_cast<Index>(k)) = m.col(idx[k]);
  return out;
}

VectorXi gather_t(const VectorXi& t, const std::vector<Index>& idx) {
  VectorXi out(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k)
    out[static_cast<Index>(k)] = t[idx[k]];
  return out;
}

// Sinkhorn penalty between per-group prior means of the batch; accumulates
// -gamma * d(cost)/d(theta) into grad (transport plan held fixed). Returns
// the penalty value, or 0 when a group is absent (counted as skipped).
double balance_penalty_with_grad(const ModelParams& params, const MatrixXd& x,
                                 const VectorXi& t, const BalanceConfig& bcfg,
                                 VectorXd& grad, int& skipped) {
  std::vector<Index> idx0, idx1;
  for (Index i = 0; i < t.size(); ++i)
    (t[i] == 0 ? idx0 : idx1).push_back(i);
  if (idx0.empty() || idx1.empty()) {
    ++skipped;
    return 0.0;
  }
  const MatrixXd in =
      params.config.balanced_prior ? x : with_treatment_row(x, t);
  const Mlp& h_net = params.net(NetRole::prior_mean);
  std::vector<MatrixXd> acts;
  MatrixXd means = h_net.forward(params.theta, in, &acts);
  MatrixXd group0 = gather_cols_idx(means, idx0);
  MatrixXd group1 = gather_cols_idx(means, idx1);
  SinkhornResult res = sinkhorn_distance(group0, group1, bcfg);
  auto [ga, gb] = sinkhorn_divergence_gradients(group0, group1, bcfg);
  MatrixXd d_means = MatrixXd::Zero(means.rows(), means.cols());
  for (std::size_t k = 0; k < idx0.size(); ++k)
    d_means.col(idx0[k]) = -bcfg.gamma * ga.col(static_cast<Index>(k));
  for (std::size_t k = 0; k < idx1.size(); ++k)
    d_means.col(idx1[k]) = -bcfg.gamma * gb.col(static_cast<Index>(k));
  h_net.backward(params.theta, acts, d_means, grad, false);
  return bcfg.gamma * res.cost;
}

}  // namespace

void TrainConfig::validate() const {
  if (learning_rate <= 0.0)
    throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (batch_size < 1)
    throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (patience < 1)
    throw std::invalid_argument("TrainConfig: patience must be >= 1");
  if (max_epochs < 1)
    throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
  if (balance_gamma < 0.0)
    throw std::invalid_argument("TrainConfig: balance_gamma must be >= 0");
  if (elbo_samples < 1)
    throw std::invalid_argument("TrainConfig: elbo_samples must be >= 1");
}

double TrainTrace::best_val_elbo() const {
  if (best_epoch < 0 || best_epoch >= static_cast<int>(val_elbo.size()))
    return -std::numeric_limits<double>::infinity();
  return val_elbo[static_cast<std::size_t>(best_epoch)];
}

std::pair<ModelParams, TrainTrace> train(const ModelConfig& model_config,
                                         const Dataset& train_set,
                                         const Dataset& val_set,
                                         const TrainConfig& cfg) {
  cfg.validate();
  model_config.validate();
  if (train_set.n_units() == 0 || val_set.n_units() == 0)
    throw std::invalid_argument("train: empty train or validation split");
  if (!train_set.has_outcomes() || !val_set.has_outcomes())
    throw std::invalid_argument("train: outcomes are required");
  if (train_set.cov_dim() != model_config.covariate_dim)
    throw std::invalid_argument("train: covariate dimension mismatch");

  const auto t_start = std::chrono::steady_clock::now();
  const Index n_train = train_set.n_units();
  const std::uint64_t val_noise = derive_seed(cfg.seed, "val-noise");
  const BalanceConfig bcfg = cfg.balance_config();

  for (int attempt = 0; attempt < 2; ++attempt) {
    const bool clip = attempt > 0;
    ModelParams params = init_params(model_config, derive_seed(cfg.seed, "init"));
    Adam adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps,
              params.theta.size());
    TrainTrace trace;
    trace.grad_clip_enabled = clip;
    VectorXd grad(params.theta.size());
    VectorXd best_theta = params.theta;
    double best_val = -std::numeric_limits<double>::infinity();
    bool restart = false;

    std::vector<Index> order(static_cast<std::size_t>(n_train));
    std::iota(order.begin(), order.end(), Index{0});

    for (int epoch = 0; epoch < cfg.max_epochs && !restart; ++epoch) {
      RandomStream shuffle_rs(derive_seed(cfg.seed, "shuffle", epoch));
      shuffle_rs.shuffle(order);

      double epoch_sum = 0.0;
      const int n_batches =
          static_cast<int>((n_train + cfg.batch_size - 1) / cfg.batch_size);
      for (int b = 0; b < n_batches; ++b) {
        const Index lo = static_cast<Index>(b) * cfg.batch_size;
        const Index hi = std::min<Index>(lo + cfg.batch_size, n_train);
        std::vector<Index> idx(order.begin() + lo, order.begin() + hi);
        MatrixXd xb = gather_cols_idx(train_set.x, idx);
        MatrixXd yb = gather_cols_idx(train_set.y, idx);
        VectorXi tb = gather_t(train_set.t, idx);

        grad.setZero();
        double value;
        try {
          value = elbo_with_grad(params, xb, yb, tb, cfg.elbo_samples,
                                 derive_seed(cfg.seed, "noise", epoch, b),
                                 grad);
          if (cfg.balance_gamma > 0.0)
            balance_penalty_with_grad(params, xb, tb, bcfg, grad,
                                      trace.balance_skipped_batches);
        } catch (const numeric_error& e) {
          if (clip)
            throw numeric_error(std::string(e.what()) + " (epoch " +
                                std::to_string(epoch) + ", batch " +
                                std::to_string(b) + ", clipping active)");
          std::cerr << "train: non-finite loss at epoch " << epoch
                    << ", batch " << b
                    << "; restarting with gradient clipping\n";
          restart = true;
          break;
        }
        if (epoch < cfg.encoder_warmup_epochs && !model_config.degenerate_prior) {
          // hold the encoder's outcome/treatment coupling at its small
          // initial value while the covariate-anchored frame forms
          for (NetRole role : {NetRole::enc_mean, NetRole::enc_var}) {
            const auto& l0 = params.net(role).layers().front();
            const Index aux = model_config.outcome_dim + 1;
            grad.segment(l0.w_off + (l0.in - aux) * l0.out, aux * l0.out)
                .setZero();
          }
        }
        if (!grad.allFinite()) {
          if (clip)
            throw numeric_error("train: non-finite gradient at epoch " +
                                std::to_string(epoch) + ", batch " +
                                std::to_string(b) + " with clipping active");
          std::cerr << "train: non-finite gradient at epoch " << epoch
                    << ", batch " << b
                    << "; restarting with gradient clipping\n";
          restart = true;
          break;
        }
        if (clip) {
          const double norm = grad.norm();
          if (norm > cfg.clip_norm) grad *= cfg.clip_norm / norm;
        }
        adam.step(params.theta, grad);
        epoch_sum += value * static_cast<double>(hi - lo);
      }
      if (restart) break;

      trace.train_elbo.push_back(epoch_sum / static_cast<double>(n_train));
      double val_value =
          elbo(params, val_set.x, val_set.y, val_set.t, 1, val_noise);
      trace.val_elbo.push_back(val_value);
      trace.stopped_epoch = epoch + 1;
      if (val_value > best_val) {
        best_val = val_value;
        trace.best_epoch = epoch;
        best_theta = params.theta;
      }
      if (epoch - trace.best_epoch >= cfg.patience) break;
    }

    if (restart) continue;
    params.theta = std::move(best_theta);
    trace.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
    return {std::move(params), std::move(trace)};
  }
  throw numeric_error("train: non-finite loss persisted after enabling "
                      "gradient clipping");
}

double grad_check(const ModelParams& params, const MatrixXd& x,
                  const MatrixXd& y, const VectorXi& t, double eps,
                  int n_coords, std::uint64_t seed,
                  const std::vector<Index>* coords) {
  if (eps < 1e-7 || eps > 1e-3)
    throw std::invalid_argument("grad_check: eps must be in [1e-7, 1e-3]");
  const std::uint64_t noise = derive_seed(seed, "grad-check-noise");

  VectorXd grad = VectorXd::Zero(params.theta.size());
  elbo_with_grad(params, x, y, t, 1, noise, grad);
  if (!grad.allFinite()) throw numeric_error("grad_check: non-finite gradient");

  std::vector<Index> subset;
  if (coords) {
    subset = *coords;
  } else {
    RandomStream rs(derive_seed(seed, "grad-check-coords"));
    const Index dim = params.theta.size();
    const int count = std::min<int>(n_coords, static_cast<int>(dim));
    std::vector<Index> all(static_cast<std::size_t>(dim));
    std::iota(all.begin(), all.end(), Index{0});
    rs.shuffle(all);
    subset.assign(all.begin(), all.begin() + count);
  }

  ModelParams probe = params;
  double max_err = 0.0;
  for (Index c : subset) {
    const double saved = probe.theta[c];
    probe.theta[c] = saved + eps;
    const double up = elbo(probe, x, y, t, 1, noise);
    probe.theta[c] = saved - eps;
    const double dn = elbo(probe, x, y, t, 1, noise);
    probe.theta[c] = saved;
    const double fd = (up - dn) / (2.0 * eps);
    const double err =
        std::abs(grad[c] - fd) / std::max(1.0, std::abs(grad[c]));
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace intact
