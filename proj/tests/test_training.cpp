#include <doctest.h>

#include <cmath>

#include "intact/estimate.hpp"
#include "intact/train.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace intact;
using test_util::random_matrix;
using test_util::random_treatments;

namespace {

Dataset toy_dataset(Index n, std::uint64_t seed, Index p = 3) {
  Dataset d;
  d.x = random_matrix(p, n, derive_seed(seed, "x"));
  d.y = random_matrix(1, n, derive_seed(seed, "y"));
  d.t = random_treatments(n, derive_seed(seed, "t"));
  return d;
}

ModelConfig tiny_model(Index p = 3) {
  ModelConfig cfg;
  cfg.covariate_dim = p;
  cfg.hidden = {16};
  return cfg;
}

TrainConfig quick_train(std::uint64_t seed, int epochs = 5) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.max_epochs = epochs;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-3;
  return cfg;
}

}  // namespace

TEST_CASE("training is bit-deterministic given the seed") {
  Dataset tr = toy_dataset(48, 1);
  Dataset va = toy_dataset(24, 2);
  auto [p1, t1] = train(tiny_model(), tr, va, quick_train(7));
  auto [p2, t2] = train(tiny_model(), tr, va, quick_train(7));
  CHECK(p1.theta == p2.theta);
  CHECK(t1.train_elbo == t2.train_elbo);
  CHECK(t1.val_elbo == t2.val_elbo);
  CHECK(t1.best_epoch == t2.best_epoch);
  CHECK(t1.stopped_epoch == t2.stopped_epoch);

  auto [p3, t3] = train(tiny_model(), tr, va, quick_train(8));
  CHECK(p1.theta != p3.theta);
}

TEST_CASE("patience-1 run on a constant dataset halts and never regresses") {
  Dataset tr = toy_dataset(40, 3);
  tr.y.setZero();
  Dataset va = toy_dataset(20, 4);
  va.y.setZero();
  TrainConfig cfg = quick_train(9, 50);
  cfg.patience = 1;
  auto [params, trace] = train(tiny_model(), tr, va, cfg);
  CHECK(trace.stopped_epoch <= 50);
  CHECK(trace.best_val_elbo() >= trace.val_elbo.front());
}

TEST_CASE("returned parameters reproduce the recorded best validation ELBO") {
  Dataset tr = toy_dataset(60, 5);
  Dataset va = toy_dataset(30, 6);
  TrainConfig cfg = quick_train(10, 12);
  auto [params, trace] = train(tiny_model(), tr, va, cfg);
  REQUIRE(trace.best_epoch >= 0);
  const double replay = elbo(params, va.x, va.y, va.t, 1,
                             derive_seed(cfg.seed, "val-noise"));
  CHECK(replay == trace.val_elbo[static_cast<std::size_t>(trace.best_epoch)]);
  CHECK(trace.best_val_elbo() ==
        *std::max_element(trace.val_elbo.begin(), trace.val_elbo.end()));
}

TEST_CASE("single-group batches skip the balance penalty") {
  Dataset tr = toy_dataset(32, 11);
  tr.t.setOnes();  // one treatment group only
  Dataset va = toy_dataset(16, 12);
  TrainConfig plain = quick_train(13, 4);
  TrainConfig balanced = plain;
  balanced.balance_gamma = 1.0;
  auto [p_plain, t_plain] = train(tiny_model(), tr, va, plain);
  auto [p_bal, t_bal] = train(tiny_model(), tr, va, balanced);
  CHECK(t_bal.balance_skipped_batches > 0);
  // every penalty was skipped, so the updates match the gamma = 0 run
  CHECK(p_plain.theta == p_bal.theta);
}

TEST_CASE("balance penalty changes updates when both groups are present") {
  Dataset tr = toy_dataset(48, 14);
  Dataset va = toy_dataset(24, 15);
  TrainConfig plain = quick_train(16, 3);
  TrainConfig balanced = plain;
  balanced.balance_gamma = 5.0;
  auto [p_plain, t_plain] = train(tiny_model(), tr, va, plain);
  auto [p_bal, t_bal] = train(tiny_model(), tr, va, balanced);
  CHECK(t_bal.balance_skipped_batches == 0);
  CHECK(p_plain.theta != p_bal.theta);
}

TEST_CASE("argument errors") {
  Dataset tr = toy_dataset(10, 17);
  Dataset empty;
  empty.x = MatrixXd(3, 0);
  empty.y = MatrixXd(1, 0);
  empty.t = VectorXi(0);
  CHECK_THROWS_AS(train(tiny_model(), empty, tr, quick_train(18)),
                  std::invalid_argument);
  CHECK_THROWS_AS(train(tiny_model(), tr, empty, quick_train(18)),
                  std::invalid_argument);
  TrainConfig bad = quick_train(19);
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train(tiny_model(), tr, tr, bad), std::invalid_argument);
}

TEST_CASE("grad_check: full ELBO against central differences") {
  auto params = init_params(tiny_model(), 20);
  Dataset batch = toy_dataset(20, 21);
  const double err = grad_check(params, batch.x, batch.y, batch.t, 1e-5, 150);
  CHECK(err < 1e-4);
}

TEST_CASE("grad_check: separate heads and balanced-off configurations") {
  ModelConfig cfg = tiny_model();
  cfg.separate_decoder_heads = true;
  cfg.balanced_prior = false;
  auto params = init_params(cfg, 22);
  Dataset batch = toy_dataset(20, 23);
  const double err = grad_check(params, batch.x, batch.y, batch.t, 1e-5, 150);
  CHECK(err < 1e-4);
}

TEST_CASE("grad_check: degenerate-prior (regression) objective") {
  ModelConfig cfg = tiny_model();
  cfg.degenerate_prior = true;
  cfg.learn_outcome_noise = false;
  auto params = init_params(cfg, 24);
  Dataset batch = toy_dataset(20, 25);
  const double err = grad_check(params, batch.x, batch.y, batch.t, 1e-5, 150);
  CHECK(err < 1e-4);
}

TEST_CASE("grad_check: KL-only gradient is exact to 1e-6") {
  auto params = init_params(tiny_model(), 26);
  // constant decoder: reconstruction no longer depends on any checked
  // parameter, leaving the closed-form KL gradient
  test_util::zero_net(params, NetRole::dec_mean);
  test_util::zero_net(params, NetRole::dec_var);
  Dataset batch = toy_dataset(16, 27);
  std::vector<Index> coords;
  for (NetRole role : {NetRole::prior_mean, NetRole::prior_var,
                       NetRole::enc_mean, NetRole::enc_var}) {
    const Mlp& net = params.net(role);
    for (Index k = 0; k < 25; ++k)
      coords.push_back(net.offset() + (k * 7) % net.size());
  }
  const double err =
      grad_check(params, batch.x, batch.y, batch.t, 1e-5, 0, 17, &coords);
  CHECK(err < 1e-6);
}

TEST_CASE("grad_check leaves parameters untouched") {
  auto params = init_params(tiny_model(), 28);
  VectorXd before = params.theta;
  Dataset batch = toy_dataset(12, 29);
  grad_check(params, batch.x, batch.y, batch.t, 1e-5, 40);
  CHECK(params.theta == before);
  CHECK_THROWS_AS(grad_check(params, batch.x, batch.y, batch.t, 1e-2, 10),
                  std::invalid_argument);
}

TEST_CASE("trained model recovers the linear-Gaussian conditional mean") {
  // tractable truth: x ~ N(0,1), z|x ~ N(0.9x + 0.1, 0.2),
  // y = a_t z + b_t + N(0, 0.1); E[y|x,t] = a_t (0.9x + 0.1) + b_t
  const double a[2] = {1.0, 1.4}, b[2] = {0.0, 0.3};
  auto sample = [&](Index n, std::uint64_t seed) {
    RandomStream rs(seed);
    Dataset d;
    d.x.resize(1, n);
    d.y.resize(1, n);
    d.t.resize(n);
    for (Index i = 0; i < n; ++i) {
      const double x = rs.normal();
      const double z = 0.9 * x + 0.1 + std::sqrt(0.2) * rs.normal();
      const int t = rs.bernoulli(1.0 / (1.0 + std::exp(-0.8 * x))) ? 1 : 0;
      d.x(0, i) = x;
      d.t[i] = t;
      d.y(0, i) = a[t] * z + b[t] + std::sqrt(0.1) * rs.normal();
    }
    return d;
  };

  ModelConfig mc;
  mc.covariate_dim = 1;
  mc.hidden = {64};
  TrainConfig tc;
  tc.seed = 30;
  tc.learning_rate = 1e-3;
  tc.max_epochs = 400;
  tc.patience = 20;

  Dataset tr = sample(10000, 31);
  Dataset va = sample(2000, 32);
  auto [params, trace] = train(mc, tr, va, tc);

  Dataset held;  // fresh held-out covariates
  held.x = random_matrix(1, 2000, 34);
  held.t = VectorXi::Zero(2000);
  auto est = estimate_effects(params, held, EstimateMode::pre, 2000, 35);
  double sq = 0.0;
  for (Index i = 0; i < held.x.cols(); ++i) {
    const double h = 0.9 * held.x(0, i) + 0.1;
    sq += std::pow(est.mu0_hat(0, i) - (a[0] * h + b[0]), 2);
    sq += std::pow(est.mu1_hat(0, i) - (a[1] * h + b[1]), 2);
  }
  const double rmse = std::sqrt(sq / (2.0 * static_cast<double>(held.x.cols())));
  CHECK(rmse <= 0.05);
}
