#include <doctest.h>

#include <cmath>

#include "intact/estimate.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace intact;
using test_util::random_matrix;
using test_util::random_treatments;

namespace {

// affine prior h(x) = wh x + bh with exact variance k, affine decoder heads
// f_t(z) = a_t z + b_t
struct LinearSetup {
  ModelParams params;
  double wh = 0.7, bh = 0.15;
  double a0 = 1.2, b0 = -0.3, a1 = -0.8, b1 = 0.5;

  explicit LinearSetup(double prior_var, bool degenerate = false) {
    ModelConfig cfg;
    cfg.covariate_dim = 1;
    cfg.hidden = {};
    cfg.separate_decoder_heads = true;
    cfg.learn_outcome_noise = false;
    cfg.degenerate_prior = degenerate;
    params = init_params(cfg, 60);
    test_util::set_affine(params, NetRole::prior_mean,
                          MatrixXd::Constant(1, 1, wh),
                          VectorXd::Constant(1, bh));
    if (!degenerate) {
      test_util::set_affine(
          params, NetRole::prior_var, MatrixXd::Zero(1, 1),
          VectorXd::Constant(
              1, test_util::raw_for_variance(prior_var, cfg.var_floor)));
    }
    test_util::set_affine(params, NetRole::dec_mean0,
                          MatrixXd::Constant(1, 1, a0),
                          VectorXd::Constant(1, b0));
    test_util::set_affine(params, NetRole::dec_mean1,
                          MatrixXd::Constant(1, 1, a1),
                          VectorXd::Constant(1, b1));
  }

  double mu(int arm, double x) const {
    const double h = wh * x + bh;
    return arm == 0 ? a0 * h + b0 : a1 * h + b1;
  }
};

}  // namespace

TEST_CASE("decoder ignoring t yields exactly zero effects in both modes") {
  ModelConfig cfg;
  cfg.covariate_dim = 3;
  cfg.hidden = {16};
  auto params = init_params(cfg, 61);
  // zero the first-layer weights on the treatment input of both decoder heads
  for (NetRole role : {NetRole::dec_mean, NetRole::dec_var}) {
    const auto& l0 = params.net(role).layers().front();
    Eigen::Map<MatrixXd> w(params.theta.data() + l0.w_off, l0.out, l0.in);
    w.col(l0.in - 1).setZero();
  }
  Dataset data;
  data.x = random_matrix(3, 30, 62);
  data.y = random_matrix(1, 30, 63);
  data.t = random_treatments(30, 64);
  for (EstimateMode mode : {EstimateMode::pre, EstimateMode::post}) {
    EffectEstimate est = estimate_effects(params, data, mode, 7, 65);
    CHECK((est.tau_hat.array() == 0.0).all());
  }
}

TEST_CASE("degenerate prior: estimates are deterministic and exact") {
  LinearSetup setup(0.0, /*degenerate=*/true);
  Dataset data;
  data.x = random_matrix(1, 25, 66);
  data.t = VectorXi::Zero(25);
  EffectEstimate e1 = estimate_effects(setup.params, data, EstimateMode::pre, 1, 67);
  EffectEstimate e2 = estimate_effects(setup.params, data, EstimateMode::pre, 2, 68);
  CHECK(e1.mu0_hat == e2.mu0_hat);  // no sampling noise at all
  CHECK(e1.mu1_hat == e2.mu1_hat);
  for (Index i = 0; i < 25; ++i) {
    CHECK(e1.mu0_hat(0, i) ==
          doctest::Approx(setup.mu(0, data.x(0, i))).epsilon(1e-14));
    CHECK(e1.mu1_hat(0, i) ==
          doctest::Approx(setup.mu(1, data.x(0, i))).epsilon(1e-14));
  }
}

TEST_CASE("pre-mode estimates converge to a_t h(x) + b_t") {
  const double prior_var = 0.5;
  LinearSetup setup(prior_var);
  Dataset data;
  data.x = random_matrix(1, 10, 69);
  data.t = VectorXi::Zero(10);
  const int S = 10000;
  EffectEstimate est =
      estimate_effects(setup.params, data, EstimateMode::pre, S, 70);
  // mu_hat averages a_t z + b_t over S prior draws; the Monte Carlo standard
  // error is |a_t| sqrt(var / S)
  for (Index i = 0; i < 10; ++i) {
    const double se0 = std::abs(setup.a0) * std::sqrt(prior_var / S);
    const double se1 = std::abs(setup.a1) * std::sqrt(prior_var / S);
    CHECK(std::abs(est.mu0_hat(0, i) - setup.mu(0, data.x(0, i))) < 4 * se0);
    CHECK(std::abs(est.mu1_hat(0, i) - setup.mu(1, data.x(0, i))) < 4 * se1);
  }
}

TEST_CASE("encoder clamped to the prior makes pre and post modes agree") {
  ModelConfig cfg;
  cfg.covariate_dim = 2;
  cfg.hidden = {8};
  cfg.separate_decoder_heads = false;
  auto params = init_params(cfg, 71);
  test_util::copy_net_ignoring_extra_inputs(params, NetRole::prior_mean,
                                            NetRole::enc_mean);
  test_util::copy_net_ignoring_extra_inputs(params, NetRole::prior_var,
                                            NetRole::enc_var);
  Dataset data;
  data.x = random_matrix(2, 12, 72);
  data.y = random_matrix(1, 12, 73);
  data.t = random_treatments(12, 74);

  const int S = 10000;
  EffectEstimate pre = estimate_effects(params, data, EstimateMode::pre, S, 75);
  EffectEstimate post =
      estimate_effects(params, data, EstimateMode::post, S, 76);

  // estimate the per-draw spread of decoded means to size the tolerance
  DiagGaussian prior = prior_params(params, data.x, data.t);
  RandomStream rs(77);
  for (Index i = 0; i < 12; ++i) {
    std::vector<double> probe(2000);
    VectorXi ti(1);
    ti[0] = 0;
    for (std::size_t s = 0; s < probe.size(); ++s) {
      MatrixXd z = MatrixXd::Constant(
          1, 1, prior.mean(0, i) + std::sqrt(prior.var(0, i)) * rs.normal());
      probe[s] = decode(params, z, ti).mean(0, 0);
    }
    const double se = std::sqrt(2.0 * oracles::variance_of(probe) / S);
    CHECK(std::abs(pre.mu0_hat(0, i) - post.mu0_hat(0, i)) < 4 * se);
  }
}

TEST_CASE("tau_hat is exactly mu1_hat - mu0_hat") {
  ModelConfig cfg;
  cfg.covariate_dim = 2;
  cfg.hidden = {8};
  auto params = init_params(cfg, 78);
  Dataset data;
  data.x = random_matrix(2, 40, 79);
  data.y = random_matrix(1, 40, 80);
  data.t = random_treatments(40, 81);
  EffectEstimate est = estimate_effects(params, data, EstimateMode::post, 5, 82);
  CHECK(est.tau_hat == est.mu1_hat - est.mu0_hat);
}

TEST_CASE("estimator variance decays as 1/S") {
  const double prior_var = 0.5;
  LinearSetup setup(prior_var);
  Dataset data;
  data.x = MatrixXd::Constant(1, 1, 0.4);
  data.t = VectorXi::Zero(1);
  const double per_draw = setup.a0 * setup.a0 * prior_var;
  for (int S : {1, 4, 16}) {
    std::vector<double> reps(200);
    for (std::size_t r = 0; r < reps.size(); ++r)
      reps[r] = estimate_effects(setup.params, data, EstimateMode::pre, S,
                                 derive_seed(83, "rep", r))
                    .mu0_hat(0, 0);
    const double v = oracles::variance_of(reps);
    const double expect = per_draw / S;
    CHECK(v > 0.5 * expect);
    CHECK(v < 1.7 * expect);
  }
}

TEST_CASE("post mode requires outcomes") {
  ModelConfig cfg;
  cfg.covariate_dim = 2;
  cfg.hidden = {8};
  auto params = init_params(cfg, 84);
  Dataset data;
  data.x = random_matrix(2, 5, 85);
  data.t = random_treatments(5, 86);
  CHECK_THROWS_AS(estimate_effects(params, data, EstimateMode::post, 3, 87),
                  std::invalid_argument);
  CHECK_NOTHROW(estimate_effects(params, data, EstimateMode::pre, 3, 88));
}

TEST_CASE("ate is the sample mean of tau_hat") {
  EffectEstimate est;
  est.mu0_hat = MatrixXd::Zero(1, 3);
  est.mu1_hat = MatrixXd::Zero(1, 3);

  est.tau_hat = MatrixXd::Constant(1, 3, 2.5);
  CHECK(ate(est)[0] == 2.5);

  est.tau_hat.resize(1, 2);
  est.tau_hat << 1.0, -1.0;
  CHECK(ate(est)[0] == 0.0);

  est.tau_hat.resize(1, 3);
  est.tau_hat << 0.2, 0.4, 0.9;
  CHECK(ate(est)[0] == doctest::Approx(0.5).epsilon(1e-15));

  est.tau_hat.resize(1, 0);
  CHECK_THROWS_AS(ate(est), std::invalid_argument);
}
