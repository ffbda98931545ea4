#pragma once

#include <cstdint>
#include <vector>

#include "intact/mlp.hpp"
#include "intact/types.hpp"

namespace intact {

// Treatment-conditional VAE with diagonal-Gaussian prior, encoder, and
// decoder. Every functional parameter (prior mean h / variance k, decoder
// mean f / variance g, encoder mean r / variance s) is its own MLP.
struct ModelConfig {
  Index latent_dim = 1;
  Index outcome_dim = 1;
  Index covariate_dim = 0;
  std::vector<Index> hidden = {200, 200, 200};  // ReLU throughout
  bool balanced_prior = true;       // prior ignores t (lambda_0 = lambda_1)
  bool separate_decoder_heads = false;  // disjoint decoder nets per arm
  bool learn_outcome_noise = true;  // decoder variance g_t(z) vs constant
  bool degenerate_prior = false;    // k == 0: prior collapses to z = h(x),
                                    // no encoder, ELBO = reconstruction only
  double outcome_var = 1.0;         // used when !learn_outcome_noise
  double var_floor = 1e-4;
  // initial variance-head outputs (final-layer bias offsets at init). The
  // decoder noise must start well below the outcome scale: a large initial
  // g mutes the reconstruction gradient and training settles into a
  // latent-ignoring optimum before the decoder couples to z.
  double init_prior_var = 0.7;
  double init_enc_var = 0.2;
  double init_dec_var = 0.05;

  void validate() const;
};

enum class NetRole {
  prior_mean,
  prior_var,
  dec_mean,   // shared decoder head, input (z, t)
  dec_mean0,  // separate decoder heads, input z
  dec_mean1,
  dec_var,
  dec_var0,
  dec_var1,
  enc_mean,
  enc_var,
};

const char* net_role_name(NetRole role);

struct ModelParams {
  ModelConfig config;
  std::vector<std::pair<NetRole, Mlp>> nets;
  VectorXd theta;

  bool has_net(NetRole role) const;
  const Mlp& net(NetRole role) const;
};

// Nets laid out in a fresh flat vector; weights from fan-in scaled uniform
// draws seeded per net.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

// Appends t as an extra input row (binary feature).
MatrixXd with_treatment_row(const MatrixXd& m, const VectorXi& t);

// var_floor + softplus(raw), the positivity transform of every variance head
MatrixXd variance_from_raw(const MatrixXd& raw, double var_floor);

// p(z|x,t): with balanced_prior the output is the same object for t=0 and
// t=1 (t never enters the computation). Degenerate prior gives var == 0.
DiagGaussian prior_params(const ModelParams& params, const MatrixXd& x,
                          const VectorXi& t);

// q(z|x,y,t)
DiagGaussian encode(const ModelParams& params, const MatrixXd& x,
                    const MatrixXd& y, const VectorXi& t);

// p(y|z,t); with separate heads t selects the parameter set, otherwise t is
// an input feature.
DiagGaussian decode(const ModelParams& params, const MatrixXd& z,
                    const VectorXi& t);

// mean + sqrt(var) .* noise, elementwise
MatrixXd reparam_sample(const DiagGaussian& g, const MatrixXd& noise);

// KL(q || p) per column; exact closed form, clamped at 0 against rounding.
VectorXd gaussian_kl_cols(const DiagGaussian& q, const DiagGaussian& p);
// single-distribution convenience (batch size 1)
double gaussian_kl(const DiagGaussian& q, const DiagGaussian& p);

// sum over columns of the diagonal-Gaussian log density of y
VectorXd gaussian_log_density_cols(const MatrixXd& y, const DiagGaussian& g);

// Mean over the batch of (1/L) sum_l log p(y|z_l,t) - KL(q || prior), with
// z_l reparameterized from the encoder using noise drawn from noise_seed.
// In the degenerate-prior configuration this is the plain reconstruction
// log-likelihood at z = h(x).
double elbo(const ModelParams& params, const MatrixXd& x, const MatrixXd& y,
            const VectorXi& t, int num_samples, std::uint64_t noise_seed);
double elbo(const ModelParams& params, const Dataset& batch, int num_samples,
            std::uint64_t noise_seed);

// Same value; also accumulates d(elbo)/d(theta) into grad (which must be
// zero-initialized to theta's size by the caller).
double elbo_with_grad(const ModelParams& params, const MatrixXd& x,
                      const MatrixXd& y, const VectorXi& t, int num_samples,
                      std::uint64_t noise_seed, VectorXd& grad);

}  // namespace intact
