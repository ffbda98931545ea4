#include "intact/estimate.hpp"

#include <vector>

#include "intact/rng.hpp"

namespace intact {

EffectEstimate estimate_effects(const ModelParams& params, const Dataset& data,
                                EstimateMode mode, int samples,
                                std::uint64_t noise_seed) {
  if (samples < 1)
    throw std::invalid_argument("estimate_effects: samples must be >= 1");
  const Index n_units = data.n_units();
  if (n_units == 0) throw std::invalid_argument("estimate_effects: no units");
  if (mode == EstimateMode::post && !data.has_outcomes())
    throw std::invalid_argument(
        "estimate_effects: post mode requires factual outcomes and treatments");

  const Index n = params.config.latent_dim;
  const Index d = params.config.outcome_dim;

  DiagGaussian latent =
      mode == EstimateMode::post
          ? encode(params, data.x, data.y, data.t)
          : prior_params(params, data.x, data.t);

  std::vector<RandomStream> row_streams;
  row_streams.reserve(static_cast<std::size_t>(n_units));
  for (Index i = 0; i < n_units; ++i)
    row_streams.emplace_back(
        derive_seed(noise_seed, "row", static_cast<std::uint64_t>(i)));

  EffectEstimate est;
  est.mode = mode;
  est.samples_used = samples;
  est.mu0_hat = MatrixXd::Zero(d, n_units);
  est.mu1_hat = MatrixXd::Zero(d, n_units);

  const VectorXi t0 = VectorXi::Zero(n_units);
  const VectorXi t1 = VectorXi::Ones(n_units);
  MatrixXd u(n, n_units);
  for (int s = 0; s < samples; ++s) {
    for (Index i = 0; i < n_units; ++i)
      u.col(i) = row_streams[static_cast<std::size_t>(i)].normal_vector(n);
    MatrixXd z = reparam_sample(latent, u);
    est.mu0_hat += decode(params, z, t0).mean;
    est.mu1_hat += decode(params, z, t1).mean;
  }
  est.mu0_hat /= static_cast<double>(samples);
  est.mu1_hat /= static_cast<double>(samples);
  est.tau_hat = est.mu1_hat - est.mu0_hat;
  return est;
}

VectorXd ate(const EffectEstimate& est) {
  if (est.n_units() == 0) throw std::invalid_argument("ate: empty estimate");
  return est.tau_hat.rowwise().mean();
}

}  // namespace intact
