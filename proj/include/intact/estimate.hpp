#pragma once

#include <cstdint>

#include "intact/model.hpp"
#include "intact/types.hpp"

namespace intact {

enum class EstimateMode { pre, post };

inline const char* mode_name(EstimateMode m) {
  return m == EstimateMode::pre ? "pre" : "post";
}

struct EffectEstimate {
  MatrixXd mu0_hat;  // d x N
  MatrixXd mu1_hat;  // d x N
  MatrixXd tau_hat;  // d x N, always mu1_hat - mu0_hat
  EstimateMode mode = EstimateMode::pre;
  int samples_used = 0;

  Index n_units() const { return tau_hat.cols(); }
};

// Potential-outcome means per unit. post mode: S latents from the encoder at
// the factual (x, y, t), decoded under both arms. pre mode: S latents from
// the conditional prior at x alone. Latent noise comes from per-row
// substreams derived from (noise_seed, row), so results are independent of
// any surrounding parallelism.
EffectEstimate estimate_effects(const ModelParams& params, const Dataset& data,
                                EstimateMode mode, int samples,
                                std::uint64_t noise_seed);

// sample-mean CATE, i.e. the ATE estimate (one value per outcome dimension)
VectorXd ate(const EffectEstimate& est);

}  // namespace intact
