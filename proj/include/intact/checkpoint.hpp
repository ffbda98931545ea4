#pragma once

#include <string>

#include "intact/model.hpp"

namespace intact {

// Flat binary checkpoint, little-endian:
//   magic "IVCP", u32 version = 1
//   i64 latent_dim, outcome_dim, covariate_dim
//   u32 hidden-layer count, i64 widths...
//   u8 balanced_prior, separate_decoder_heads, learn_outcome_noise,
//      degenerate_prior
//   f64 outcome_var, var_floor
//   u32 net count; per net: u8 role, i64 offset, i64 size
//   i64 parameter count; f64 parameters
void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace intact
