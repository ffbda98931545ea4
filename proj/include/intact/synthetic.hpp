#pragma once

#include <cstdint>
#include <string>

#include "intact/mlp.hpp"
#include "intact/types.hpp"

namespace intact {

enum class Structure { unconfounded, proxy, iv };
enum class OutcomeFamily { linear, nonlinear };

const char* structure_name(Structure s);
const char* family_name(OutcomeFamily f);
Structure structure_from_name(const std::string& name);
OutcomeFamily family_from_name(const std::string& name);

// Frozen per-arm outcome function: random affine map, or a random-weight
// tanh network plus a linear bypass, strictly monotone in its scalar input
// (weights drawn positive, a shared optional sign flip). The bypass keeps
// the slope bounded away from zero so the outcome stays informative about
// the latent over its whole range.
struct OutcomeFn {
  bool is_linear = true;
  double a = 1.0, b = 0.0;  // linear case
  Mlp net;                  // nonlinear case, params in theta
  VectorXd theta;
  double skip = 0.0;            // bypass slope on the standardized input
  double z_center = 0.0, z_scale = 1.0;

  double operator()(double z) const;
  VectorXd eval(const VectorXd& z) const;
};

// A frozen synthetic data-generating process:
//   x ~ N(mu, diag(sigma^2));  z ~ N(h(.), beta |k(.)|);
//   t ~ Bern(logistic(l));     y_t = f_t(z)/sqrt(C_t) + sqrt(alpha) e
// The three structures differ in what h/k read (x, or the scalar source w
// for the iv structure) and in which l coefficients are structurally zero.
struct DGPSpec {
  Structure structure = Structure::unconfounded;
  OutcomeFamily family = OutcomeFamily::linear;
  double alpha = 0.2;  // outcome noise variance
  double beta = 0.2;   // latent noise scale
  std::uint64_t seed = 0;
  int rejected_draws = 0;  // degenerate candidates discarded before this one

  VectorXd mu, sigma;       // covariate moments (mean, variance), dim 3
  double mu_w = 0, sigma_w = 0.1;  // iv source moments (mean, variance)

  VectorXd h_w, k_w;  // latent mean/variance coefficients (over x, or w)
  double h_b = 0, k_b = 0;
  VectorXd l_w;  // logit coefficients over (x1, x2, x3, z); structural zeros
  double l_b = 0;

  OutcomeFn f0, f1;
  double c0 = 1.0, c1 = 1.0;  // normalization constants Var(f_t(z))

  Index cov_dim() const { return 3; }
};

// Draws a spec from the seed, estimating C_t and the treatment rate on a
// 1e5-point pre-sample; candidates with treatment rate outside (0.05, 0.95)
// or C_t < 1e-6 are discarded and redrawn from an incremented sub-seed.
DGPSpec make_dgp(Structure structure, OutcomeFamily family, double alpha,
                 double beta, std::uint64_t seed);

// n i.i.d. rows with both potential outcomes realized (shared unit-level
// outcome noise draw) and split labels assigned by thirds.
Dataset sample_dgp(const DGPSpec& spec, Index n, std::uint64_t seed);

// CSV columns x1,x2,x3,[w],z_true,t,y,y0,y1,split plus a JSON sidecar
// (path + ".json") holding every frozen number for exact replay.
void write_synth_csv(const Dataset& data, const DGPSpec& spec,
                     const std::string& path);
Dataset read_synth_csv(const std::string& path);

std::string dgp_to_json(const DGPSpec& spec);
DGPSpec dgp_from_json(const std::string& text);

}  // namespace intact
