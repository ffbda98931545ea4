#pragma once

#include <string>
#include <vector>

#include "intact/model.hpp"
#include "intact/record.hpp"
#include "intact/synthetic.hpp"
#include "intact/train.hpp"

namespace intact {

// A full sweep description. Per-run seeds are derived from master_seed and
// the run coordinates by chained counter hashes, so any subset of a sweep
// replays bit-identically.
struct ExperimentConfig {
  ModelConfig model;       // covariate_dim is set per suite
  TrainConfig train_cfg;
  int eval_samples = 100;  // S for effect estimation
  bool standardize_y = true;  // z-score outcomes on the training split

  // synthetic sweep
  std::vector<Structure> structures = {Structure::unconfounded,
                                       Structure::proxy, Structure::iv};
  std::vector<OutcomeFamily> families = {OutcomeFamily::nonlinear};
  std::vector<std::pair<double, double>> noise_points = {{0.2, 0.2}};
  int n_dgps = 10;
  Index n_samples = 1500;
  bool store_scatter = true;
  bool normalize_ate = false;  // rescale outcomes so the per-noise-point ATE
                               // sample has unit standard deviation

  // ihdp sweep
  std::string ihdp_path;  // falls back to the IHDP_DATA environment variable
  int ihdp_first_rep = 0;
  int ihdp_reps = 100;
  std::vector<std::string> ihdp_arms = {"plain", "modified"};
  double modified_gamma = 1.0;

  // verification experiments
  double ident_alpha = 0.05, ident_beta = 0.05;
  int ident_dgps = 2;
  double ident_r2_threshold = 0.9;
  bool contrast_conditional_prior = true;
  int thm3_samples = 10000;
  std::string thm3_case = "linear";  // linear | null

  std::uint64_t master_seed = 1;
  int threads = 0;  // 0: hardware concurrency

  nlohmann::json to_json() const;
  std::string hash() const { return config_hash_of(to_json()); }
};

// One record per (structure, family, noise point, DGP). Pre-treatment
// metrics on the test split, post-treatment on train+validation; both carry
// affine latent-recovery fits. Individual failures are recorded, never
// propagated.
std::vector<RunRecord> run_synthetic_suite(const ExperimentConfig& cfg);

// One record per (replication, arm). plain: shared decoder head, no
// balancing. modified: separate decoder heads plus the Sinkhorn penalty.
std::vector<RunRecord> run_ihdp_suite(const ExperimentConfig& cfg);

// Trains two differently-initialized models per DGP on identical low-noise
// data (plus a t-conditional prior arm when configured) and reports latent
// recovery and the cross-model affine fit between learned prior means.
struct IdentResult {
  std::vector<RunRecord> records;
  nlohmann::json report;
};
IdentResult verify_identifiability(const ExperimentConfig& cfg);

// Score-matching configuration (degenerate prior, fixed outcome noise,
// n = d = 1) against an analytic truth with an injectively separated
// conditional mean; reports recovery of the score and the CATE error.
nlohmann::json verify_theorem3(const ExperimentConfig& cfg);

// Shared single-run building block used by the suites. outcome_scale
// rescales y, y0, y1 after sampling (the cross-model ATE normalization).
RunRecord run_one_synthetic(const ExperimentConfig& cfg, Structure structure,
                            OutcomeFamily family, double alpha, double beta,
                            int dgp_index, double outcome_scale = 1.0);

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

std::string resolve_ihdp_path(const ExperimentConfig& cfg);

}  // namespace intact
