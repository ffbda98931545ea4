#pragma once

#include <cstdint>
#include <string>
#include <tuple>

#include "intact/types.hpp"

namespace intact {

// One replication of the 747-subject, 25-covariate benchmark. x is 25 x 747
// (columns are units), mu0/mu1 are the noiseless potential-outcome means.
struct IHDPReplication {
  Dataset data;
  int rep_index = 0;
};

// Accepted layouts under archive_path:
//  - a single .npz with arrays x, t, yf, ycf, mu0, mu1; x is (747, 25) or
//    (747, 25, R), the outcome arrays (747,) or (747, R)
//  - a directory holding one <prefix>.train.npz / <prefix>.test.npz pair
//    (rows concatenated train-then-test per replication)
//  - a directory of rep_<index>.csv files with header
//    x1..x25,t,yf,ycf,mu0,mu1
int ihdp_replication_count(const std::string& archive_path);
IHDPReplication load_ihdp(const std::string& archive_path, int rep_index);

// Uniformly random 63:27:10 partition (471/202/74 rows).
void split_ihdp(Dataset& data, std::uint64_t seed);

// Outcome regeneration: mu0 = exp(a'(x + 0.5)), mu1 = a'x - o with a drawn
// from {0, .1, .2, .3, .4} with weights (.6, .1, .1, .1, .1) and o solved in
// closed form so the treated-group mean of mu1 - mu0 is 4; unit-variance
// Gaussian noise on both arms.
std::tuple<VectorXd, VectorXd, VectorXd, VectorXd> generate_ihdp_outcomes(
    const MatrixXd& x, const VectorXi& t, std::uint64_t seed);

// Self-contained surrogate archive in the single-.npz layout: fixed
// covariates (6 continuous, 19 binary) and confounded treatment shared by
// all replications, outcomes regenerated per replication.
void simulate_ihdp_archive(const std::string& path, int n_reps,
                           std::uint64_t seed);

}  // namespace intact
