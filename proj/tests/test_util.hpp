// Shared helpers for constructing models with hand-set weights.
#pragma once

#include <doctest.h>

#include "intact/model.hpp"
#include "intact/rng.hpp"

namespace test_util {

using namespace intact;

inline void zero_net(ModelParams& p, NetRole role) {
  const Mlp& net = p.net(role);
  p.theta.segment(net.offset(), net.size()).setZero();
}

inline void zero_final_layer(ModelParams& p, NetRole role) {
  const auto& l = p.net(role).layers().back();
  p.theta.segment(l.w_off, l.in * l.out + l.out).setZero();
}

// Set an affine (no-hidden-layer) net to x -> w^T x + b. w is laid out
// column-major as (out x in).
inline void set_affine(ModelParams& p, NetRole role, const MatrixXd& w,
                       const VectorXd& b) {
  const Mlp& net = p.net(role);
  REQUIRE(net.layers().size() == 1);
  const auto& l = net.layers()[0];
  REQUIRE(l.in == w.cols());
  REQUIRE(l.out == w.rows());
  Eigen::Map<MatrixXd>(p.theta.data() + l.w_off, l.out, l.in) = w;
  Eigen::Map<VectorXd>(p.theta.data() + l.b_off, l.out) = b;
}

// Raw variance-head output that produces an exact target variance:
// softplus(raw) = target - floor  =>  raw = log(exp(target - floor) - 1)
inline double raw_for_variance(double target, double var_floor) {
  return std::log(std::expm1(target - var_floor));
}

// Copy the weights of src (inputs: p) into dst (inputs: p + extra), zeroing
// the columns for the extra inputs. Hidden shapes must match. Used to force
// the encoder to reproduce the prior while ignoring (y, t).
inline void copy_net_ignoring_extra_inputs(ModelParams& p, NetRole src_role,
                                           NetRole dst_role) {
  const Mlp& src = p.net(src_role);
  const Mlp& dst = p.net(dst_role);
  REQUIRE(src.layers().size() == dst.layers().size());
  for (std::size_t k = 0; k < src.layers().size(); ++k) {
    const auto& ls = src.layers()[k];
    const auto& ld = dst.layers()[k];
    REQUIRE(ls.out == ld.out);
    Eigen::Map<const MatrixXd> ws(p.theta.data() + ls.w_off, ls.out, ls.in);
    Eigen::Map<MatrixXd> wd(p.theta.data() + ld.w_off, ld.out, ld.in);
    wd.setZero();
    wd.leftCols(ls.in) = ws;
    Eigen::Map<const VectorXd> bs(p.theta.data() + ls.b_off, ls.out);
    Eigen::Map<VectorXd> bd(p.theta.data() + ld.b_off, ld.out);
    bd = bs;
  }
}

inline MatrixXd random_matrix(Index rows, Index cols, std::uint64_t seed,
                              double scale = 1.0) {
  RandomStream rs(seed);
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * rs.normal();
  return m;
}

inline VectorXi random_treatments(Index n, std::uint64_t seed, double p1 = 0.5) {
  RandomStream rs(seed);
  VectorXi t(n);
  for (Index i = 0; i < n; ++i) t[i] = rs.bernoulli(p1) ? 1 : 0;
  return t;
}

}  // namespace test_util
