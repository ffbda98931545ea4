#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace intact {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

// Raised when a computation produces non-finite values.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised on malformed or missing input files.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Batched diagonal Gaussian: one distribution per column.
// var entries must be finite and nonnegative; ordinary model heads keep them
// >= var_floor > 0, the degenerate-prior configuration emits exact zeros.
struct DiagGaussian {
  MatrixXd mean;  // dim x batch
  MatrixXd var;   // dim x batch

  Index dim() const { return mean.rows(); }
  Index batch() const { return mean.cols(); }

  void check_valid() const {
    if (mean.rows() != var.rows() || mean.cols() != var.cols())
      throw std::invalid_argument("DiagGaussian: mean/var shape mismatch");
    if (!mean.allFinite())
      throw numeric_error("DiagGaussian: non-finite mean");
    if (!var.allFinite() || (var.array() < 0.0).any())
      throw numeric_error("DiagGaussian: variance not finite and nonnegative");
  }
};

enum class Split : int { train = 0, val = 1, test = 2 };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

// Observational data, one unit per column. Ground-truth fields are empty
// (0 columns) when unknown. For synthetic and IHDP data d = 1 and y has a
// single row; the model code supports general d.
struct Dataset {
  MatrixXd x;       // p x N covariates
  MatrixXd y;       // d x N factual outcomes (may be empty: covariates only)
  VectorXi t;       // N, values in {0, 1}
  MatrixXd y0, y1;  // d x N potential outcomes, optional
  MatrixXd mu0, mu1;  // d x N noiseless potential-outcome means, optional
  MatrixXd z_true;  // n x N latent ground truth, optional
  VectorXd w;       // N, iv-structure instrument source, optional
  std::vector<Split> split;  // size N when assigned, else empty

  Index n_units() const { return x.cols(); }
  Index cov_dim() const { return x.rows(); }
  bool has_outcomes() const { return y.cols() == x.cols() && y.rows() > 0; }

  std::vector<Index> indices_of(Split s) const {
    std::vector<Index> idx;
    for (Index i = 0; i < static_cast<Index>(split.size()); ++i)
      if (split[static_cast<std::size_t>(i)] == s) idx.push_back(i);
    return idx;
  }
};

namespace detail {
inline MatrixXd take_cols(const MatrixXd& m, const std::vector<Index>& idx) {
  if (m.cols() == 0) return m;
  MatrixXd out(m.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = m.col(idx[k]);
  return out;
}
}  // namespace detail

inline Dataset subset(const Dataset& d, const std::vector<Index>& idx) {
  Dataset out;
  out.x = detail::take_cols(d.x, idx);
  out.y = detail::take_cols(d.y, idx);
  out.y0 = detail::take_cols(d.y0, idx);
  out.y1 = detail::take_cols(d.y1, idx);
  out.mu0 = detail::take_cols(d.mu0, idx);
  out.mu1 = detail::take_cols(d.mu1, idx);
  out.z_true = detail::take_cols(d.z_true, idx);
  out.t.resize(static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.t[static_cast<Index>(k)] = d.t[idx[k]];
  if (d.w.size() > 0) {
    out.w.resize(static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out.w[static_cast<Index>(k)] = d.w[idx[k]];
  }
  if (!d.split.empty()) {
    out.split.reserve(idx.size());
    for (Index i : idx) out.split.push_back(d.split[static_cast<std::size_t>(i)]);
  }
  return out;
}

inline Dataset split_of(const Dataset& d, Split s) { return subset(d, d.indices_of(s)); }

inline Dataset concat_splits(const Dataset& d, Split a, Split b) {
  auto idx = d.indices_of(a);
  auto idx_b = d.indices_of(b);
  idx.insert(idx.end(), idx_b.begin(), idx_b.end());
  return subset(d, idx);
}

}  // namespace intact
