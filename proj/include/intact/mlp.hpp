#pragma once

#include <vector>

#include <Eigen/Dense>

#include "intact/rng.hpp"
#include "intact/types.hpp"

namespace intact {

enum class Activation { relu, tanh };

struct MlpLayer {
  Index in, out;
  Index w_off, b_off;  // offsets into the owning flat parameter vector
};

// Feed-forward net with a linear output layer. Parameters live in a shared
// flat vector (column-major W then b per layer, starting at offset()), so the
// optimizer, finite-difference checks, and checkpoints all see one VectorXd.
// With no hidden layers this is an exact affine map.
class Mlp {
 public:
  Mlp() = default;
  Mlp(Index input_dim, const std::vector<Index>& hidden, Index output_dim,
      Activation act, Index offset);

  Index input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  Index output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  Index offset() const { return offset_; }
  Index size() const { return size_; }
  const std::vector<MlpLayer>& layers() const { return layers_; }
  Activation activation() const { return act_; }

  // Fan-in scaled uniform init, U(-1/sqrt(in), 1/sqrt(in)) for W and b.
  void init_params(VectorXd& theta, RandomStream& rs) const;

  // X: input_dim x B. Returns output_dim x B. When acts != nullptr the
  // post-activation of every layer (plus the input) is recorded for backward.
  MatrixXd forward(const VectorXd& theta, const MatrixXd& x,
                   std::vector<MatrixXd>* acts = nullptr) const;

  // d_out: gradient at the output (output_dim x B). Accumulates parameter
  // gradients into grad (same layout as theta) and returns the gradient at
  // the input when want_input_grad.
  MatrixXd backward(const VectorXd& theta, const std::vector<MatrixXd>& acts,
                    const MatrixXd& d_out, VectorXd& grad,
                    bool want_input_grad) const;

 private:
  std::vector<MlpLayer> layers_;
  Activation act_ = Activation::relu;
  Index offset_ = 0;
  Index size_ = 0;
};

inline Mlp::Mlp(Index input_dim, const std::vector<Index>& hidden,
                Index output_dim, Activation act, Index offset)
    : act_(act), offset_(offset) {
  Index prev = input_dim;
  Index off = offset;
  auto push = [&](Index in, Index out) {
    layers_.push_back({in, out, off, off + in * out});
    off += in * out + out;
  };
  for (Index h : hidden) {
    push(prev, h);
    prev = h;
  }
  push(prev, output_dim);
  size_ = off - offset;
}

inline void Mlp::init_params(VectorXd& theta, RandomStream& rs) const {
  for (const auto& l : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (Index k = 0; k < l.in * l.out + l.out; ++k)
      theta[l.w_off + k] = rs.uniform(-bound, bound);
  }
}

inline MatrixXd Mlp::forward(const VectorXd& theta, const MatrixXd& x,
                             std::vector<MatrixXd>* acts) const {
  if (x.rows() != input_dim())
    throw std::invalid_argument("Mlp::forward: input dimension mismatch");
  if (acts) {
    acts->clear();
    acts->push_back(x);
  }
  MatrixXd a = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    Eigen::Map<const MatrixXd> w(theta.data() + l.w_off, l.out, l.in);
    Eigen::Map<const VectorXd> b(theta.data() + l.b_off, l.out);
    MatrixXd z = (w * a).colwise() + b;
    if (k + 1 < layers_.size()) {
      if (act_ == Activation::relu)
        z = z.cwiseMax(0.0);
      else
        z = z.array().tanh().matrix();
    }
    a = std::move(z);
    if (acts) acts->push_back(a);
  }
  return a;
}

inline MatrixXd Mlp::backward(const VectorXd& theta,
                              const std::vector<MatrixXd>& acts,
                              const MatrixXd& d_out, VectorXd& grad,
                              bool want_input_grad) const {
  MatrixXd delta = d_out;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const auto& l = layers_[k];
    const MatrixXd& a_in = acts[k];
    if (k + 1 < layers_.size()) {
      // derivative through the activation, recovered from the post-activation
      const MatrixXd& a_out = acts[k + 1];
      if (act_ == Activation::relu)
        delta = (a_out.array() > 0.0).cast<double>() * delta.array();
      else
        delta = (1.0 - a_out.array().square()) * delta.array();
    }
    Eigen::Map<MatrixXd> dw(grad.data() + l.w_off, l.out, l.in);
    Eigen::Map<VectorXd> db(grad.data() + l.b_off, l.out);
    dw.noalias() += delta * a_in.transpose();
    db += delta.rowwise().sum();
    if (k > 0 || want_input_grad) {
      Eigen::Map<const MatrixXd> w(theta.data() + l.w_off, l.out, l.in);
      delta = (w.transpose() * delta).eval();
    }
  }
  return want_input_grad ? delta : MatrixXd();
}

}  // namespace intact
