#include "intact/model.hpp"

#include <cmath>
#include <string>

namespace intact {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

MatrixXd softplus(const MatrixXd& x) {
  return (x.array().max(0.0) + (-x.array().abs()).exp().log1p()).matrix();
}

MatrixXd sigmoid(const MatrixXd& x) {
  MatrixXd e = (-x.array().abs()).exp().matrix();
  MatrixXd out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i) {
      double ev = e(i, j);
      out(i, j) = x(i, j) >= 0.0 ? 1.0 / (1.0 + ev) : ev / (1.0 + ev);
    }
  return out;
}

void check_head_finite(const MatrixXd& m, NetRole role) {
  if (!m.allFinite())
    throw numeric_error(std::string("non-finite output from head ") +
                        net_role_name(role));
}

void check_t(const VectorXi& t) {
  for (Index i = 0; i < t.size(); ++i)
    if (t[i] != 0 && t[i] != 1)
      throw std::invalid_argument("treatment labels must be 0 or 1");
}

std::vector<Index> arm_indices(const VectorXi& t, int arm) {
  std::vector<Index> idx;
  for (Index i = 0; i < t.size(); ++i)
    if (t[i] == arm) idx.push_back(i);
  return idx;
}

MatrixXd gather_cols(const MatrixXd& m, const std::vector<Index>& idx) {
  MatrixXd out(m.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k)
    out.col(static_cast<Index>(k)) = m.col(idx[k]);
  return out;
}

void scatter_cols_add(MatrixXd& dst, const MatrixXd& src,
                      const std::vector<Index>& idx) {
  for (std::size_t k = 0; k < idx.size(); ++k)
    dst.col(idx[k]) += src.col(static_cast<Index>(k));
}

}  // namespace

void ModelConfig::validate() const {
  if (latent_dim < 1 || outcome_dim < 1 || covariate_dim < 1)
    throw std::invalid_argument("ModelConfig: dimensions must be >= 1");
  if (var_floor <= 0.0)
    throw std::invalid_argument("ModelConfig: var_floor must be > 0");
  if (!learn_outcome_noise && outcome_var <= 0.0)
    throw std::invalid_argument("ModelConfig: outcome_var must be > 0");
  if (init_prior_var <= var_floor || init_enc_var <= var_floor ||
      init_dec_var <= var_floor)
    throw std::invalid_argument(
        "ModelConfig: initial variances must exceed var_floor");
  for (Index h : hidden)
    if (h < 1) throw std::invalid_argument("ModelConfig: hidden width < 1");
}

const char* net_role_name(NetRole role) {
  switch (role) {
    case NetRole::prior_mean: return "prior_mean";
    case NetRole::prior_var: return "prior_var";
    case NetRole::dec_mean: return "dec_mean";
    case NetRole::dec_mean0: return "dec_mean0";
    case NetRole::dec_mean1: return "dec_mean1";
    case NetRole::dec_var: return "dec_var";
    case NetRole::dec_var0: return "dec_var0";
    case NetRole::dec_var1: return "dec_var1";
    case NetRole::enc_mean: return "enc_mean";
    case NetRole::enc_var: return "enc_var";
  }
  return "?";
}

bool ModelParams::has_net(NetRole role) const {
  for (const auto& [r, _] : nets)
    if (r == role) return true;
  return false;
}

const Mlp& ModelParams::net(NetRole role) const {
  for (const auto& [r, n] : nets)
    if (r == role) return n;
  throw std::logic_error(std::string("model has no ") + net_role_name(role) +
                         " net in this configuration");
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  const Index n = config.latent_dim;
  const Index d = config.outcome_dim;
  const Index prior_in =
      config.balanced_prior ? config.covariate_dim : config.covariate_dim + 1;
  const Index enc_in = config.covariate_dim + d + 1;

  Index off = 0;
  auto add = [&](NetRole role, Index in, Index out) {
    Mlp net(in, config.hidden, out, Activation::relu, off);
    off += net.size();
    p.nets.emplace_back(role, net);
  };

  add(NetRole::prior_mean, prior_in, n);
  if (!config.degenerate_prior) add(NetRole::prior_var, prior_in, n);
  if (config.separate_decoder_heads) {
    add(NetRole::dec_mean0, n, d);
    add(NetRole::dec_mean1, n, d);
    if (config.learn_outcome_noise) {
      add(NetRole::dec_var0, n, d);
      add(NetRole::dec_var1, n, d);
    }
  } else {
    add(NetRole::dec_mean, n + 1, d);
    if (config.learn_outcome_noise) add(NetRole::dec_var, n + 1, d);
  }
  if (!config.degenerate_prior) {
    add(NetRole::enc_mean, enc_in, n);
    add(NetRole::enc_var, enc_in, n);
  }

  p.theta.resize(off);
  for (std::size_t k = 0; k < p.nets.size(); ++k) {
    RandomStream rs(derive_seed(seed, "init", k));
    p.nets[k].second.init_params(p.theta, rs);
  }

  // Start the encoder as a function of the covariates alone: its (y, t)
  // first-layer columns are scaled near zero. The outcome coupling then
  // grows inside the covariate-anchored latent frame; with full-strength
  // (y, t) columns the two treatment arms bootstrap their latents off y
  // with independent orientations and can lock into mirrored per-arm
  // transforms that the balanced prior cannot undo.
  constexpr double kEncAuxInitScale = 0.3;
  for (NetRole role : {NetRole::enc_mean, NetRole::enc_var}) {
    if (!p.has_net(role)) continue;
    const auto& l0 = p.net(role).layers().front();
    Eigen::Map<MatrixXd> w(p.theta.data() + l0.w_off, l0.out, l0.in);
    w.rightCols(d + 1) *= kEncAuxInitScale;
  }

  // center each variance head's initial output at its configured level
  auto bias_var_head = [&](NetRole role, double target) {
    if (!p.has_net(role)) return;
    const double raw =
        std::log(std::expm1(std::max(target - config.var_floor, 1e-8)));
    const auto& last = p.net(role).layers().back();
    p.theta.segment(last.b_off, last.out).array() += raw;
  };
  bias_var_head(NetRole::prior_var, config.init_prior_var);
  bias_var_head(NetRole::enc_var, config.init_enc_var);
  bias_var_head(NetRole::dec_var, config.init_dec_var);
  bias_var_head(NetRole::dec_var0, config.init_dec_var);
  bias_var_head(NetRole::dec_var1, config.init_dec_var);
  return p;
}

MatrixXd with_treatment_row(const MatrixXd& m, const VectorXi& t) {
  if (m.cols() != t.size())
    throw std::invalid_argument("with_treatment_row: batch size mismatch");
  MatrixXd out(m.rows() + 1, m.cols());
  out.topRows(m.rows()) = m;
  for (Index i = 0; i < t.size(); ++i)
    out(m.rows(), i) = static_cast<double>(t[i]);
  return out;
}

MatrixXd variance_from_raw(const MatrixXd& raw, double var_floor) {
  return (softplus(raw).array() + var_floor).matrix();
}

DiagGaussian prior_params(const ModelParams& params, const MatrixXd& x,
                          const VectorXi& t) {
  const auto& cfg = params.config;
  if (x.rows() != cfg.covariate_dim)
    throw std::invalid_argument("prior_params: covariate dimension mismatch");
  check_t(t);
  const MatrixXd in = cfg.balanced_prior ? x : with_treatment_row(x, t);
  DiagGaussian g;
  g.mean = params.net(NetRole::prior_mean).forward(params.theta, in);
  check_head_finite(g.mean, NetRole::prior_mean);
  if (cfg.degenerate_prior) {
    g.var = MatrixXd::Zero(g.mean.rows(), g.mean.cols());
  } else {
    MatrixXd raw = params.net(NetRole::prior_var).forward(params.theta, in);
    check_head_finite(raw, NetRole::prior_var);
    g.var = variance_from_raw(raw, cfg.var_floor);
  }
  return g;
}

DiagGaussian encode(const ModelParams& params, const MatrixXd& x,
                    const MatrixXd& y, const VectorXi& t) {
  const auto& cfg = params.config;
  if (cfg.degenerate_prior)
    throw std::logic_error("encode: degenerate-prior model has no encoder");
  if (x.rows() != cfg.covariate_dim || y.rows() != cfg.outcome_dim ||
      x.cols() != y.cols())
    throw std::invalid_argument("encode: input shape mismatch");
  check_t(t);
  MatrixXd in(x.rows() + y.rows() + 1, x.cols());
  in.topRows(x.rows()) = x;
  in.middleRows(x.rows(), y.rows()) = y;
  for (Index i = 0; i < t.size(); ++i)
    in(x.rows() + y.rows(), i) = static_cast<double>(t[i]);
  DiagGaussian g;
  g.mean = params.net(NetRole::enc_mean).forward(params.theta, in);
  check_head_finite(g.mean, NetRole::enc_mean);
  MatrixXd raw = params.net(NetRole::enc_var).forward(params.theta, in);
  check_head_finite(raw, NetRole::enc_var);
  g.var = variance_from_raw(raw, cfg.var_floor);
  return g;
}

DiagGaussian decode(const ModelParams& params, const MatrixXd& z,
                    const VectorXi& t) {
  const auto& cfg = params.config;
  if (z.rows() != cfg.latent_dim)
    throw std::invalid_argument("decode: latent dimension mismatch");
  check_t(t);
  DiagGaussian g;
  if (cfg.separate_decoder_heads) {
    g.mean.resize(cfg.outcome_dim, z.cols());
    MatrixXd raw(cfg.outcome_dim, z.cols());
    for (int arm = 0; arm < 2; ++arm) {
      auto idx = arm_indices(t, arm);
      if (idx.empty()) continue;
      MatrixXd zin = gather_cols(z, idx);
      NetRole mean_role = arm == 0 ? NetRole::dec_mean0 : NetRole::dec_mean1;
      MatrixXd m = params.net(mean_role).forward(params.theta, zin);
      check_head_finite(m, mean_role);
      for (std::size_t k = 0; k < idx.size(); ++k)
        g.mean.col(idx[k]) = m.col(static_cast<Index>(k));
      if (cfg.learn_outcome_noise) {
        NetRole var_role = arm == 0 ? NetRole::dec_var0 : NetRole::dec_var1;
        MatrixXd r = params.net(var_role).forward(params.theta, zin);
        check_head_finite(r, var_role);
        for (std::size_t k = 0; k < idx.size(); ++k)
          raw.col(idx[k]) = r.col(static_cast<Index>(k));
      }
    }
    g.var = cfg.learn_outcome_noise
                ? variance_from_raw(raw, cfg.var_floor)
                : MatrixXd::Constant(cfg.outcome_dim, z.cols(), cfg.outcome_var);
  } else {
    const MatrixXd in = with_treatment_row(z, t);
    g.mean = params.net(NetRole::dec_mean).forward(params.theta, in);
    check_head_finite(g.mean, NetRole::dec_mean);
    if (cfg.learn_outcome_noise) {
      MatrixXd raw = params.net(NetRole::dec_var).forward(params.theta, in);
      check_head_finite(raw, NetRole::dec_var);
      g.var = variance_from_raw(raw, cfg.var_floor);
    } else {
      g.var = MatrixXd::Constant(cfg.outcome_dim, z.cols(), cfg.outcome_var);
    }
  }
  return g;
}

MatrixXd reparam_sample(const DiagGaussian& g, const MatrixXd& noise) {
  if (noise.rows() != g.mean.rows() || noise.cols() != g.mean.cols())
    throw std::invalid_argument("reparam_sample: noise shape mismatch");
  return g.mean + (g.var.array().sqrt() * noise.array()).matrix();
}

VectorXd gaussian_kl_cols(const DiagGaussian& q, const DiagGaussian& p) {
  if (q.mean.rows() != p.mean.rows() || q.mean.cols() != p.mean.cols())
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  if ((q.var.array() <= 0.0).any() || (p.var.array() <= 0.0).any())
    throw std::invalid_argument("gaussian_kl: variances must be positive");
  Eigen::ArrayXXd ratio = q.var.array() / p.var.array();
  Eigen::ArrayXXd dm2 = (q.mean - p.mean).array().square() / p.var.array();
  Eigen::ArrayXXd terms = 0.5 * (dm2 + ratio - 1.0 - ratio.log());
  return terms.colwise().sum().cwiseMax(0.0).transpose();
}

double gaussian_kl(const DiagGaussian& q, const DiagGaussian& p) {
  VectorXd kl = gaussian_kl_cols(q, p);
  if (kl.size() != 1)
    throw std::invalid_argument("gaussian_kl: expected batch size 1");
  return kl[0];
}

VectorXd gaussian_log_density_cols(const MatrixXd& y, const DiagGaussian& g) {
  if (y.rows() != g.mean.rows() || y.cols() != g.mean.cols())
    throw std::invalid_argument("gaussian_log_density: shape mismatch");
  Eigen::ArrayXXd terms = -0.5 * (kLog2Pi + g.var.array().log()) -
                          (y - g.mean).array().square() / (2.0 * g.var.array());
  return terms.colwise().sum().transpose();
}

namespace {

// Forward state of one variance head: raw output plus its activations.
struct VarHead {
  MatrixXd raw;
  std::vector<MatrixXd> acts;
};

// Shared implementation for elbo / elbo_with_grad. grad == nullptr computes
// the value only.
double elbo_core(const ModelParams& params, const MatrixXd& x,
                 const MatrixXd& y, const VectorXi& t, int num_samples,
                 std::uint64_t noise_seed, VectorXd* grad) {
  const auto& cfg = params.config;
  const Index batch = x.cols();
  if (batch == 0) throw std::invalid_argument("elbo: empty batch");
  if (num_samples < 1)
    throw std::invalid_argument("elbo: sample count must be >= 1");
  if (x.rows() != cfg.covariate_dim || y.rows() != cfg.outcome_dim ||
      y.cols() != batch || t.size() != batch)
    throw std::invalid_argument("elbo: input shape mismatch");
  check_t(t);

  const Index n = cfg.latent_dim;
  const double inv_b = 1.0 / static_cast<double>(batch);
  const double inv_bl = inv_b / static_cast<double>(num_samples);
  const bool want_grad = grad != nullptr;

  // --- prior forward
  const MatrixXd prior_in =
      cfg.balanced_prior ? x : with_treatment_row(x, t);
  std::vector<MatrixXd> h_acts;
  const Mlp& h_net = params.net(NetRole::prior_mean);
  MatrixXd m_p =
      h_net.forward(params.theta, prior_in, want_grad ? &h_acts : nullptr);
  check_head_finite(m_p, NetRole::prior_mean);

  VarHead k_head;
  MatrixXd v_p;
  if (!cfg.degenerate_prior) {
    const Mlp& k_net = params.net(NetRole::prior_var);
    k_head.raw = k_net.forward(params.theta, prior_in,
                               want_grad ? &k_head.acts : nullptr);
    check_head_finite(k_head.raw, NetRole::prior_var);
    v_p = variance_from_raw(k_head.raw, cfg.var_floor);
  }

  // --- encoder forward (absent in the degenerate configuration)
  MatrixXd m_q, v_q;
  VarHead s_head;
  std::vector<MatrixXd> r_acts;
  MatrixXd enc_in;
  if (!cfg.degenerate_prior) {
    enc_in.resize(x.rows() + y.rows() + 1, batch);
    enc_in.topRows(x.rows()) = x;
    enc_in.middleRows(x.rows(), y.rows()) = y;
    for (Index i = 0; i < batch; ++i)
      enc_in(x.rows() + y.rows(), i) = static_cast<double>(t[i]);
    const Mlp& r_net = params.net(NetRole::enc_mean);
    m_q = r_net.forward(params.theta, enc_in, want_grad ? &r_acts : nullptr);
    check_head_finite(m_q, NetRole::enc_mean);
    const Mlp& s_net = params.net(NetRole::enc_var);
    s_head.raw = s_net.forward(params.theta, enc_in,
                               want_grad ? &s_head.acts : nullptr);
    check_head_finite(s_head.raw, NetRole::enc_var);
    v_q = variance_from_raw(s_head.raw, cfg.var_floor);
  }

  const std::vector<Index> idx0 = arm_indices(t, 0);
  const std::vector<Index> idx1 = arm_indices(t, 1);

  RandomStream noise(noise_seed);
  VectorXd recon_sum = VectorXd::Zero(batch);
  MatrixXd d_mq = MatrixXd::Zero(n, batch);  // accumulated d(obj)/d m_q
  MatrixXd d_vq = MatrixXd::Zero(n, batch);  // accumulated d(obj)/d v_q
  MatrixXd d_h = MatrixXd::Zero(n, batch);   // d(obj)/d m_p via decoder input
                                             // (degenerate configuration)

  const int draws = cfg.degenerate_prior ? 1 : num_samples;
  MatrixXd sqrt_vq;
  if (!cfg.degenerate_prior) sqrt_vq = v_q.array().sqrt().matrix();

  for (int ell = 0; ell < draws; ++ell) {
    MatrixXd u, z;
    if (cfg.degenerate_prior) {
      z = m_p;  // prior collapses to a point mass at h
    } else {
      u = noise.normal_matrix(n, batch);
      z = m_q + (sqrt_vq.array() * u.array()).matrix();
    }

    // decoder forward, routed per arm for separate heads
    MatrixXd m_d(cfg.outcome_dim, batch);
    MatrixXd v_d(cfg.outcome_dim, batch);
    VarHead g_shared;
    std::vector<MatrixXd> f_acts;
    // per-arm tapes for the separate-heads path
    std::vector<MatrixXd> f_acts_arm[2], g_acts_arm[2];
    MatrixXd g_raw_arm[2];

    if (cfg.separate_decoder_heads) {
      for (int arm = 0; arm < 2; ++arm) {
        const auto& idx = arm == 0 ? idx0 : idx1;
        if (idx.empty()) continue;
        MatrixXd zin = gather_cols(z, idx);
        NetRole mr = arm == 0 ? NetRole::dec_mean0 : NetRole::dec_mean1;
        MatrixXd m = params.net(mr).forward(
            params.theta, zin, want_grad ? &f_acts_arm[arm] : nullptr);
        check_head_finite(m, mr);
        for (std::size_t kk = 0; kk < idx.size(); ++kk)
          m_d.col(idx[kk]) = m.col(static_cast<Index>(kk));
        if (cfg.learn_outcome_noise) {
          NetRole vr = arm == 0 ? NetRole::dec_var0 : NetRole::dec_var1;
          g_raw_arm[arm] = params.net(vr).forward(
              params.theta, zin, want_grad ? &g_acts_arm[arm] : nullptr);
          check_head_finite(g_raw_arm[arm], vr);
          MatrixXd v = variance_from_raw(g_raw_arm[arm], cfg.var_floor);
          for (std::size_t kk = 0; kk < idx.size(); ++kk)
            v_d.col(idx[kk]) = v.col(static_cast<Index>(kk));
        }
      }
      if (!cfg.learn_outcome_noise) v_d.setConstant(cfg.outcome_var);
    } else {
      MatrixXd dec_in = with_treatment_row(z, t);
      m_d = params.net(NetRole::dec_mean)
                .forward(params.theta, dec_in, want_grad ? &f_acts : nullptr);
      check_head_finite(m_d, NetRole::dec_mean);
      if (cfg.learn_outcome_noise) {
        g_shared.raw = params.net(NetRole::dec_var)
                           .forward(params.theta, dec_in,
                                    want_grad ? &g_shared.acts : nullptr);
        check_head_finite(g_shared.raw, NetRole::dec_var);
        v_d = variance_from_raw(g_shared.raw, cfg.var_floor);
      } else {
        v_d.setConstant(cfg.outcome_var);
      }
    }

    Eigen::ArrayXXd resid = (y - m_d).array();
    Eigen::ArrayXXd ll_terms =
        -0.5 * (kLog2Pi + v_d.array().log()) -
        resid.square() / (2.0 * v_d.array());
    VectorXd ll = ll_terms.colwise().sum().transpose();
    for (Index i = 0; i < batch; ++i)
      if (!std::isfinite(ll[i]))
        throw numeric_error("elbo: non-finite log-likelihood at batch index " +
                            std::to_string(i));
    recon_sum += ll;

    if (want_grad) {
      // d(obj)/d m_d and d(obj)/d v_d, already scaled by 1/(B*L)
      MatrixXd d_md = (resid / v_d.array() * inv_bl).matrix();
      MatrixXd d_vd;
      if (cfg.learn_outcome_noise)
        d_vd = ((-0.5 / v_d.array() +
                 resid.square() / (2.0 * v_d.array().square())) *
                inv_bl)
                   .matrix();

      MatrixXd d_z = MatrixXd::Zero(n, batch);
      if (cfg.separate_decoder_heads) {
        for (int arm = 0; arm < 2; ++arm) {
          const auto& idx = arm == 0 ? idx0 : idx1;
          if (idx.empty()) continue;
          NetRole mr = arm == 0 ? NetRole::dec_mean0 : NetRole::dec_mean1;
          MatrixXd din = params.net(mr).backward(
              params.theta, f_acts_arm[arm], gather_cols(d_md, idx), *grad,
              true);
          scatter_cols_add(d_z, din, idx);
          if (cfg.learn_outcome_noise) {
            NetRole vr = arm == 0 ? NetRole::dec_var0 : NetRole::dec_var1;
            MatrixXd d_raw =
                (gather_cols(d_vd, idx).array() *
                 sigmoid(g_raw_arm[arm]).array())
                    .matrix();
            MatrixXd din_v = params.net(vr).backward(
                params.theta, g_acts_arm[arm], d_raw, *grad, true);
            scatter_cols_add(d_z, din_v, idx);
          }
        }
      } else {
        MatrixXd din = params.net(NetRole::dec_mean)
                           .backward(params.theta, f_acts, d_md, *grad, true);
        d_z += din.topRows(n);
        if (cfg.learn_outcome_noise) {
          MatrixXd d_raw =
              (d_vd.array() * sigmoid(g_shared.raw).array()).matrix();
          MatrixXd din_v =
              params.net(NetRole::dec_var)
                  .backward(params.theta, g_shared.acts, d_raw, *grad, true);
          d_z += din_v.topRows(n);
        }
      }

      if (cfg.degenerate_prior) {
        d_h += d_z;
      } else {
        d_mq += d_z;
        d_vq += (d_z.array() * u.array() / (2.0 * sqrt_vq.array())).matrix();
      }
    }
  }

  double value =
      recon_sum.sum() * (cfg.degenerate_prior ? inv_b : inv_bl);

  if (!cfg.degenerate_prior) {
    DiagGaussian q{m_q, v_q};
    DiagGaussian p{m_p, v_p};
    VectorXd kl = gaussian_kl_cols(q, p);
    for (Index i = 0; i < batch; ++i)
      if (!std::isfinite(kl[i]))
        throw numeric_error("elbo: non-finite KL at batch index " +
                            std::to_string(i));
    value -= kl.sum() * inv_b;

    if (want_grad) {
      Eigen::ArrayXXd dm = (m_q - m_p).array();
      // objective includes -KL
      MatrixXd d_mq_kl = (-dm / v_p.array() * inv_b).matrix();
      MatrixXd d_vq_kl =
          (-0.5 * (1.0 / v_p.array() - 1.0 / v_q.array()) * inv_b).matrix();
      MatrixXd d_mp_kl = (dm / v_p.array() * inv_b).matrix();
      MatrixXd d_vp_kl =
          (-0.5 *
           (1.0 / v_p.array() -
            (v_q.array() + dm.square()) / v_p.array().square()) *
           inv_b)
              .matrix();

      d_mq += d_mq_kl;
      d_vq += d_vq_kl;

      // encoder backward
      params.net(NetRole::enc_mean)
          .backward(params.theta, r_acts, d_mq, *grad, false);
      MatrixXd d_sraw = (d_vq.array() * sigmoid(s_head.raw).array()).matrix();
      params.net(NetRole::enc_var)
          .backward(params.theta, s_head.acts, d_sraw, *grad, false);

      // prior backward
      params.net(NetRole::prior_mean)
          .backward(params.theta, h_acts, d_mp_kl, *grad, false);
      MatrixXd d_kraw =
          (d_vp_kl.array() * sigmoid(k_head.raw).array()).matrix();
      params.net(NetRole::prior_var)
          .backward(params.theta, k_head.acts, d_kraw, *grad, false);
    }
  } else if (want_grad) {
    params.net(NetRole::prior_mean)
        .backward(params.theta, h_acts, d_h, *grad, false);
  }

  if (!std::isfinite(value)) throw numeric_error("elbo: non-finite value");
  return value;
}

}  // namespace

double elbo(const ModelParams& params, const MatrixXd& x, const MatrixXd& y,
            const VectorXi& t, int num_samples, std::uint64_t noise_seed) {
  return elbo_core(params, x, y, t, num_samples, noise_seed, nullptr);
}

double elbo(const ModelParams& params, const Dataset& batch, int num_samples,
            std::uint64_t noise_seed) {
  return elbo_core(params, batch.x, batch.y, batch.t, num_samples, noise_seed,
                   nullptr);
}

double elbo_with_grad(const ModelParams& params, const MatrixXd& x,
                      const MatrixXd& y, const VectorXi& t, int num_samples,
                      std::uint64_t noise_seed, VectorXd& grad) {
  if (grad.size() != params.theta.size())
    throw std::invalid_argument("elbo_with_grad: grad vector size mismatch");
  return elbo_core(params, x, y, t, num_samples, noise_seed, &grad);
}

}  // namespace intact
