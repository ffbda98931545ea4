#include "intact/metrics.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace intact {

namespace {

void check_lengths(const VectorXd& y0, const VectorXd& y1,
                   const VectorXd& tau_hat) {
  if (y0.size() == 0) throw std::invalid_argument("metrics: empty input");
  if (y0.size() != y1.size() || y0.size() != tau_hat.size())
    throw std::invalid_argument("metrics: length mismatch");
}

struct Ols {
  double a = 0, b = 0, r2 = 0;
};

Ols ols_fit(const VectorXd& zh, const VectorXd& zt) {
  const double n = static_cast<double>(zt.size());
  const double mx = zt.mean(), my = zh.mean();
  const double sxx = (zt.array() - mx).square().sum();
  if (sxx <= 0.0)
    throw numeric_error("affine_recovery: undefined fit, z_true has zero "
                        "variance in some group");
  const double sxy = ((zt.array() - mx) * (zh.array() - my)).sum();
  Ols f;
  f.a = sxy / sxx;
  f.b = my - f.a * mx;
  const double ss_tot = (zh.array() - my).square().sum();
  const double ss_res =
      (zh.array() - (f.a * zt.array() + f.b)).square().sum();
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res <= 1e-24 * n ? 1.0 : 0.0);
  return f;
}

VectorXd mask(const VectorXd& v, const VectorXi& t, int arm) {
  std::vector<double> vals;
  for (Index i = 0; i < t.size(); ++i)
    if (t[i] == arm) vals.push_back(v[i]);
  return Eigen::Map<VectorXd>(vals.data(), static_cast<Index>(vals.size()));
}

}  // namespace

double eps_ate(const VectorXd& y0, const VectorXd& y1,
               const VectorXd& tau_hat) {
  check_lengths(y0, y1, tau_hat);
  return std::abs((y1 - y0).mean() - tau_hat.mean());
}

double sqrt_pehe(const VectorXd& y0, const VectorXd& y1,
                 const VectorXd& tau_hat) {
  check_lengths(y0, y1, tau_hat);
  return std::sqrt(((y1 - y0) - tau_hat).array().square().mean());
}

AffineFit affine_recovery(const VectorXd& z_hat, const VectorXd& z_true,
                          const VectorXi& t) {
  if (z_hat.size() != z_true.size() || z_hat.size() != t.size())
    throw std::invalid_argument("affine_recovery: length mismatch");
  VectorXd zh0 = mask(z_hat, t, 0), zt0 = mask(z_true, t, 0);
  VectorXd zh1 = mask(z_hat, t, 1), zt1 = mask(z_true, t, 1);
  if (zh0.size() < 10 || zh1.size() < 10)
    throw std::invalid_argument(
        "affine_recovery: need at least 10 units per treatment group");

  AffineFit fit;
  Ols f0 = ols_fit(zh0, zt0);
  Ols f1 = ols_fit(zh1, zt1);
  Ols fp = ols_fit(z_hat, z_true);
  fit.a0 = f0.a; fit.b0 = f0.b; fit.r2_0 = f0.r2;
  fit.a1 = f1.a; fit.b1 = f1.b; fit.r2_1 = f1.r2;
  fit.a_pooled = fp.a; fit.b_pooled = fp.b; fit.r2_pooled = fp.r2;
  const double denom = std::max(std::abs(f0.a), std::abs(f1.a));
  fit.group_consistency = denom > 0.0 ? std::abs(f0.a - f1.a) / denom : 0.0;
  return fit;
}

std::vector<AffineFit> affine_recovery_multi(const MatrixXd& z_hat,
                                             const MatrixXd& z_true,
                                             const VectorXi& t) {
  if (z_hat.rows() != z_true.rows())
    throw std::invalid_argument("affine_recovery_multi: dimension mismatch");
  const Index n = z_hat.rows();
  // greedy matching by absolute pooled correlation
  std::vector<bool> claimed(static_cast<std::size_t>(n), false);
  std::vector<AffineFit> fits;
  for (Index i = 0; i < n; ++i) {
    VectorXd zh = z_hat.row(i).transpose();
    double best = -1.0;
    Index best_j = 0;
    for (Index j = 0; j < n; ++j) {
      if (claimed[static_cast<std::size_t>(j)]) continue;
      VectorXd zt = z_true.row(j).transpose();
      double sx = std::sqrt((zt.array() - zt.mean()).square().sum());
      double sy = std::sqrt((zh.array() - zh.mean()).square().sum());
      double c = sx > 0 && sy > 0
                     ? std::abs(((zt.array() - zt.mean()) *
                                 (zh.array() - zh.mean()))
                                    .sum()) /
                           (sx * sy)
                     : 0.0;
      if (c > best) {
        best = c;
        best_j = j;
      }
    }
    claimed[static_cast<std::size_t>(best_j)] = true;
    fits.push_back(
        affine_recovery(zh, z_true.row(best_j).transpose(), t));
  }
  return fits;
}

std::string EvalReport::to_json_string() const {
  nlohmann::json j;
  j["kind"] = "eval_report";
  j["eps_ate"] = eps_ate;
  j["sqrt_pehe"] = sqrt_pehe;
  j["mode"] = mode_name(mode);
  j["split"] = split;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  if (affine) {
    j["affine"] = {
        {"a0", affine->a0}, {"b0", affine->b0}, {"r2_0", affine->r2_0},
        {"a1", affine->a1}, {"b1", affine->b1}, {"r2_1", affine->r2_1},
        {"a_pooled", affine->a_pooled}, {"b_pooled", affine->b_pooled},
        {"r2_pooled", affine->r2_pooled},
        {"group_consistency", affine->group_consistency}};
  } else {
    j["affine"] = nullptr;
  }
  return j.dump();
}

std::string EvalReport::csv_header() {
  return "split,mode,eps_ate,sqrt_pehe,r2_pooled,group_consistency,seed,"
         "config_hash";
}

std::string EvalReport::csv_row() const {
  std::ostringstream os;
  os.precision(17);
  os << split << ',' << mode_name(mode) << ',' << eps_ate << ',' << sqrt_pehe
     << ',' << (affine ? affine->r2_pooled : std::nan("")) << ','
     << (affine ? affine->group_consistency : std::nan("")) << ',' << seed
     << ',' << config_hash;
  return os.str();
}

EvalReport evaluate_estimate(const EffectEstimate& est, const Dataset& truth,
                             const std::string& split_descriptor) {
  if (truth.y0.rows() != 1 || truth.y1.rows() != 1)
    throw std::invalid_argument(
        "evaluate_estimate: scalar potential-outcome truth required");
  VectorXd y0 = truth.y0.row(0).transpose();
  VectorXd y1 = truth.y1.row(0).transpose();
  VectorXd tau = est.tau_hat.row(0).transpose();
  EvalReport rep;
  rep.eps_ate = eps_ate(y0, y1, tau);
  rep.sqrt_pehe = sqrt_pehe(y0, y1, tau);
  rep.mode = est.mode;
  rep.split = split_descriptor;
  return rep;
}

}  // namespace intact
