#include "intact/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "intact/rng.hpp"

namespace intact {

namespace {

// Coefficient scales for the random linear functions. The covariate ranges
// are narrow, so unit-scale coefficients would leave both the treatment
// logit and the latent mean h(x) nearly constant: assignment would be an
// almost-randomized trial and x a vacuous proxy of z. These scales keep the
// logit spread and the h-variation comparable to the latent noise at the
// benchmark noise levels.
constexpr double kLogitScale = 3.0;
constexpr double kLatentCoeffScale = 1.0;
constexpr Index kCovDim = 3;
constexpr int kPreSample = 100000;
constexpr int kMaxRedraws = 100;

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// z_center/z_scale standardize the latent marginal; they are folded into
// the first layer so the net sees an O(1) input and stays in the invertible
// regime of tanh (curvature without deep saturation) at any latent scale.
OutcomeFn make_outcome_fn(OutcomeFamily family, RandomStream& rs,
                          double z_center, double z_scale) {
  OutcomeFn f;
  if (family == OutcomeFamily::linear) {
    f.is_linear = true;
    f.a = rs.uniform(-1.0, 1.0);
    f.b = rs.uniform(-1.0, 1.0);
    return f;
  }
  // strictly monotone tanh net: positive weights, free biases, a positive
  // linear bypass, then an optional global sign flip
  f.is_linear = false;
  f.z_center = z_center;
  f.z_scale = z_scale;
  f.net = Mlp(1, {32, 32}, 1, Activation::tanh, 0);
  f.theta.resize(f.net.size());
  const auto& layers = f.net.layers();
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& l = layers[li];
    const bool first = li == 0;
    const double w_hi = first ? 0.8 : 2.0 / std::sqrt(static_cast<double>(l.in));
    const double b_hi = first ? 1.0 : 0.5;
    for (Index k = 0; k < l.in * l.out; ++k)
      f.theta[l.w_off + k] = rs.uniform(0.0, w_hi);
    for (Index k = 0; k < l.out; ++k)
      f.theta[l.b_off + k] = rs.uniform(-b_hi, b_hi);
  }
  f.skip = rs.uniform(1.2, 2.4);
  if (rs.bernoulli(0.5)) {
    const auto& last = layers.back();
    f.theta.segment(last.w_off, last.in * last.out + last.out) *= -1.0;
    f.skip = -f.skip;
  }
  // fold z -> (z - center) / scale into the first layer; the bypass applies
  // the same standardization through the stored center/scale
  const auto& l0 = layers.front();
  for (Index k = 0; k < l0.out; ++k) {
    double& w = f.theta[l0.w_off + k];
    f.theta[l0.b_off + k] -= w * z_center / z_scale;
    w /= z_scale;
  }
  return f;
}

VectorXd draw_linear_coeffs(RandomStream& rs, Index n_active, double scale,
                            double& intercept) {
  const double bound = scale / std::sqrt(static_cast<double>(n_active));
  VectorXd w(n_active);
  for (Index i = 0; i < n_active; ++i) w[i] = rs.uniform(-bound, bound);
  intercept = rs.uniform(-bound, bound);
  return w;
}

struct Draw {
  VectorXd x;  // 3
  double w = 0;
  double z = 0;
  double logit = 0;
};

// one unit through the structural equations, noise from rs in fixed order
Draw draw_unit(const DGPSpec& spec, RandomStream& rs) {
  Draw d;
  d.x.resize(kCovDim);
  for (Index i = 0; i < kCovDim; ++i)
    d.x[i] = spec.mu[i] + std::sqrt(spec.sigma[i]) * rs.normal();
  double h, k;
  if (spec.structure == Structure::iv) {
    d.w = spec.mu_w + std::sqrt(spec.sigma_w) * rs.normal();
    h = spec.h_w[0] * d.w + spec.h_b;
    k = spec.k_w[0] * d.w + spec.k_b;
  } else {
    h = spec.h_w.dot(d.x) + spec.h_b;
    k = spec.k_w.dot(d.x) + spec.k_b;
  }
  // variance beta * |k|: k is linear, so positivity comes from the absolute
  // value
  d.z = h + std::sqrt(spec.beta * std::abs(k)) * rs.normal();
  d.logit = spec.l_w.head(kCovDim).dot(d.x) + spec.l_w[kCovDim] * d.z + spec.l_b;
  return d;
}

}  // namespace

const char* structure_name(Structure s) {
  switch (s) {
    case Structure::unconfounded: return "unconfounded";
    case Structure::proxy: return "proxy";
    case Structure::iv: return "iv";
  }
  return "?";
}

const char* family_name(OutcomeFamily f) {
  return f == OutcomeFamily::linear ? "linear" : "nonlinear";
}

Structure structure_from_name(const std::string& name) {
  if (name == "unconfounded") return Structure::unconfounded;
  if (name == "proxy") return Structure::proxy;
  if (name == "iv") return Structure::iv;
  throw std::invalid_argument("unknown structure: " + name);
}

OutcomeFamily family_from_name(const std::string& name) {
  if (name == "linear") return OutcomeFamily::linear;
  if (name == "nonlinear") return OutcomeFamily::nonlinear;
  throw std::invalid_argument("unknown outcome family: " + name);
}

double OutcomeFn::operator()(double z) const {
  if (is_linear) return a * z + b;
  return net.forward(theta, MatrixXd::Constant(1, 1, z))(0, 0) +
         skip * (z - z_center) / z_scale;
}

VectorXd OutcomeFn::eval(const VectorXd& z) const {
  if (is_linear) return (a * z.array() + b).matrix();
  return net.forward(theta, z.transpose()).row(0).transpose() +
         (skip * (z.array() - z_center) / z_scale).matrix();
}

DGPSpec make_dgp(Structure structure, OutcomeFamily family, double alpha,
                 double beta, std::uint64_t seed) {
  if (alpha < 0.0 || alpha >= 1.0)
    throw std::invalid_argument("make_dgp: alpha must be in [0, 1)");
  if (beta <= 0.0) throw std::invalid_argument("make_dgp: beta must be > 0");

  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    const std::uint64_t sub = derive_seed(seed, "dgp", attempt);
    RandomStream rs(sub);

    DGPSpec spec;
    spec.structure = structure;
    spec.family = family;
    spec.alpha = alpha;
    spec.beta = beta;
    spec.seed = seed;
    spec.rejected_draws = attempt;

    spec.mu.resize(kCovDim);
    spec.sigma.resize(kCovDim);
    for (Index i = 0; i < kCovDim; ++i) {
      spec.mu[i] = rs.uniform(-0.2, 0.2);
      spec.sigma[i] = 0.2 * (1.0 - rs.uniform());  // in (0, 0.2]
    }
    if (structure == Structure::iv) {
      spec.mu_w = rs.uniform(-0.2, 0.2);
      spec.sigma_w = 0.2 * (1.0 - rs.uniform());
    }

    const Index latent_in = structure == Structure::iv ? 1 : kCovDim;
    spec.h_w = draw_linear_coeffs(rs, latent_in, kLatentCoeffScale, spec.h_b);
    spec.k_w = draw_linear_coeffs(rs, latent_in, kLatentCoeffScale, spec.k_b);

    // logit over (x1, x2, x3, z) with structural zeros per Figure-3 pattern
    spec.l_w = VectorXd::Zero(kCovDim + 1);
    double l_b = 0;
    switch (structure) {
      case Structure::unconfounded: {
        VectorXd w = draw_linear_coeffs(rs, kCovDim, kLogitScale, l_b);
        spec.l_w.head(kCovDim) = w;
        break;
      }
      case Structure::proxy: {
        VectorXd w = draw_linear_coeffs(rs, 1, kLogitScale, l_b);
        spec.l_w[kCovDim] = w[0];
        break;
      }
      case Structure::iv: {
        VectorXd w = draw_linear_coeffs(rs, kCovDim + 1, kLogitScale, l_b);
        spec.l_w = w;
        break;
      }
    }
    spec.l_b = l_b;

    // pre-sample the latent marginal and treatment rate
    RandomStream pre(derive_seed(sub, "pre-sample"));
    VectorXd zs(kPreSample);
    long treated = 0;
    for (int i = 0; i < kPreSample; ++i) {
      Draw d = draw_unit(spec, pre);
      zs[i] = d.z;
      if (pre.uniform() < logistic(d.logit)) ++treated;
    }
    auto var_of = [](const VectorXd& v) {
      return (v.array() - v.mean()).square().sum() /
             static_cast<double>(v.size() - 1);
    };
    const double z_center = zs.mean();
    const double z_scale = std::sqrt(std::max(var_of(zs), 1e-12));

    spec.f0 = make_outcome_fn(family, rs, z_center, z_scale);
    spec.f1 = make_outcome_fn(family, rs, z_center, z_scale);
    spec.c0 = var_of(spec.f0.eval(zs));
    spec.c1 = var_of(spec.f1.eval(zs));
    const double rate = static_cast<double>(treated) / kPreSample;

    if (rate > 0.05 && rate < 0.95 && spec.c0 >= 1e-6 && spec.c1 >= 1e-6)
      return spec;
  }
  throw std::runtime_error("make_dgp: no acceptable spec after " +
                           std::to_string(kMaxRedraws) + " redraws");
}

Dataset sample_dgp(const DGPSpec& spec, Index n, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("sample_dgp: n must be >= 3");
  RandomStream rs(derive_seed(seed, "sample"));

  Dataset data;
  data.x.resize(kCovDim, n);
  data.z_true.resize(1, n);
  data.t.resize(n);
  data.y.resize(1, n);
  data.y0.resize(1, n);
  data.y1.resize(1, n);
  if (spec.structure == Structure::iv) data.w.resize(n);

  const double sc0 = std::sqrt(spec.c0), sc1 = std::sqrt(spec.c1);
  for (Index i = 0; i < n; ++i) {
    Draw d = draw_unit(spec, rs);
    data.x.col(i) = d.x;
    if (spec.structure == Structure::iv) data.w[i] = d.w;
    data.z_true(0, i) = d.z;
    data.t[i] = rs.uniform() < logistic(d.logit) ? 1 : 0;
    // shared unit-level outcome noise for both potential outcomes; alpha
    // scales the noise draw directly (outcome noise variance alpha^2), which
    // keeps latent recovery feasible at the benchmark noise levels
    const double e = rs.normal();
    data.y0(0, i) = spec.f0(d.z) / sc0 + spec.alpha * e;
    data.y1(0, i) = spec.f1(d.z) / sc1 + spec.alpha * e;
    data.y(0, i) = data.t[i] == 0 ? data.y0(0, i) : data.y1(0, i);
  }

  const Index third = n / 3;
  data.split.resize(static_cast<std::size_t>(n), Split::train);
  for (Index i = n - 2 * third; i < n - third; ++i)
    data.split[static_cast<std::size_t>(i)] = Split::val;
  for (Index i = n - third; i < n; ++i)
    data.split[static_cast<std::size_t>(i)] = Split::test;
  return data;
}

namespace {

nlohmann::json outcome_to_json(const OutcomeFn& f) {
  nlohmann::json j;
  j["is_linear"] = f.is_linear;
  if (f.is_linear) {
    j["a"] = f.a;
    j["b"] = f.b;
  } else {
    j["hidden"] = std::vector<Index>{32, 32};
    j["theta"] = std::vector<double>(f.theta.data(),
                                     f.theta.data() + f.theta.size());
    j["skip"] = f.skip;
    j["z_center"] = f.z_center;
    j["z_scale"] = f.z_scale;
  }
  return j;
}

OutcomeFn outcome_from_json(const nlohmann::json& j) {
  OutcomeFn f;
  f.is_linear = j.at("is_linear").get<bool>();
  if (f.is_linear) {
    f.a = j.at("a").get<double>();
    f.b = j.at("b").get<double>();
  } else {
    auto hidden = j.at("hidden").get<std::vector<Index>>();
    f.net = Mlp(1, hidden, 1, Activation::tanh, 0);
    auto theta = j.at("theta").get<std::vector<double>>();
    if (static_cast<Index>(theta.size()) != f.net.size())
      throw io_error("outcome function parameter count mismatch");
    f.theta = Eigen::Map<VectorXd>(theta.data(),
                                   static_cast<Index>(theta.size()));
    f.skip = j.at("skip").get<double>();
    f.z_center = j.at("z_center").get<double>();
    f.z_scale = j.at("z_scale").get<double>();
  }
  return f;
}

std::vector<double> to_vec(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

std::string dgp_to_json(const DGPSpec& spec) {
  nlohmann::json j;
  j["kind"] = "dgp_spec";
  j["structure"] = structure_name(spec.structure);
  j["family"] = family_name(spec.family);
  j["alpha"] = spec.alpha;
  j["beta"] = spec.beta;
  j["seed"] = spec.seed;
  j["rejected_draws"] = spec.rejected_draws;
  j["mu"] = to_vec(spec.mu);
  j["sigma"] = to_vec(spec.sigma);
  j["mu_w"] = spec.mu_w;
  j["sigma_w"] = spec.sigma_w;
  j["h_w"] = to_vec(spec.h_w);
  j["h_b"] = spec.h_b;
  j["k_w"] = to_vec(spec.k_w);
  j["k_b"] = spec.k_b;
  j["l_w"] = to_vec(spec.l_w);
  j["l_b"] = spec.l_b;
  j["f0"] = outcome_to_json(spec.f0);
  j["f1"] = outcome_to_json(spec.f1);
  j["c0"] = spec.c0;
  j["c1"] = spec.c1;
  return j.dump(2);
}

DGPSpec dgp_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  DGPSpec spec;
  spec.structure = structure_from_name(j.at("structure").get<std::string>());
  spec.family = family_from_name(j.at("family").get<std::string>());
  spec.alpha = j.at("alpha").get<double>();
  spec.beta = j.at("beta").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  spec.rejected_draws = j.at("rejected_draws").get<int>();
  spec.mu = from_vec(j.at("mu").get<std::vector<double>>());
  spec.sigma = from_vec(j.at("sigma").get<std::vector<double>>());
  spec.mu_w = j.at("mu_w").get<double>();
  spec.sigma_w = j.at("sigma_w").get<double>();
  spec.h_w = from_vec(j.at("h_w").get<std::vector<double>>());
  spec.h_b = j.at("h_b").get<double>();
  spec.k_w = from_vec(j.at("k_w").get<std::vector<double>>());
  spec.k_b = j.at("k_b").get<double>();
  spec.l_w = from_vec(j.at("l_w").get<std::vector<double>>());
  spec.l_b = j.at("l_b").get<double>();
  spec.f0 = outcome_from_json(j.at("f0"));
  spec.f1 = outcome_from_json(j.at("f1"));
  spec.c0 = j.at("c0").get<double>();
  spec.c1 = j.at("c1").get<double>();
  return spec;
}

void write_synth_csv(const Dataset& data, const DGPSpec& spec,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("write_synth_csv: cannot open " + path);
  out.precision(17);
  const bool has_w = data.w.size() > 0;
  out << "x1,x2,x3," << (has_w ? "w," : "") << "z_true,t,y,y0,y1,split\n";
  for (Index i = 0; i < data.n_units(); ++i) {
    out << data.x(0, i) << ',' << data.x(1, i) << ',' << data.x(2, i) << ',';
    if (has_w) out << data.w[i] << ',';
    out << data.z_true(0, i) << ',' << data.t[i] << ',' << data.y(0, i) << ','
        << data.y0(0, i) << ',' << data.y1(0, i) << ','
        << split_name(data.split[static_cast<std::size_t>(i)]) << '\n';
  }
  std::ofstream sidecar(path + ".json");
  if (!sidecar) throw io_error("write_synth_csv: cannot open " + path + ".json");
  sidecar << dgp_to_json(spec) << '\n';
}

Dataset read_synth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("read_synth_csv: cannot open " + path);
  std::string header;
  std::getline(in, header);
  const bool has_w = header.find(",w,") != std::string::npos;

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) fields.push_back(cell);
    rows.push_back(std::move(fields));
  }

  const Index n = static_cast<Index>(rows.size());
  const std::size_t expected = has_w ? 10 : 9;
  Dataset data;
  data.x.resize(3, n);
  data.z_true.resize(1, n);
  data.t.resize(n);
  data.y.resize(1, n);
  data.y0.resize(1, n);
  data.y1.resize(1, n);
  if (has_w) data.w.resize(n);
  data.split.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto& f = rows[static_cast<std::size_t>(i)];
    if (f.size() != expected)
      throw io_error("read_synth_csv: malformed row in " + path);
    std::size_t c = 0;
    for (Index k = 0; k < 3; ++k) data.x(k, i) = std::stod(f[c++]);
    if (has_w) data.w[i] = std::stod(f[c++]);
    data.z_true(0, i) = std::stod(f[c++]);
    data.t[i] = std::stoi(f[c++]);
    data.y(0, i) = std::stod(f[c++]);
    data.y0(0, i) = std::stod(f[c++]);
    data.y1(0, i) = std::stod(f[c++]);
    const std::string& s = f[c++];
    data.split[static_cast<std::size_t>(i)] =
        s == "train" ? Split::train : (s == "val" ? Split::val : Split::test);
  }
  return data;
}

}  // namespace intact
