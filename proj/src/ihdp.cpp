#include "intact/ihdp.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "intact/npz.hpp"
#include "intact/rng.hpp"

namespace fs = std::filesystem;

namespace intact {

namespace {

constexpr Index kRows = 747;
constexpr Index kCovs = 25;
const char* kSchemaMsg =
    " (expected arrays x, t, yf, ycf, mu0, mu1 with 747 rows and 25 "
    "covariate columns, or rep_<i>.csv files with header "
    "x1..x25,t,yf,ycf,mu0,mu1)";

const NpyArray& need(const std::map<std::string, NpyArray>& m,
                     const std::string& key, const std::string& path) {
  auto it = m.find(key);
  if (it == m.end())
    throw io_error("ihdp: " + path + " lacks array '" + key + "'" + kSchemaMsg);
  return it->second;
}

int reps_of(const std::map<std::string, NpyArray>& m, const std::string& path) {
  const NpyArray& x = need(m, "x", path);
  if (x.ndim() == 3) return static_cast<int>(x.shape[2]);
  if (x.ndim() == 2) {
    const NpyArray& yf = need(m, "yf", path);
    return yf.ndim() == 2 ? static_cast<int>(yf.shape[1]) : 1;
  }
  throw io_error("ihdp: array 'x' in " + path + " has unexpected rank" +
                 kSchemaMsg);
}

double vec_at(const NpyArray& a, Index row, int rep, const std::string& path) {
  if (a.ndim() == 1) return a.element({row});
  if (a.ndim() == 2) return a.element({row, rep});
  throw io_error("ihdp: outcome array in " + path + " has unexpected rank" +
                 kSchemaMsg);
}

// rows from one npz member set at one replication index
Dataset dataset_from_arrays(const std::map<std::string, NpyArray>& m, int rep,
                            const std::string& path) {
  const NpyArray& x = need(m, "x", path);
  const Index rows = x.shape[0];
  const Index covs = x.shape[1];
  Dataset d;
  d.x.resize(covs, rows);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < covs; ++j)
      d.x(j, i) = x.ndim() == 3 ? x.element({i, j, rep}) : x.element({i, j});

  const NpyArray& t = need(m, "t", path);
  const NpyArray& yf = need(m, "yf", path);
  const NpyArray& ycf = need(m, "ycf", path);
  const NpyArray& mu0 = need(m, "mu0", path);
  const NpyArray& mu1 = need(m, "mu1", path);
  d.t.resize(rows);
  d.y.resize(1, rows);
  d.y0.resize(1, rows);
  d.y1.resize(1, rows);
  d.mu0.resize(1, rows);
  d.mu1.resize(1, rows);
  for (Index i = 0; i < rows; ++i) {
    d.t[i] = vec_at(t, i, rep, path) > 0.5 ? 1 : 0;
    const double f = vec_at(yf, i, rep, path);
    const double cf = vec_at(ycf, i, rep, path);
    d.y(0, i) = f;
    d.y0(0, i) = d.t[i] == 0 ? f : cf;
    d.y1(0, i) = d.t[i] == 1 ? f : cf;
    d.mu0(0, i) = vec_at(mu0, i, rep, path);
    d.mu1(0, i) = vec_at(mu1, i, rep, path);
  }
  return d;
}

Dataset concat_rows(const Dataset& a, const Dataset& b) {
  Dataset d;
  const Index n = a.n_units() + b.n_units();
  d.x.resize(a.x.rows(), n);
  d.x << a.x, b.x;
  d.t.resize(n);
  d.t << a.t, b.t;
  d.y.resize(1, n);
  d.y << a.y, b.y;
  d.y0.resize(1, n);
  d.y0 << a.y0, b.y0;
  d.y1.resize(1, n);
  d.y1 << a.y1, b.y1;
  d.mu0.resize(1, n);
  d.mu0 << a.mu0, b.mu0;
  d.mu1.resize(1, n);
  d.mu1 << a.mu1, b.mu1;
  return d;
}

struct Layout {
  enum Kind { single_npz, npz_pair, csv_dir } kind;
  std::string primary;  // npz path, train npz, or directory
  std::string secondary;
};

Layout detect_layout(const std::string& archive_path) {
  fs::path p(archive_path);
  if (!fs::exists(p))
    throw io_error("ihdp: " + archive_path + " does not exist" + kSchemaMsg);
  if (fs::is_regular_file(p)) {
    if (p.extension() == ".npz") return {Layout::single_npz, archive_path, ""};
    throw io_error("ihdp: " + archive_path + " is not a .npz archive" +
                   kSchemaMsg);
  }
  std::string train, test;
  int n_csv = 0;
  for (const auto& e : fs::directory_iterator(p)) {
    const std::string name = e.path().filename().string();
    if (name.size() > 10 && name.substr(name.size() - 10) == ".train.npz")
      train = e.path().string();
    if (name.size() > 9 && name.substr(name.size() - 9) == ".test.npz")
      test = e.path().string();
    if (name.rfind("rep_", 0) == 0 && e.path().extension() == ".csv") ++n_csv;
  }
  if (!train.empty() && !test.empty()) return {Layout::npz_pair, train, test};
  if (n_csv > 0) return {Layout::csv_dir, archive_path, ""};
  throw io_error("ihdp: no recognized archive under " + archive_path +
                 kSchemaMsg);
}

Dataset load_csv_rep(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw io_error("ihdp: cannot open " + file);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::array<double, 30>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 30> vals{};
    std::stringstream ss(line);
    std::string cell;
    int c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= 30) break;
      vals[static_cast<std::size_t>(c++)] = std::stod(cell);
    }
    if (c != 30)
      throw io_error("ihdp: malformed row in " + file + kSchemaMsg);
    rows.push_back(vals);
  }
  const Index n = static_cast<Index>(rows.size());
  Dataset d;
  d.x.resize(kCovs, n);
  d.t.resize(n);
  d.y.resize(1, n);
  d.y0.resize(1, n);
  d.y1.resize(1, n);
  d.mu0.resize(1, n);
  d.mu1.resize(1, n);
  for (Index i = 0; i < n; ++i) {
    const auto& v = rows[static_cast<std::size_t>(i)];
    for (Index j = 0; j < kCovs; ++j) d.x(j, i) = v[static_cast<std::size_t>(j)];
    d.t[i] = v[25] > 0.5 ? 1 : 0;
    const double f = v[26], cf = v[27];
    d.y(0, i) = f;
    d.y0(0, i) = d.t[i] == 0 ? f : cf;
    d.y1(0, i) = d.t[i] == 1 ? f : cf;
    d.mu0(0, i) = v[28];
    d.mu1(0, i) = v[29];
  }
  return d;
}

void check_shape(const Dataset& d, const std::string& path) {
  if (d.n_units() != kRows || d.cov_dim() != kCovs)
    throw io_error("ihdp: " + path + " holds " + std::to_string(d.n_units()) +
                   " rows x " + std::to_string(d.cov_dim()) +
                   " covariates" + kSchemaMsg);
}

}  // namespace

int ihdp_replication_count(const std::string& archive_path) {
  Layout layout = detect_layout(archive_path);
  switch (layout.kind) {
    case Layout::single_npz:
      return reps_of(read_npz(layout.primary), layout.primary);
    case Layout::npz_pair:
      return reps_of(read_npz(layout.primary), layout.primary);
    case Layout::csv_dir: {
      int count = 0;
      while (fs::exists(fs::path(layout.primary) /
                        ("rep_" + std::to_string(count) + ".csv")))
        ++count;
      return count;
    }
  }
  return 0;
}

IHDPReplication load_ihdp(const std::string& archive_path, int rep_index) {
  if (rep_index < 0)
    throw std::invalid_argument("load_ihdp: negative replication index");
  Layout layout = detect_layout(archive_path);

  IHDPReplication rep;
  rep.rep_index = rep_index;
  switch (layout.kind) {
    case Layout::single_npz: {
      auto arrays = read_npz(layout.primary);
      if (rep_index >= reps_of(arrays, layout.primary))
        throw std::invalid_argument("load_ihdp: replication index out of range");
      rep.data = dataset_from_arrays(arrays, rep_index, layout.primary);
      break;
    }
    case Layout::npz_pair: {
      auto train = read_npz(layout.primary);
      auto test = read_npz(layout.secondary);
      if (rep_index >= reps_of(train, layout.primary))
        throw std::invalid_argument("load_ihdp: replication index out of range");
      rep.data = concat_rows(dataset_from_arrays(train, rep_index, layout.primary),
                             dataset_from_arrays(test, rep_index, layout.secondary));
      break;
    }
    case Layout::csv_dir: {
      const std::string file =
          (fs::path(layout.primary) / ("rep_" + std::to_string(rep_index) + ".csv"))
              .string();
      if (!fs::exists(file))
        throw std::invalid_argument("load_ihdp: replication index out of range");
      rep.data = load_csv_rep(file);
      break;
    }
  }
  check_shape(rep.data, archive_path);
  return rep;
}

void split_ihdp(Dataset& data, std::uint64_t seed) {
  const Index n = data.n_units();
  const Index n_train = static_cast<Index>(std::llround(0.63 * static_cast<double>(n)));
  const Index n_val = static_cast<Index>(std::llround(0.27 * static_cast<double>(n)));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  RandomStream rs(derive_seed(seed, "ihdp-split"));
  rs.shuffle(order);
  data.split.assign(static_cast<std::size_t>(n), Split::test);
  for (Index i = 0; i < n_train; ++i)
    data.split[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
        Split::train;
  for (Index i = n_train; i < n_train + n_val; ++i)
    data.split[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] =
        Split::val;
}

std::tuple<VectorXd, VectorXd, VectorXd, VectorXd> generate_ihdp_outcomes(
    const MatrixXd& x, const VectorXi& t, std::uint64_t seed) {
  const Index n = x.cols();
  const Index p = x.rows();
  if (t.size() != n)
    throw std::invalid_argument("generate_ihdp_outcomes: t length mismatch");

  RandomStream rs(derive_seed(seed, "outcome-coeffs"));
  VectorXd a(p);
  for (Index j = 0; j < p; ++j) {
    const double u = rs.uniform();
    a[j] = u < 0.6 ? 0.0 : 0.1 * std::floor((u - 0.6) / 0.1 + 1.0);
  }

  VectorXd score0 = (a.transpose() * (x.array() + 0.5).matrix()).transpose();
  VectorXd score1 = (a.transpose() * x).transpose();
  VectorXd mu0 = score0.array().exp();

  // o solves mean_T(mu1 - mu0) = 4 exactly
  double s1 = 0, s0 = 0;
  long treated = 0;
  for (Index i = 0; i < n; ++i) {
    if (t[i] == 1) {
      s1 += score1[i];
      s0 += mu0[i];
      ++treated;
    }
  }
  if (treated == 0)
    throw std::invalid_argument("generate_ihdp_outcomes: no treated rows");
  const double o = (s1 - s0) / static_cast<double>(treated) - 4.0;
  VectorXd mu1 = score1.array() - o;

  RandomStream noise(derive_seed(seed, "outcome-noise"));
  VectorXd y0(n), y1(n);
  for (Index i = 0; i < n; ++i) {
    y0[i] = mu0[i] + noise.normal();
    y1[i] = mu1[i] + noise.normal();
  }
  return {mu0, mu1, y0, y1};
}

void simulate_ihdp_archive(const std::string& path, int n_reps,
                           std::uint64_t seed) {
  if (n_reps < 1)
    throw std::invalid_argument("simulate_ihdp_archive: n_reps must be >= 1");

  // fixed covariates: 6 continuous standardized, 19 binary
  RandomStream rs(derive_seed(seed, "covariates"));
  MatrixXd x(kCovs, kRows);
  VectorXd marginals(kCovs);
  for (Index j = 6; j < kCovs; ++j) marginals[j] = rs.uniform(0.1, 0.9);
  for (Index i = 0; i < kRows; ++i) {
    for (Index j = 0; j < 6; ++j) x(j, i) = rs.normal();
    for (Index j = 6; j < kCovs; ++j)
      x(j, i) = rs.bernoulli(marginals[j]) ? 1.0 : 0.0;
  }

  // fixed confounded treatment with roughly a fifth of the units treated
  RandomStream trs(derive_seed(seed, "treatment"));
  VectorXd w(kCovs);
  for (Index j = 0; j < kCovs; ++j) w[j] = trs.uniform(-0.4, 0.4);
  VectorXd logits = (w.transpose() * x).transpose();
  double lo = -10, hi = 10;
  for (int it = 0; it < 100; ++it) {  // intercept for a 0.19 treatment rate
    const double mid = 0.5 * (lo + hi);
    double rate = 0;
    for (Index i = 0; i < kRows; ++i)
      rate += 1.0 / (1.0 + std::exp(-(logits[i] + mid)));
    rate /= static_cast<double>(kRows);
    (rate > 0.19 ? hi : lo) = mid;
  }
  const double intercept = 0.5 * (lo + hi);
  VectorXi t(kRows);
  for (Index i = 0; i < kRows; ++i)
    t[i] = trs.uniform() < 1.0 / (1.0 + std::exp(-(logits[i] + intercept)))
               ? 1
               : 0;

  NpyArray ax;
  ax.shape = {kRows, kCovs};
  ax.data.resize(static_cast<std::size_t>(kRows * kCovs));
  for (Index i = 0; i < kRows; ++i)
    for (Index j = 0; j < kCovs; ++j)
      ax.data[static_cast<std::size_t>(i * kCovs + j)] = x(j, i);
  NpyArray at;
  at.shape = {kRows};
  at.data.resize(static_cast<std::size_t>(kRows));
  for (Index i = 0; i < kRows; ++i)
    at.data[static_cast<std::size_t>(i)] = static_cast<double>(t[i]);

  auto matrix_array = [&](Index rows, int reps) {
    NpyArray a;
    a.shape = {rows, reps};
    a.data.assign(static_cast<std::size_t>(rows * reps), 0.0);
    return a;
  };
  NpyArray ayf = matrix_array(kRows, n_reps);
  NpyArray aycf = matrix_array(kRows, n_reps);
  NpyArray amu0 = matrix_array(kRows, n_reps);
  NpyArray amu1 = matrix_array(kRows, n_reps);

  for (int r = 0; r < n_reps; ++r) {
    auto [mu0, mu1, y0, y1] =
        generate_ihdp_outcomes(x, t, derive_seed(seed, "rep", r));
    for (Index i = 0; i < kRows; ++i) {
      const std::size_t k = static_cast<std::size_t>(i * n_reps + r);
      ayf.data[k] = t[i] == 1 ? y1[i] : y0[i];
      aycf.data[k] = t[i] == 1 ? y0[i] : y1[i];
      amu0.data[k] = mu0[i];
      amu1.data[k] = mu1[i];
    }
  }

  write_npz(path, {{"x", ax},
                   {"t", at},
                   {"yf", ayf},
                   {"ycf", aycf},
                   {"mu0", amu0},
                   {"mu1", amu1}});
}

}  // namespace intact
