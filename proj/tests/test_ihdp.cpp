#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "intact/ihdp.hpp"
#include "intact/npz.hpp"
#include "intact/rng.hpp"
#include "oracles.hpp"

using namespace intact;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("npz write/read round trip") {
  NpyArray a;
  a.shape = {3, 4};
  RandomStream rs(1);
  for (int i = 0; i < 12; ++i) a.data.push_back(rs.normal());
  NpyArray b;
  b.shape = {5};
  for (int i = 0; i < 5; ++i) b.data.push_back(rs.normal());

  TempDir tmp("npz_rt");
  const std::string path = (tmp.path / "arrays.npz").string();
  write_npz(path, {{"alpha", a}, {"beta", b}});
  auto back = read_npz(path);
  REQUIRE(back.count("alpha") == 1);
  REQUIRE(back.count("beta") == 1);
  CHECK(back["alpha"].shape == a.shape);
  CHECK(back["alpha"].data == a.data);
  CHECK(back["beta"].data == b.data);
  CHECK(back["alpha"].element({1, 2}) == a.data[1 * 4 + 2]);
}

TEST_CASE("npz errors are io errors with context") {
  CHECK_THROWS_AS(read_npz("/nonexistent/path.npz"), io_error);
  TempDir tmp("npz_bad");
  const std::string path = (tmp.path / "bad.npz").string();
  std::ofstream(path) << "this is not a zip";
  CHECK_THROWS_AS(read_npz(path), io_error);
}

TEST_CASE("surrogate archive loads with the invariant shapes") {
  TempDir tmp("ihdp_sim");
  const std::string path = (tmp.path / "sim.npz").string();
  simulate_ihdp_archive(path, 3, 42);
  CHECK(ihdp_replication_count(path) == 3);

  IHDPReplication rep = load_ihdp(path, 1);
  CHECK(rep.data.n_units() == 747);
  CHECK(rep.data.cov_dim() == 25);
  // factual reconstruction
  for (Index i = 0; i < 747; ++i) {
    const double expect = rep.data.t[i] == 0 ? rep.data.y0(0, i)
                                             : rep.data.y1(0, i);
    CHECK(rep.data.y(0, i) == expect);
  }
  // pure reads: identical on reload
  IHDPReplication again = load_ihdp(path, 1);
  CHECK(again.data.x == rep.data.x);
  CHECK(again.data.y == rep.data.y);

  // distinct replications differ in outcomes, share covariates
  IHDPReplication other = load_ihdp(path, 2);
  CHECK(other.data.x == rep.data.x);
  CHECK(other.data.y != rep.data.y);

  CHECK_THROWS_AS(load_ihdp(path, 3), std::invalid_argument);
}

TEST_CASE("csv fallback layout round-trips a replication") {
  TempDir tmp("ihdp_csv");
  const std::string npz_path = (tmp.path / "sim.npz").string();
  simulate_ihdp_archive(npz_path, 1, 7);
  IHDPReplication rep = load_ihdp(npz_path, 0);

  const fs::path dir = tmp.path / "csvdir";
  fs::create_directories(dir);
  std::ofstream out(dir / "rep_0.csv");
  out.precision(17);
  out << "x1";
  for (int j = 2; j <= 25; ++j) out << ",x" << j;
  out << ",t,yf,ycf,mu0,mu1\n";
  for (Index i = 0; i < 747; ++i) {
    for (Index j = 0; j < 25; ++j) out << (j ? "," : "") << rep.data.x(j, i);
    const double ycf = rep.data.t[i] == 1 ? rep.data.y0(0, i) : rep.data.y1(0, i);
    out << ',' << rep.data.t[i] << ',' << rep.data.y(0, i) << ',' << ycf << ','
        << rep.data.mu0(0, i) << ',' << rep.data.mu1(0, i) << '\n';
  }
  out.close();

  CHECK(ihdp_replication_count(dir.string()) == 1);
  IHDPReplication back = load_ihdp(dir.string(), 0);
  CHECK(back.data.x == rep.data.x);
  CHECK(back.data.y == rep.data.y);
  CHECK(back.data.mu0 == rep.data.mu0);
  CHECK(back.data.t == rep.data.t);
}

TEST_CASE("loader reports schema problems") {
  TempDir tmp("ihdp_schema");
  const std::string path = (tmp.path / "bad.npz").string();
  NpyArray x;
  x.shape = {10, 25};
  x.data.assign(250, 0.0);
  write_npz(path, {{"x", x}});
  try {
    load_ihdp(path, 0);
    FAIL("expected io_error");
  } catch (const io_error& e) {
    CHECK(std::string(e.what()).find("yf") != std::string::npos);
  }
  CHECK_THROWS_AS(load_ihdp((tmp.path / "missing.npz").string(), 0), io_error);
}

TEST_CASE("split sizes are 471/202/74 and seed-deterministic") {
  TempDir tmp("ihdp_split");
  const std::string path = (tmp.path / "sim.npz").string();
  simulate_ihdp_archive(path, 1, 9);
  IHDPReplication rep = load_ihdp(path, 0);

  split_ihdp(rep.data, 5);
  CHECK(rep.data.indices_of(Split::train).size() == 471);
  CHECK(rep.data.indices_of(Split::val).size() == 202);
  CHECK(rep.data.indices_of(Split::test).size() == 74);

  IHDPReplication rep2 = load_ihdp(path, 0);
  split_ihdp(rep2.data, 5);
  CHECK(rep.data.split == rep2.data.split);

  IHDPReplication rep3 = load_ihdp(path, 0);
  split_ihdp(rep3.data, 6);
  CHECK(rep.data.split != rep3.data.split);

  // partition: disjoint and exhaustive by construction of the label vector
  std::size_t total = rep.data.indices_of(Split::train).size() +
                      rep.data.indices_of(Split::val).size() +
                      rep.data.indices_of(Split::test).size();
  CHECK(total == 747);
}

TEST_CASE("generated outcomes have the documented structural form") {
  TempDir tmp("ihdp_gen");
  const std::string path = (tmp.path / "sim.npz").string();
  simulate_ihdp_archive(path, 1, 11);
  IHDPReplication rep = load_ihdp(path, 0);
  const MatrixXd& x = rep.data.x;
  const VectorXi& t = rep.data.t;

  auto [mu0, mu1, y0, y1] = generate_ihdp_outcomes(x, t, 77);

  // recover the coefficient vector from log(mu0) by least squares; the
  // relation log(mu0) = a'x + 0.5 * sum(a) must be exact
  MatrixXd design(747, 26);
  design.leftCols(25) = x.transpose();
  design.col(25).setOnes();
  VectorXd target = mu0.array().log();
  VectorXd beta = design.colPivHouseholderQr().solve(target);
  CHECK((design * beta - target).cwiseAbs().maxCoeff() < 1e-9);
  VectorXd a = beta.head(25);
  CHECK(std::abs(beta[25] - 0.5 * a.sum()) < 1e-8);
  // coefficients live on the documented grid
  for (Index j = 0; j < 25; ++j) {
    const double rounded = std::round(a[j] * 10.0) / 10.0;
    CHECK(std::abs(a[j] - rounded) < 1e-8);
    CHECK(rounded >= -1e-12);
    CHECK(rounded <= 0.4 + 1e-12);
  }
  // mu1 = a'x - o for a single constant o
  VectorXd o_vec = (a.transpose() * x).transpose() - mu1;
  CHECK((o_vec.array() - o_vec[0]).abs().maxCoeff() < 1e-9);

  // o solves the treated-group calibration exactly
  double mean_eff = 0;
  long treated = 0;
  for (Index i = 0; i < 747; ++i)
    if (t[i] == 1) {
      mean_eff += mu1[i] - mu0[i];
      ++treated;
    }
  mean_eff /= static_cast<double>(treated);
  CHECK(std::abs(mean_eff - 4.0) < 1e-9);
}

TEST_CASE("generated outcome noise has unit variance") {
  TempDir tmp("ihdp_noise");
  const std::string path = (tmp.path / "sim.npz").string();
  simulate_ihdp_archive(path, 1, 13);
  IHDPReplication rep = load_ihdp(path, 0);

  std::vector<double> noise;
  for (int r = 0; r < 134; ++r) {
    auto [mu0, mu1, y0, y1] =
        generate_ihdp_outcomes(rep.data.x, rep.data.t,
                               derive_seed(99, "noise-probe", r));
    for (Index i = 0; i < 747; ++i) {
      noise.push_back(y0[i] - mu0[i]);
      noise.push_back(y1[i] - mu1[i]);
    }
  }
  const double v = oracles::variance_of(noise);
  const double se = std::sqrt(2.0 / static_cast<double>(noise.size()));
  CHECK(std::abs(v - 1.0) < 4 * se);
}
