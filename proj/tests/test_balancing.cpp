#include <doctest.h>

#include "intact/sinkhorn.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace intact;
using test_util::random_matrix;

namespace {

BalanceConfig tight() {
  // small epsilon for near-exact transport; the sharp cost stabilizes long
  // before the dual potentials do, so give the iteration room
  BalanceConfig cfg;
  cfg.sinkhorn_epsilon = 0.01;
  cfg.sinkhorn_max_iters = 50000;
  cfg.sinkhorn_tol = 1e-7;
  return cfg;
}

BalanceConfig settled() {
  BalanceConfig cfg;
  cfg.sinkhorn_max_iters = 20000;
  cfg.sinkhorn_tol = 1e-9;
  return cfg;
}

}  // namespace

TEST_CASE("identical singletons have zero cost") {
  MatrixXd a = MatrixXd::Zero(1, 1);
  SinkhornResult r = sinkhorn_distance(a, a, BalanceConfig{});
  CHECK(r.cost == 0.0);
  CHECK(r.converged);
}

TEST_CASE("singleton transport is the squared distance") {
  MatrixXd a = MatrixXd::Zero(1, 1);
  MatrixXd b = MatrixXd::Constant(1, 1, 3.0);
  SinkhornResult r = sinkhorn_distance(a, b, BalanceConfig{});
  CHECK(r.cost == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(r.plan(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("4x4 instance matches brute-force optimal transport within 5%") {
  MatrixXd a = random_matrix(2, 4, 101);
  MatrixXd b = random_matrix(2, 4, 102);
  const double exact = oracles::exact_ot_cost(a, b);
  SinkhornResult r = sinkhorn_distance(a, b, tight());
  CHECK(std::abs(r.cost - exact) <= 0.05 * exact);
}

TEST_CASE("all small instances agree with the brute-force oracle") {
  int case_id = 0;
  for (Index ka : {1, 2, 3, 4, 5}) {
    for (Index kb : {1, 2, 3, 4, 5}) {
      MatrixXd a = random_matrix(2, ka, 200 + case_id);
      MatrixXd b = random_matrix(2, kb, 300 + case_id);
      ++case_id;
      const double exact = oracles::exact_ot_cost(a, b);
      SinkhornResult r = sinkhorn_distance(a, b, tight());
      CHECK(std::abs(r.cost - exact) <= 0.05 * std::max(exact, 1e-9));
    }
  }
}

TEST_CASE("sinkhorn cost is nonnegative, symmetric, translation-invariant") {
  BalanceConfig cfg = settled();
  for (int rep = 0; rep < 20; ++rep) {
    MatrixXd a = random_matrix(3, 4, 400 + rep);
    MatrixXd b = random_matrix(3, 6, 500 + rep);
    SinkhornResult ab = sinkhorn_distance(a, b, cfg);
    SinkhornResult ba = sinkhorn_distance(b, a, cfg);
    CHECK(ab.cost >= 0.0);
    CHECK(ab.cost == doctest::Approx(ba.cost).epsilon(1e-6));
    VectorXd shift = random_matrix(3, 1, 600 + rep).col(0);
    SinkhornResult shifted = sinkhorn_distance(a.colwise() + shift,
                                               b.colwise() + shift, cfg);
    CHECK(shifted.cost == doctest::Approx(ab.cost).epsilon(1e-6));
  }
}

TEST_CASE("transport plan marginals are uniform at convergence") {
  MatrixXd a = random_matrix(2, 5, 700);
  MatrixXd b = random_matrix(2, 3, 701);
  BalanceConfig cfg;
  cfg.sinkhorn_epsilon = 1.0;  // converges fully at this blur level
  cfg.sinkhorn_max_iters = 5000;
  cfg.sinkhorn_tol = 1e-10;
  SinkhornResult r = sinkhorn_distance(a, b, cfg);
  REQUIRE(r.converged);
  VectorXd rows = r.plan.rowwise().sum();
  VectorXd cols = r.plan.colwise().sum();
  CHECK((rows.array() - 0.2).abs().maxCoeff() < 1e-6);
  CHECK((cols.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-6);
}

TEST_CASE("non-convergence is flagged, not thrown") {
  BalanceConfig cfg;
  cfg.sinkhorn_epsilon = 0.001;
  cfg.sinkhorn_max_iters = 1;
  MatrixXd a = random_matrix(2, 4, 702);
  MatrixXd b = random_matrix(2, 4, 703);
  SinkhornResult r = sinkhorn_distance(a, b, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
}

TEST_CASE("empty point sets are rejected") {
  MatrixXd a(2, 0), b = MatrixXd::Zero(2, 1);
  CHECK_THROWS_AS(sinkhorn_distance(a, b, BalanceConfig{}),
                  std::invalid_argument);
}

TEST_CASE("balanced_objective composition") {
  BalanceConfig cfg;
  cfg.gamma = 0.0;
  MatrixXd a = random_matrix(1, 3, 704);
  MatrixXd b = random_matrix(1, 3, 705);
  CHECK(balanced_objective(-1.25, a, b, cfg) == -1.25);

  cfg.gamma = 2.0;
  CHECK(balanced_objective(-1.25, a, a, cfg) ==
        doctest::Approx(-1.25).epsilon(1e-9));

  cfg.gamma = 1.0;
  MatrixXd p = MatrixXd::Zero(1, 1);
  MatrixXd q = MatrixXd::Constant(1, 1, 3.0);
  CHECK(balanced_objective(-1.0, p, q, cfg) ==
        doctest::Approx(-10.0).epsilon(1e-9));
}

TEST_CASE("balanced_objective never exceeds the plain elbo for gamma >= 0") {
  for (int rep = 0; rep < 10; ++rep) {
    MatrixXd a = random_matrix(2, 5, 800 + rep);
    MatrixXd b = random_matrix(2, 4, 900 + rep);
    BalanceConfig cfg;
    cfg.gamma = 0.5 * rep;
    CHECK(balanced_objective(0.123, a, b, cfg) <= 0.123);
  }
}

TEST_CASE("fixed-plan point gradients match finite differences") {
  MatrixXd a = random_matrix(2, 4, 1000);
  MatrixXd b = random_matrix(2, 5, 1001);
  BalanceConfig cfg;
  SinkhornResult r = sinkhorn_distance(a, b, cfg);
  auto [ga, gb] = sinkhorn_point_gradients(a, b, r.plan);
  // <plan, C> as a function of point coordinates with the plan frozen
  auto cost_at = [&](const MatrixXd& aa, const MatrixXd& bb) {
    double c = 0.0;
    for (Index i = 0; i < aa.cols(); ++i)
      for (Index j = 0; j < bb.cols(); ++j)
        c += r.plan(i, j) * (aa.col(i) - bb.col(j)).squaredNorm();
    return c;
  };
  const double eps = 1e-6;
  for (Index i = 0; i < a.cols(); ++i)
    for (Index k = 0; k < 2; ++k) {
      MatrixXd up = a, dn = a;
      up(k, i) += eps;
      dn(k, i) -= eps;
      const double fd = (cost_at(up, b) - cost_at(dn, b)) / (2 * eps);
      CHECK(ga(k, i) == doctest::Approx(fd).epsilon(1e-5));
    }
}
