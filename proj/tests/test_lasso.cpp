#include <doctest.h>

#include <vector>

#include "test_helpers.hpp"
#include "trimshift/lasso.hpp"
#include "trimshift/rng.hpp"

using namespace trimshift;

TEST_SUITE("lasso") {

TEST_CASE("one-predictor solution matches the grid-search oracle") {
  Dataset d({2.0}, Matrix{{1.0}});
  const std::vector<double> beta = lasso_cd(d, 2.0);
  CHECK(beta[0] == doctest::Approx(1.0).epsilon(1e-12));
  const double oracle = test_helpers::lasso_1d_grid_oracle(d, 2.0);
  CHECK(std::abs(beta[0] - oracle) <= 1e-4);
}

TEST_CASE("identity design with no penalty interpolates") {
  Dataset d({3.0, -1.0}, Matrix{{1.0, 0.0}, {0.0, 1.0}});
  const std::vector<double> beta = lasso_cd(d, 0.0);
  CHECK(beta[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(beta[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("a penalty above the gradient bound forces zero") {
  Dataset d({1.0, 1.0}, Matrix{{1.0}, {1.0}});
  const std::vector<double> beta = lasso_cd(d, 8.0);
  CHECK(beta[0] == 0.0);
  const double oracle = test_helpers::lasso_1d_grid_oracle(d, 8.0);
  CHECK(std::abs(beta[0] - oracle) <= 1e-4);
}

TEST_CASE("kkt check certifies optimality and reports violations") {
  Dataset d({2.0}, Matrix{{1.0}});
  const std::vector<double> good{1.0};
  const KktReport pass = lasso_kkt_check(d, good, 2.0, 1e-8);
  CHECK(pass.pass);
  CHECK(pass.max_violation == doctest::Approx(0.0).epsilon(1e-14));

  const std::vector<double> bad{2.0};
  const KktReport fail = lasso_kkt_check(d, bad, 2.0, 1e-8);
  CHECK_FALSE(fail.pass);
  CHECK(fail.max_violation == doctest::Approx(2.0).epsilon(1e-12));

  Dataset two({1.0, 1.0}, Matrix{{1.0}, {1.0}});
  CHECK(lasso_kkt_check(two, std::vector<double>{0.0}, 8.0, 1e-8).pass);
}

TEST_CASE("output always certifies against the kkt check at 10x solver tol") {
  SolverConfig cfg;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Rng rng(seed * 31 + 5);
    const std::size_t n = 4 + rng.below(20);
    const std::size_t p = 1 + rng.below(5);
    const Dataset d = test_helpers::random_instance(seed + 900, n, p, 1.0);
    const double lambda1 = (seed % 3 == 0) ? 0.0 : rng.uniform(0.0, 4.0);
    const std::vector<double> beta = lasso_cd(d, lambda1, cfg);
    const KktReport kkt = lasso_kkt_check(d, beta, lambda1, 10.0 * cfg.tol);
    CHECK(kkt.pass);
  }
}

TEST_CASE("no penalty on a full-rank design reproduces the normal equations") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset d = test_helpers::random_instance(seed + 70, 12, 3, 0.8);
    const std::vector<double> cd = lasso_cd(d, 0.0);
    const std::vector<double> ne = test_helpers::normal_equations_solve(d);
    for (std::size_t j = 0; j < 3; ++j) CHECK(cd[j] == doctest::Approx(ne[j]).epsilon(1e-8));
  }
}

TEST_CASE("no penalty on a full-rank restricted design matches an independent solve") {
  const Dataset d = test_helpers::random_instance(71, 14, 3, 0.8);
  const IndexSet subset{0, 2, 3, 5, 7, 8, 10, 13};
  const std::vector<double> cd = lasso_cd(d, 0.0, {}, std::span<const std::size_t>(subset));

  Matrix Xs(subset.size(), 3);
  std::vector<double> ys(subset.size());
  for (std::size_t k = 0; k < subset.size(); ++k) {
    ys[k] = d.y[subset[k]];
    for (std::size_t j = 0; j < 3; ++j) Xs(k, j) = d.X(subset[k], j);
  }
  const std::vector<double> ne = test_helpers::normal_equations_solve(Dataset(ys, Xs));
  for (std::size_t j = 0; j < 3; ++j) CHECK(cd[j] == doctest::Approx(ne[j]).epsilon(1e-8));
}

TEST_CASE("one-predictor fits match the grid oracle on random draws") {
  Rng rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const Dataset d = test_helpers::random_instance(trial + 300, 8, 1, 1.0);
    const double lambda1 = rng.uniform(0.0, 6.0);
    const std::vector<double> beta = lasso_cd(d, lambda1);
    const double oracle = test_helpers::lasso_1d_grid_oracle(d, lambda1, beta[0], 2.0);
    CHECK(std::abs(beta[0] - oracle) <= 1e-4);
  }
}

TEST_CASE("subset restriction equals fitting the sub-dataset") {
  const Dataset d = test_helpers::random_instance(41, 10, 2, 1.0);
  const IndexSet subset{1, 3, 4, 8, 9};
  const std::vector<double> restricted =
      lasso_cd(d, 0.7, {}, std::span<const std::size_t>(subset));

  Matrix Xs(subset.size(), 2);
  std::vector<double> ys(subset.size());
  for (std::size_t k = 0; k < subset.size(); ++k) {
    ys[k] = d.y[subset[k]];
    Xs(k, 0) = d.X(subset[k], 0);
    Xs(k, 1) = d.X(subset[k], 1);
  }
  const std::vector<double> direct = lasso_cd(Dataset(ys, Xs), 0.7);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(restricted[j] == doctest::Approx(direct[j]).epsilon(1e-10));
  }
}

TEST_CASE("offset is subtracted from the response") {
  const Dataset d = test_helpers::random_instance(42, 9, 2, 1.0);
  std::vector<double> offset(9);
  Rng rng(5);
  for (double& v : offset) v = rng.uniform(-2.0, 2.0);

  const std::vector<double> with_offset = lasso_cd(d, 0.4, {}, std::nullopt, offset);
  std::vector<double> shifted = d.y;
  for (std::size_t i = 0; i < 9; ++i) shifted[i] -= offset[i];
  const std::vector<double> direct = lasso_cd(Dataset(shifted, d.X), 0.4);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(with_offset[j] == doctest::Approx(direct[j]).epsilon(1e-10));
  }
}

TEST_CASE("input validation") {
  const Dataset d = test_helpers::random_instance(43, 6, 2, 1.0);
  const IndexSet empty;
  CHECK_THROWS_AS(lasso_cd(d, 0.0, {}, std::span<const std::size_t>(empty)),
                  std::invalid_argument);
  CHECK_THROWS_AS(lasso_cd(d, -1.0), std::invalid_argument);
  const IndexSet out_of_range{7};
  CHECK_THROWS_AS(lasso_cd(d, 0.0, {}, std::span<const std::size_t>(out_of_range)),
                  std::invalid_argument);
  SolverConfig bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(lasso_cd(d, 0.0, bad), std::invalid_argument);
}

TEST_CASE("wide correlated designs still certify at a small penalty") {
  // p >> n with every column correlated with the response: the active set
  // can exceed the row count, which once locked plain sweeps into a
  // floating-point orbit far from optimality
  Rng rng(2024);
  const std::size_t n = 20, p = 60;
  std::vector<double> y(n);
  for (double& v : y) v = rng.normal() * 3.0;
  Matrix X(n, p);
  for (std::size_t j = 0; j < p; ++j) {
    const double a = rng.uniform(0.3, 1.0);
    for (std::size_t i = 0; i < n; ++i) X(i, j) = a * y[i] + 0.5 * rng.normal();
  }
  const Dataset d(y, X);
  for (const double lambda1 : {0.0, 0.1, 0.5}) {
    const std::vector<double> beta = lasso_cd(d, lambda1);
    CHECK(lasso_kkt_check(d, beta, lambda1, 1e-6).pass);
  }
}

TEST_CASE("zero columns keep a zero coefficient") {
  Dataset d({1.0, 2.0, 3.0}, Matrix{{1.0, 0.0}, {2.0, 0.0}, {3.0, 0.0}});
  const std::vector<double> beta = lasso_cd(d, 0.0);
  CHECK(beta[1] == 0.0);
  CHECK(beta[0] == doctest::Approx(1.0).epsilon(1e-10));
}

}  // TEST_SUITE
