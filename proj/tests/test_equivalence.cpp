#include <doctest.h>

#include <cmath>
#include <vector>

#include "test_helpers.hpp"
#include "trimshift/equivalence.hpp"

using namespace trimshift;

namespace {

Dataset four_point_outlier() {
  return Dataset({1.0, 1.0, 1.0, 100.0}, Matrix{{1.0}, {1.0}, {1.0}, {1.0}});
}

}  // namespace

TEST_SUITE("equivalence") {

TEST_CASE("lts oracle finds the clean subset") {
  const Dataset d = four_point_outlier();
  const LtsFit fit = brute_force_lts(d, 3, 0.0);
  CHECK(fit.subset == IndexSet{0, 1, 2});
  CHECK(fit.beta[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.objective == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("lts oracle with a single subset is the plain lasso") {
  Dataset d({2.0, -1.0}, Matrix{{1.0, 0.5}, {0.3, 1.0}});
  const LtsFit fit = brute_force_lts(d, 2, 0.4);
  const std::vector<double> plain = lasso_cd(d, 0.4);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(fit.beta[j] == doctest::Approx(plain[j]).epsilon(1e-10));
  }
}

TEST_CASE("lts oracle beats every enumerated subset") {
  const Dataset d = test_helpers::random_instance(17, 9, 2, 1.5);
  const LtsFit fit = brute_force_lts(d, 7, 0.4);
  Rng rng(3);
  for (int trial = 0; trial < 15; ++trial) {
    const IndexSet subset = rng.sample_without_replacement(9, 7);
    const std::vector<double> beta =
        lasso_cd(d, 0.4, {}, std::span<const std::size_t>(subset));
    double obj = 0.4 * l1_norm(beta);
    for (std::size_t i : subset) {
      const double r = d.y[i] - dot(d.X.row(i), beta);
      obj += r * r;
    }
    CHECK(fit.objective <= obj + 1e-9 * (1.0 + std::abs(obj)));
  }
}

TEST_CASE("lts oracle enforces the enumeration cap") {
  const Dataset d = test_helpers::random_instance(5, 30, 2, 1.0);
  CHECK_THROWS_AS(brute_force_lts(d, 15, 0.0), std::invalid_argument);
}

TEST_CASE("so oracle flags the gross outlier") {
  const Dataset d = four_point_outlier();
  const SoFit fit = brute_force_so(d, {0.0, 25.0}, 4);
  CHECK(fit.outlier_set == IndexSet{3});
  CHECK(fit.objective == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(fit.beta[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.gamma[3] == doctest::Approx(99.0).epsilon(1e-12));
}

TEST_CASE("so oracle with a huge lambda2 keeps the plain fit") {
  const Dataset d = test_helpers::random_instance(19, 8, 2, 1.0);
  const SoFit fit = brute_force_so(d, {0.3, 1e9}, 8);
  CHECK(fit.outlier_set.empty());
  const std::vector<double> plain = lasso_cd(d, 0.3);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(fit.beta[j] == doctest::Approx(plain[j]).epsilon(1e-10));
  }
}

TEST_CASE("so oracle support grows as lambda2 shrinks") {
  const Dataset d = test_helpers::random_instance(23, 8, 1, 1.5);
  std::size_t prev = 0;
  for (const double lambda2 : {25.0, 4.0, 1.0, 0.25, 0.04}) {
    const SoFit fit = brute_force_so(d, {0.0, lambda2}, 8);
    CHECK(fit.outlier_set.size() >= prev);
    prev = fit.outlier_set.size();
  }
}

TEST_CASE("profiling identity holds for arbitrary coefficients") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.below(8);
    const std::size_t p = 1 + rng.below(3);
    const Dataset d = test_helpers::random_instance(trial + 5000, n, p, 1.0);
    std::vector<double> beta(p);
    for (double& b : beta) b = rng.uniform(-3.0, 3.0);
    const PenaltyConfig pen{rng.uniform(0.0, 2.0), rng.uniform(0.05, 4.0)};
    const ProfilingIdentity ident = verify_profiling_identity(d, beta, pen);
    if (!ident.boundary) CHECK(ident.gap <= 1e-10);
    CHECK(ident.h_implied <= n);
  }
}

TEST_CASE("profiling identity edge cases") {
  // integer-valued residuals sum exactly in any order
  Dataset d({1.0, 2.0, -2.0}, Matrix{{0.0}, {0.0}, {0.0}});
  const std::vector<double> beta{0.0};

  SUBCASE("lambda2 above every squared residual means no shift at all") {
    const ProfilingIdentity ident = verify_profiling_identity(d, beta, {0.7, 100.0});
    CHECK(ident.h_implied == 3);
    CHECK(ident.gap == 0.0);
  }
  SUBCASE("lambda2 below every squared residual shifts everything") {
    const ProfilingIdentity ident = verify_profiling_identity(d, beta, {0.0, 0.5});
    CHECK(ident.h_implied == 0);
    CHECK(ident.gap == 0.0);
  }
  SUBCASE("a residual exactly on the threshold raises the boundary flag") {
    const ProfilingIdentity ident = verify_profiling_identity(d, beta, {0.0, 4.0});
    CHECK(ident.boundary);
  }
}

TEST_CASE("the proposition holds on the gross-outlier instance") {
  const Dataset d = four_point_outlier();
  const ComparisonReport rep = verify_proposition(d, {0.0, 25.0}, 4);
  CHECK(rep.proposition_holds);
  CHECK(rep.h == 3);
  CHECK(rep.lts_objective == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(rep.so_objective == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(rep.profiling_gap <= 1e-12);
  CHECK(rep.outlier_agreement == doctest::Approx(1.0));
}

TEST_CASE("the proposition holds trivially without trimming") {
  const Dataset d = test_helpers::random_instance(29, 7, 2, 1.0);
  const ComparisonReport rep = verify_proposition(d, {0.2, 1e9}, 7);
  CHECK(rep.proposition_holds);
  CHECK(rep.h == 7);
  CHECK(rep.outlier_agreement == doctest::Approx(1.0));  // both flag nothing
}

TEST_CASE("compare_fits on identical coefficient vectors") {
  const Dataset d = test_helpers::random_instance(37, 10, 2, 1.0);
  SoConfig cfg;
  cfg.lambda1 = 0.2;
  cfg.lambda2 = 3.0;
  const SoFit so = so_fit(d, cfg);
  LtsFit lts;
  lts.beta = so.beta;
  const std::size_t h = d.n() - so.outlier_set.size();
  std::vector<double> sq = residuals(d, lts.beta);
  for (double& v : sq) v = v * v;
  lts.subset = smallest_h_indices(sq, h);
  lts.objective = trimmed_objective(d, lts.beta, h, cfg.lambda1);
  const ComparisonReport rep = compare_fits(d, lts, so, {cfg.lambda1, cfg.lambda2});
  CHECK(rep.beta_distance == 0.0);
  CHECK(rep.fitted_correlation == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.outlier_agreement == doctest::Approx(1.0));
  CHECK(rep.proposition_holds);
}

TEST_CASE("compare_fits flags a degenerate all-zero fit instead of failing") {
  const Dataset d = test_helpers::random_instance(41, 8, 2, 1.0);
  SoConfig cfg;
  cfg.lambda1 = 1e6;  // deliberately too large: beta collapses to zero
  cfg.lambda2 = 2.0;
  const SoFit so = so_fit(d, cfg);
  CHECK(l0_count(so.beta) == 0);
  LtsConfig lcfg;
  lcfg.h = 6;
  lcfg.lambda1 = 0.1;
  lcfg.n_starts = 20;
  lcfg.seed = 2;
  const LtsFit lts = sparse_lts_fit(d, lcfg);
  const ComparisonReport rep = compare_fits(d, lts, so, {cfg.lambda1, cfg.lambda2});
  CHECK(rep.correlation_degenerate);
  CHECK(rep.fitted_correlation == 0.0);
}

TEST_CASE("randomized sweep passes and is reproducible across thread counts") {
  SweepConfig cfg;
  cfg.count = 25;
  cfg.seed = 11;
  const SweepReport a = run_proposition_sweep(cfg, {}, 1);
  CHECK(a.all_pass);
  CHECK(a.n_pass + a.n_boundary == 25);
  const SweepReport b = run_proposition_sweep(cfg, {}, 3);
  REQUIRE(a.instances.size() == b.instances.size());
  for (std::size_t i = 0; i < a.instances.size(); ++i) {
    CHECK(a.instances[i].lambda2 == b.instances[i].lambda2);
    CHECK(a.instances[i].objective_gap == b.instances[i].objective_gap);
    CHECK(a.instances[i].pass == b.instances[i].pass);
  }
}

TEST_CASE("oversized sweeps are rejected up front") {
  SweepConfig cfg;
  cfg.n_max = 30;
  CHECK_THROWS_AS(run_proposition_sweep(cfg), std::invalid_argument);
}

}  // TEST_SUITE
