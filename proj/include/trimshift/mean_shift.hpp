#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "trimshift/core.hpp"
#include "trimshift/dataset.hpp"
#include "trimshift/lasso.hpp"
#include "trimshift/parallel.hpp"

namespace trimshift {

struct SoConfig {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::size_t max_outer = 500;
  double tol = 1e-10;  // absolute objective change at which the alternation stops
  std::uint64_t seed = 0;

  void validate() const {
    if (lambda1 < 0.0) throw std::invalid_argument("SoConfig: lambda1 must be >= 0");
    if (!(lambda2 > 0.0)) throw std::invalid_argument("SoConfig: lambda2 must be > 0");
    if (max_outer < 1) throw std::invalid_argument("SoConfig: max_outer must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("SoConfig: tol must be > 0");
  }
};

struct SoFit {
  std::vector<double> beta;
  std::vector<double> gamma;   // exact zeros off the outlier set
  IndexSet outlier_set;        // indices with gamma != 0, sorted
  double objective = 0.0;      // joint objective of (beta, gamma)
  std::size_t n_iters = 0;
  bool converged = false;
  std::vector<double> trace;   // objective after each alternation, non-increasing
};

/// Closed-form gamma given beta: gamma_i = r_i if r_i^2 > lambda2, else 0,
/// with r computed without any shift.
inline std::vector<double> profile_gamma(const Dataset& data, std::span<const double> beta,
                                         double lambda2) {
  if (!(lambda2 > 0.0)) throw std::invalid_argument("profile_gamma: lambda2 must be > 0");
  std::vector<double> g = residuals(data, beta);
  for (double& v : g) v = hard_threshold_sq(v, lambda2);
  return g;
}

inline IndexSet support(std::span<const double> v) {
  IndexSet s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) s.push_back(i);
  }
  return s;
}

/// One alternation: hard-threshold the residuals of beta into gamma', then
/// refit beta on the shifted response y - gamma'. The joint objective never
/// increases across the step.
inline std::pair<std::vector<double>, std::vector<double>> so_step(
    const Dataset& data, std::span<const double> beta, const SoConfig& cfg,
    const SolverConfig& solver = {}) {
  cfg.validate();
  std::vector<double> gamma = profile_gamma(data, beta, cfg.lambda2);
  std::vector<double> next = lasso_cd(data, cfg.lambda1, solver, std::nullopt, gamma, beta);
  return {std::move(next), std::move(gamma)};
}

/// Alternating minimization of the joint objective, started from gamma = 0
/// (so the first beta is the plain lasso fit, or OLS at lambda1 = 0). Stops
/// when the objective change falls below cfg.tol with a stable outlier
/// support, or at max_outer; hitting the cap is reported via converged =
/// false, not an error.
///
/// On a converged exit the pair is polished into an exact joint fixed point:
/// beta is refit on the complement of the outlier support and gamma is
/// re-profiled from that beta, so gamma == profile_gamma(beta) holds bitwise
/// and beta passes the KKT check on the gamma-shifted data.
inline SoFit so_fit(const Dataset& data, const SoConfig& cfg, const SolverConfig& solver = {}) {
  cfg.validate();
  solver.validate();
  const std::size_t n = data.n();

  SoFit fit;
  fit.beta = lasso_cd(data, cfg.lambda1, solver);
  fit.gamma.assign(n, 0.0);
  const PenaltyConfig pen{cfg.lambda1, cfg.lambda2};
  double obj = joint_objective(data, fit.beta, fit.gamma, pen);
  fit.trace.push_back(obj);

  IndexSet prev_support;
  for (std::size_t t = 1; t <= cfg.max_outer; ++t) {
    fit.gamma = profile_gamma(data, fit.beta, cfg.lambda2);
    IndexSet cur_support = support(fit.gamma);
    fit.beta = lasso_cd(data, cfg.lambda1, solver, std::nullopt, fit.gamma, fit.beta);
    const double next_obj = joint_objective(data, fit.beta, fit.gamma, pen);
    fit.trace.push_back(next_obj);
    fit.n_iters = t;
    const bool stable = (cur_support == prev_support);
    const bool small_change = std::abs(obj - next_obj) < cfg.tol;
    obj = next_obj;
    prev_support = std::move(cur_support);
    if (small_change && stable) {
      fit.converged = true;
      break;
    }
  }

  // Converged supports admit an exact fixed point: beta solves the lasso on
  // the retained rows alone, and the flagged rows contribute zero loss once
  // gamma is re-profiled.
  IndexSet s = support(fit.gamma);
  if (fit.converged && !s.empty() && s.size() < n) {
    IndexSet complement;
    complement.reserve(n - s.size());
    auto it = s.begin();
    for (std::size_t i = 0; i < n; ++i) {
      if (it != s.end() && *it == i) {
        ++it;
      } else {
        complement.push_back(i);
      }
    }
    fit.beta = lasso_cd(data, cfg.lambda1, solver,
                        std::span<const std::size_t>(complement), {}, fit.beta);
  }
  fit.gamma = profile_gamma(data, fit.beta, cfg.lambda2);
  fit.outlier_set = support(fit.gamma);
  if (fit.outlier_set != s) fit.converged = false;
  fit.objective = joint_objective(data, fit.beta, fit.gamma, pen);
  fit.trace.push_back(fit.objective);
  return fit;
}

/// Outcome of the lambda2 target search. `attained` distinguishes a hit from
/// the expected skipped-count outcome; skipped counts are a documented
/// behavior of the estimator, not an error.
struct Lambda2SearchResult {
  bool attained = false;
  double lambda2 = 0.0;
  std::optional<SoFit> fit;
  std::vector<std::size_t> achieved_counts;  // sorted, unique
  std::vector<double> grid;                  // evaluated values, descending
};

/// Default grid: midpoints between consecutive distinct sorted squared
/// residuals of the plain (gamma = 0) fit, plus an endpoint above the largest
/// residual and one below the smallest positive one.
inline std::vector<double> default_lambda2_grid(const Dataset& data, double lambda1,
                                                const SolverConfig& solver = {}) {
  const std::vector<double> beta = lasso_cd(data, lambda1, solver);
  std::vector<double> sq = residuals(data, beta);
  for (double& v : sq) v = v * v;
  std::sort(sq.begin(), sq.end());
  std::vector<double> grid;
  grid.push_back(sq.back() + 1.0);
  for (std::size_t i = 0; i + 1 < sq.size(); ++i) {
    const double mid = 0.5 * (sq[i] + sq[i + 1]);
    if (mid > 0.0) grid.push_back(mid);
  }
  for (double v : sq) {
    if (v > 0.0) {
      grid.push_back(v / 2.0);
      break;
    }
  }
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

/// Scans a decreasing lambda2 grid with so_fit and returns the largest value
/// whose fit flags exactly target_outliers observations. When no grid point
/// hits the target the result carries the set of counts that were achieved.
inline Lambda2SearchResult lambda2_search(const Dataset& data, double lambda1,
                                          std::size_t target_outliers,
                                          const SolverConfig& solver = {},
                                          std::vector<double> grid = {},
                                          unsigned threads = 1,
                                          std::size_t max_outer = 500,
                                          double tol = 1e-10) {
  if (target_outliers >= data.n()) {
    throw std::invalid_argument("lambda2_search: target must be < n");
  }
  if (grid.empty()) {
    grid = default_lambda2_grid(data, lambda1, solver);
  } else {
    for (double v : grid) {
      if (!(v > 0.0)) throw std::invalid_argument("lambda2_search: grid values must be > 0");
    }
    std::sort(grid.begin(), grid.end(), std::greater<>());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }

  std::vector<SoFit> fits(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    SoConfig cfg;
    cfg.lambda1 = lambda1;
    cfg.lambda2 = grid[k];
    cfg.max_outer = max_outer;
    cfg.tol = tol;
    fits[k] = so_fit(data, cfg, solver);
  });

  Lambda2SearchResult result;
  result.grid = grid;
  std::vector<std::size_t> counts;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const std::size_t count = fits[k].outlier_set.size();
    counts.push_back(count);
    if (!result.attained && count == target_outliers) {
      result.attained = true;
      result.lambda2 = grid[k];
      result.fit = std::move(fits[k]);
    }
  }
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());
  result.achieved_counts = std::move(counts);
  return result;
}

}  // namespace trimshift
