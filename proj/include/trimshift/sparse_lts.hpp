#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "trimshift/core.hpp"
#include "trimshift/dataset.hpp"
#include "trimshift/lasso.hpp"
#include "trimshift/parallel.hpp"
#include "trimshift/rng.hpp"

namespace trimshift {

struct LtsConfig {
  std::size_t h = 0;
  double lambda1 = 0.0;
  std::size_t n_starts = 50;
  std::size_t max_csteps = 100;
  std::uint64_t seed = 0;

  void validate(std::size_t n) const {
    const std::size_t h_min = (n + 1) / 2;
    if (h < h_min || h > n) {
      throw std::invalid_argument("LtsConfig: h = " + std::to_string(h) +
                                  " out of range [" + std::to_string(h_min) + ", " +
                                  std::to_string(n) + "]");
    }
    if (lambda1 < 0.0) throw std::invalid_argument("LtsConfig: lambda1 must be >= 0");
    if (n_starts < 1) throw std::invalid_argument("LtsConfig: n_starts must be >= 1");
    if (max_csteps < 1) throw std::invalid_argument("LtsConfig: max_csteps must be >= 1");
  }
};

struct LtsFit {
  std::vector<double> beta;
  IndexSet subset;          // retained observations, sorted ascending
  double objective = 0.0;   // trimmed objective of beta
  std::size_t start_id = 0;
  std::size_t n_csteps = 0;
  bool converged = false;
};

/// h = ceil((1 - alpha) * n), clamped to [ceil(n/2), n].
inline std::size_t h_from_alpha(std::size_t n, double alpha) {
  if (n < 1) throw std::invalid_argument("h_from_alpha: n must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 0.5)) {
    throw std::invalid_argument("h_from_alpha: alpha must be in [0, 0.5]");
  }
  const double raw = std::ceil((1.0 - alpha) * static_cast<double>(n));
  std::size_t h = static_cast<std::size_t>(raw);
  const std::size_t h_min = (n + 1) / 2;
  if (h < h_min) h = h_min;
  if (h > n) h = n;
  return h;
}

/// Converts a per-observation l1 weight to the total-penalty convention used
/// throughout this library: lambda1 = h * lambda_per_obs.
inline double per_obs_to_total(std::size_t h, double lambda_per_obs) {
  if (h < 1) throw std::invalid_argument("per_obs_to_total: h must be >= 1");
  if (lambda_per_obs < 0.0) {
    throw std::invalid_argument("per_obs_to_total: lambda must be >= 0");
  }
  return static_cast<double>(h) * lambda_per_obs;
}

/// One concentration step: fit a lasso on the current subset, then retain the
/// h observations with the smallest squared residuals of that fit (over all n,
/// ties broken by index). Iterating this never increases the trimmed objective.
inline std::pair<IndexSet, std::vector<double>> c_step(const Dataset& data,
                                                       const IndexSet& subset,
                                                       double lambda1,
                                                       const SolverConfig& cfg = {}) {
  std::vector<double> beta =
      lasso_cd(data, lambda1, cfg, std::span<const std::size_t>(subset));
  std::vector<double> r = residuals(data, beta);
  for (double& v : r) v = v * v;
  IndexSet next = smallest_h_indices(r, subset.size());
  return {std::move(next), std::move(beta)};
}

namespace detail {

struct LtsChainResult {
  LtsFit fit;
  bool ok = false;
  std::string error;
};

inline LtsChainResult run_lts_chain(const Dataset& data, const LtsConfig& cfg,
                                    const SolverConfig& solver, std::size_t start_id) {
  LtsChainResult out;
  try {
    Rng rng = Rng::stream(cfg.seed, start_id);
    IndexSet subset = rng.sample_without_replacement(data.n(), cfg.h);
    IndexSet next;
    std::vector<double> beta;
    std::size_t steps = 0;
    bool converged = false;
    while (steps < cfg.max_csteps) {
      std::tie(next, beta) = c_step(data, subset, cfg.lambda1, solver);
      ++steps;
      if (next == subset) {
        converged = true;
        break;
      }
      subset = next;
    }
    // `next` holds the h smallest residuals of `beta` whether or not the
    // chain reached its fixed point, so the reported pair is self-consistent.
    out.fit.beta = std::move(beta);
    out.fit.subset = std::move(next);
    out.fit.objective = trimmed_objective(data, out.fit.beta, cfg.h, cfg.lambda1);
    out.fit.start_id = start_id;
    out.fit.n_csteps = steps;
    out.fit.converged = converged;
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace detail

/// Multi-start sparse LTS: random size-h initial subsets, concentration steps
/// to a fixed point, best trimmed objective wins (ties to the lowest
/// start_id). Start streams are seeded from (seed, start_id), so the result
/// is identical no matter how the starts are scheduled.
inline LtsFit sparse_lts_fit(const Dataset& data, const LtsConfig& cfg,
                             const SolverConfig& solver = {}, unsigned threads = 1) {
  cfg.validate(data.n());
  solver.validate();

  std::vector<detail::LtsChainResult> results(cfg.n_starts);
  parallel_for(cfg.n_starts, threads, [&](std::size_t s) {
    results[s] = detail::run_lts_chain(data, cfg, solver, s);
  });

  std::optional<std::size_t> winner;
  for (std::size_t s = 0; s < results.size(); ++s) {
    if (!results[s].ok) continue;
    if (!winner || results[s].fit.objective < results[*winner].fit.objective) {
      winner = s;
    }
  }
  if (!winner) {
    std::string msg = "sparse_lts_fit: all " + std::to_string(cfg.n_starts) +
                      " starts failed;";
    for (std::size_t s = 0; s < results.size() && s < 3; ++s) {
      msg += " [start " + std::to_string(s) + ": " + results[s].error + "]";
    }
    throw std::runtime_error(msg);
  }
  return results[*winner].fit;
}

/// BIC convention for the trimmed fit: h*log(RSS_H/h) + log(h)*df with
/// df = #nonzero coefficients. Returns -infinity when the retained subset is
/// fit exactly (RSS_H == 0).
inline double bic_score(const Dataset& data, const LtsFit& fit) {
  check_beta_length(data, fit.beta);
  const std::size_t h = fit.subset.size();
  if (h < 1) throw std::invalid_argument("bic_score: empty subset");
  std::vector<double> r = residuals(data, fit.beta);
  double rss = 0.0;
  for (std::size_t i : fit.subset) {
    if (i >= data.n()) throw std::invalid_argument("bic_score: subset index out of range");
    rss += r[i] * r[i];
  }
  if (rss == 0.0) return -std::numeric_limits<double>::infinity();
  const double df = static_cast<double>(l0_count(fit.beta));
  const double hh = static_cast<double>(h);
  return hh * std::log(rss / hh) + std::log(hh) * df;
}

}  // namespace trimshift
