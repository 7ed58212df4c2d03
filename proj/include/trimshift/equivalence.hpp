#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "trimshift/core.hpp"
#include "trimshift/dataset.hpp"
#include "trimshift/lasso.hpp"
#include "trimshift/mean_shift.hpp"
#include "trimshift/parallel.hpp"
#include "trimshift/rng.hpp"
#include "trimshift/sparse_lts.hpp"
#include "trimshift/synthetic.hpp"

namespace trimshift {

inline constexpr std::size_t kDefaultEnumerationCap = 200000;

namespace detail {

/// C(n, k), capped; returns cap + 1 once the count exceeds it.
inline std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    c *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (c > static_cast<double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(c + 0.5);
}

/// Visits all size-k subsets of [0, n) in lexicographic order.
template <typename F>
void for_each_combination(std::size_t n, std::size_t k, F&& f) {
  if (k > n) return;
  std::vector<std::size_t> comb(k);
  for (std::size_t i = 0; i < k; ++i) comb[i] = i;
  for (;;) {
    f(const_cast<const std::vector<std::size_t>&>(comb));
    if (k == 0) return;
    std::size_t i = k;
    while (i > 0) {
      --i;
      if (comb[i] != i + n - k) break;
      if (i == 0) return;
    }
    ++comb[i];
    for (std::size_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
  }
}

inline IndexSet complement_of(std::span<const std::size_t> sorted, std::size_t n) {
  IndexSet out;
  out.reserve(n - sorted.size());
  auto it = sorted.begin();
  for (std::size_t i = 0; i < n; ++i) {
    if (it != sorted.end() && *it == i) {
      ++it;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace detail

/// Exact sparse LTS by enumerating every size-h subset and solving the lasso
/// on it. Desk-scale only; guarded by the enumeration cap.
inline LtsFit brute_force_lts(const Dataset& data, std::size_t h, double lambda1,
                              const SolverConfig& solver = {},
                              std::size_t cap = kDefaultEnumerationCap) {
  const std::size_t n = data.n();
  if (h < 1 || h > n) {
    throw std::invalid_argument("brute_force_lts: h = " + std::to_string(h) +
                                " out of range [1, " + std::to_string(n) + "]");
  }
  if (detail::binomial_capped(n, h, cap) > cap) {
    throw std::invalid_argument("brute_force_lts: C(" + std::to_string(n) + ", " +
                                std::to_string(h) + ") exceeds the enumeration cap of " +
                                std::to_string(cap) + "; use a smaller instance");
  }

  std::optional<double> best;
  std::vector<double> best_beta;
  detail::for_each_combination(n, h, [&](const IndexSet& subset) {
    const std::vector<double> beta =
        lasso_cd(data, lambda1, solver, std::span<const std::size_t>(subset));
    double obj = lambda1 * l1_norm(beta);
    for (std::size_t i : subset) {
      const double r = data.y[i] - dot(data.X.row(i), beta);
      obj += r * r;
    }
    if (!best || obj < *best) {
      best = obj;
      best_beta = beta;
    }
  });

  LtsFit fit;
  fit.beta = std::move(best_beta);
  std::vector<double> sq = residuals(data, fit.beta);
  for (double& v : sq) v = v * v;
  fit.subset = smallest_h_indices(sq, h);
  fit.objective = trimmed_objective(data, fit.beta, h, lambda1);
  fit.converged = true;

  // The winner must attain its h smallest residuals on its own subset, else
  // one more concentration step would improve it and the enumeration missed
  // a better subset.
  if (std::abs(fit.objective - *best) > 1e-8 * (1.0 + std::abs(*best))) {
    throw std::logic_error("brute_force_lts: winner is not concentration-consistent");
  }
  return fit;
}

/// Exact SO estimator by enumerating gamma supports up to max_support:
/// beta solves the lasso on the complement, gamma absorbs the supported
/// residuals exactly.
inline SoFit brute_force_so(const Dataset& data, const PenaltyConfig& pen,
                            std::size_t max_support, const SolverConfig& solver = {},
                            std::size_t cap = kDefaultEnumerationCap) {
  pen.validate();
  if (!(pen.lambda2 > 0.0)) {
    throw std::invalid_argument("brute_force_so: lambda2 must be > 0");
  }
  const std::size_t n = data.n();
  if (max_support > n) max_support = n;
  std::size_t total = 0;
  for (std::size_t k = 0; k <= max_support; ++k) {
    const std::size_t c = detail::binomial_capped(n, k, cap);
    total = (c > cap || total + c > cap) ? cap + 1 : total + c;
    if (total > cap) {
      throw std::invalid_argument(
          "brute_force_so: support enumeration exceeds the cap of " + std::to_string(cap) +
          "; use a smaller instance");
    }
  }

  std::optional<double> best;
  std::vector<double> best_beta;
  IndexSet best_support;
  for (std::size_t k = 0; k <= max_support; ++k) {
    detail::for_each_combination(n, k, [&](const IndexSet& sup) {
      std::vector<double> beta;
      double obj = pen.lambda2 * static_cast<double>(k);
      if (k == n) {
        beta.assign(data.p(), 0.0);  // gamma absorbs everything; beta minimizes its penalty
      } else {
        const IndexSet keep = detail::complement_of(sup, n);
        beta = lasso_cd(data, pen.lambda1, solver, std::span<const std::size_t>(keep));
        for (std::size_t i : keep) {
          const double r = data.y[i] - dot(data.X.row(i), beta);
          obj += r * r;
        }
        obj += pen.lambda1 * l1_norm(beta);
      }
      if (!best || obj < *best) {
        best = obj;
        best_beta = std::move(beta);
        best_support = sup;
      }
    });
  }

  SoFit fit;
  fit.beta = std::move(best_beta);
  fit.gamma.assign(n, 0.0);
  const std::vector<double> r = residuals(data, fit.beta);
  for (std::size_t i : best_support) fit.gamma[i] = r[i];
  fit.outlier_set = support(fit.gamma);
  fit.objective = joint_objective(data, fit.beta, fit.gamma, pen);
  fit.converged = true;
  fit.trace.push_back(fit.objective);

  // A global winner obeys the profiling rule: flagged residuals exceed
  // lambda2, retained ones do not. Anything else contradicts optimality.
  const double slack = 1e-9 * std::max(1.0, pen.lambda2);
  auto it = best_support.begin();
  for (std::size_t i = 0; i < n; ++i) {
    const bool flagged = (it != best_support.end() && *it == i);
    if (flagged) ++it;
    const double sq = r[i] * r[i];
    if (flagged && sq < pen.lambda2 - slack) {
      throw std::logic_error("brute_force_so: flagged residual below lambda2");
    }
    if (!flagged && sq > pen.lambda2 + slack) {
      throw std::logic_error("brute_force_so: retained residual above lambda2");
    }
  }
  return fit;
}

struct ProfilingIdentity {
  double gap = 0.0;
  std::size_t h_implied = 0;
  bool boundary = false;  // some residual sits exactly on the lambda2 threshold
};

/// Checks the profiling identity for an arbitrary beta: with gamma profiled
/// out, the joint objective minus lambda2*||gamma||_0 equals the trimmed
/// objective at h = n - ||gamma||_0. This holds algebraically away from the
/// lambda2 boundary; the gap is pure floating-point noise.
inline ProfilingIdentity verify_profiling_identity(const Dataset& data,
                                                   std::span<const double> beta,
                                                   const PenaltyConfig& pen) {
  const std::vector<double> gamma = profile_gamma(data, beta, pen.lambda2);
  const std::size_t n_out = l0_count(gamma);

  ProfilingIdentity out;
  out.h_implied = data.n() - n_out;
  const std::vector<double> r = residuals(data, beta);
  for (double v : r) {
    if (v * v == pen.lambda2) out.boundary = true;
  }
  const double joint = joint_objective(data, beta, gamma, pen);
  std::vector<double> sq(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) sq[i] = r[i] * r[i];
  const double trimmed =
      sum_h_smallest(std::move(sq), out.h_implied) + pen.lambda1 * l1_norm(beta);
  out.gap = std::abs(joint - pen.lambda2 * static_cast<double>(n_out) - trimmed);
  return out;
}

struct ComparisonReport {
  std::size_t h = 0;
  double lts_objective = 0.0;
  double so_objective = 0.0;
  double profiling_gap = 0.0;
  double beta_distance = 0.0;        // max-norm between the two beta vectors
  double fitted_correlation = 0.0;   // Pearson correlation of fitted values
  bool correlation_degenerate = false;
  double outlier_agreement = 0.0;    // Jaccard index of the flagged sets
  bool proposition_holds = false;
};

namespace detail {

inline double jaccard(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) {
      ++inter;
      ++ia;
      ++ib;
    } else if (*ia < *ib) {
      ++ia;
    } else {
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline ComparisonReport make_report(const Dataset& data, const PenaltyConfig& pen,
                                    std::span<const double> beta_lts, double lts_objective,
                                    std::span<const std::size_t> lts_flagged,
                                    const SoFit& so) {
  ComparisonReport rep;
  const std::size_t n_out = so.outlier_set.size();
  rep.h = data.n() - n_out;
  rep.lts_objective = lts_objective;
  rep.so_objective = so.objective;

  std::vector<double> sq = residuals(data, so.beta);
  for (double& v : sq) v = v * v;
  const double so_trimmed =
      sum_h_smallest(std::move(sq), rep.h) + pen.lambda1 * l1_norm(so.beta);
  rep.profiling_gap =
      std::abs(rep.so_objective - pen.lambda2 * static_cast<double>(n_out) - so_trimmed);

  rep.beta_distance = 0.0;
  for (std::size_t j = 0; j < data.p(); ++j) {
    rep.beta_distance = std::max(rep.beta_distance, std::abs(beta_lts[j] - so.beta[j]));
  }

  std::vector<double> fit_lts(data.n()), fit_so(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    fit_lts[i] = dot(data.X.row(i), beta_lts);
    fit_so[i] = dot(data.X.row(i), so.beta);
  }
  const double corr = pearson(fit_lts, fit_so);
  rep.correlation_degenerate = std::isnan(corr);
  rep.fitted_correlation = rep.correlation_degenerate ? 0.0 : corr;

  rep.outlier_agreement = jaccard(lts_flagged, so.outlier_set);
  rep.proposition_holds =
      rep.profiling_gap <= 1e-10 && rep.lts_objective >= so_trimmed - 1e-8;
  return rep;
}

}  // namespace detail

/// Runs both oracles and checks the Proposition on one instance: the SO
/// minimizer's beta must attain the LTS optimum at h = n - ||gamma||_0.
/// Objectives are compared rather than coefficient vectors, which need not
/// be unique.
inline ComparisonReport verify_proposition(const Dataset& data, const PenaltyConfig& pen,
                                           std::size_t max_support,
                                           const SolverConfig& solver = {},
                                           std::size_t cap = kDefaultEnumerationCap) {
  const SoFit so = brute_force_so(data, pen, max_support, solver, cap);
  const std::size_t h = data.n() - so.outlier_set.size();
  if (h < 1) {
    throw std::runtime_error(
        "verify_proposition: the SO oracle flagged every observation; no LTS problem "
        "is implied (lambda2 too small)");
  }
  const LtsFit lts = brute_force_lts(data, h, pen.lambda1, solver, cap);
  const IndexSet lts_flagged = detail::complement_of(lts.subset, data.n());
  return detail::make_report(data, pen, lts.beta, lts.objective, lts_flagged, so);
}

/// Report on two heuristic fits (no oracles involved); fitted values,
/// flagged-set agreement, and the profiling identity of the SO fit.
inline ComparisonReport compare_fits(const Dataset& data, const LtsFit& lts, const SoFit& so,
                                     const PenaltyConfig& pen) {
  check_beta_length(data, lts.beta);
  check_beta_length(data, so.beta);
  const IndexSet lts_flagged = detail::complement_of(lts.subset, data.n());
  return detail::make_report(data, pen, lts.beta, lts.objective, lts_flagged, so);
}

// ---------------------------------------------------------------------------
// Randomized Proposition sweep (shared by the CLI and the acceptance suite).

struct SweepConfig {
  std::size_t count = 100;
  std::size_t n_min = 6;
  std::size_t n_max = 10;
  std::size_t p_min = 1;
  std::size_t p_max = 3;
  std::vector<double> lambda1_values = {0.0, 0.2, 1.0};
  std::uint64_t seed = 1;
  std::size_t cap = kDefaultEnumerationCap;

  void validate() const {
    if (count < 1) throw std::invalid_argument("SweepConfig: count must be >= 1");
    if (n_min < 2 || n_min > n_max) throw std::invalid_argument("SweepConfig: bad n range");
    if (p_min < 1 || p_min > p_max) throw std::invalid_argument("SweepConfig: bad p range");
    if (lambda1_values.empty()) {
      throw std::invalid_argument("SweepConfig: need at least one lambda1");
    }
  }
};

struct SweepInstance {
  std::size_t index = 0;
  std::size_t n = 0;
  std::size_t p = 0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::size_t h = 0;
  double objective_gap = 0.0;  // |trimmed(beta_SO) - LTS oracle objective|
  double profiling_gap = 0.0;
  bool boundary = false;       // excluded from pass/fail accounting
  bool pass = false;
};

struct SweepReport {
  std::vector<SweepInstance> instances;
  std::size_t n_pass = 0;
  std::size_t n_boundary = 0;
  bool all_pass = false;  // every non-boundary instance passed
};

namespace detail {

inline SweepInstance run_sweep_instance(const SweepConfig& cfg, const SolverConfig& solver,
                                        std::size_t index) {
  Rng rng = Rng::stream(cfg.seed, index);
  SweepInstance out;
  out.index = index;

  for (std::size_t attempt = 0;; ++attempt) {
    const std::size_t n = cfg.n_min + rng.below(cfg.n_max - cfg.n_min + 1);
    const std::size_t p = cfg.p_min + rng.below(cfg.p_max - cfg.p_min + 1);
    SyntheticSpec spec;
    spec.n = n;
    spec.p = p;
    spec.s = 1 + rng.below(p);
    spec.beta_magnitude = rng.uniform(0.5, 2.0);
    spec.n_outliers = rng.below(n / 3 + 1);
    spec.shift_magnitude = rng.uniform(4.0, 8.0);
    spec.noise_sd = 0.5;
    spec.seed = rng.next_u64();
    const SyntheticData synth = gen_synthetic(spec);

    const double lambda1 = cfg.lambda1_values[index % cfg.lambda1_values.size()];

    // lambda2 between two adjacent order statistics of the plain fit's
    // squared residuals, biased toward the upper half so the implied h stays
    // sensible.
    const std::vector<double> beta0 = lasso_cd(synth.data, lambda1, solver);
    std::vector<double> sq = residuals(synth.data, beta0);
    for (double& v : sq) v = v * v;
    std::sort(sq.begin(), sq.end());
    const std::size_t lo = std::min(n / 2, n - 2);
    const std::size_t k = lo + rng.below(n - lo - 1);
    const double lambda2 = 0.5 * (sq[k] + sq[k + 1]);
    if (!(lambda2 > 0.0) || sq[k] == sq[k + 1]) {
      if (attempt < 50) continue;
      throw std::runtime_error("sweep: could not draw a usable lambda2");
    }

    const PenaltyConfig pen{lambda1, lambda2};
    SoFit so;
    try {
      so = brute_force_so(synth.data, pen, n, solver, cfg.cap);
    } catch (const std::logic_error&) {
      if (attempt < 50) continue;  // boundary-degenerate draw
      throw;
    }
    if (so.outlier_set.size() >= n) {
      if (attempt < 50) continue;
      throw std::runtime_error("sweep: lambda2 draw left no retained observations");
    }

    out.n = n;
    out.p = p;
    out.lambda1 = lambda1;
    out.lambda2 = lambda2;
    out.h = n - so.outlier_set.size();

    const ProfilingIdentity ident = verify_profiling_identity(synth.data, so.beta, pen);
    const std::vector<double> r = residuals(synth.data, so.beta);
    bool near_boundary = ident.boundary;
    for (double v : r) {
      if (std::abs(v * v - lambda2) <= 1e-12 * std::max(1.0, lambda2)) near_boundary = true;
    }
    out.boundary = near_boundary;

    const LtsFit lts = brute_force_lts(synth.data, out.h, lambda1, solver, cfg.cap);
    const double so_trimmed = trimmed_objective(synth.data, so.beta, out.h, lambda1);
    out.objective_gap = std::abs(so_trimmed - lts.objective);
    out.profiling_gap = ident.gap;
    out.pass = out.objective_gap <= 1e-8 && out.profiling_gap <= 1e-10;
    return out;
  }
}

}  // namespace detail

/// Random-instance Proposition sweep: every non-boundary instance must pass
/// for all_pass to hold.
inline SweepReport run_proposition_sweep(const SweepConfig& cfg,
                                         const SolverConfig& solver = {},
                                         unsigned threads = 1) {
  cfg.validate();
  // Guard the enumeration up front so oversized sweeps fail fast.
  std::size_t worst = 0;
  for (std::size_t k = 0; k <= cfg.n_max; ++k) {
    const std::size_t c = detail::binomial_capped(cfg.n_max, k, cfg.cap);
    worst = (c > cfg.cap || worst + c > cfg.cap) ? cfg.cap + 1 : worst + c;
  }
  if (worst > cfg.cap) {
    throw std::invalid_argument("run_proposition_sweep: n_max = " + std::to_string(cfg.n_max) +
                                " exceeds the enumeration cap of " + std::to_string(cfg.cap));
  }

  SweepReport report;
  report.instances.resize(cfg.count);
  parallel_for(cfg.count, threads, [&](std::size_t i) {
    report.instances[i] = detail::run_sweep_instance(cfg, solver, i);
  });
  report.all_pass = true;
  for (const auto& inst : report.instances) {
    if (inst.boundary) {
      ++report.n_boundary;
    } else if (inst.pass) {
      ++report.n_pass;
    } else {
      report.all_pass = false;
    }
  }
  return report;
}

}  // namespace trimshift
