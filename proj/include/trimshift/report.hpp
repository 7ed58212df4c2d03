#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "trimshift/dataset.hpp"
#include "trimshift/equivalence.hpp"
#include "trimshift/mean_shift.hpp"
#include "trimshift/sparse_lts.hpp"

namespace trimshift {

using json = nlohmann::ordered_json;

/// Machine-readable fit summary emitted by the CLI. Serializes to JSON and
/// parses back losslessly (doubles round-trip exactly).
struct FitReport {
  std::string method;  // "lts" or "so"
  json parameters = json::object();
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<std::pair<std::size_t, double>> beta;  // sparse: (index, value)
  std::vector<std::size_t> outliers;
  double objective = 0.0;
  std::vector<double> fitted;
  json diagnostics = json::object();
  bool converged = true;

  bool operator==(const FitReport&) const = default;
};

inline void to_json(json& j, const FitReport& r) {
  j = json{{"method", r.method},
           {"parameters", r.parameters},
           {"n", r.n},
           {"p", r.p},
           {"beta", r.beta},
           {"outliers", r.outliers},
           {"objective", r.objective},
           {"fitted", r.fitted},
           {"diagnostics", r.diagnostics},
           {"converged", r.converged}};
}

inline void from_json(const json& j, FitReport& r) {
  j.at("method").get_to(r.method);
  r.parameters = j.at("parameters");
  j.at("n").get_to(r.n);
  j.at("p").get_to(r.p);
  j.at("beta").get_to(r.beta);
  j.at("outliers").get_to(r.outliers);
  j.at("objective").get_to(r.objective);
  j.at("fitted").get_to(r.fitted);
  r.diagnostics = j.at("diagnostics");
  j.at("converged").get_to(r.converged);
}

inline std::vector<std::pair<std::size_t, double>> sparse_beta(std::span<const double> beta) {
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) out.emplace_back(j, beta[j]);
  }
  return out;
}

inline std::vector<double> fitted_values(const Dataset& data, std::span<const double> beta) {
  std::vector<double> f(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) f[i] = dot(data.X.row(i), beta);
  return f;
}

inline FitReport make_lts_report(const Dataset& data, const LtsFit& fit, json parameters) {
  FitReport r;
  r.method = "lts";
  r.parameters = std::move(parameters);
  r.n = data.n();
  r.p = data.p();
  r.beta = sparse_beta(fit.beta);
  r.outliers = detail::complement_of(fit.subset, data.n());
  r.objective = fit.objective;
  r.fitted = fitted_values(data, fit.beta);
  r.diagnostics = json{{"start_id", fit.start_id},
                       {"n_csteps", fit.n_csteps},
                       {"subset", fit.subset}};
  r.converged = fit.converged;
  return r;
}

inline FitReport make_so_report(const Dataset& data, const SoFit& fit, json parameters) {
  FitReport r;
  r.method = "so";
  r.parameters = std::move(parameters);
  r.n = data.n();
  r.p = data.p();
  r.beta = sparse_beta(fit.beta);
  r.outliers = fit.outlier_set;
  r.objective = fit.objective;
  r.fitted = fitted_values(data, fit.beta);
  r.diagnostics = json{{"n_iters", fit.n_iters},
                       {"trace", fit.trace},
                       {"gamma", sparse_beta(fit.gamma)}};
  r.converged = fit.converged;
  return r;
}

inline json comparison_to_json(const ComparisonReport& rep) {
  return json{{"h", rep.h},
              {"lts_objective", rep.lts_objective},
              {"so_objective", rep.so_objective},
              {"profiling_gap", rep.profiling_gap},
              {"beta_distance", rep.beta_distance},
              {"fitted_correlation", rep.fitted_correlation},
              {"correlation_degenerate", rep.correlation_degenerate},
              {"outlier_agreement", rep.outlier_agreement},
              {"proposition_holds", rep.proposition_holds}};
}

}  // namespace trimshift
