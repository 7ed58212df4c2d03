#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "trimshift/matrix.hpp"

namespace trimshift {

/// A regression problem: response y (length n) and predictors X (n by p).
struct Dataset {
  std::vector<double> y;
  Matrix X;

  Dataset() = default;
  Dataset(std::vector<double> y_in, Matrix X_in) : y(std::move(y_in)), X(std::move(X_in)) {
    validate();
  }

  std::size_t n() const { return y.size(); }
  std::size_t p() const { return X.cols(); }

  void validate() const {
    if (y.empty()) throw std::invalid_argument("Dataset: n must be >= 1");
    if (X.cols() == 0) throw std::invalid_argument("Dataset: p must be >= 1");
    if (X.rows() != y.size()) {
      throw std::invalid_argument("Dataset: X has " + std::to_string(X.rows()) +
                                  " rows but y has length " + std::to_string(y.size()));
    }
    for (double v : y) {
      if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite entry in y");
    }
    for (double v : X.data()) {
      if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite entry in X");
    }
  }
};

/// Penalty weights of the joint objective: lambda1 on ||beta||_1 (total, not
/// per observation), lambda2 on ||gamma||_0.
struct PenaltyConfig {
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  void validate() const {
    if (lambda1 < 0.0) throw std::invalid_argument("PenaltyConfig: lambda1 must be >= 0");
    if (lambda2 < 0.0) throw std::invalid_argument("PenaltyConfig: lambda2 must be >= 0");
  }
};

/// Inner-solver knobs shared by every fit in the library. The sweep cap is
/// sized for wide problems (p >> n with many correlated active columns),
/// where certified convergence can take over 100k sweeps; small problems
/// stop orders of magnitude earlier.
struct SolverConfig {
  double tol = 1e-9;              // max absolute coordinate change per sweep
  std::size_t max_iter = 200000;  // sweep cap for coordinate descent
  std::uint64_t seed = 0;

  void validate() const {
    if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be > 0");
    if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
  }
};

inline void check_beta_length(const Dataset& data, std::span<const double> beta) {
  if (beta.size() != data.p()) {
    throw std::invalid_argument("beta has length " + std::to_string(beta.size()) +
                                " but p = " + std::to_string(data.p()));
  }
}

inline void check_gamma_length(const Dataset& data, std::span<const double> gamma) {
  if (gamma.size() != data.n()) {
    throw std::invalid_argument("gamma has length " + std::to_string(gamma.size()) +
                                " but n = " + std::to_string(data.n()));
  }
}

/// r_i = y_i - x_i'beta.
inline std::vector<double> residuals(const Dataset& data, std::span<const double> beta) {
  check_beta_length(data, beta);
  std::vector<double> r(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    r[i] = data.y[i] - dot(data.X.row(i), beta);
  }
  return r;
}

/// r_i = y_i - x_i'beta - gamma_i.
inline std::vector<double> residuals(const Dataset& data, std::span<const double> beta,
                                     std::span<const double> gamma) {
  check_gamma_length(data, gamma);
  std::vector<double> r = residuals(data, beta);
  for (std::size_t i = 0; i < data.n(); ++i) r[i] -= gamma[i];
  return r;
}

}  // namespace trimshift
