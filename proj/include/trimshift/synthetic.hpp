#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "trimshift/dataset.hpp"
#include "trimshift/rng.hpp"

namespace trimshift {

/// Parameters of the contaminated-regression generator. The first s
/// coefficients carry the signal and the first n_outliers responses are
/// shifted upward by shift_magnitude noise standard deviations.
struct SyntheticSpec {
  std::size_t n = 60;
  std::size_t p = 10;
  std::size_t s = 3;
  double beta_magnitude = 1.0;
  std::size_t n_outliers = 0;
  double shift_magnitude = 8.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1 || p < 1) throw std::invalid_argument("SyntheticSpec: n and p must be >= 1");
    if (s > p) throw std::invalid_argument("SyntheticSpec: s must be <= p");
    if (2 * n_outliers > n) {
      throw std::invalid_argument("SyntheticSpec: n_outliers must be <= n/2");
    }
    if (noise_sd < 0.0) throw std::invalid_argument("SyntheticSpec: noise_sd must be >= 0");
  }
};

struct SyntheticTruth {
  std::vector<double> beta_true;
  std::vector<std::size_t> outlier_indices;
};

struct SyntheticData {
  Dataset data;
  SyntheticTruth truth;
};

/// X is standard normal, y = X*beta_true + noise, contaminated rows get an
/// additive mean shift. Bit-reproducible for a fixed seed.
inline SyntheticData gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  Matrix X(spec.n, spec.p);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < spec.p; ++j) X(i, j) = rng.normal();
  }

  std::vector<double> beta_true(spec.p, 0.0);
  for (std::size_t j = 0; j < spec.s; ++j) beta_true[j] = spec.beta_magnitude;

  std::vector<double> y(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    y[i] = dot(X.row(i), beta_true) + spec.noise_sd * rng.normal();
  }
  std::vector<std::size_t> outliers(spec.n_outliers);
  for (std::size_t i = 0; i < spec.n_outliers; ++i) {
    y[i] += spec.shift_magnitude * spec.noise_sd;
    outliers[i] = i;
  }

  return SyntheticData{Dataset(std::move(y), std::move(X)),
                       SyntheticTruth{std::move(beta_true), std::move(outliers)}};
}

}  // namespace trimshift
