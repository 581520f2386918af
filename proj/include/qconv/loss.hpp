#pragma once

#include "qconv/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace qconv {

inline void require_quantile_level(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("quantile level must lie in (0,1), got " + std::to_string(tau));
}

// rho_tau(r) = r (tau - 1{r < 0}).
inline double check_function(double tau, double r) { return r >= 0 ? tau * r : (tau - 1.0) * r; }

// Unscaled check loss: sum of rho_tau over residuals.
template <typename Derived>
double check_loss(double tau, const Eigen::MatrixBase<Derived>& residuals) {
  require_quantile_level(tau);
  double total = 0.0;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) total += check_function(tau, residuals.derived()(i));
  return total;
}

// Left-continuous inverse of the empirical CDF: smallest x with F_n(x) >= tau.
template <typename Derived>
double empirical_quantile(const Eigen::MatrixBase<Derived>& sample, double tau) {
  require_quantile_level(tau);
  const Eigen::Index n = sample.size();
  if (n == 0) throw DataError("empirical_quantile: empty sample");
  std::vector<double> sorted(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) sorted[i] = sample.derived()(i);
  // Order statistic ceil(n tau); the 1e-9 guard absorbs representation error in n*tau.
  auto rank = static_cast<Eigen::Index>(std::ceil(static_cast<double>(n) * tau - 1e-9));
  rank = std::clamp<Eigen::Index>(rank, 1, n);
  std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end());
  return sorted[rank - 1];
}

}  // namespace qconv
