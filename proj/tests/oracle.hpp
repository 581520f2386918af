#pragma once

// Brute-force reference answers, written independently of the library solvers.

#include "qconv/loss.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

struct Best {
  double objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd theta;
  std::size_t subsets = 0;
};

// Some optimal solution of a check-loss LP interpolates p observations, so the minimum over
// every size-p exact-fit subset is the global minimum.
inline Best enumerate_exact_fits(const Eigen::MatrixXd& X, const Eigen::VectorXd& g, double tau) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  Best best;
  std::vector<int> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    Eigen::MatrixXd A(p, p);
    Eigen::VectorXd b(p);
    for (int r = 0; r < p; ++r) {
      A.row(r) = X.row(idx[r]);
      b(r) = g(idx[r]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() == p) {
      const Eigen::VectorXd theta = lu.solve(b);
      const Eigen::VectorXd r = g - X * theta;
      double loss = 0.0;
      for (int i = 0; i < n; ++i) loss += r(i) >= 0 ? tau * r(i) : (tau - 1.0) * r(i);
      ++best.subsets;
      if (loss < best.objective) {
        best.objective = loss;
        best.theta = theta;
      }
    }
    int k = p - 1;
    while (k >= 0 && idx[k] == n - p + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < p; ++j) idx[j] = idx[j - 1] + 1;
  }
  return best;
}

// Intercept-only model: the minimizer is one of the observed values.
inline double best_location(const Eigen::VectorXd& g, double tau) {
  double best = g(0);
  double best_loss = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < g.size(); ++c) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < g.size(); ++i) loss += qconv::check_function(tau, g(i) - g(c));
    if (loss < best_loss - 1e-15) {
      best_loss = loss;
      best = g(c);
    }
  }
  return best;
}

// Pairwise k-nearest neighbours by full sort of (distance, index).
inline std::vector<std::vector<int>> knn_lists(const Eigen::MatrixX2d& coords, int k) {
  const int n = static_cast<int>(coords.rows());
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> d;
    for (int j = 0; j < n; ++j) {
      if (j != i) d.emplace_back((coords.row(i) - coords.row(j)).squaredNorm(), j);
    }
    std::sort(d.begin(), d.end());
    for (int m = 0; m < k; ++m) out[i].push_back(d[m].second);
    std::sort(out[i].begin(), out[i].end());
  }
  return out;
}

}  // namespace oracle
