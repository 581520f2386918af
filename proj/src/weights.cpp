#include "qconv/weights.hpp"

#include "qconv/linalg.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace qconv {

WeightMatrix::WeightMatrix(SparseRowMatrix matrix, int neighbors, bool row_standardized)
    : matrix_(std::move(matrix)), neighbors_(neighbors), row_standardized_(row_standardized) {
  if (matrix_.rows() != matrix_.cols()) throw DimensionError("weight matrix must be square");
  matrix_.makeCompressed();
  for (Eigen::Index i = 0; i < matrix_.outerSize(); ++i) {
    for (SparseRowMatrix::InnerIterator it(matrix_, i); it; ++it) {
      if (it.col() == i) throw DataError("weight matrix has a nonzero diagonal at row " + std::to_string(i + 1));
      if (it.value() < 0) throw DataError("weight matrix has a negative entry");
    }
  }
}

Eigen::MatrixXd WeightMatrix::dense() const { return Eigen::MatrixXd(matrix_); }

WeightMatrix build_knn_weights(const Eigen::Ref<const Eigen::MatrixX2d>& coords, int k) {
  const Eigen::Index n = coords.rows();
  if (k < 1) throw ConfigError("neighbour count k must be >= 1");
  if (n <= k) {
    throw DataError("k-nearest-neighbour weights need n > k (n = " + std::to_string(n) +
                    ", k = " + std::to_string(k) + ")");
  }
  if (!coords.allFinite()) throw DataError("coordinates must be finite");

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * k);
  std::vector<Eigen::Index> order(n - 1);
  std::vector<double> dist2(n);
  const double weight = 1.0 / k;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double dx = coords(j, 0) - coords(i, 0);
      const double dy = coords(j, 1) - coords(i, 1);
      dist2[j] = dx * dx + dy * dy;
    }
    Eigen::Index m = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) order[m++] = j;
    }
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return dist2[a] < dist2[b] || (dist2[a] == dist2[b] && a < b);
    });
    for (int t = 0; t < k; ++t) triplets.emplace_back(i, order[t], weight);
  }
  SparseRowMatrix W(n, n);
  W.setFromTriplets(triplets.begin(), triplets.end());
  return WeightMatrix(std::move(W), k, true);
}

WeightMatrix build_knn_weights(const Dataset& ds, int k) { return build_knn_weights(ds.coordinates(), k); }

InstrumentMatrix build_instruments(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   const std::vector<std::string>& names, const WeightMatrix& W) {
  if (!W.row_standardized()) throw DataError("instrument construction requires a row-standardized W");
  if (X.rows() != W.size()) throw DimensionError("build_instruments: X and W disagree on n");
  if (X.cols() < 1 || !(X.col(0).array() == 1.0).all()) {
    throw DataError("build_instruments: first column of X must be the intercept");
  }
  if (static_cast<Eigen::Index>(names.size()) != X.cols()) {
    throw DimensionError("build_instruments: one name per column of X required");
  }
  const Eigen::Index p = X.cols();
  const Eigen::Index slopes = p - 1;
  const Eigen::MatrixXd lag1 = spatial_lag(W, X.rightCols(slopes));
  const Eigen::MatrixXd lag2 = spatial_lag(W, lag1);

  InstrumentMatrix inst;
  inst.Z.resize(X.rows(), p + 2 * slopes);
  inst.Z << X, lag1, lag2;
  inst.names = names;
  for (Eigen::Index j = 1; j < p; ++j) inst.names.push_back("W_" + names[j]);
  for (Eigen::Index j = 1; j < p; ++j) inst.names.push_back("W2_" + names[j]);
  require_full_rank(inst.Z, inst.names, "instrument matrix Z");
  return inst;
}

void write_coordinate_list(std::ostream& out, const WeightMatrix& W) {
  out << "row,col,weight\n";
  char buf[64];
  const auto& M = W.matrix();
  for (Eigen::Index i = 0; i < M.outerSize(); ++i) {
    for (SparseRowMatrix::InnerIterator it(M, i); it; ++it) {
      std::snprintf(buf, sizeof buf, "%lld,%lld,%.17g\n", static_cast<long long>(i + 1),
                    static_cast<long long>(it.col() + 1), it.value());
      out << buf;
    }
  }
}

}  // namespace qconv
