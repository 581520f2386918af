#pragma once

#include "qconv/data.hpp"
#include "qconv/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <string>
#include <vector>

namespace qconv {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Row-major sparse spatial connectivity matrix W. Immutable once built.
class WeightMatrix {
 public:
  WeightMatrix(SparseRowMatrix matrix, int neighbors, bool row_standardized);

  const SparseRowMatrix& matrix() const { return matrix_; }
  Eigen::Index size() const { return matrix_.rows(); }
  int neighbors() const { return neighbors_; }
  bool row_standardized() const { return row_standardized_; }

  // Dense copy; only for small fixtures.
  Eigen::MatrixXd dense() const;

 private:
  SparseRowMatrix matrix_;
  int neighbors_;
  bool row_standardized_;
};

// k-nearest-neighbour weights, 1/k on each neighbour. Distance ties go to the lower index.
WeightMatrix build_knn_weights(const Eigen::Ref<const Eigen::MatrixX2d>& coords, int k = 5);
WeightMatrix build_knn_weights(const Dataset& ds, int k = 5);

// W x for a vector or each column of a matrix.
template <typename Derived>
Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime> spatial_lag(
    const WeightMatrix& W, const Eigen::MatrixBase<Derived>& x) {
  if (x.rows() != W.size()) {
    throw DimensionError("spatial_lag: W is " + std::to_string(W.size()) + "x" + std::to_string(W.size()) +
                         " but argument has " + std::to_string(x.rows()) + " rows");
  }
  return W.matrix() * x.derived();
}

struct InstrumentMatrix {
  Eigen::MatrixXd Z;
  std::vector<std::string> names;

  Eigen::Index cols() const { return Z.cols(); }
};

// Z = [X, W X_, W^2 X_] with X_ the non-intercept columns. X must carry the intercept first.
InstrumentMatrix build_instruments(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                   const std::vector<std::string>& names, const WeightMatrix& W);

// "row,col,weight" text with 1-based indices, rows in order.
void write_coordinate_list(std::ostream& out, const WeightMatrix& W);

}  // namespace qconv
