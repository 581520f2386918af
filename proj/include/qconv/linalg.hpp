#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace qconv {

struct RankReport {
  Eigen::Index rank = 0;
  double smallest_singular_value = 0.0;  // of the column-normalized matrix
  double condition = 0.0;
  std::vector<Eigen::Index> deficient_columns;  // columns not in the pivoted leading set

  bool full() const { return deficient_columns.empty(); }
};

// Numerical column rank of A after scaling every column to unit norm.
RankReport column_rank(const Eigen::Ref<const Eigen::MatrixXd>& A, double relative_tolerance = 1e-10);

// Throws RankDeficiencyError naming the offending columns when A is not of full column rank.
void require_full_rank(const Eigen::Ref<const Eigen::MatrixXd>& A, const std::vector<std::string>& names,
                       const std::string& what);

// True when some column of A equals 1 everywhere.
bool has_intercept(const Eigen::Ref<const Eigen::MatrixXd>& A);

}  // namespace qconv
