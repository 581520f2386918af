#include "qconv/linalg.hpp"

#include "qconv/errors.hpp"

#include <algorithm>
#include <sstream>

namespace qconv {

RankReport column_rank(const Eigen::Ref<const Eigen::MatrixXd>& A, double relative_tolerance) {
  RankReport report;
  const Eigen::Index p = A.cols();
  if (p == 0) return report;
  Eigen::MatrixXd scaled = A;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double norm = scaled.col(j).norm();
    if (norm > 0) scaled.col(j) /= norm;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
  const Eigen::MatrixXd R = qr.matrixR().topRows(std::min(A.rows(), p)).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(R);
  const auto& sv = svd.singularValues();
  const double largest = sv.size() ? sv(0) : 0.0;
  report.smallest_singular_value = A.rows() >= p ? sv(sv.size() - 1) : 0.0;
  report.condition = report.smallest_singular_value > 0 ? largest / report.smallest_singular_value
                                                        : std::numeric_limits<double>::infinity();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > relative_tolerance * std::max(largest, 1e-300)) ++rank;
  }
  report.rank = rank;
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index i = rank; i < p; ++i) report.deficient_columns.push_back(perm(i));
  std::sort(report.deficient_columns.begin(), report.deficient_columns.end());
  return report;
}

void require_full_rank(const Eigen::Ref<const Eigen::MatrixXd>& A, const std::vector<std::string>& names,
                       const std::string& what) {
  const RankReport r = column_rank(A);
  if (r.full()) return;
  std::vector<std::string> cols;
  std::ostringstream msg;
  msg << what << " is rank deficient (rank " << r.rank << " of " << A.cols()
      << ", smallest singular value " << r.smallest_singular_value << "); offending columns:";
  for (auto j : r.deficient_columns) {
    cols.push_back(j < static_cast<Eigen::Index>(names.size()) ? names[j] : "col" + std::to_string(j));
    msg << ' ' << cols.back();
  }
  throw RankDeficiencyError(msg.str(), r.smallest_singular_value, cols);
}

bool has_intercept(const Eigen::Ref<const Eigen::MatrixXd>& A) {
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    if ((A.col(j).array() == 1.0).all()) return true;
  }
  return false;
}

}  // namespace qconv
