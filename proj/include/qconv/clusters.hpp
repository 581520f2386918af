#pragma once

#include "qconv/data.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace qconv {

enum class BinningScheme { EqualWidth, EqualCount };
std::string to_string(BinningScheme s);
BinningScheme parse_scheme(const std::string& text);

struct ClusterAssignment {
  double tau_u = 0.90;
  int k = 3;
  BinningScheme scheme = BinningScheme::EqualWidth;
  // k-1 strictly increasing cut points.
  Eigen::VectorXd boundaries;
  std::vector<std::string> region_ids;
  // 1 = lowest residual interval, k = closest to the estimated quantile.
  std::vector<int> classes;
  Eigen::VectorXd residuals;
  // e.g. "qr" or "sqr:ivqr"
  std::string source;
};

// Equal-width bins are left-closed [b_{j-1}, b_j) with the top bin closed; equal-count bins are
// right-closed (b_{j-1}, b_j] at the empirical j/k residual quantiles.
ClusterAssignment classify_residuals(const Eigen::Ref<const Eigen::VectorXd>& residuals,
                                     const std::vector<std::string>& region_ids, int k,
                                     BinningScheme scheme = BinningScheme::EqualWidth);

struct ClassSummary {
  int label = 0;
  int count = 0;
  double residual_mean = 0.0;
  double residual_min = 0.0;
  double residual_max = 0.0;
};

struct ClusterSummary {
  std::vector<ClassSummary> classes;
  // country -> count per class (index 0 is class 1)
  std::map<std::string, std::vector<int>> composition;
};

ClusterSummary cluster_report(const ClusterAssignment& assignment, const Dataset& ds);

// region_id,class,residual
void write_assignment_csv(std::ostream& out, const ClusterAssignment& assignment);
// class,count,residual_mean,residual_min,residual_max followed by a country,class,count table.
void write_summary_csv(std::ostream& out, const ClusterSummary& summary);

}  // namespace qconv
