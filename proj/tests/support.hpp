#pragma once

#include "qconv/data.hpp"
#include "qconv/random.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <sstream>
#include <string>

namespace support {

inline const char* kHeader =
    "region_id,country,coord_x,coord_y,gdp_pw_initial,gdp_pw_final,pop_growth,saving_rate,human_capital\n";

inline qconv::Dataset parse(const std::string& csv) {
  std::istringstream in(csv);
  return qconv::parse_dataset(in);
}

// Random design with an intercept column and p-1 uniform covariates.
inline Eigen::MatrixXd random_design(qconv::Rng& rng, Eigen::Index n, Eigen::Index p) {
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) X(i, j) = rng.uniform(-2.0, 2.0);
  }
  return X;
}

inline Eigen::VectorXd random_outcome(qconv::Rng& rng, const Eigen::MatrixXd& X) {
  Eigen::VectorXd beta(X.cols());
  for (Eigen::Index j = 0; j < beta.size(); ++j) beta(j) = rng.uniform(-1.0, 1.0);
  Eigen::VectorXd g = X * beta;
  for (Eigen::Index i = 0; i < g.size(); ++i) g(i) += rng.normal();
  return g;
}

inline std::filesystem::path fixture_path() { return std::filesystem::path(QCONV_SOURCE_DIR) / "data" / "fixture_187.csv"; }

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("qconv_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace support
