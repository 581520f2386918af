#pragma once

#include "qconv/data.hpp"
#include "qconv/weights.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>

namespace qconv {

enum class ErrorDistribution { Gaussian, StudentT };
enum class Layout { UniformSquare, ClusteredBlobs };
// UpperTailAmplified: regions whose error draw exceeds the `upper_threshold` quantile follow rho_upper.
enum class SpatialProfile { Constant, UpperTailAmplified };

std::string to_string(SpatialProfile p);
SpatialProfile parse_profile(const std::string& text);
Layout parse_layout(const std::string& text);

struct CovariateRange {
  double lo;
  double hi;
};

struct DgpSpec {
  Eigen::Index n = 400;
  double rho = 0.0;
  // Coefficients on [intercept, q, v, s, h].
  Eigen::VectorXd theta = (Eigen::VectorXd(5) << 0.19, -0.02, -0.01, 0.01, 0.005).finished();
  // Error scale is 1 + x' delta over the four slope covariates.
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(4);
  ErrorDistribution errors = ErrorDistribution::Gaussian;
  double df = 5.0;
  double error_scale = 0.004;
  std::uint64_t seed = 1;
  Layout layout = Layout::UniformSquare;
  int blobs = 12;
  SpatialProfile profile = SpatialProfile::Constant;
  double rho_upper = 0.8;
  double upper_threshold = 0.5;
  int neighbors = 5;
  // Uniform ranges of q, v, s, h (design scale). s must stay <= 0 so that saving_rate <= 1.
  std::array<CovariateRange, 4> ranges{{{9.0, 10.0}, {-3.5, -2.5}, {-2.0, -1.0}, {0.0, 1.0}}};
  int period_years = 28;
  double tech_plus_depreciation = 0.05;

  void validate() const;
};

// Closed-form conditional quantiles: Q(g | x, Wg) = rho Wg + x' theta(tau).
struct DgpTruth {
  Eigen::VectorXd theta;
  Eigen::VectorXd delta;
  double rho;
  ErrorDistribution errors;
  double df;
  double error_scale;
  SpatialProfile profile;
  double rho_upper;
  double upper_threshold;

  double error_quantile(double tau) const;
  // theta + (e_1, delta) F_u^{-1}(tau)
  Eigen::VectorXd coefficients(double tau) const;
  // Exact under the constant profile; only the direction is meaningful for the upper-tail profile.
  double rho_at(double tau) const;
};

struct SimulatedData {
  Dataset dataset;
  DesignMatrix design;
  WeightMatrix weights;
  DgpTruth truth;
  Eigen::VectorXd errors;        // epsilon = (1 + x'delta) u
  Eigen::VectorXd standardized;  // u
  Eigen::VectorXd region_rho;    // spatial parameter applied to each region
};

// Draws coordinates, W, covariates and errors, then solves (I - R W) g = X theta + epsilon.
SimulatedData generate(const DgpSpec& spec);

inline constexpr std::uint64_t kFixtureSeed = 1981;

// 187 regions in 12 synthetic countries (one coordinate blob each), planted beta < 0 and rho = 0.4.
SimulatedData paper_scale_fixture(std::uint64_t seed = kFixtureSeed);

}  // namespace qconv
