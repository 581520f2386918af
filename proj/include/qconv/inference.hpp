#pragma once

#include "qconv/qr.hpp"
#include "qconv/spatial.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace qconv {

enum class IntervalMethod { Bootstrap, Sandwich, Classical };
std::string to_string(IntervalMethod m);

struct IntervalSet {
  Eigen::VectorXd estimate;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double level = 0.90;
  IntervalMethod method = IntervalMethod::Bootstrap;
  int replicates = 0;
  int discarded = 0;
  std::string bandwidth_rule;

  Eigen::VectorXd width() const { return upper - lower; }
};

enum class BandwidthRule { HallSheather, Bofinger };
std::string to_string(BandwidthRule r);

// Bandwidths on the probability scale.
double hall_sheather_bandwidth(Eigen::Index n, double tau, double alpha = 0.05);
double bofinger_bandwidth(Eigen::Index n, double tau);

struct SandwichCovariance {
  Eigen::MatrixXd covariance;
  BandwidthRule rule = BandwidthRule::HallSheather;
  double bandwidth = 0.0;  // residual scale

  Eigen::VectorXd std_errors() const { return covariance.diagonal().cwiseSqrt(); }
};

// Kernel sandwich tau(1-tau) (P'FD)^{-1} P'P (D'FP)^{-1} with F the Gaussian-kernel density of the
// residuals at zero. D = regressors, P = instruments (P = D when omitted).
SandwichCovariance sandwich_covariance(const Eigen::Ref<const Eigen::MatrixXd>& regressors,
                                       const Eigen::Ref<const Eigen::VectorXd>& residuals, double tau,
                                       const Eigen::MatrixXd* instruments = nullptr);

IntervalSet sandwich_intervals(const QuantileFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& X,
                               double level = 0.90);
// Coefficients ordered (theta..., rho).
IntervalSet sandwich_intervals(const SpatialQuantileFit& fit, const SpatialDesign& design, double level = 0.90);

struct BootstrapOptions {
  int replicates = 999;
  double level = 0.90;
  std::uint64_t seed = 20240601;
  int workers = 1;
  SolverOptions solver;
};

// xy-pair bootstrap, percentile intervals.
IntervalSet bootstrap_intervals(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& g, double tau,
                                const BootstrapOptions& options = {});
// Row resampling of (X, g, Wg, Z); coefficients ordered (theta..., rho).
IntervalSet bootstrap_intervals(const SpatialDesign& design, double tau, Estimator estimator,
                                const SpatialOptions& spatial, const BootstrapOptions& options = {});

// Classical t intervals for least squares.
IntervalSet ols_intervals(const OlsFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& X, double level = 0.90);

enum class GrowthConvention { Annualized, Total };
std::string to_string(GrowthConvention c);

struct SpeedOfConvergence {
  double beta;
  int period;
  double lambda;
  GrowthConvention convention;
};

// Total growth: beta = -(1 - exp(-lambda T)). Annualized growth: beta T = -(1 - exp(-lambda T)).
SpeedOfConvergence convergence_speed(double beta, int period, GrowthConvention convention);
double beta_from_speed(double lambda, int period, GrowthConvention convention);

double normal_quantile(double p);

}  // namespace qconv
