#pragma once

#include "qconv/qr.hpp"
#include "qconv/weights.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace qconv {

enum class Estimator { Ivqr, Dsqr };
std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& text);

// How the instrument coefficient is scored at each candidate rho.
enum class IvqrCriterion { Wald, Unweighted };
std::string to_string(IvqrCriterion c);

struct RhoGrid {
  double lo = -0.95;
  double hi = 0.95;
  double step = 0.01;

  std::vector<double> values() const;
  static RhoGrid parse(const std::string& text);
};

struct SpatialOptions {
  RhoGrid grid;
  IvqrCriterion criterion = IvqrCriterion::Wald;
  SolverOptions solver;
};

// Everything a spatial-lag fit needs from one sample: X, g, Wg, the instruments Z and the
// least-squares projection of Wg on Z. Rows can be resampled for the bootstrap.
class SpatialDesign {
 public:
  SpatialDesign(Eigen::MatrixXd X, Eigen::VectorXd outcome, Eigen::VectorXd lag, InstrumentMatrix instruments,
                std::vector<std::string> names);

  static SpatialDesign build(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<std::string>& names,
                             const Eigen::Ref<const Eigen::VectorXd>& g, const WeightMatrix& W);

  SpatialDesign resample(const std::vector<Eigen::Index>& rows) const;

  const Eigen::MatrixXd& X() const { return X_; }
  const Eigen::VectorXd& outcome() const { return outcome_; }
  const Eigen::VectorXd& lag() const { return lag_; }
  const InstrumentMatrix& instruments() const { return instruments_; }
  const Eigen::VectorXd& projected_lag() const { return projected_lag_; }
  const std::vector<std::string>& names() const { return names_; }
  Eigen::Index rows() const { return X_.rows(); }

  // [X, projected lag]: the regressors of the IVQR inner fit.
  Eigen::MatrixXd augmented() const;

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd outcome_;
  Eigen::VectorXd lag_;
  InstrumentMatrix instruments_;
  Eigen::VectorXd projected_lag_;
  std::vector<std::string> names_;
};

struct ProfilePoint {
  double rho = 0.0;
  double criterion = 0.0;
  double coefficient = 0.0;  // on the projected lag
  double std_error = 0.0;    // NaN when unweighted
};

struct SpatialQuantileFit {
  double tau;
  double rho;
  Eigen::VectorXd theta;
  // g - rho W g - X theta
  Eigen::VectorXd residuals;
  Estimator estimator;
  // IVQR (rho candidate -> criterion) curve in grid order; empty for DSQR.
  std::vector<ProfilePoint> profile;
  double auxiliary_coefficient;
  IvqrCriterion criterion;
  bool boundary_warning;
  // IVQR: fit of g - rho Wg on [X, dhat]. DSQR: second stage of g on [X, first-stage Wg].
  QuantileFit inner;
  // DSQR first-stage prediction of Wg (empty for IVQR).
  Eigen::VectorXd first_stage_lag;
};

// Inner IVQR fit at one candidate rho.
QuantileFit ivqr_inner_fit(const SpatialDesign& design, double rho, double tau, const SolverOptions& solver = {},
                           const std::optional<Eigen::VectorXd>& start = std::nullopt);

SpatialQuantileFit fit_ivqr(const SpatialDesign& design, double tau, const SpatialOptions& options = {});
SpatialQuantileFit fit_dsqr(const SpatialDesign& design, double tau, const SpatialOptions& options = {});
SpatialQuantileFit fit_spatial(const SpatialDesign& design, double tau, Estimator estimator,
                               const SpatialOptions& options = {});

struct SpatialProcessEntry {
  double tau;
  std::optional<SpatialQuantileFit> fit;
  std::string error;
};

// One fit per tau; a failing tau is reported in its entry while the rest of the grid completes.
std::vector<SpatialProcessEntry> fit_spatial_process(const SpatialDesign& design, const std::vector<double>& taus,
                                                     Estimator estimator, const SpatialOptions& options = {},
                                                     int workers = 1);

}  // namespace qconv
