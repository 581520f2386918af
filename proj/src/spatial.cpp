#include "qconv/spatial.hpp"

#include "qconv/inference.hpp"
#include "qconv/linalg.hpp"
#include "qconv/parallel.hpp"

#include <cmath>
#include <limits>

namespace qconv {

std::string to_string(Estimator e) { return e == Estimator::Ivqr ? "ivqr" : "dsqr"; }

Estimator parse_estimator(const std::string& text) {
  if (text == "ivqr") return Estimator::Ivqr;
  if (text == "dsqr") return Estimator::Dsqr;
  throw ConfigError("unknown estimator '" + text + "' (expected ivqr or dsqr)");
}

std::string to_string(IvqrCriterion c) { return c == IvqrCriterion::Wald ? "wald" : "unweighted"; }

std::vector<double> RhoGrid::values() const {
  if (!(lo > -1.0 && hi < 1.0)) throw ConfigError("rho grid must lie inside (-1, 1)");
  return make_grid(lo, hi, step);
}

RhoGrid RhoGrid::parse(const std::string& text) {
  const auto v = parse_grid(text);
  RhoGrid grid;
  if (v.size() == 1) {
    grid.lo = grid.hi = v.front();
    grid.step = 1.0;
  } else {
    grid.lo = v.front();
    grid.hi = v.back();
    grid.step = v.size() > 1 ? v[1] - v[0] : 1.0;
  }
  grid.values();
  return grid;
}

SpatialDesign::SpatialDesign(Eigen::MatrixXd X, Eigen::VectorXd outcome, Eigen::VectorXd lag,
                             InstrumentMatrix instruments, std::vector<std::string> names)
    : X_(std::move(X)),
      outcome_(std::move(outcome)),
      lag_(std::move(lag)),
      instruments_(std::move(instruments)),
      names_(std::move(names)) {
  const Eigen::Index n = X_.rows();
  if (outcome_.size() != n || lag_.size() != n || instruments_.Z.rows() != n) {
    throw DimensionError("SpatialDesign: inconsistent row counts");
  }
  require_full_rank(instruments_.Z, instruments_.names, "instrument matrix Z");
  projected_lag_ = instruments_.Z * instruments_.Z.colPivHouseholderQr().solve(lag_);
}

SpatialDesign SpatialDesign::build(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<std::string>& names,
                                   const Eigen::Ref<const Eigen::VectorXd>& g, const WeightMatrix& W) {
  if (g.size() != W.size()) throw DimensionError("SpatialDesign: g and W disagree on n");
  InstrumentMatrix Z = build_instruments(X, names, W);
  Eigen::VectorXd lag = spatial_lag(W, g);
  return SpatialDesign(X, g, std::move(lag), std::move(Z), names);
}

SpatialDesign SpatialDesign::resample(const std::vector<Eigen::Index>& rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd X(m, X_.cols());
  Eigen::VectorXd g(m);
  Eigen::VectorXd lag(m);
  InstrumentMatrix Z{Eigen::MatrixXd(m, instruments_.Z.cols()), instruments_.names};
  for (Eigen::Index i = 0; i < m; ++i) {
    X.row(i) = X_.row(rows[i]);
    g(i) = outcome_(rows[i]);
    lag(i) = lag_(rows[i]);
    Z.Z.row(i) = instruments_.Z.row(rows[i]);
  }
  return SpatialDesign(std::move(X), std::move(g), std::move(lag), std::move(Z), names_);
}

Eigen::MatrixXd SpatialDesign::augmented() const {
  Eigen::MatrixXd D(X_.rows(), X_.cols() + 1);
  D << X_, projected_lag_;
  return D;
}

QuantileFit ivqr_inner_fit(const SpatialDesign& design, double rho, double tau, const SolverOptions& solver,
                           const std::optional<Eigen::VectorXd>& start) {
  const Eigen::VectorXd y = design.outcome() - rho * design.lag();
  return fit_quantile(design.augmented(), y, tau, solver, start);
}

namespace {

void check_rho(double rho, double tau) {
  if (!(std::abs(rho) < 1.0) || !std::isfinite(rho)) {
    throw NumericalError("estimated rho=" + std::to_string(rho) + " at tau=" + std::to_string(tau) +
                         " lies outside (-1, 1)");
  }
}

}  // namespace

SpatialQuantileFit fit_ivqr(const SpatialDesign& design, double tau, const SpatialOptions& options) {
  require_quantile_level(tau);
  const std::vector<double> grid = options.grid.values();
  const Eigen::MatrixXd D = design.augmented();
  const Eigen::Index p = design.X().cols();

  std::vector<ProfilePoint> profile;
  profile.reserve(grid.size());
  std::vector<std::optional<QuantileFit>> fits;
  fits.reserve(grid.size());
  IvqrCriterion criterion = options.criterion;
  std::optional<Eigen::VectorXd> start;
  for (double rho : grid) {
    const Eigen::VectorXd y = design.outcome() - rho * design.lag();
    QuantileFit fit = fit_quantile(D, y, tau, options.solver, start);
    start = fit.coefficients();
    ProfilePoint point{rho, 0.0, fit.coefficients()(p), std::numeric_limits<double>::quiet_NaN()};
    if (criterion == IvqrCriterion::Wald) {
      try {
        if (design.rows() <= 30) throw DegenerateError("too few observations for the sandwich");
        point.std_error = sandwich_covariance(D, fit.residuals(), tau).std_errors()(p);
        if (!(point.std_error > 0) || !std::isfinite(point.std_error)) throw DegenerateError("zero standard error");
      } catch (const NumericalError&) {
        // Mixed weighting would make the profile incomparable across rho.
        criterion = IvqrCriterion::Unweighted;
        for (auto& q : profile) {
          q.std_error = std::numeric_limits<double>::quiet_NaN();
          q.criterion = q.coefficient * q.coefficient;
        }
      }
    }
    point.criterion = criterion == IvqrCriterion::Wald
                          ? (point.coefficient / point.std_error) * (point.coefficient / point.std_error)
                          : point.coefficient * point.coefficient;
    if (criterion == IvqrCriterion::Unweighted) point.std_error = std::numeric_limits<double>::quiet_NaN();
    profile.push_back(point);
    fits.emplace_back(std::move(fit));
  }

  std::size_t best = 0;
  for (std::size_t j = 1; j < profile.size(); ++j) {
    if (profile[j].criterion < profile[best].criterion) best = j;
  }
  const double rho = profile[best].rho;
  check_rho(rho, tau);
  QuantileFit inner = std::move(*fits[best]);
  Eigen::VectorXd theta = inner.coefficients().head(p);
  Eigen::VectorXd residuals = design.outcome() - rho * design.lag() - design.X() * theta;
  const bool boundary = grid.size() > 1 && (best == 0 || best + 1 == grid.size());
  return SpatialQuantileFit{tau,
                            rho,
                            std::move(theta),
                            std::move(residuals),
                            Estimator::Ivqr,
                            std::move(profile),
                            inner.coefficients()(p),
                            criterion,
                            boundary,
                            std::move(inner),
                            Eigen::VectorXd()};
}

SpatialQuantileFit fit_dsqr(const SpatialDesign& design, double tau, const SpatialOptions& options) {
  require_quantile_level(tau);
  const Eigen::MatrixXd& Z = design.instruments().Z;
  const QuantileFit first = fit_quantile(Z, design.lag(), tau, options.solver);
  Eigen::VectorXd predicted = Z * first.coefficients();
  const Eigen::Index p = design.X().cols();
  Eigen::MatrixXd D(design.rows(), p + 1);
  D << design.X(), predicted;
  QuantileFit second = fit_quantile(D, design.outcome(), tau, options.solver);
  const double rho = second.coefficients()(p);
  check_rho(rho, tau);
  Eigen::VectorXd theta = second.coefficients().head(p);
  Eigen::VectorXd residuals = design.outcome() - rho * design.lag() - design.X() * theta;
  return SpatialQuantileFit{tau,
                            rho,
                            std::move(theta),
                            std::move(residuals),
                            Estimator::Dsqr,
                            {},
                            0.0,
                            options.criterion,
                            false,
                            std::move(second),
                            std::move(predicted)};
}

SpatialQuantileFit fit_spatial(const SpatialDesign& design, double tau, Estimator estimator,
                               const SpatialOptions& options) {
  return estimator == Estimator::Ivqr ? fit_ivqr(design, tau, options) : fit_dsqr(design, tau, options);
}

std::vector<SpatialProcessEntry> fit_spatial_process(const SpatialDesign& design, const std::vector<double>& taus,
                                                     Estimator estimator, const SpatialOptions& options,
                                                     int workers) {
  validate_tau_grid(taus);
  options.grid.values();
  std::vector<SpatialProcessEntry> entries(taus.size());
  parallel_for(taus.size(), workers, [&](std::size_t i) {
    entries[i].tau = taus[i];
    try {
      entries[i].fit.emplace(fit_spatial(design, taus[i], estimator, options));
    } catch (const NumericalError& e) {
      entries[i].error = e.what();
    }
  });
  return entries;
}

}  // namespace qconv
