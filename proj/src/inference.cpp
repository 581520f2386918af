#include "qconv/inference.hpp"

#include "qconv/linalg.hpp"
#include "qconv/parallel.hpp"
#include "qconv/random.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

namespace qconv {

std::string to_string(IntervalMethod m) {
  switch (m) {
    case IntervalMethod::Bootstrap: return "bootstrap";
    case IntervalMethod::Sandwich: return "sandwich";
    case IntervalMethod::Classical: return "classical";
  }
  return "unknown";
}

std::string to_string(BandwidthRule r) { return r == BandwidthRule::HallSheather ? "hall-sheather" : "bofinger"; }

std::string to_string(GrowthConvention c) { return c == GrowthConvention::Annualized ? "annualized" : "total"; }

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

namespace {

double normal_density(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

void require_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0,1)");
}

IntervalSet gaussian_intervals(const Eigen::VectorXd& estimate, const Eigen::VectorXd& se, double level) {
  const double z = normal_quantile(0.5 + 0.5 * level);
  IntervalSet out;
  out.estimate = estimate;
  out.lower = estimate - z * se;
  out.upper = estimate + z * se;
  out.level = level;
  out.method = IntervalMethod::Sandwich;
  return out;
}

// Percentile intervals from replicate rows; the point estimate is kept inside its interval.
IntervalSet percentile_intervals(const Eigen::VectorXd& estimate, const Eigen::MatrixXd& draws,
                                 const std::vector<char>& kept, double level) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index b = 0; b < draws.rows(); ++b) {
    if (kept[b]) rows.push_back(b);
  }
  IntervalSet out;
  out.estimate = estimate;
  out.lower.resize(estimate.size());
  out.upper.resize(estimate.size());
  const double alpha = 1.0 - level;
  Eigen::VectorXd column(static_cast<Eigen::Index>(rows.size()));
  for (Eigen::Index j = 0; j < estimate.size(); ++j) {
    for (std::size_t k = 0; k < rows.size(); ++k) column(static_cast<Eigen::Index>(k)) = draws(rows[k], j);
    out.lower(j) = std::min(empirical_quantile(column, 0.5 * alpha), estimate(j));
    out.upper(j) = std::max(empirical_quantile(column, 1.0 - 0.5 * alpha), estimate(j));
  }
  out.level = level;
  out.method = IntervalMethod::Bootstrap;
  out.replicates = static_cast<int>(rows.size());
  out.discarded = static_cast<int>(draws.rows()) - out.replicates;
  return out;
}

void validate(const BootstrapOptions& options) {
  if (options.replicates < 200) throw ConfigError("bootstrap needs at least 200 replicates");
  require_level(options.level);
}

void check_discards(int discarded, int total) {
  if (discarded * 10 > total) {
    throw NumericalError("bootstrap discarded " + std::to_string(discarded) + " of " + std::to_string(total) +
                         " replicates (more than 10%)");
  }
}

std::vector<Eigen::Index> draw_rows(std::uint64_t seed, std::size_t b, Eigen::Index n) {
  Rng rng(derive_seed(seed, b));
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  for (auto& r : rows) r = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
  return rows;
}

}  // namespace

double hall_sheather_bandwidth(Eigen::Index n, double tau, double alpha) {
  const double x = normal_quantile(tau);
  const double f = normal_density(x);
  const double z = normal_quantile(1.0 - 0.5 * alpha);
  return std::pow(static_cast<double>(n), -1.0 / 3.0) * std::pow(z, 2.0 / 3.0) *
         std::pow(1.5 * f * f / (2.0 * x * x + 1.0), 1.0 / 3.0);
}

double bofinger_bandwidth(Eigen::Index n, double tau) {
  const double x = normal_quantile(tau);
  const double f = normal_density(x);
  const double denom = 2.0 * x * x + 1.0;
  return std::pow(static_cast<double>(n), -0.2) * std::pow(4.5 * std::pow(f, 4) / (denom * denom), 0.2);
}

SandwichCovariance sandwich_covariance(const Eigen::Ref<const Eigen::MatrixXd>& regressors,
                                       const Eigen::Ref<const Eigen::VectorXd>& residuals, double tau,
                                       const Eigen::MatrixXd* instruments) {
  require_quantile_level(tau);
  const Eigen::Index n = regressors.rows();
  const Eigen::Index p = regressors.cols();
  if (residuals.size() != n) throw DimensionError("sandwich_covariance: residual length mismatch");
  if (instruments && (instruments->rows() != n || instruments->cols() != p)) {
    throw DimensionError("sandwich_covariance: instruments must match the regressors' shape");
  }
  if (n <= p) throw DegenerateError("sandwich_covariance: need n > p");
  const Eigen::MatrixXd& P = instruments ? *instruments : Eigen::MatrixXd(regressors);

  const double mean = residuals.mean();
  const double sd = std::sqrt((residuals.array() - mean).square().sum() / static_cast<double>(n - 1));
  const double iqr = empirical_quantile(residuals, 0.75) - empirical_quantile(residuals, 0.25);
  const double spread = std::min(sd, iqr / 1.34);

  for (BandwidthRule rule : {BandwidthRule::HallSheather, BandwidthRule::Bofinger}) {
    const double h = rule == BandwidthRule::HallSheather ? hall_sheather_bandwidth(n, tau) : bofinger_bandwidth(n, tau);
    if (!(tau - h > 0.0 && tau + h < 1.0)) continue;
    const double bandwidth = (normal_quantile(tau + h) - normal_quantile(tau - h)) * spread;
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) continue;
    Eigen::VectorXd density(n);
    for (Eigen::Index i = 0; i < n; ++i) density(i) = normal_density(residuals(i) / bandwidth) / bandwidth;
    if (!(density.sum() > 0.0)) continue;
    const Eigen::MatrixXd M = P.transpose() * density.asDiagonal() * regressors;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (!lu.isInvertible()) continue;
    const Eigen::MatrixXd Minv = lu.inverse();
    SandwichCovariance out;
    out.covariance = tau * (1.0 - tau) * Minv * (P.transpose() * P) * Minv.transpose();
    out.rule = rule;
    out.bandwidth = bandwidth;
    if (!out.covariance.allFinite()) continue;
    return out;
  }
  throw DegenerateError("sandwich_covariance: residual density at zero is degenerate under both bandwidth rules");
}

IntervalSet sandwich_intervals(const QuantileFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& X, double level) {
  require_level(level);
  if (X.rows() <= 30) throw DegenerateError("sandwich intervals are asymptotic and need n > 30");
  const SandwichCovariance cov = sandwich_covariance(X, fit.residuals(), fit.tau());
  IntervalSet out = gaussian_intervals(fit.coefficients(), cov.std_errors(), level);
  out.bandwidth_rule = to_string(cov.rule);
  return out;
}

IntervalSet sandwich_intervals(const SpatialQuantileFit& fit, const SpatialDesign& design, double level) {
  require_level(level);
  if (design.rows() <= 30) throw DegenerateError("sandwich intervals are asymptotic and need n > 30");
  const Eigen::Index p = design.X().cols();
  Eigen::VectorXd estimate(p + 1);
  estimate << fit.theta, fit.rho;
  SandwichCovariance cov;
  if (fit.estimator == Estimator::Ivqr) {
    // Regressors [X, Wg] instrumented by [X, dhat].
    Eigen::MatrixXd D(design.rows(), p + 1);
    D << design.X(), design.lag();
    const Eigen::MatrixXd P = design.augmented();
    cov = sandwich_covariance(D, fit.residuals, fit.tau, &P);
  } else {
    Eigen::MatrixXd D(design.rows(), p + 1);
    D << design.X(), fit.first_stage_lag;
    cov = sandwich_covariance(D, fit.inner.residuals(), fit.tau);
  }
  IntervalSet out = gaussian_intervals(estimate, cov.std_errors(), level);
  out.bandwidth_rule = to_string(cov.rule);
  return out;
}

IntervalSet bootstrap_intervals(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                const Eigen::Ref<const Eigen::VectorXd>& g, double tau,
                                const BootstrapOptions& options) {
  validate(options);
  const QuantileFit full = fit_quantile(X, g, tau, options.solver);
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  Eigen::MatrixXd draws(options.replicates, p);
  std::vector<char> kept(static_cast<std::size_t>(options.replicates), 0);
  parallel_for(static_cast<std::size_t>(options.replicates), options.workers, [&](std::size_t b) {
    const auto rows = draw_rows(options.seed, b, n);
    Eigen::MatrixXd Xb(n, p);
    Eigen::VectorXd gb(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Xb.row(i) = X.row(rows[i]);
      gb(i) = g(rows[i]);
    }
    try {
      draws.row(static_cast<Eigen::Index>(b)) =
          fit_quantile(Xb, gb, tau, options.solver, full.coefficients()).coefficients().transpose();
      kept[b] = 1;
    } catch (const RankDeficiencyError&) {
    }
  });
  IntervalSet out = percentile_intervals(full.coefficients(), draws, kept, options.level);
  check_discards(out.discarded, options.replicates);
  return out;
}

IntervalSet bootstrap_intervals(const SpatialDesign& design, double tau, Estimator estimator,
                                const SpatialOptions& spatial, const BootstrapOptions& options) {
  validate(options);
  const SpatialQuantileFit full = fit_spatial(design, tau, estimator, spatial);
  const Eigen::Index p = design.X().cols();
  Eigen::VectorXd estimate(p + 1);
  estimate << full.theta, full.rho;
  Eigen::MatrixXd draws(options.replicates, p + 1);
  std::vector<char> kept(static_cast<std::size_t>(options.replicates), 0);
  parallel_for(static_cast<std::size_t>(options.replicates), options.workers, [&](std::size_t b) {
    const auto rows = draw_rows(options.seed, b, design.rows());
    try {
      const SpatialQuantileFit fit = fit_spatial(design.resample(rows), tau, estimator, spatial);
      draws.row(static_cast<Eigen::Index>(b)).head(p) = fit.theta.transpose();
      draws(static_cast<Eigen::Index>(b), p) = fit.rho;
      kept[b] = 1;
    } catch (const NumericalError&) {
    }
  });
  IntervalSet out = percentile_intervals(estimate, draws, kept, options.level);
  check_discards(out.discarded, options.replicates);
  return out;
}

IntervalSet ols_intervals(const OlsFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& X, double level) {
  require_level(level);
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n <= p) throw DegenerateError("ols_intervals: no residual degrees of freedom");
  const double sigma2 = fit.rss / static_cast<double>(n - p);
  const Eigen::MatrixXd xtx_inv = (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::VectorXd se = (sigma2 * xtx_inv.diagonal().array()).sqrt();
  const double t = boost::math::quantile(boost::math::students_t(static_cast<double>(n - p)), 0.5 + 0.5 * level);
  IntervalSet out;
  out.estimate = fit.coefficients;
  out.lower = fit.coefficients - t * se;
  out.upper = fit.coefficients + t * se;
  out.level = level;
  out.method = IntervalMethod::Classical;
  return out;
}

SpeedOfConvergence convergence_speed(double beta, int period, GrowthConvention convention) {
  if (period < 1) throw ConfigError("period must be >= 1 year");
  const double x = convention == GrowthConvention::Total ? beta : beta * period;
  if (!(1.0 + x > 0.0)) {
    throw NumericalError("convergence speed undefined: 1 + " +
                         std::string(convention == GrowthConvention::Total ? "beta" : "beta*T") + " <= 0");
  }
  return {beta, period, -std::log1p(x) / period, convention};
}

double beta_from_speed(double lambda, int period, GrowthConvention convention) {
  if (period < 1) throw ConfigError("period must be >= 1 year");
  const double total = std::expm1(-lambda * period);
  return convention == GrowthConvention::Total ? total : total / period;
}

}  // namespace qconv
