#include "qconv/qr.hpp"

#include "qconv/linalg.hpp"
#include "qconv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace qconv {

QuantileFit::QuantileFit(double tau, Eigen::VectorXd coefficients, Eigen::VectorXd residuals,
                         double zero_threshold, int iterations, std::vector<Eigen::Index> basis,
                         double dual_infeasibility, bool check_subgradient)
    : tau_(tau),
      coefficients_(std::move(coefficients)),
      residuals_(std::move(residuals)),
      objective_(check_loss(tau, residuals_)),
      zero_threshold_(zero_threshold),
      iterations_(iterations),
      basis_(std::move(basis)),
      dual_infeasibility_(dual_infeasibility) {
  for (Eigen::Index i = 0; i < residuals_.size(); ++i) {
    const double r = residuals_(i);
    if (std::abs(r) <= zero_threshold_) {
      ++n_zero_;
    } else if (r < 0) {
      ++n_neg_;
    }
  }
  if (check_subgradient) {
    const double target = static_cast<double>(residuals_.size()) * tau_;
    const double slack = 1e-9 * std::max(1.0, target);
    if (!(static_cast<double>(n_neg_) <= target + slack &&
          target <= static_cast<double>(n_neg_ + n_zero_) + slack)) {
      std::ostringstream msg;
      msg << "subgradient condition violated at tau=" << tau_ << ": n_neg=" << n_neg_ << ", n_zero=" << n_zero_
          << ", n*tau=" << target;
      throw NumericalError(msg.str());
    }
  }
}

namespace {

// p linearly independent rows of X, preferring small |r|.
std::vector<Eigen::Index> initial_basis(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::VectorXd& r) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(r(a)) < std::abs(r(b)); });
  std::vector<Eigen::Index> basis;
  Eigen::MatrixXd Q(p, p);
  for (Eigen::Index i : order) {
    const Eigen::Index k = static_cast<Eigen::Index>(basis.size());
    Eigen::VectorXd v = X.row(i).transpose();
    const double norm = v.norm();
    if (norm == 0) continue;
    // Two rounds of Gram-Schmidt for stability.
    for (int pass = 0; pass < 2; ++pass) {
      if (k > 0) v -= Q.leftCols(k) * (Q.leftCols(k).transpose() * v);
    }
    const double rest = v.norm();
    if (rest > 1e-8 * norm) {
      Q.col(k) = v / rest;
      basis.push_back(i);
      if (static_cast<Eigen::Index>(basis.size()) == p) return basis;
    }
  }
  throw RankDeficiencyError("fit_quantile: design matrix rows do not span the coefficient space", 0.0, {});
}

struct Direction {
  Eigen::Index column = -1;
  double sign = 0.0;
  double slope = 0.0;
  double normalized = 0.0;
};

}  // namespace

QuantileFit fit_quantile(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& g,
                         double tau, const SolverOptions& options, const std::optional<Eigen::VectorXd>& start) {
  require_quantile_level(tau);
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (g.size() != n) throw DimensionError("fit_quantile: X has " + std::to_string(n) + " rows, g has " +
                                          std::to_string(g.size()));
  if (p == 0) throw DimensionError("fit_quantile: X has no columns");
  if (n <= p) throw DataError("fit_quantile: need n > number of coefficients");
  if (!X.allFinite() || !g.allFinite()) throw DataError("fit_quantile: non-finite input");
  if (start && start->size() != p) throw DimensionError("fit_quantile: start vector has wrong length");
  require_full_rank(X, {}, "design matrix X");

  Eigen::VectorXd theta = start ? *start : Eigen::VectorXd(X.colPivHouseholderQr().solve(g));
  std::vector<Eigen::Index> basis = initial_basis(X, g - X * theta);

  const double scale_g = g.cwiseAbs().maxCoeff();
  Eigen::MatrixXd Xh(p, p);
  Eigen::MatrixXd A(n, p);
  Eigen::VectorXd r(n);
  Eigen::VectorXd psi(n);
  std::vector<char> is_zero(n);
  std::vector<std::pair<double, Eigen::Index>> breakpoints;
  breakpoints.reserve(n);

  int iterations = 0;
  double threshold = 0.0;
  double violation = 0.0;
  for (;;) {
    for (Eigen::Index k = 0; k < p; ++k) Xh.row(k) = X.row(basis[k]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Xh);
    Eigen::VectorXd gh(p);
    for (Eigen::Index k = 0; k < p; ++k) gh(k) = g(basis[k]);
    theta = lu.solve(gh);
    const Eigen::VectorXd fitted = X * theta;
    r = g - fitted;
    threshold = options.zero_tolerance * std::max({scale_g, fitted.cwiseAbs().maxCoeff(),
                                                   std::numeric_limits<double>::min()});
    A.noalias() = X * lu.inverse();
    for (Eigen::Index k = 0; k < p; ++k) {
      r(basis[k]) = 0.0;
      A.row(basis[k]).setZero();
      A(basis[k], k) = 1.0;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      is_zero[i] = std::abs(r(i)) <= threshold;
      psi(i) = is_zero[i] ? 0.0 : (r(i) > 0 ? tau : tau - 1.0);
    }

    // Directional derivative along +/- column j of Xh^{-1}: the residual of obs i moves by -t*a_i.
    Direction best;
    double worst_violation = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      double linear = 0.0;
      double plus_kink = 0.0;
      double minus_kink = 0.0;
      double mass = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double a = A(i, j);
        mass += std::abs(a);
        if (is_zero[i]) {
          plus_kink += check_function(tau, -a);
          minus_kink += check_function(tau, a);
        } else {
          linear += a * psi(i);
        }
      }
      const double up = -linear + plus_kink;
      const double down = linear + minus_kink;
      for (double sign : {1.0, -1.0}) {
        const double slope = sign > 0 ? up : down;
        const double normalized = slope / mass;
        worst_violation = std::max(worst_violation, -normalized);
        if (normalized < -options.gap_tolerance && normalized < best.normalized) {
          best = {j, sign, slope, normalized};
        }
      }
    }
    violation = worst_violation;
    if (best.column < 0) break;
    if (iterations >= options.max_iterations) {
      std::ostringstream msg;
      msg << "fit_quantile: no convergence within " << options.max_iterations
          << " pivots at tau=" << tau << " (normalized dual violation " << worst_violation << ")";
      throw ConvergenceError(msg.str(), worst_violation);
    }

    // Exact line search on the piecewise-linear objective: walk the kinks until the slope turns nonnegative.
    breakpoints.clear();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (is_zero[i]) continue;
      const double a = best.sign * A(i, best.column);
      if (a == 0.0) continue;
      const double t = r(i) / a;
      if (t > 0) breakpoints.emplace_back(t, i);
    }
    std::sort(breakpoints.begin(), breakpoints.end());
    double slope = best.slope;
    Eigen::Index entering = -1;
    for (const auto& [t, i] : breakpoints) {
      slope += std::abs(A(i, best.column));
      if (slope >= 0) {
        entering = i;
        break;
      }
    }
    if (entering < 0) throw NumericalError("fit_quantile: unbounded descent direction (design rank lost)");
    basis[best.column] = entering;
    ++iterations;
  }

  return QuantileFit(tau, std::move(theta), std::move(r), threshold, iterations, std::move(basis),
                     violation, has_intercept(X));
}

OlsFit fit_ols(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& g) {
  if (g.size() != X.rows()) throw DimensionError("fit_ols: X and g disagree on n");
  if (X.rows() < X.cols()) throw DataError("fit_ols: fewer observations than coefficients");
  require_full_rank(X, {}, "design matrix X");
  OlsFit fit;
  fit.coefficients = X.colPivHouseholderQr().solve(g);
  fit.residuals = g - X * fit.coefficients;
  fit.rss = fit.residuals.squaredNorm();
  return fit;
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0) || !std::isfinite(step) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo) {
    throw ConfigError("invalid grid lo:hi:step");
  }
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) grid.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
  return grid;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::size_t pos = 0;
  try {
    while (pos <= text.size()) {
      const auto next = text.find(':', pos);
      const std::string piece = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      std::size_t used = 0;
      parts.push_back(std::stod(piece, &used));
      if (used != piece.size()) throw ConfigError("bad number");
      if (next == std::string::npos) break;
      pos = next + 1;
    }
  } catch (const std::exception&) {
    throw ConfigError("cannot parse grid '" + text + "' (expected lo:hi:step or a single value)");
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw ConfigError("grid '" + text + "' must be lo:hi:step");
  return make_grid(parts[0], parts[1], parts[2]);
}

std::vector<double> default_tau_grid() { return make_grid(0.05, 0.95, 0.05); }

void validate_tau_grid(const std::vector<double>& taus) {
  if (taus.empty()) throw ConfigError("quantile grid is empty");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0 && taus[i] < 1.0)) {
      throw ConfigError("quantile level " + std::to_string(taus[i]) + " outside (0,1)");
    }
    if (i > 0 && !(taus[i] > taus[i - 1])) throw ConfigError("quantile grid must be strictly increasing");
  }
}

std::vector<QuantileFit> fit_quantile_process(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                              const Eigen::Ref<const Eigen::VectorXd>& g,
                                              const std::vector<double>& taus, const SolverOptions& options,
                                              int workers) {
  validate_tau_grid(taus);
  std::vector<std::optional<QuantileFit>> slots(taus.size());
  parallel_for(taus.size(), workers, [&](std::size_t i) {
    try {
      slots[i].emplace(fit_quantile(X, g, taus[i], options));
    } catch (const NumericalError& e) {
      throw NumericalError("tau=" + std::to_string(taus[i]) + ": " + e.what());
    }
  });
  std::vector<QuantileFit> fits;
  fits.reserve(taus.size());
  for (auto& s : slots) fits.push_back(std::move(*s));
  return fits;
}

}  // namespace qconv
