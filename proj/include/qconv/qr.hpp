#pragma once

#include "qconv/loss.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace qconv {

struct SolverOptions {
  // Cap on simplex pivots per fit.
  int max_iterations = 200;
  // A direction counts as descent only if its slope is below -gap_tolerance * sum|a_i|.
  double gap_tolerance = 1e-9;
  // Residuals within zero_tolerance * max(|g|_inf, |Xb|_inf) are treated as exact zeros.
  double zero_tolerance = 1e-10;
};

// Solution of min_b sum rho_tau(g - X b). Construction checks the subgradient condition.
class QuantileFit {
 public:
  QuantileFit(double tau, Eigen::VectorXd coefficients, Eigen::VectorXd residuals, double zero_threshold,
              int iterations, std::vector<Eigen::Index> basis, double dual_infeasibility,
              bool check_subgradient = true);

  double tau() const { return tau_; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  const Eigen::VectorXd& residuals() const { return residuals_; }
  double objective() const { return objective_; }
  Eigen::Index n_neg() const { return n_neg_; }
  Eigen::Index n_zero() const { return n_zero_; }
  Eigen::Index n_pos() const { return residuals_.size() - n_neg_ - n_zero_; }
  int iterations() const { return iterations_; }
  // Indices of the observations interpolated by the vertex solution.
  const std::vector<Eigen::Index>& basis() const { return basis_; }
  double zero_threshold() const { return zero_threshold_; }
  // Largest violation of the dual box constraint at the returned vertex (0 at an exact optimum).
  double dual_infeasibility() const { return dual_infeasibility_; }

 private:
  double tau_;
  Eigen::VectorXd coefficients_;
  Eigen::VectorXd residuals_;
  double objective_;
  double zero_threshold_;
  Eigen::Index n_neg_ = 0;
  Eigen::Index n_zero_ = 0;
  int iterations_;
  std::vector<Eigen::Index> basis_;
  double dual_infeasibility_;
};

// Exact quantile regression by vertex pivoting on the check-loss linear program.
// `start` seeds the initial vertex (defaults to the least-squares fit).
QuantileFit fit_quantile(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& g,
                         double tau, const SolverOptions& options = {},
                         const std::optional<Eigen::VectorXd>& start = std::nullopt);

struct OlsFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
  double rss = 0.0;
};

OlsFit fit_ols(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& g);

// Evenly spaced grid lo, lo+step, ..., hi (rounded to 1e-12 to avoid drift).
std::vector<double> make_grid(double lo, double hi, double step);
// "lo:hi:step" or a single value.
std::vector<double> parse_grid(const std::string& text);
std::vector<double> default_tau_grid();
void validate_tau_grid(const std::vector<double>& taus);

std::vector<QuantileFit> fit_quantile_process(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                              const Eigen::Ref<const Eigen::VectorXd>& g,
                                              const std::vector<double>& taus, const SolverOptions& options = {},
                                              int workers = 1);

}  // namespace qconv
