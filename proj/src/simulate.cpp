#include "qconv/simulate.hpp"

#include "qconv/errors.hpp"
#include "qconv/random.hpp"

#include <Eigen/SparseLU>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <cstdio>
#include <numeric>

namespace qconv {

std::string to_string(SpatialProfile p) {
  return p == SpatialProfile::Constant ? "constant" : "upper-tail";
}

SpatialProfile parse_profile(const std::string& text) {
  if (text == "constant") return SpatialProfile::Constant;
  if (text == "upper-tail") return SpatialProfile::UpperTailAmplified;
  throw ConfigError("unknown spatial profile '" + text + "' (expected constant or upper-tail)");
}

Layout parse_layout(const std::string& text) {
  if (text == "uniform") return Layout::UniformSquare;
  if (text == "blobs") return Layout::ClusteredBlobs;
  throw ConfigError("unknown layout '" + text + "' (expected uniform or blobs)");
}

void DgpSpec::validate() const {
  if (n < neighbors + 1) throw ConfigError("simulate: n must exceed the neighbour count");
  if (!(std::abs(rho) < 1.0)) throw ConfigError("simulate: |rho| must be < 1");
  if (profile == SpatialProfile::UpperTailAmplified) {
    if (!(std::abs(rho_upper) < 1.0)) throw ConfigError("simulate: |rho_upper| must be < 1");
    if (!(upper_threshold > 0.0 && upper_threshold < 1.0)) throw ConfigError("simulate: upper_threshold in (0,1)");
  }
  if (theta.size() != 5) throw ConfigError("simulate: theta needs 5 entries (intercept, q, v, s, h)");
  if (delta.size() != 4) throw ConfigError("simulate: delta needs 4 entries (q, v, s, h)");
  if (!(error_scale > 0.0)) throw ConfigError("simulate: error_scale must be > 0");
  if (errors == ErrorDistribution::StudentT && !(df > 0.0)) throw ConfigError("simulate: df must be > 0");
  if (blobs < 1) throw ConfigError("simulate: blobs must be >= 1");
  if (period_years < 1) throw ConfigError("simulate: period_years must be >= 1");
  if (!(tech_plus_depreciation > 0.0)) throw ConfigError("simulate: tech_plus_depreciation must be > 0");
  for (const auto& r : ranges) {
    if (!(r.hi >= r.lo) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) throw ConfigError("simulate: bad range");
  }
  if (ranges[2].hi > 0.0) throw ConfigError("simulate: s range must be <= 0 (saving_rate <= 1)");
  // 1 + x'delta is affine, so its extremes sit at range corners.
  double worst = 1.0;
  for (int j = 0; j < 4; ++j) worst += std::min(delta(j) * ranges[j].lo, delta(j) * ranges[j].hi);
  if (!(worst > 0.0)) throw ConfigError("simulate: 1 + x'delta must stay positive over the covariate ranges");
}

double DgpTruth::error_quantile(double tau) const {
  if (errors == ErrorDistribution::Gaussian) return error_scale * boost::math::quantile(boost::math::normal(), tau);
  return error_scale * boost::math::quantile(boost::math::students_t(df), tau);
}

Eigen::VectorXd DgpTruth::coefficients(double tau) const {
  const double q = error_quantile(tau);
  Eigen::VectorXd out = theta;
  out(0) += q;
  out.tail(delta.size()) += delta * q;
  return out;
}

double DgpTruth::rho_at(double tau) const {
  if (profile == SpatialProfile::Constant) return rho;
  return tau > upper_threshold ? rho_upper : rho;
}

namespace {

struct Draws {
  Eigen::MatrixX2d coords;
  std::vector<std::string> countries;
  Eigen::MatrixXd X;
};

double draw_error(Rng& rng, const DgpSpec& spec) {
  return spec.errors == ErrorDistribution::Gaussian ? rng.normal() : rng.student_t(spec.df);
}

std::string label(const char* prefix, long value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*ld", prefix, width, value);
  return buf;
}

// Solves (I - diag(rho) W) g = rhs and checks the linear-system residual.
Eigen::VectorXd solve_lag_system(const WeightMatrix& W, const Eigen::VectorXd& rho, const Eigen::VectorXd& rhs) {
  const Eigen::Index n = W.size();
  Eigen::SparseMatrix<double> A(n, n);
  A.setIdentity();
  A -= Eigen::SparseMatrix<double>(rho.asDiagonal() * W.matrix());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw NumericalError("simulate: (I - rho W) is singular");
  Eigen::VectorXd g = lu.solve(rhs);
  const double residual = (A * g - rhs).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))) {
    throw NumericalError("simulate: spatial system solve is inaccurate");
  }
  return g;
}

SimulatedData assemble(const DgpSpec& spec, Draws draws, Rng& rng) {
  const Eigen::Index n = spec.n;
  WeightMatrix W = build_knn_weights(draws.coords, spec.neighbors);

  DgpTruth truth{spec.theta,         spec.delta,   spec.rho,       spec.errors,         spec.df,
                 spec.error_scale,   spec.profile, spec.rho_upper, spec.upper_threshold};
  Eigen::VectorXd u(n);
  Eigen::VectorXd eps(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    u(i) = spec.error_scale * draw_error(rng, spec);
    const double scale = 1.0 + draws.X.row(i).tail(4).dot(spec.delta);
    if (!(scale > 0.0)) throw ConfigError("simulate: 1 + x'delta <= 0 for a generated region");
    eps(i) = scale * u(i);
  }
  Eigen::VectorXd region_rho = Eigen::VectorXd::Constant(n, spec.rho);
  if (spec.profile == SpatialProfile::UpperTailAmplified) {
    const double cut = truth.error_quantile(spec.upper_threshold);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (u(i) > cut) region_rho(i) = spec.rho_upper;
    }
  }
  const Eigen::VectorXd rhs = draws.X * spec.theta + eps;
  Eigen::VectorXd g = solve_lag_system(W, region_rho, rhs);

  Dataset ds;
  ds.regions.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& r = ds.regions[i];
    r.region_id = label("R", static_cast<long>(i + 1), 4);
    r.country = draws.countries[i];
    r.coord_x = draws.coords(i, 0);
    r.coord_y = draws.coords(i, 1);
    r.gdp_pw_initial = std::exp(draws.X(i, 1));
    r.gdp_pw_final = std::exp(draws.X(i, 1) + g(i) * spec.period_years);
    r.pop_growth = std::exp(draws.X(i, 2)) - spec.tech_plus_depreciation;
    r.saving_rate = std::exp(draws.X(i, 3));
    r.human_capital = std::exp(draws.X(i, 4));
  }
  DesignMatrix design{g, std::move(draws.X), design_names()};
  return SimulatedData{std::move(ds), std::move(design), std::move(W), std::move(truth),
                       std::move(eps),  std::move(u),      std::move(region_rho)};
}

}  // namespace

SimulatedData generate(const DgpSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const Eigen::Index n = spec.n;
  Draws draws;
  draws.coords.resize(n, 2);
  draws.countries.resize(static_cast<std::size_t>(n));
  if (spec.layout == Layout::UniformSquare) {
    for (Eigen::Index i = 0; i < n; ++i) {
      draws.coords(i, 0) = rng.uniform();
      draws.coords(i, 1) = rng.uniform();
      draws.countries[i] = "SIM";
    }
  } else {
    Eigen::MatrixX2d centres(spec.blobs, 2);
    for (int b = 0; b < spec.blobs; ++b) {
      centres(b, 0) = rng.uniform(0.1, 0.9);
      centres(b, 1) = rng.uniform(0.1, 0.9);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const int b = static_cast<int>(i % spec.blobs);
      draws.coords(i, 0) = centres(b, 0) + 0.05 * rng.normal();
      draws.coords(i, 1) = centres(b, 1) + 0.05 * rng.normal();
      draws.countries[i] = label("C", b + 1, 2);
    }
  }
  draws.X.resize(n, 5);
  for (Eigen::Index i = 0; i < n; ++i) {
    draws.X(i, 0) = 1.0;
    for (int j = 0; j < 4; ++j) draws.X(i, j + 1) = rng.uniform(spec.ranges[j].lo, spec.ranges[j].hi);
  }
  return assemble(spec, std::move(draws), rng);
}

SimulatedData paper_scale_fixture(std::uint64_t seed) {
  DgpSpec spec;
  spec.n = 187;
  spec.rho = 0.4;
  spec.seed = seed;
  spec.layout = Layout::ClusteredBlobs;
  spec.blobs = 12;
  spec.theta << 0.19, -0.02, -0.01, 0.01, 0.005;
  spec.error_scale = 0.003;
  spec.validate();

  Rng rng(seed);
  constexpr int countries = 12;
  // 7 countries of 16 regions and 5 of 15.
  std::vector<int> sizes(countries, 15);
  for (int c = 0; c < 7; ++c) sizes[c] = 16;
  Draws draws;
  draws.coords.resize(spec.n, 2);
  draws.countries.resize(static_cast<std::size_t>(spec.n));
  draws.X.resize(spec.n, 5);
  Eigen::Index i = 0;
  for (int c = 0; c < countries; ++c) {
    // Country centres on a 4 x 3 lattice over a 1200 x 900 km plane.
    const double cx = 150.0 + 300.0 * (c % 4) + 40.0 * rng.normal();
    const double cy = 150.0 + 300.0 * (c / 4) + 40.0 * rng.normal();
    const double level = rng.uniform(9.2, 10.6);
    for (int r = 0; r < sizes[c]; ++r, ++i) {
      draws.coords(i, 0) = cx + 60.0 * rng.normal();
      draws.coords(i, 1) = cy + 60.0 * rng.normal();
      draws.countries[i] = label("C", c + 1, 2);
      draws.X(i, 0) = 1.0;
      draws.X(i, 1) = level + 0.15 * rng.normal();
      draws.X(i, 2) = std::log(rng.uniform(-0.002, 0.012) + spec.tech_plus_depreciation);
      draws.X(i, 3) = std::log(rng.uniform(0.15, 0.30));
      draws.X(i, 4) = std::log(rng.uniform(1.5, 3.5));
    }
  }
  return assemble(spec, std::move(draws), rng);
}

}  // namespace qconv
