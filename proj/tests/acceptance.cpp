// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any criterion fails.

#include "oracle.hpp"
#include "support.hpp"

#include "cli.hpp"
#include "qconv/clusters.hpp"
#include "qconv/errors.hpp"
#include "qconv/inference.hpp"
#include "qconv/parallel.hpp"
#include "qconv/pipeline.hpp"
#include "qconv/qr.hpp"
#include "qconv/simulate.hpp"
#include "qconv/spatial.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <thread>

using namespace qconv;

namespace {

int g_failures = 0;
const int kWorkers = static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 4u));

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void report(const std::string& name, bool pass, const std::string& detail) {
  if (!pass) ++g_failures;
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << name << ": " << detail << std::endl;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

bool subgradient_holds(const QuantileFit& f) {
  const double nt = static_cast<double>(f.residuals().size()) * f.tau();
  return f.n_neg() <= nt + 1e-9 && nt <= f.n_neg() + f.n_zero() + 1e-9;
}

bool g_subgradient_violation = false;

// ------------------------------------------------------------------------------------------

void qr_oracle() {
  const auto t0 = Clock::now();
  const double taus[] = {0.1, 0.3, 0.5, 0.7, 0.9};
  Rng rng(derive_seed(501, 0));
  double worst = 0.0;
  int bad_sub = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng.index(3));
    const Eigen::Index n = p + 2 + static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(29 - p)));
    const Eigen::MatrixXd X = support::random_design(rng, n, p);
    const Eigen::VectorXd g = support::random_outcome(rng, X);
    const double tau = taus[trial % 5];
    const QuantileFit fit = fit_quantile(X, g, tau);
    bad_sub += !subgradient_holds(fit);
    const auto best = oracle::enumerate_exact_fits(X, g, tau);
    worst = std::max(worst, std::abs(fit.objective() - best.objective) / std::max(best.objective, 1e-300));
  }
  const double secs = seconds_since(t0);
  report("QR oracle equivalence", worst <= 1e-9 && secs < 60.0 && bad_sub == 0,
         fmt("200 instances, max relative objective gap %.3g (tol 1e-9), %.2f s (limit 60 s)", worst, secs));
}

void equivariance() {
  Rng rng(derive_seed(502, 0));
  double reg = 0, pos = 0, neg = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 20 + static_cast<Eigen::Index>(rng.index(181));
    const Eigen::Index p = 2 + static_cast<Eigen::Index>(rng.index(4));
    const Eigen::MatrixXd X = support::random_design(rng, n, p);
    const Eigen::VectorXd g = support::random_outcome(rng, X);
    const double tau = rng.uniform(0.05, 0.95);
    Eigen::VectorXd gamma(p);
    for (Eigen::Index j = 0; j < p; ++j) gamma(j) = rng.uniform(-5, 5);
    const double cp = rng.uniform(0.1, 10.0);
    const double cn = -rng.uniform(0.1, 10.0);
    const auto base = fit_quantile(X, g, tau);
    const auto shifted = fit_quantile(X, g + X * gamma, tau);
    const auto scaled = fit_quantile(X, cp * g, tau);
    const auto base_mirror = fit_quantile(X, g, 1.0 - tau);
    const auto flipped = fit_quantile(X, cn * g, tau);
    reg = std::max(reg, (shifted.coefficients() - base.coefficients() - gamma).cwiseAbs().maxCoeff());
    pos = std::max(pos, (scaled.coefficients() - cp * base.coefficients()).cwiseAbs().maxCoeff());
    neg = std::max(neg, (flipped.coefficients() - cn * base_mirror.coefficients()).cwiseAbs().maxCoeff());
  }
  report("Equivariance suite", reg <= 1e-8 && pos <= 1e-8 && neg <= 1e-8,
         fmt("100 instances, max |error| regression %.2g, scale c>0 %.2g, scale c<0 (tau<->1-tau) %.2g (tol 1e-8)", reg,
             pos, neg));
}

struct SpatialMc {
  std::vector<double> ivqr;
  std::vector<double> dsqr;
};

SpatialMc spatial_monte_carlo(double rho, std::uint64_t base) {
  SpatialMc out{std::vector<double>(200), std::vector<double>(200)};
  parallel_for(200, kWorkers, [&](std::size_t r) {
    DgpSpec spec;
    spec.n = 400;
    spec.rho = rho;
    spec.neighbors = 5;
    spec.seed = derive_seed(base, r);
    const SimulatedData sim = generate(spec);
    const SpatialDesign d = SpatialDesign::build(sim.design.X, sim.design.names, sim.design.outcome, sim.weights);
    out.ivqr[r] = fit_ivqr(d, 0.5).rho;
    out.dsqr[r] = fit_dsqr(d, 0.5).rho;
  });
  return out;
}

void spatial_recovery() {
  const auto t0 = Clock::now();
  const SpatialMc half = spatial_monte_carlo(0.5, 503);
  const SpatialMc zero = spatial_monte_carlo(0.0, 504);
  const double secs = seconds_since(t0);
  const double m5 = median(half.ivqr), m0 = median(zero.ivqr);
  const double d5 = median(half.dsqr), d0 = median(zero.dsqr);
  report("IVQR recovery", std::abs(m5 - 0.5) <= 0.05 && std::abs(m0) <= 0.05 && secs < 600.0,
         fmt("n=400, k=5, 200 reps: median rho_0.5 = %.4f (truth 0.5), %.4f (truth 0); tol 0.05; %.1f s incl. DSQR "
             "on %d worker(s) (limit 600 s)",
             m5, m0, secs, kWorkers));
  report("DSQR agrees with IVQR", std::abs(d5 - m5) <= 0.1 && std::abs(d0 - m0) <= 0.1,
         fmt("median DSQR rho %.4f vs IVQR %.4f at rho=0.5, %.4f vs %.4f at rho=0 (tol 0.1)", d5, m5, d0, m0));
}

void quantile_structure() {
  const auto t0 = Clock::now();
  const std::vector<double> taus = {0.25, 0.5, 0.75};
  std::vector<double> err(100);
  std::vector<int> bad(100, 0);
  double truth_gap = 0;
  parallel_for(100, kWorkers, [&](std::size_t r) {
    DgpSpec spec;
    spec.n = 800;
    spec.theta = (Eigen::VectorXd(5) << 1, 1, -1, 0.5, 0).finished();
    spec.delta = (Eigen::VectorXd(4) << 1, 0, 0.5, 0).finished();
    spec.ranges = {{{0, 1}, {0, 1}, {-1, 0}, {0, 1}}};
    spec.error_scale = 0.15;
    spec.seed = derive_seed(505, r);
    const SimulatedData sim = generate(spec);
    const auto fits = fit_quantile_process(sim.design.X, sim.design.outcome, taus);
    double e = 0;
    for (std::size_t t = 0; t < taus.size(); ++t) {
      bad[r] += !subgradient_holds(fits[t]);
      const Eigen::VectorXd truth = sim.truth.coefficients(taus[t]);
      e += (fits[t].coefficients().tail(4) - truth.tail(4)).cwiseAbs().sum();
      if (r == 0 && t == 2) truth_gap = (truth - sim.truth.coefficients(taus[0])).tail(4).cwiseAbs().maxCoeff();
    }
    err[r] = e / (4.0 * static_cast<double>(taus.size()));
  });
  double mae = 0;
  for (double e : err) mae += e / 100.0;
  const int violations = std::accumulate(bad.begin(), bad.end(), 0);
  report("Quantile-structure recovery", mae <= 0.05 && violations == 0,
         fmt("heteroskedastic DGP n=800, 100 reps, slope MAE at tau {0.25,0.5,0.75} = %.4f (tol 0.05); largest true "
             "slope change 0.25->0.75 = %.4f; %.1f s",
             mae, truth_gap, seconds_since(t0)));
}

void upper_tail() {
  const auto t0 = Clock::now();
  std::vector<int> win(100);
  std::vector<double> lo(100), hi(100);
  parallel_for(100, kWorkers, [&](std::size_t r) {
    DgpSpec spec;
    spec.n = 400;
    spec.rho = 0.1;
    spec.rho_upper = 0.7;
    spec.upper_threshold = 0.5;
    spec.profile = SpatialProfile::UpperTailAmplified;
    spec.seed = derive_seed(506, r);
    const SimulatedData sim = generate(spec);
    const SpatialDesign d = SpatialDesign::build(sim.design.X, sim.design.names, sim.design.outcome, sim.weights);
    lo[r] = fit_ivqr(d, 0.1).rho;
    hi[r] = fit_ivqr(d, 0.9).rho;
    win[r] = hi[r] > lo[r];
  });
  const int wins = std::accumulate(win.begin(), win.end(), 0);
  report("Upper-tail spatial profile", wins >= 90,
         fmt("rho_0.9 > rho_0.1 in %d/100 replicates (need >= 90); median rho_0.1 %.3f, rho_0.9 %.3f; %.1f s", wins,
             median(lo), median(hi), seconds_since(t0)));
}

void bootstrap_coverage() {
  const auto t0 = Clock::now();
  std::vector<int> covered(500 * 4, 0);
  parallel_for(500, kWorkers, [&](std::size_t r) {
    DgpSpec spec;
    spec.n = 200;
    spec.theta = (Eigen::VectorXd(5) << 1, 1, -1, 0.5, 0).finished();
    spec.ranges = {{{0, 1}, {0, 1}, {-1, 0}, {0, 1}}};
    spec.error_scale = 0.5;
    spec.seed = derive_seed(507, r);
    const SimulatedData sim = generate(spec);
    BootstrapOptions opts;
    opts.replicates = 999;
    opts.level = 0.90;
    opts.seed = derive_seed(508, r);
    const IntervalSet iv = bootstrap_intervals(sim.design.X, sim.design.outcome, 0.5, opts);
    const Eigen::VectorXd truth = sim.truth.coefficients(0.5);
    for (Eigen::Index j = 1; j < 5; ++j) {
      covered[r * 4 + static_cast<std::size_t>(j - 1)] = iv.lower(j) <= truth(j) && truth(j) <= iv.upper(j);
    }
  });
  const double rate = std::accumulate(covered.begin(), covered.end(), 0) / 2000.0;
  std::vector<double> per(4, 0.0);
  for (std::size_t r = 0; r < 500; ++r) {
    for (std::size_t j = 0; j < 4; ++j) per[j] += covered[r * 4 + j] / 500.0;
  }
  report("Bootstrap coverage", rate >= 0.85 && rate <= 0.95,
         fmt("500 trials, n=200, B=999, nominal 0.90: pooled slope coverage %.4f (per slope %.3f %.3f %.3f %.3f); "
             "band [0.85, 0.95]; %.1f s",
             rate, per[0], per[1], per[2], per[3], seconds_since(t0)));
}

void speed_round_trip() {
  Rng rng(derive_seed(509, 0));
  double worst[2] = {0, 0};
  for (int i = 0; i < 1000; ++i) {
    const double lambda = rng.uniform(1e-4, 0.2);
    const int period = 1 + static_cast<int>(rng.index(60));
    for (int c = 0; c < 2; ++c) {
      const auto conv = c == 0 ? GrowthConvention::Total : GrowthConvention::Annualized;
      const double beta = beta_from_speed(lambda, period, conv);
      worst[c] = std::max(worst[c], std::abs(convergence_speed(beta, period, conv).lambda - lambda));
    }
  }
  report("Convergence-speed round trip", worst[0] < 1e-12 && worst[1] < 1e-12,
         fmt("1000 (lambda, T) pairs: max |error| total %.2g, annualized %.2g (tol 1e-12)", worst[0], worst[1]));
}

void clusters() {
  Rng rng(derive_seed(510, 0));
  int broken = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index n = 3 + static_cast<Eigen::Index>(rng.index(200));
    const int k = 2 + static_cast<int>(rng.index(std::min<std::uint64_t>(4, static_cast<std::uint64_t>(n) - 2)));
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = trial % 3 == 0 ? std::round(rng.normal() * 4) : rng.normal();
    std::vector<std::string> ids;
    for (Eigen::Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
    const auto scheme = trial % 2 ? BinningScheme::EqualCount : BinningScheme::EqualWidth;
    ClusterAssignment a;
    try {
      a = classify_residuals(r, ids, k, scheme);
    } catch (const DegenerateError&) {
      continue;  // tied draws that cannot be split into k classes
    }
    std::vector<int> counts(k, 0);
    bool ok = true;
    for (int c : a.classes) {
      ok &= c >= 1 && c <= k;
      if (c >= 1 && c <= k) ++counts[c - 1];
    }
    ok &= std::accumulate(counts.begin(), counts.end(), 0) == n;
    for (Eigen::Index i = 0; i < n && ok; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (r(i) <= r(j) && a.classes[i] > a.classes[j]) {
          ok = false;
          break;
        }
      }
    }
    broken += !ok;
  }
  const Dataset ds = load_dataset(support::fixture_path());
  const DesignMatrix d = build_design(ds);
  const QuantileFit fit = fit_quantile(d.X, d.outcome, 0.90);
  const double n = static_cast<double>(d.outcome.size());
  const bool bound = fit.n_neg() <= 0.9 * n && 0.9 * n <= fit.n_neg() + fit.n_zero();
  const double nonpos = static_cast<double>(fit.n_neg() + fit.n_zero()) / n;
  report("Cluster partition/monotonicity", broken == 0 && bound,
         fmt("1000 random residual vectors, %d violations; fixture tau_u=0.90: n_neg=%ld <= %.1f <= n_neg+n_zero=%ld "
             "(%.1f%% non-positive)",
             broken, static_cast<long>(fit.n_neg()), 0.9 * n, static_cast<long>(fit.n_neg() + fit.n_zero()),
             100 * nonpos));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void end_to_end() {
  const auto t0 = Clock::now();
  const auto base = support::scratch_dir("acceptance_e2e");
  const std::string input = support::fixture_path().string();
  std::ostringstream out, err;
  int codes = 0;
  for (const auto& [dir, workers] : {std::pair{"w1a", "1"}, std::pair{"w1b", "1"}, std::pair{"w4", "4"}}) {
    codes += std::abs(cli::run({"-o", (base / dir).string(), "pipeline", "--input", input, "--seed", "2024",
                                "--workers", workers},
                               out, err));
  }
  const std::string a = slurp(base / "w1a" / "report.json");
  const bool same = !a.empty() && a == slurp(base / "w1b" / "report.json") && a == slurp(base / "w4" / "report.json");
  int negative = 0, total = 0;
  double worst = -1e9;
  if (!a.empty()) {
    const Json j = Json::parse(a);
    for (const char* model : {"qr", "sqr"}) {
      for (const auto& f : j[model]["fits"]) {
        const double beta = f["coefficients"]["q"]["estimate"].get<double>();
        ++total;
        negative += beta < 0;
        worst = std::max(worst, beta);
      }
    }
  }
  const double secs = seconds_since(t0);
  report("End-to-end determinism", codes == 0 && same && total == 38 && negative == total && secs < 300.0,
         fmt("3 pipeline runs (workers 1, 1, 4) byte-identical: %s; beta_tau < 0 at %d/%d (QR+SQR) grid points, "
             "largest %.5f; %.1f s total (limit 300 s)",
             same ? "yes" : "no", negative, total, worst, secs));
  if (codes != 0) std::cout << err.str();
}

void subgradient_everywhere() {
  // The constructor is the assertion: a fit that violates the bound cannot be built.
  bool rejects = false;
  try {
    QuantileFit(0.5, Eigen::VectorXd::Zero(1), -Eigen::VectorXd::Ones(10), 1e-12, 0, {}, 0.0);
  } catch (const NumericalError&) {
    rejects = true;
  }
  report("Subgradient condition", rejects && !g_subgradient_violation,
         fmt("asserted in QuantileFit construction (a violating fit is rejected: %s); every fit built by this "
             "suite passed: %s",
             rejects ? "yes" : "no", g_subgradient_violation ? "no" : "yes"));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  std::cout << "acceptance suite (" << kWorkers << " worker thread(s))" << std::endl;
  auto guarded = [](const char* name, auto fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      if (std::string(e.what()).find("subgradient condition violated") != std::string::npos) {
        g_subgradient_violation = true;
      }
      report(name, false, std::string("threw: ") + e.what());
    }
  };
  guarded("QR oracle equivalence", qr_oracle);
  guarded("Equivariance suite", equivariance);
  guarded("IVQR recovery", spatial_recovery);
  guarded("Quantile-structure recovery", quantile_structure);
  guarded("Upper-tail spatial profile", upper_tail);
  guarded("Bootstrap coverage", bootstrap_coverage);
  guarded("Convergence-speed round trip", speed_round_trip);
  guarded("Cluster partition/monotonicity", clusters);
  guarded("End-to-end determinism", end_to_end);
  guarded("Subgradient condition", subgradient_everywhere);
  std::cout << fmt("%d criterion failure(s), %.1f s", g_failures, seconds_since(t0)) << std::endl;
  return g_failures == 0 ? 0 : 1;
}
