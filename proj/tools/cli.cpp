#include "cli.hpp"

#include "qconv/pipeline.hpp"
#include "qconv/random.hpp"
#include "qconv/simulate.hpp"
#include "qconv/weights.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace qconv::cli {
namespace {

namespace fs = std::filesystem;

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(format_sig6(v));
}

// Writes through a stream and reports the path; removes the file if the writer throws.
void write_file(const fs::path& path, const std::function<void(std::ostream&)>& fn, std::ostream& log) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  try {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    fn(out);
    if (!out) throw Error("write failed for '" + path.string() + "'");
  } catch (...) {
    std::error_code ec;
    fs::remove(path, ec);
    throw;
  }
  log << path.string() << '\n';
}

struct ModelFlags {
  int period = 28;
  double tech_dep = 0.05;
  bool total_growth = false;
  bool hc_level = false;

  void add(CLI::App* app) {
    app->add_option("--period", period, "Observation period T in years");
    app->add_option("--tech-dep", tech_dep, "Technology growth plus depreciation (l + d)");
    app->add_flag("--total-growth", total_growth, "Use total instead of annualized log growth");
    app->add_flag("--hc-level", hc_level, "Enter human capital in levels instead of logs");
  }
  ModelConfig config() const {
    ModelConfig m;
    m.period_years = period;
    m.tech_plus_depreciation = tech_dep;
    m.growth_annualized = !total_growth;
    m.human_capital = hc_level ? HumanCapitalScale::Level : HumanCapitalScale::Log;
    m.validate();
    return m;
  }
};

struct CiFlags {
  std::string method = "bootstrap";
  double level = 0.90;
  int reps = 999;
  std::uint64_t seed = 42;
  int workers = 1;

  void add(CLI::App* app) {
    app->add_option("--ci", method, "Interval method: bootstrap, sandwich or none");
    app->add_option("--level", level, "Confidence level");
    app->add_option("--reps", reps, "Bootstrap replicates");
    app->add_option("--seed", seed, "Bootstrap seed");
    app->add_option("--workers", workers, "Worker threads");
  }
  std::optional<IntervalMethod> interval() const {
    if (method == "none") return std::nullopt;
    return parse_interval_method(method);
  }
  void validate() const {
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("--level must lie in (0,1)");
    if (interval() == IntervalMethod::Bootstrap && reps < 200) throw ConfigError("--reps must be >= 200");
    if (workers < 1) throw ConfigError("--workers must be >= 1");
  }
  BootstrapOptions bootstrap(std::uint64_t stream) const {
    BootstrapOptions b;
    b.replicates = reps;
    b.level = level;
    b.seed = derive_seed(seed, stream);
    b.workers = workers;
    return b;
  }
};

Json interval_json(const std::vector<std::string>& names, const Eigen::VectorXd& estimate,
                   const std::optional<IntervalSet>& iv) {
  Json j = Json::object();
  for (std::size_t c = 0; c < names.size(); ++c) {
    const auto k = static_cast<Eigen::Index>(c);
    Json entry{{"estimate", number(estimate(k))}};
    if (iv) {
      entry["lower"] = number(iv->lower(k));
      entry["upper"] = number(iv->upper(k));
    }
    j[names[c]] = entry;
  }
  return j;
}

Json interval_meta(const CiFlags& ci, std::optional<IntervalMethod> method) {
  if (!method) return {{"method", "none"}};
  Json j{{"method", to_string(*method)}, {"level", ci.level}};
  if (*method == IntervalMethod::Bootstrap) {
    j["replicates"] = ci.reps;
    j["seed"] = ci.seed;
  }
  return j;
}

std::vector<double> parse_taus(const std::string& text) {
  auto taus = parse_grid(text);
  validate_tau_grid(taus);
  return taus;
}

std::string default_output_dir() { return "qconv_out"; }

// ---------------------------------------------------------------- weights build

void cmd_weights(const std::string& input, int k, const fs::path& dir, std::ostream& log) {
  const Dataset ds = load_dataset(input);
  const WeightMatrix W = build_knn_weights(ds, k);
  write_file(dir / "weights.txt", [&](std::ostream& o) { write_coordinate_list(o, W); }, log);
  Json j{{"n", ds.size()},
         {"neighbors", W.neighbors()},
         {"nonzeros", W.matrix().nonZeros()},
         {"row_standardized", W.row_standardized()},
         {"metric", "euclidean on planar coordinates"}};
  write_file(dir / "weights.json", [&](std::ostream& o) { o << dump_json(j); }, log);
}

// ---------------------------------------------------------------- fit qr

void cmd_fit_qr(const std::string& input, const std::string& tau_text, const ModelFlags& mf, const CiFlags& ci,
                const fs::path& dir, std::ostream& log) {
  const auto taus = parse_taus(tau_text);
  ci.validate();
  const ModelConfig model = mf.config();
  const Dataset ds = load_dataset(input);
  const DesignMatrix design = build_design(ds, model);
  const auto fits = fit_quantile_process(design.X, design.outcome, taus, {}, ci.workers);
  const auto method = ci.interval();

  Json out;
  out["model"] = "qr";
  out["n"] = ds.size();
  out["objective_scaling"] = "unscaled sum of check losses";
  out["intervals"] = interval_meta(ci, method);
  Json arr = Json::array();
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& fit = fits[i];
    std::optional<IntervalSet> iv;
    if (method == IntervalMethod::Bootstrap) {
      iv = bootstrap_intervals(design.X, design.outcome, fit.tau(), ci.bootstrap(i));
    } else if (method == IntervalMethod::Sandwich) {
      iv = sandwich_intervals(fit, design.X, ci.level);
    }
    Json f;
    f["tau"] = number(fit.tau());
    f["coefficients"] = interval_json(design.names, fit.coefficients(), iv);
    f["objective"] = number(fit.objective());
    f["n_neg"] = fit.n_neg();
    f["n_zero"] = fit.n_zero();
    f["n_pos"] = fit.n_pos();
    f["iterations"] = fit.iterations();
    if (iv && iv->method == IntervalMethod::Sandwich) f["bandwidth_rule"] = iv->bandwidth_rule;
    arr.push_back(f);
  }
  out["fits"] = arr;
  write_file(dir / "fit_qr.json", [&](std::ostream& o) { o << dump_json(out); }, log);
}

// ---------------------------------------------------------------- fit sqr

IvqrCriterion parse_criterion(const std::string& s) {
  if (s == "wald") return IvqrCriterion::Wald;
  if (s == "unweighted") return IvqrCriterion::Unweighted;
  throw ConfigError("unknown criterion '" + s + "' (expected wald or unweighted)");
}

void cmd_fit_sqr(const std::string& input, const std::string& tau_text, const std::string& estimator_text,
                 const std::string& grid_text, const std::string& criterion_text, int k, const ModelFlags& mf,
                 CiFlags ci, bool ci_given, const fs::path& dir, std::ostream& log) {
  const auto taus = parse_taus(tau_text);
  const Estimator estimator = parse_estimator(estimator_text);
  SpatialOptions opts;
  opts.grid = RhoGrid::parse(grid_text);
  opts.grid.values();
  opts.criterion = parse_criterion(criterion_text);
  if (!ci_given) ci.method = estimator == Estimator::Ivqr ? "sandwich" : "bootstrap";
  ci.validate();
  const ModelConfig model = mf.config();
  const Dataset ds = load_dataset(input);
  const DesignMatrix design = build_design(ds, model);
  const WeightMatrix W = build_knn_weights(ds, k);
  const SpatialDesign sd = SpatialDesign::build(design.X, design.names, design.outcome, W);
  const auto entries = fit_spatial_process(sd, taus, estimator, opts, ci.workers);
  const auto method = ci.interval();

  std::vector<std::string> names = design.names;
  names.push_back("rho");
  Json out;
  out["model"] = "sqr";
  out["estimator"] = to_string(estimator);
  out["n"] = ds.size();
  out["neighbors"] = k;
  out["rho_grid"] = {{"lo", opts.grid.lo}, {"hi", opts.grid.hi}, {"step", opts.grid.step}};
  out["intervals"] = interval_meta(ci, method);
  Json arr = Json::array();
  Json failures = Json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!e.fit) {
      failures.push_back({{"tau", number(e.tau)}, {"error", e.error}});
      continue;
    }
    const auto& fit = *e.fit;
    std::optional<IntervalSet> iv;
    if (method == IntervalMethod::Bootstrap) {
      iv = bootstrap_intervals(sd, fit.tau, estimator, opts, ci.bootstrap(1000 + i));
    } else if (method == IntervalMethod::Sandwich) {
      iv = sandwich_intervals(fit, sd, ci.level);
    }
    Eigen::VectorXd est(fit.theta.size() + 1);
    est << fit.theta, fit.rho;
    Json f;
    f["tau"] = number(fit.tau);
    f["coefficients"] = interval_json(names, est, iv);
    f["objective"] = number(fit.inner.objective());
    f["n_neg"] = fit.inner.n_neg();
    f["n_zero"] = fit.inner.n_zero();
    f["n_pos"] = fit.inner.n_pos();
    f["auxiliary_coefficient"] = number(fit.auxiliary_coefficient);
    f["criterion"] = to_string(fit.criterion);
    f["boundary_warning"] = fit.boundary_warning;
    Json profile = Json::array();
    for (const auto& p : fit.profile) {
      profile.push_back({{"rho", number(p.rho)},
                         {"criterion", number(p.criterion)},
                         {"coefficient", number(p.coefficient)},
                         {"std_error", number(p.std_error)}});
    }
    f["profile"] = profile;
    arr.push_back(f);
  }
  out["fits"] = arr;
  out["failures"] = failures;
  write_file(dir / "fit_sqr.json", [&](std::ostream& o) { o << dump_json(out); }, log);
}

// ---------------------------------------------------------------- simulate

struct SimulateFlags {
  Eigen::Index n = 400;
  double rho = 0.0;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string profile = "constant";
  std::string layout = "uniform";
  double rho_upper = 0.8;
  std::string errors = "gaussian";
  double df = 5.0;
  double scale = 0.004;
  std::vector<double> delta;
  bool fixture = false;
  std::string out;
};

void cmd_simulate(const SimulateFlags& f, const fs::path& dir, std::ostream& log) {
  SimulatedData sim = [&] {
    if (f.fixture) return paper_scale_fixture(f.seed_given ? f.seed : kFixtureSeed);
    DgpSpec spec;
    spec.n = f.n;
    spec.rho = f.rho;
    spec.seed = f.seed;
    spec.profile = parse_profile(f.profile);
    spec.layout = parse_layout(f.layout);
    spec.rho_upper = f.rho_upper;
    if (f.errors == "gaussian") {
      spec.errors = ErrorDistribution::Gaussian;
    } else if (f.errors == "student-t") {
      spec.errors = ErrorDistribution::StudentT;
    } else {
      throw ConfigError("unknown error distribution '" + f.errors + "' (expected gaussian or student-t)");
    }
    spec.df = f.df;
    spec.error_scale = f.scale;
    if (!f.delta.empty()) {
      if (f.delta.size() != 4) throw ConfigError("--delta takes four values (q, v, s, h)");
      spec.delta = Eigen::Map<const Eigen::VectorXd>(f.delta.data(), 4);
    }
    spec.validate();
    return generate(spec);
  }();
  const fs::path csv = f.out.empty() ? dir / "simulated.csv" : fs::path(f.out);
  write_file(csv, [&](std::ostream& o) { write_dataset(o, sim.dataset); }, log);

  Json truth;
  truth["rho"] = sim.truth.rho;
  truth["profile"] = to_string(sim.truth.profile);
  Json rows = Json::array();
  for (double tau : default_tau_grid()) {
    const Eigen::VectorXd c = sim.truth.coefficients(tau);
    Json coefs = Json::object();
    for (std::size_t j = 0; j < sim.design.names.size(); ++j) coefs[sim.design.names[j]] = c(static_cast<Eigen::Index>(j));
    rows.push_back({{"tau", tau}, {"coefficients", coefs}});
  }
  truth["quantile_coefficients"] = rows;
  fs::path truth_path = csv;
  truth_path.replace_extension(".truth.json");
  write_file(truth_path, [&](std::ostream& o) { o << dump_json(truth); }, log);
}

// ---------------------------------------------------------------- cluster

void cmd_cluster(const std::string& input, const ClusterSpec& spec, const std::string& estimator_text, int k,
                 const ModelFlags& mf, const fs::path& dir, std::ostream& log) {
  if (!(spec.tau_u > 0.0 && spec.tau_u < 1.0)) throw ConfigError("--tau-u must lie in (0,1)");
  if (spec.k < 2) throw ConfigError("--k must be >= 2");
  if (spec.source != "qr" && spec.source != "sqr") throw ConfigError("--source must be qr or sqr");
  const Estimator estimator = parse_estimator(estimator_text);
  const ModelConfig model = mf.config();
  const Dataset ds = load_dataset(input);
  const DesignMatrix design = build_design(ds, model);
  Eigen::VectorXd residuals;
  std::string source = spec.source;
  if (spec.source == "qr") {
    residuals = fit_quantile(design.X, design.outcome, spec.tau_u).residuals();
  } else {
    const WeightMatrix W = build_knn_weights(ds, k);
    const SpatialDesign sd = SpatialDesign::build(design.X, design.names, design.outcome, W);
    residuals = fit_spatial(sd, spec.tau_u, estimator).residuals;
    source = "sqr:" + to_string(estimator);
  }
  ClusterAssignment a = classify_residuals(residuals, ds.region_ids(), spec.k, spec.scheme);
  a.tau_u = spec.tau_u;
  a.source = source;
  const ClusterSummary summary = cluster_report(a, ds);
  write_file(dir / "clusters.csv", [&](std::ostream& o) { write_assignment_csv(o, a); }, log);
  write_file(dir / "cluster_summary.csv", [&](std::ostream& o) { write_summary_csv(o, summary); }, log);
}

// ---------------------------------------------------------------- report

void cmd_report(const std::string& report_path, const std::string& figure_text, const std::string& out,
                const fs::path& dir, std::ostream& log) {
  const Figure figure = parse_figure(figure_text);
  std::ifstream in(report_path);
  if (!in) throw DataError("cannot open report '" + report_path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report is not valid JSON: ") + e.what());
  }
  const Report report = report_from_json(j);
  const auto rows = emit_plot_data(report, figure);
  const fs::path path = out.empty() ? dir / (figure_text + ".csv") : fs::path(out);
  write_file(path, [&](std::ostream& o) { write_rows_csv(o, rows); }, log);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantile beta-convergence with spatial-lag quantile regression", "qconv"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::string output_dir = default_output_dir();
  app.add_option("-o,--output-dir", output_dir, "Directory for all outputs")->capture_default_str();

  // weights build
  auto* weights = app.add_subcommand("weights", "Spatial weight matrices");
  weights->require_subcommand(1);
  auto* weights_build = weights->add_subcommand("build", "Build a k-nearest-neighbour weight matrix");
  std::string w_input;
  int w_k = 5;
  weights_build->add_option("-i,--input", w_input, "Dataset CSV")->required();
  weights_build->add_option("-k,--k", w_k, "Neighbours per region");

  // fit qr / fit sqr
  auto* fit = app.add_subcommand("fit", "Quantile regression fits");
  fit->require_subcommand(1);
  auto* fit_qr = fit->add_subcommand("qr", "Non-spatial quantile regression");
  std::string qr_input;
  std::string qr_tau = "0.05:0.95:0.05";
  ModelFlags qr_model;
  CiFlags qr_ci;
  fit_qr->add_option("-i,--input", qr_input, "Dataset CSV")->required();
  fit_qr->add_option("--tau", qr_tau, "Quantile level or grid lo:hi:step");
  qr_model.add(fit_qr);
  qr_ci.add(fit_qr);

  auto* fit_sqr = fit->add_subcommand("sqr", "Spatial-lag quantile regression");
  std::string sqr_input;
  std::string sqr_tau = "0.05:0.95:0.05";
  std::string sqr_estimator = "ivqr";
  std::string sqr_grid = "-0.95:0.95:0.01";
  std::string sqr_criterion = "wald";
  int sqr_k = 5;
  ModelFlags sqr_model;
  CiFlags sqr_ci;
  fit_sqr->add_option("-i,--input", sqr_input, "Dataset CSV")->required();
  fit_sqr->add_option("--tau", sqr_tau, "Quantile level or grid lo:hi:step");
  fit_sqr->add_option("--estimator", sqr_estimator, "ivqr or dsqr");
  fit_sqr->add_option("--rho-grid", sqr_grid, "IVQR candidate grid lo:hi:step");
  fit_sqr->add_option("--criterion", sqr_criterion, "IVQR criterion: wald or unweighted");
  fit_sqr->add_option("-k,--k", sqr_k, "Neighbours per region");
  sqr_model.add(fit_sqr);
  sqr_ci.add(fit_sqr);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic data with known truth");
  SimulateFlags sim;
  simulate->add_option("--n", sim.n, "Number of regions");
  simulate->add_option("--rho", sim.rho, "Spatial lag parameter");
  auto* sim_seed = simulate->add_option("--seed", sim.seed, "Generator seed");
  simulate->add_option("--profile", sim.profile, "constant or upper-tail");
  simulate->add_option("--layout", sim.layout, "uniform or blobs");
  simulate->add_option("--rho-upper", sim.rho_upper, "Spatial parameter of the upper-tail regime");
  simulate->add_option("--errors", sim.errors, "gaussian or student-t");
  simulate->add_option("--df", sim.df, "Student-t degrees of freedom");
  simulate->add_option("--scale", sim.scale, "Error scale");
  simulate->add_option("--delta", sim.delta, "Heteroskedasticity on q v s h")->expected(4);
  simulate->add_flag("--fixture", sim.fixture, "Write the 187-region demo fixture");
  simulate->add_option("--out", sim.out, "CSV path (default <output-dir>/simulated.csv)");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "Residual-interval clusters");
  std::string cl_input;
  ClusterSpec cl_spec;
  std::string cl_scheme = "equal-width";
  std::string cl_estimator = "ivqr";
  int cl_k_neighbors = 5;
  ModelFlags cl_model;
  cluster->add_option("-i,--input", cl_input, "Dataset CSV")->required();
  cluster->add_option("--tau-u", cl_spec.tau_u, "Quantile level of the source fit");
  cluster->add_option("--k", cl_spec.k, "Number of classes");
  cluster->add_option("--scheme", cl_scheme, "equal-width or equal-count");
  cluster->add_option("--source", cl_spec.source, "qr or sqr");
  cluster->add_option("--estimator", cl_estimator, "Spatial estimator when --source sqr");
  cluster->add_option("--neighbors", cl_k_neighbors, "Neighbours per region when --source sqr");
  cl_model.add(cluster);

  // report
  auto* report = app.add_subcommand("report", "Plot data from a pipeline report");
  std::string rp_input;
  std::string rp_figure;
  std::string rp_out;
  report->add_option("-r,--report", rp_input, "report.json from a pipeline run")->required();
  report->add_option("--figure", rp_figure, "figure1, figure2 or figure3")->required();
  report->add_option("--out", rp_out, "CSV path (default <output-dir>/<figure>.csv)");

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Full analysis: OLS, QR process, spatial QR, intervals, clusters");
  std::string pl_config;
  std::string pl_input;
  std::string pl_tau;
  std::string pl_estimator;
  std::string pl_grid;
  std::string pl_criterion;
  std::string pl_spatial_ci;
  std::string pl_scheme;
  std::string pl_source;
  int pl_k = 5;
  int pl_cluster_k = 3;
  double pl_tau_u = 0.9;
  ModelFlags pl_model;
  CiFlags pl_ci;
  pipeline->add_option("--config", pl_config, "JSON configuration file (flags override it)");
  auto* o_input = pipeline->add_option("-i,--input", pl_input, "Dataset CSV");
  auto* o_tau = pipeline->add_option("--tau", pl_tau, "Quantile grid lo:hi:step");
  auto* o_estimator = pipeline->add_option("--estimator", pl_estimator, "ivqr or dsqr");
  auto* o_grid = pipeline->add_option("--rho-grid", pl_grid, "IVQR candidate grid lo:hi:step");
  auto* o_criterion = pipeline->add_option("--criterion", pl_criterion, "wald or unweighted");
  auto* o_spatial_ci = pipeline->add_option("--spatial-ci", pl_spatial_ci, "Spatial intervals: bootstrap or sandwich");
  auto* o_k = pipeline->add_option("-k,--k", pl_k, "Neighbours per region");
  auto* o_tau_u = pipeline->add_option("--tau-u", pl_tau_u, "Cluster source quantile");
  auto* o_cluster_k = pipeline->add_option("--clusters", pl_cluster_k, "Number of cluster classes");
  auto* o_scheme = pipeline->add_option("--scheme", pl_scheme, "equal-width or equal-count");
  auto* o_source = pipeline->add_option("--source", pl_source, "Cluster source: qr or sqr");
  auto* o_period = pipeline->add_option("--period", pl_model.period, "Observation period T in years");
  auto* o_tech = pipeline->add_option("--tech-dep", pl_model.tech_dep, "l + d");
  auto* o_total = pipeline->add_flag("--total-growth", pl_model.total_growth, "Total instead of annualized growth");
  auto* o_hc = pipeline->add_flag("--hc-level", pl_model.hc_level, "Human capital in levels");
  auto* o_ci = pipeline->add_option("--ci", pl_ci.method, "Non-spatial intervals: bootstrap or sandwich");
  auto* o_level = pipeline->add_option("--level", pl_ci.level, "Confidence level");
  auto* o_reps = pipeline->add_option("--reps", pl_ci.reps, "Bootstrap replicates");
  auto* o_seed = pipeline->add_option("--seed", pl_ci.seed, "Bootstrap seed");
  auto* o_workers = pipeline->add_option("--workers", pl_ci.workers, "Worker threads");
  auto* o_out = app.get_option("--output-dir");

  auto* sqr_ci_opt = fit_sqr->get_option("--ci");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      app.exit(e, out, err);
      return exit_code(ErrorKind::Config);
    }
    const fs::path dir = output_dir;

    if (*weights_build) {
      if (w_k < 1) throw ConfigError("--k must be >= 1");
      cmd_weights(w_input, w_k, dir, out);
    } else if (*fit_qr) {
      cmd_fit_qr(qr_input, qr_tau, qr_model, qr_ci, dir, out);
    } else if (*fit_sqr) {
      if (sqr_k < 1) throw ConfigError("--k must be >= 1");
      cmd_fit_sqr(sqr_input, sqr_tau, sqr_estimator, sqr_grid, sqr_criterion, sqr_k, sqr_model, sqr_ci,
                  sqr_ci_opt->count() > 0, dir, out);
    } else if (*simulate) {
      sim.seed_given = sim_seed->count() > 0;
      cmd_simulate(sim, dir, out);
    } else if (*cluster) {
      cl_spec.scheme = parse_scheme(cl_scheme);
      cmd_cluster(cl_input, cl_spec, cl_estimator, cl_k_neighbors, cl_model, dir, out);
    } else if (*report) {
      cmd_report(rp_input, rp_figure, rp_out, dir, out);
    } else if (*pipeline) {
      RunConfig cfg;
      if (!pl_config.empty()) {
        std::ifstream in(pl_config);
        if (!in) throw ConfigError("cannot open config '" + pl_config + "'");
        Json j;
        try {
          j = Json::parse(in);
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        cfg.merge_json(j);
      }
      auto given = [](const CLI::Option* o) { return o->count() > 0; };
      if (given(o_input)) cfg.input = pl_input;
      if (given(o_out) || cfg.output_dir.empty()) cfg.output_dir = output_dir;
      if (given(o_tau)) cfg.taus = parse_grid(pl_tau);
      if (given(o_estimator)) cfg.estimator = parse_estimator(pl_estimator);
      if (given(o_grid)) cfg.rho_grid = RhoGrid::parse(pl_grid);
      if (given(o_criterion)) cfg.criterion = parse_criterion(pl_criterion);
      if (given(o_spatial_ci)) cfg.spatial_ci = parse_interval_method(pl_spatial_ci);
      if (given(o_k)) cfg.neighbors = pl_k;
      if (given(o_tau_u)) cfg.clusters.tau_u = pl_tau_u;
      if (given(o_cluster_k)) cfg.clusters.k = pl_cluster_k;
      if (given(o_scheme)) cfg.clusters.scheme = parse_scheme(pl_scheme);
      if (given(o_source)) cfg.clusters.source = pl_source;
      if (given(o_period)) cfg.model.period_years = pl_model.period;
      if (given(o_tech)) cfg.model.tech_plus_depreciation = pl_model.tech_dep;
      if (given(o_total)) cfg.model.growth_annualized = !pl_model.total_growth;
      if (given(o_hc)) cfg.model.human_capital = pl_model.hc_level ? HumanCapitalScale::Level : HumanCapitalScale::Log;
      if (given(o_ci)) cfg.ci = parse_interval_method(pl_ci.method);
      if (given(o_level)) cfg.level = pl_ci.level;
      if (given(o_reps)) cfg.replicates = pl_ci.reps;
      if (given(o_seed)) cfg.seed = pl_ci.seed;
      if (given(o_workers)) cfg.workers = pl_ci.workers;
      if (cfg.input.empty()) throw ConfigError("pipeline needs --input (or \"input\" in the config file)");
      run_pipeline_to_disk(cfg);
      for (const char* name : {"report.json", "coefficients.csv", "figure1.csv", "figure2.csv", "figure3.csv",
                               "clusters.csv", "cluster_summary.csv", "timings.json"}) {
        if (fs::exists(cfg.output_dir / name)) out << (cfg.output_dir / name).string() << '\n';
      }
    }
    return 0;
  } catch (const std::exception& e) {
    err << "qconv: error: " << e.what() << '\n';
    return exit_code(classify(e));
  }
}

}  // namespace qconv::cli
