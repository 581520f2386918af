#include "qconv/pipeline.hpp"

#include "qconv/random.hpp"
#include "qconv/weights.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace qconv {

ErrorKind classify(const std::exception& e) {
  if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->kind();
  if (dynamic_cast<const ConfigError*>(&e)) return ErrorKind::Config;
  if (dynamic_cast<const DataError*>(&e)) return ErrorKind::Data;
  if (dynamic_cast<const NumericalError*>(&e)) return ErrorKind::Numerical;
  return ErrorKind::Other;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Numerical: return 4;
    case ErrorKind::Other: return 1;
  }
  return 1;
}

IntervalMethod parse_interval_method(const std::string& text) {
  if (text == "bootstrap") return IntervalMethod::Bootstrap;
  if (text == "sandwich") return IntervalMethod::Sandwich;
  throw ConfigError("unknown interval method '" + text + "' (expected bootstrap or sandwich)");
}

IntervalMethod RunConfig::spatial_interval_method() const {
  if (spatial_ci) return *spatial_ci;
  return estimator == Estimator::Ivqr ? IntervalMethod::Sandwich : IntervalMethod::Bootstrap;
}

void RunConfig::validate() const {
  model.validate();
  validate_tau_grid(taus);
  rho_grid.values();
  if (neighbors < 1) throw ConfigError("neighbours k must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0,1)");
  const bool bootstrap = ci == IntervalMethod::Bootstrap || spatial_interval_method() == IntervalMethod::Bootstrap;
  if (bootstrap && replicates < 200) throw ConfigError("bootstrap replicates must be >= 200");
  if (ci == IntervalMethod::Classical || spatial_interval_method() == IntervalMethod::Classical) {
    throw ConfigError("classical intervals apply to OLS only");
  }
  if (!(clusters.tau_u > 0.0 && clusters.tau_u < 1.0)) throw ConfigError("cluster tau_u must lie in (0,1)");
  if (clusters.k < 2) throw ConfigError("cluster k must be >= 2");
  if (clusters.source != "qr" && clusters.source != "sqr") throw ConfigError("cluster source must be qr or sqr");
  if (solver.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (!(solver.gap_tolerance > 0.0)) throw ConfigError("gap tolerance must be > 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

void RunConfig::merge_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("configuration file must hold a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "input") {
        input = value.get<std::string>();
      } else if (key == "output_dir") {
        output_dir = value.get<std::string>();
      } else if (key == "period_years") {
        model.period_years = value.get<int>();
      } else if (key == "tech_plus_depreciation") {
        model.tech_plus_depreciation = value.get<double>();
      } else if (key == "growth_annualized") {
        model.growth_annualized = value.get<bool>();
      } else if (key == "human_capital") {
        const auto s = value.get<std::string>();
        if (s != "log" && s != "level") throw ConfigError("human_capital must be log or level");
        model.human_capital = s == "log" ? HumanCapitalScale::Log : HumanCapitalScale::Level;
      } else if (key == "neighbors") {
        neighbors = value.get<int>();
      } else if (key == "taus") {
        taus = value.is_string() ? parse_grid(value.get<std::string>()) : value.get<std::vector<double>>();
      } else if (key == "estimator") {
        estimator = parse_estimator(value.get<std::string>());
      } else if (key == "rho_grid") {
        rho_grid = RhoGrid::parse(value.get<std::string>());
      } else if (key == "criterion") {
        const auto s = value.get<std::string>();
        if (s != "wald" && s != "unweighted") throw ConfigError("criterion must be wald or unweighted");
        criterion = s == "wald" ? IvqrCriterion::Wald : IvqrCriterion::Unweighted;
      } else if (key == "ci") {
        ci = parse_interval_method(value.get<std::string>());
      } else if (key == "spatial_ci") {
        spatial_ci = parse_interval_method(value.get<std::string>());
      } else if (key == "level") {
        level = value.get<double>();
      } else if (key == "replicates") {
        replicates = value.get<int>();
      } else if (key == "seed") {
        seed = value.get<std::uint64_t>();
      } else if (key == "max_iterations") {
        solver.max_iterations = value.get<int>();
      } else if (key == "workers") {
        workers = value.get<int>();
      } else if (key == "clusters") {
        for (const auto& [ck, cv] : value.items()) {
          if (ck == "tau_u") {
            clusters.tau_u = cv.get<double>();
          } else if (ck == "k") {
            clusters.k = cv.get<int>();
          } else if (ck == "scheme") {
            clusters.scheme = parse_scheme(cv.get<std::string>());
          } else if (ck == "source") {
            clusters.source = cv.get<std::string>();
          } else {
            throw ConfigError("unknown clusters key '" + ck + "'");
          }
        }
      } else {
        throw ConfigError("unknown configuration key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad configuration value: ") + e.what());
  }
}

Json RunConfig::to_json() const {
  Json j;
  j["period_years"] = model.period_years;
  j["tech_plus_depreciation"] = model.tech_plus_depreciation;
  j["growth_annualized"] = model.growth_annualized;
  j["human_capital"] = model.human_capital == HumanCapitalScale::Log ? "log" : "level";
  j["neighbors"] = neighbors;
  j["taus"] = taus;
  j["estimator"] = to_string(estimator);
  j["rho_grid"] = {{"lo", rho_grid.lo}, {"hi", rho_grid.hi}, {"step", rho_grid.step}};
  j["criterion"] = to_string(criterion);
  j["ci"] = to_string(ci);
  j["spatial_ci"] = to_string(spatial_interval_method());
  j["level"] = level;
  j["replicates"] = replicates;
  j["seed"] = seed;
  j["max_iterations"] = solver.max_iterations;
  j["gap_tolerance"] = solver.gap_tolerance;
  j["clusters"] = {{"tau_u", clusters.tau_u},
                   {"k", clusters.k},
                   {"scheme", to_string(clusters.scheme)},
                   {"source", clusters.source}};
  return j;
}

bool Report::has_model(const std::string& model) const {
  for (const auto& r : coefficients) {
    if (r.model == model) return true;
  }
  return false;
}

std::vector<double> Report::taus(const std::string& model) const {
  std::vector<double> out;
  for (const auto& r : coefficients) {
    if (r.model == model && r.tau && (out.empty() || out.back() != *r.tau)) out.push_back(*r.tau);
  }
  return out;
}

std::string format_sig6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

namespace {

Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(format_sig6(v));
}

Json number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

double read_number(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

Json interval_json(const CoefficientRow& r) {
  return {{"estimate", number(r.estimate)}, {"lower", number(r.lower)}, {"upper", number(r.upper)}};
}

CoefficientRow interval_row(const std::string& model, const std::string& name, std::optional<double> tau,
                            const Json& j) {
  return {model, name, tau, read_number(j.at("estimate")), read_number(j.at("lower")), read_number(j.at("upper"))};
}

std::vector<const CoefficientRow*> rows_for(const Report& r, const std::string& model, std::optional<double> tau) {
  std::vector<const CoefficientRow*> out;
  for (const auto& row : r.coefficients) {
    if (row.model == model && row.tau == tau) out.push_back(&row);
  }
  return out;
}

std::optional<double> speed_lambda(double beta, int period, GrowthConvention convention) {
  try {
    return convergence_speed(beta, period, convention).lambda;
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

}  // namespace

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json report_to_json(const Report& report) {
  Json j;
  j["metadata"] = report.metadata;

  Json ols;
  Json ols_coefs = Json::object();
  for (const auto* row : rows_for(report, "ols", std::nullopt)) ols_coefs[row->coefficient] = interval_json(*row);
  ols["coefficients"] = ols_coefs;
  ols["rss"] = number(report.ols_rss);
  ols["interval_method"] = "classical";
  j["ols"] = ols;

  Json qr;
  qr["interval_method"] = report.qr_interval_method;
  Json qr_fits = Json::array();
  for (const auto& d : report.qr) {
    Json fit;
    fit["tau"] = number(d.tau);
    Json coefs = Json::object();
    for (const auto* row : rows_for(report, "qr", d.tau)) coefs[row->coefficient] = interval_json(*row);
    fit["coefficients"] = coefs;
    fit["objective"] = number(d.objective);
    fit["n_neg"] = d.n_neg;
    fit["n_zero"] = d.n_zero;
    fit["n_pos"] = d.n_pos;
    fit["iterations"] = d.iterations;
    qr_fits.push_back(fit);
  }
  qr["fits"] = qr_fits;
  j["qr"] = qr;

  Json sqr;
  sqr["interval_method"] = report.sqr_interval_method;
  Json sqr_fits = Json::array();
  Json profile = Json::array();
  for (const auto& d : report.sqr) {
    Json fit;
    fit["tau"] = number(d.tau);
    fit["estimator"] = d.estimator;
    Json coefs = Json::object();
    for (const auto* row : rows_for(report, "sqr", d.tau)) {
      if (row->coefficient == "rho") {
        fit["rho"] = interval_json(*row);
        Json point = interval_json(*row);
        point["tau"] = number(d.tau);
        profile.push_back(point);
      } else {
        coefs[row->coefficient] = interval_json(*row);
      }
    }
    fit["coefficients"] = coefs;
    fit["criterion"] = d.criterion;
    fit["boundary_warning"] = d.boundary_warning;
    fit["auxiliary_coefficient"] = number(d.auxiliary_coefficient);
    fit["objective"] = number(d.objective);
    sqr_fits.push_back(fit);
  }
  sqr["fits"] = sqr_fits;
  Json failures = Json::array();
  for (const auto& [tau, error] : report.sqr_failures) failures.push_back({{"tau", number(tau)}, {"error", error}});
  sqr["failures"] = failures;
  j["sqr"] = sqr;
  j["rho_profile"] = profile;

  Json conv;
  conv["convention"] = report.convergence_convention;
  conv["period_years"] = report.period_years;
  Json rows = Json::array();
  for (const auto& s : report.speeds) {
    rows.push_back({{"model", s.model}, {"tau", number(s.tau)}, {"beta", number(s.beta)}, {"lambda", number(s.lambda)}});
  }
  conv["rows"] = rows;
  j["convergence"] = conv;
  j["clusters"] = report.clusters ? *report.clusters : Json(nullptr);
  return j;
}

Report report_from_json(const Json& j) {
  Report r;
  try {
    r.metadata = j.at("metadata");
    r.names = j.at("metadata").at("coefficient_names").get<std::vector<std::string>>();
    for (const auto& [name, value] : j.at("ols").at("coefficients").items()) {
      r.coefficients.push_back(interval_row("ols", name, std::nullopt, value));
    }
    r.ols_rss = read_number(j.at("ols").at("rss"));
    r.qr_interval_method = j.at("qr").at("interval_method").get<std::string>();
    for (const auto& fit : j.at("qr").at("fits")) {
      const double tau = fit.at("tau").get<double>();
      for (const auto& [name, value] : fit.at("coefficients").items()) {
        r.coefficients.push_back(interval_row("qr", name, tau, value));
      }
      r.qr.push_back({tau, read_number(fit.at("objective")), fit.at("n_neg").get<Eigen::Index>(),
                      fit.at("n_zero").get<Eigen::Index>(), fit.at("n_pos").get<Eigen::Index>(),
                      fit.at("iterations").get<int>()});
    }
    r.sqr_interval_method = j.at("sqr").at("interval_method").get<std::string>();
    for (const auto& fit : j.at("sqr").at("fits")) {
      const double tau = fit.at("tau").get<double>();
      for (const auto& [name, value] : fit.at("coefficients").items()) {
        r.coefficients.push_back(interval_row("sqr", name, tau, value));
      }
      r.coefficients.push_back(interval_row("sqr", "rho", tau, fit.at("rho")));
      r.sqr.push_back({tau, fit.at("estimator").get<std::string>(), fit.at("criterion").get<std::string>(),
                       fit.at("boundary_warning").get<bool>(), read_number(fit.at("auxiliary_coefficient")),
                       read_number(fit.at("objective"))});
    }
    for (const auto& f : j.at("sqr").at("failures")) {
      r.sqr_failures.emplace_back(f.at("tau").get<double>(), f.at("error").get<std::string>());
    }
    const auto& conv = j.at("convergence");
    r.convergence_convention = conv.at("convention").get<std::string>();
    r.period_years = conv.at("period_years").get<int>();
    for (const auto& s : conv.at("rows")) {
      SpeedRow row{s.at("model").get<std::string>(), std::nullopt, read_number(s.at("beta")), std::nullopt};
      if (!s.at("tau").is_null()) row.tau = s.at("tau").get<double>();
      if (!s.at("lambda").is_null()) row.lambda = s.at("lambda").get<double>();
      r.speeds.push_back(row);
    }
    if (!j.at("clusters").is_null()) r.clusters = j.at("clusters");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report JSON: ") + e.what());
  }
  return r;
}

Figure parse_figure(const std::string& text) {
  if (text == "figure1") return Figure::QuantileEffects;
  if (text == "figure2") return Figure::SpatialEffects;
  if (text == "figure3") return Figure::SpatialLag;
  throw ConfigError("unknown figure '" + text + "' (expected figure1, figure2 or figure3)");
}

std::vector<CoefficientRow> emit_plot_data(const Report& report, Figure figure) {
  std::vector<CoefficientRow> out;
  const std::string family = figure == Figure::QuantileEffects ? "qr" : "sqr";
  if (!report.has_model(family)) throw DataError("report has no '" + family + "' results for this figure");
  for (const auto& row : report.coefficients) {
    switch (figure) {
      case Figure::QuantileEffects:
        if (row.model == "qr" || row.model == "ols") out.push_back(row);
        break;
      case Figure::SpatialEffects:
        if (row.model == "sqr") out.push_back(row);
        break;
      case Figure::SpatialLag:
        if (row.model == "sqr" && row.coefficient == "rho") out.push_back(row);
        break;
    }
  }
  return out;
}

void write_rows_csv(std::ostream& out, const std::vector<CoefficientRow>& rows) {
  auto field = [](double v) { return std::isfinite(v) ? format_sig6(v) : std::string("NA"); };
  out << "model,coefficient,tau,estimate,lower,upper\n";
  for (const auto& r : rows) {
    out << r.model << ',' << r.coefficient << ',' << (r.tau ? format_sig6(*r.tau) : "NA") << ',' << field(r.estimate)
        << ',' << field(r.lower) << ',' << field(r.upper) << '\n';
  }
}

namespace {

class StageClock {
 public:
  template <typename Fn>
  auto run(const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        record(name, start);
      } else {
        auto result = fn();
        record(name, start);
        return result;
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, classify(e), e.what());
    }
  }
  Json timings;

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point start) {
    timings[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void push_interval_rows(Report& report, const std::string& model, std::optional<double> tau,
                        const std::vector<std::string>& names, const IntervalSet& iv) {
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto k = static_cast<Eigen::Index>(j);
    report.coefficients.push_back({model, names[j], tau, iv.estimate(k), iv.lower(k), iv.upper(k)});
  }
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  StageClock clock;
  const GrowthConvention convention =
      cfg.model.growth_annualized ? GrowthConvention::Annualized : GrowthConvention::Total;
  const int period = cfg.model.period_years;

  const Dataset ds = clock.run("load", [&] { return load_dataset(cfg.input); });
  const DesignMatrix design = clock.run("design", [&] { return build_design(ds, cfg.model); });
  const WeightMatrix W = clock.run("weights", [&] { return build_knn_weights(ds, cfg.neighbors); });
  const Eigen::Index beta_index = 1;

  Report report;
  report.names = design.names;
  report.convergence_convention = to_string(convention);
  report.period_years = period;
  report.qr_interval_method = to_string(cfg.ci);
  report.sqr_interval_method = to_string(cfg.spatial_interval_method());

  clock.run("ols", [&] {
    const OlsFit ols = fit_ols(design.X, design.outcome);
    const IntervalSet iv = ols_intervals(ols, design.X, cfg.level);
    push_interval_rows(report, "ols", std::nullopt, design.names, iv);
    report.ols_rss = ols.rss;
    const double beta = ols.coefficients(beta_index);
    report.speeds.push_back({"ols", std::nullopt, beta, speed_lambda(beta, period, convention)});
  });

  clock.run("qr", [&] {
    const auto fits = fit_quantile_process(design.X, design.outcome, cfg.taus, cfg.solver, cfg.workers);
    for (std::size_t i = 0; i < fits.size(); ++i) {
      const QuantileFit& fit = fits[i];
      IntervalSet iv;
      if (cfg.ci == IntervalMethod::Bootstrap) {
        BootstrapOptions b{cfg.replicates, cfg.level, derive_seed(cfg.seed, i), cfg.workers, cfg.solver};
        iv = bootstrap_intervals(design.X, design.outcome, fit.tau(), b);
        iv.estimate = fit.coefficients();
      } else {
        iv = sandwich_intervals(fit, design.X, cfg.level);
      }
      push_interval_rows(report, "qr", fit.tau(), design.names, iv);
      report.qr.push_back({fit.tau(), fit.objective(), fit.n_neg(), fit.n_zero(), fit.n_pos(), fit.iterations()});
      const double beta = fit.coefficients()(beta_index);
      report.speeds.push_back({"qr", fit.tau(), beta, speed_lambda(beta, period, convention)});
    }
  });

  SpatialOptions spatial{cfg.rho_grid, cfg.criterion, cfg.solver};
  const SpatialDesign sdesign =
      clock.run("instruments", [&] { return SpatialDesign::build(design.X, design.names, design.outcome, W); });

  clock.run("sqr", [&] {
    const auto entries = fit_spatial_process(sdesign, cfg.taus, cfg.estimator, spatial, cfg.workers);
    std::vector<std::string> names = design.names;
    names.push_back("rho");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (!e.fit) {
        report.sqr_failures.emplace_back(e.tau, e.error);
        continue;
      }
      const SpatialQuantileFit& fit = *e.fit;
      IntervalSet iv;
      try {
        if (cfg.spatial_interval_method() == IntervalMethod::Sandwich) {
          iv = sandwich_intervals(fit, sdesign, cfg.level);
        } else {
          BootstrapOptions b{cfg.replicates, cfg.level, derive_seed(cfg.seed, 1000 + i), cfg.workers, cfg.solver};
          iv = bootstrap_intervals(sdesign, fit.tau, cfg.estimator, spatial, b);
        }
      } catch (const NumericalError& err) {
        report.sqr_failures.emplace_back(e.tau, std::string("intervals: ") + err.what());
        continue;
      }
      push_interval_rows(report, "sqr", fit.tau, names, iv);
      report.sqr.push_back({fit.tau, to_string(fit.estimator), to_string(fit.criterion), fit.boundary_warning,
                            fit.auxiliary_coefficient, fit.inner.objective()});
      const double beta = fit.theta(beta_index);
      report.speeds.push_back({"sqr", fit.tau, beta, speed_lambda(beta, period, convention)});
    }
  });

  PipelineResult result{std::move(report), {}, {}, {}};
  clock.run("clusters", [&] {
    const auto& spec = cfg.clusters;
    Eigen::VectorXd residuals;
    Eigen::Index n_neg = 0;
    Eigen::Index n_zero = 0;
    std::string source;
    if (spec.source == "qr") {
      const QuantileFit fit = fit_quantile(design.X, design.outcome, spec.tau_u, cfg.solver);
      residuals = fit.residuals();
      n_neg = fit.n_neg();
      n_zero = fit.n_zero();
      source = "qr";
    } else {
      const SpatialQuantileFit fit = fit_spatial(sdesign, spec.tau_u, cfg.estimator, spatial);
      residuals = fit.residuals;
      n_neg = fit.inner.n_neg();
      n_zero = fit.inner.n_zero();
      source = "sqr:" + to_string(cfg.estimator);
    }
    ClusterAssignment a = classify_residuals(residuals, ds.region_ids(), spec.k, spec.scheme);
    a.tau_u = spec.tau_u;
    a.source = source;
    ClusterSummary summary = cluster_report(a, ds);

    Json c;
    c["tau_u"] = number(a.tau_u);
    c["k"] = a.k;
    c["scheme"] = to_string(a.scheme);
    c["source"] = a.source;
    Json bounds = Json::array();
    for (Eigen::Index j = 0; j < a.boundaries.size(); ++j) bounds.push_back(number(a.boundaries(j)));
    c["boundaries"] = bounds;
    Json classes = Json::array();
    for (const auto& cls : summary.classes) {
      classes.push_back({{"class", cls.label},
                         {"count", cls.count},
                         {"residual_mean", number(cls.residual_mean)},
                         {"residual_min", number(cls.residual_min)},
                         {"residual_max", number(cls.residual_max)}});
    }
    c["classes"] = classes;
    Json composition = Json::object();
    for (const auto& [country, counts] : summary.composition) composition[country] = counts;
    c["composition"] = composition;
    c["residual_signs"] = {{"n", residuals.size()}, {"n_neg", n_neg}, {"n_zero", n_zero}};
    result.report.clusters = c;
    result.assignment = std::move(a);
    result.cluster_summary = std::move(summary);
  });

  Json meta;
  meta["tool"] = "qconv";
  meta["version"] = kVersion;
  meta["input"] = cfg.input.filename().string();
  meta["n"] = ds.size();
  meta["countries"] = ds.country_count();
  meta["coefficient_names"] = design.names;
  meta["config"] = cfg.to_json();
  meta["conventions"] = {
      {"growth", cfg.model.growth_annualized ? "annualized log growth (ln y1 - ln y0) / T" : "total log growth ln y1 - ln y0"},
      {"human_capital", cfg.model.human_capital == HumanCapitalScale::Log ? "log" : "level"},
      {"objective", "unscaled sum of check losses (no 1/n factor)"},
      {"qr_intervals", cfg.ci == IntervalMethod::Bootstrap
                           ? "xy-pair percentile bootstrap (used in place of rank-test inversion)"
                           : "kernel sandwich"},
      {"sqr_intervals", cfg.spatial_interval_method() == IntervalMethod::Sandwich
                            ? "instrumental kernel sandwich, joint in (theta, rho)"
                            : "row-resampling percentile bootstrap"},
      {"ivqr_criterion", to_string(cfg.criterion) == "wald" ? "squared t-statistic of the instrument coefficient"
                                                            : "squared instrument coefficient"},
      {"weights", "k-nearest neighbours, row standardized, ties to lower index"},
      {"instruments", "[X, W X, W^2 X] without lagged intercepts"}};
  meta["seeds"] = {{"bootstrap", cfg.seed}};
  result.report.metadata = meta;
  result.timings = clock.timings;
  return result;
}

PipelineResult run_pipeline_to_disk(const RunConfig& cfg) {
  PipelineResult result = run_pipeline(cfg);
  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  try {
    fs::create_directories(cfg.output_dir);
    auto write = [&](const std::string& name, auto&& fn) {
      const fs::path path = cfg.output_dir / name;
      written.push_back(path);
      std::ofstream out(path, std::ios::binary);
      if (!out) throw Error("cannot write '" + path.string() + "'");
      fn(out);
      if (!out) throw Error("write failed for '" + path.string() + "'");
    };
    write("report.json", [&](std::ostream& o) { o << dump_json(report_to_json(result.report)); });
    write("coefficients.csv", [&](std::ostream& o) { write_rows_csv(o, result.report.coefficients); });
    write("figure1.csv", [&](std::ostream& o) { write_rows_csv(o, emit_plot_data(result.report, Figure::QuantileEffects)); });
    if (result.report.has_model("sqr")) {
      write("figure2.csv", [&](std::ostream& o) { write_rows_csv(o, emit_plot_data(result.report, Figure::SpatialEffects)); });
      write("figure3.csv", [&](std::ostream& o) { write_rows_csv(o, emit_plot_data(result.report, Figure::SpatialLag)); });
    }
    write("clusters.csv", [&](std::ostream& o) { write_assignment_csv(o, result.assignment); });
    write("cluster_summary.csv", [&](std::ostream& o) { write_summary_csv(o, result.cluster_summary); });
    write("timings.json", [&](std::ostream& o) { o << dump_json(result.timings); });
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
    throw;
  }
  return result;
}

}  // namespace qconv
