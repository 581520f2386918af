#pragma once

#include "qconv/clusters.hpp"
#include "qconv/data.hpp"
#include "qconv/inference.hpp"
#include "qconv/qr.hpp"
#include "qconv/spatial.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qconv {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

enum class ErrorKind { Config, Data, Numerical, Other };
ErrorKind classify(const std::exception& e);
// Process exit code for an error kind: 2 config, 3 data, 4 numerical, 1 other.
int exit_code(ErrorKind kind);

// A pipeline stage failed; keeps the category of the underlying error.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorKind kind, const std::string& cause)
      : Error("stage '" + stage + "' failed: " + cause), stage_(std::move(stage)), kind_(kind) {}
  const std::string& stage() const { return stage_; }
  ErrorKind kind() const { return kind_; }

 private:
  std::string stage_;
  ErrorKind kind_;
};

struct ClusterSpec {
  double tau_u = 0.90;
  int k = 3;
  BinningScheme scheme = BinningScheme::EqualWidth;
  // "qr" (non-spatial fit at tau_u) or "sqr" (spatial fit with the configured estimator)
  std::string source = "qr";
};

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path output_dir = "qconv_out";
  ModelConfig model;
  int neighbors = 5;
  std::vector<double> taus = default_tau_grid();
  Estimator estimator = Estimator::Ivqr;
  RhoGrid rho_grid;
  IvqrCriterion criterion = IvqrCriterion::Wald;
  // Non-spatial intervals (bootstrap or sandwich).
  IntervalMethod ci = IntervalMethod::Bootstrap;
  // Spatial intervals; unset means sandwich for IVQR and bootstrap for DSQR.
  std::optional<IntervalMethod> spatial_ci;
  double level = 0.90;
  int replicates = 999;
  std::uint64_t seed = 42;
  ClusterSpec clusters;
  SolverOptions solver;
  int workers = 1;

  IntervalMethod spatial_interval_method() const;
  // Every range check; throws ConfigError.
  void validate() const;
  // Overlays the keys present in `j` on this config.
  void merge_json(const Json& j);
  // Settings that influence results (no paths or worker counts).
  Json to_json() const;
};

IntervalMethod parse_interval_method(const std::string& text);

struct CoefficientRow {
  std::string model;        // ols | qr | sqr
  std::string coefficient;  // design name or "rho"
  std::optional<double> tau;
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct QrDiagnostics {
  double tau;
  double objective;
  Eigen::Index n_neg;
  Eigen::Index n_zero;
  Eigen::Index n_pos;
  int iterations;
};

struct SqrDiagnostics {
  double tau;
  std::string estimator;
  std::string criterion;
  bool boundary_warning;
  double auxiliary_coefficient;
  double objective;
};

struct SpeedRow {
  std::string model;
  std::optional<double> tau;
  double beta;
  std::optional<double> lambda;
};

struct Report {
  Json metadata;
  std::vector<std::string> names;
  std::vector<CoefficientRow> coefficients;
  std::vector<QrDiagnostics> qr;
  std::vector<SqrDiagnostics> sqr;
  std::vector<std::pair<double, std::string>> sqr_failures;
  std::vector<SpeedRow> speeds;
  std::string convergence_convention;
  int period_years = 28;
  double ols_rss = 0.0;
  std::string qr_interval_method;
  std::string sqr_interval_method;
  std::optional<Json> clusters;

  bool has_model(const std::string& model) const;
  std::vector<double> taus(const std::string& model) const;
};

// Formats with 6 significant digits. All numbers come from the fit objects stored in the report.
Json report_to_json(const Report& report);
Report report_from_json(const Json& j);

enum class Figure { QuantileEffects, SpatialEffects, SpatialLag };
Figure parse_figure(const std::string& text);

// Long-format rows model,coefficient,tau,estimate,lower,upper for one figure.
std::vector<CoefficientRow> emit_plot_data(const Report& report, Figure figure);
void write_rows_csv(std::ostream& out, const std::vector<CoefficientRow>& rows);

struct PipelineResult {
  Report report;
  ClusterAssignment assignment;
  ClusterSummary cluster_summary;
  Json timings;
};

PipelineResult run_pipeline(const RunConfig& cfg);
// Runs the pipeline and writes report.json, coefficients.csv, figure{1,2,3}.csv, clusters.csv,
// cluster_summary.csv and timings.json into cfg.output_dir. Nothing is left behind on failure.
PipelineResult run_pipeline_to_disk(const RunConfig& cfg);

std::string format_sig6(double v);
std::string dump_json(const Json& j);

}  // namespace qconv
