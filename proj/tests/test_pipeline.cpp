#include "support.hpp"

#include "qconv/errors.hpp"
#include "qconv/pipeline.hpp"

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>

using namespace qconv;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunConfig fast_config() {
  RunConfig cfg;
  cfg.input = support::fixture_path();
  cfg.taus = {0.25, 0.5, 0.75};
  cfg.replicates = 200;
  return cfg;
}

const fs::path kGolden = fs::path(QCONV_SOURCE_DIR) / "tests" / "golden" / "fixture_report.json";

}  // namespace

TEST_CASE("golden report on the fixture") {
  RunConfig cfg;
  cfg.input = support::fixture_path();
  cfg.output_dir = support::scratch_dir("golden");
  run_pipeline_to_disk(cfg);
  const std::string produced = slurp(cfg.output_dir / "report.json");
  if (std::getenv("QCONV_UPDATE_GOLDEN")) {
    std::ofstream(kGolden, std::ios::binary) << produced;
  }
  REQUIRE(fs::exists(kGolden));
  CHECK(produced == slurp(kGolden));
  for (const char* name : {"coefficients.csv", "figure1.csv", "figure2.csv", "figure3.csv", "clusters.csv",
                           "cluster_summary.csv", "timings.json"}) {
    CHECK(fs::exists(cfg.output_dir / name));
  }
}

TEST_CASE("beta is negative at every tau on the fixture") {
  RunConfig cfg;
  cfg.input = support::fixture_path();
  cfg.ci = IntervalMethod::Sandwich;
  const Report r = run_pipeline(cfg).report;
  int qr_rows = 0;
  for (const auto& row : r.coefficients) {
    if (row.coefficient == "q" && row.model != "ols") {
      CHECK(row.estimate < 0);
      ++qr_rows;
    }
  }
  CHECK(qr_rows == 38);
  CHECK(r.sqr_failures.empty());
}

TEST_CASE("same config, same bytes, any worker count") {
  RunConfig cfg = fast_config();
  const std::string a = dump_json(report_to_json(run_pipeline(cfg).report));
  const std::string b = dump_json(report_to_json(run_pipeline(cfg).report));
  cfg.workers = 4;
  const std::string c = dump_json(report_to_json(run_pipeline(cfg).report));
  CHECK(a == b);
  CHECK(a == c);
  cfg.seed = 43;
  CHECK(a != dump_json(report_to_json(run_pipeline(cfg).report)));
}

TEST_CASE("invalid configs fail before any computation") {
  RunConfig cfg = fast_config();
  cfg.input = "/nonexistent/never-read.csv";
  cfg.taus = {1.5};
  CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
  cfg = fast_config();
  cfg.level = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = fast_config();
  cfg.replicates = 50;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = fast_config();
  cfg.clusters.source = "ols";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = fast_config();
  cfg.rho_grid.lo = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("stage errors keep their category") {
  RunConfig cfg = fast_config();
  cfg.input = "/nonexistent/input.csv";
  try {
    run_pipeline(cfg);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "load");
    CHECK(exit_code(e.kind()) == 3);
  }
}

TEST_CASE("json config merge") {
  RunConfig cfg;
  cfg.merge_json(Json::parse(R"({"taus": "0.1:0.3:0.1", "estimator": "dsqr", "replicates": 500,
                                 "clusters": {"k": 4, "scheme": "equal-count"}, "human_capital": "level"})"));
  CHECK(cfg.taus == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(cfg.estimator == Estimator::Dsqr);
  CHECK(cfg.replicates == 500);
  CHECK(cfg.clusters.k == 4);
  CHECK(cfg.clusters.scheme == BinningScheme::EqualCount);
  CHECK(cfg.model.human_capital == HumanCapitalScale::Level);
  CHECK(cfg.spatial_interval_method() == IntervalMethod::Bootstrap);
  CHECK_THROWS_AS(cfg.merge_json(Json::parse(R"({"tau": 0.5})")), ConfigError);
  CHECK_THROWS_AS(cfg.merge_json(Json::parse(R"({"replicates": "many"})")), ConfigError);
  CHECK_THROWS_AS(cfg.merge_json(Json::parse("[1]")), ConfigError);
  CHECK(!cfg.to_json().contains("workers"));
  CHECK(!cfg.to_json().contains("input"));
}

TEST_CASE("plot data") {
  const RunConfig cfg = fast_config();
  const Report r = run_pipeline(cfg).report;
  const auto f1 = emit_plot_data(r, Figure::QuantileEffects);
  int ols = 0;
  for (const auto& row : f1) {
    if (row.model == "ols") {
      ++ols;
      CHECK(!row.tau);
    }
  }
  CHECK(ols == 5);
  CHECK(f1.size() == 5 + 5 * 3);
  const auto f2 = emit_plot_data(r, Figure::SpatialEffects);
  CHECK(f2.size() == (5 + 1) * 3);
  const auto f3 = emit_plot_data(r, Figure::SpatialLag);
  CHECK(f3.size() == 3);
  for (const auto& row : f3) CHECK(row.coefficient == "rho");

  std::ostringstream csv;
  write_rows_csv(csv, f3);
  CHECK(csv.str().rfind("model,coefficient,tau,estimate,lower,upper\nsqr,rho,0.25,", 0) == 0);

  Report empty;
  CHECK_THROWS_AS(emit_plot_data(empty, Figure::SpatialLag), DataError);
  CHECK_THROWS_AS(parse_figure("figure4"), ConfigError);
}

TEST_CASE("report json round trip") {
  const Report r = run_pipeline(fast_config()).report;
  const Json j = report_to_json(r);
  const Report back = report_from_json(j);
  CHECK(dump_json(report_to_json(back)) == dump_json(j));
  CHECK(back.taus("sqr") == std::vector<double>{0.25, 0.5, 0.75});
  CHECK_THROWS_AS(report_from_json(Json::parse("{}")), DataError);
}

TEST_CASE("emission rounds to six significant digits only") {
  CHECK(format_sig6(0.123456789) == "0.123457");
  CHECK(format_sig6(-0.0000123456789) == "-1.23457e-05");
  CHECK(format_sig6(1234567.0) == "1.23457e+06");
}

TEST_CASE("failed writes leave no partial outputs") {
  RunConfig cfg = fast_config();
  cfg.output_dir = support::scratch_dir("partial");
  fs::create_directories(cfg.output_dir / "clusters.csv");  // blocks one output file
  CHECK_THROWS(run_pipeline_to_disk(cfg));
  CHECK(!fs::exists(cfg.output_dir / "report.json"));
  CHECK(!fs::exists(cfg.output_dir / "figure1.csv"));
}

TEST_CASE("cluster stage on the fixture respects the subgradient bound") {
  RunConfig cfg = fast_config();
  cfg.ci = IntervalMethod::Sandwich;
  const PipelineResult res = run_pipeline(cfg);
  const Json& c = *res.report.clusters;
  const double n = c["residual_signs"]["n"].get<double>();
  const double neg = c["residual_signs"]["n_neg"].get<double>();
  const double zero = c["residual_signs"]["n_zero"].get<double>();
  CHECK(neg <= 0.9 * n);
  CHECK(0.9 * n <= neg + zero);
  CHECK(res.assignment.classes.size() == 187);
  cfg.clusters.source = "sqr";
  const PipelineResult s = run_pipeline(cfg);
  CHECK(s.assignment.source == "sqr:ivqr");
}
