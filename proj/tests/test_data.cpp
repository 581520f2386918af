#include "support.hpp"

#include "qconv/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace qconv;

TEST_CASE("three well-formed rows load in order") {
  const std::string csv = std::string(support::kHeader) +
                          "A,X,0,0,100,110,0.01,0.2,2\n"
                          "B,X,1,0,200,210,0.02,0.25,3\n"
                          "C,Y,0,1,300,290,0.00,0.3,4\n";
  const Dataset ds = support::parse(csv);
  REQUIRE(ds.size() == 3);
  CHECK(ds.regions[0].region_id == "A");
  CHECK(ds.regions[1].region_id == "B");
  CHECK(ds.regions[2].region_id == "C");
  CHECK(ds.country_count() == 2);
  CHECK(ds.regions[2].gdp_pw_final == 290);
}

TEST_CASE("columns may come in any order and extras are ignored") {
  const std::string csv =
      "country,extra,region_id,human_capital,saving_rate,pop_growth,gdp_pw_final,gdp_pw_initial,coord_y,coord_x\n"
      "X,zzz,A,2,0.2,0.01,110,100,5,7\n";
  const Dataset ds = support::parse(csv);
  REQUIRE(ds.size() == 1);
  CHECK(ds.regions[0].coord_x == 7);
  CHECK(ds.regions[0].coord_y == 5);
  CHECK(ds.regions[0].human_capital == 2);
}

TEST_CASE("missing saving_rate column is a schema error naming it") {
  const std::string csv =
      "region_id,country,coord_x,coord_y,gdp_pw_initial,gdp_pw_final,pop_growth,human_capital\n"
      "A,X,0,0,100,110,0.01,2\n";
  try {
    support::parse(csv);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.column() == "saving_rate");
    CHECK(std::string(e.what()).find("saving_rate") != std::string::npos);
  }
}

TEST_CASE("negative initial GDP is a validation error citing the region") {
  const std::string csv = std::string(support::kHeader) +
                          "A,X,0,0,100,110,0.01,0.2,2\n"
                          "BAD,X,1,0,-1,210,0.02,0.25,3\n";
  try {
    support::parse(csv);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    REQUIRE(e.regions().size() == 1);
    CHECK(e.regions()[0] == "BAD");
    CHECK(std::string(e.what()).find("BAD") != std::string::npos);
  }
}

TEST_CASE("malformed rows") {
  const std::string head = support::kHeader;
  CHECK_THROWS_AS(support::parse(head + "A,X,0,0,abc,110,0.01,0.2,2\n"), RowError);
  CHECK_THROWS_AS(support::parse(head + "A,X,0,0,,110,0.01,0.2,2\n"), RowError);
  CHECK_THROWS_AS(support::parse(head + "A,X,0,0,100,110,0.01,0.2\n"), RowError);
  CHECK_THROWS_AS(support::parse(head + "A,X,0,0,100,110,0.01,0.2,2\nA,X,1,1,100,110,0.01,0.2,2\n"), RowError);
  CHECK_THROWS_AS(support::parse(""), SchemaError);
}

TEST_CASE("growth and MRW covariates") {
  std::ostringstream b;
  b.precision(17);
  b << "B,X,0,0,100," << 100 * std::exp(0.56) << ",0.01,0.2,2\n";
  const std::string csv = std::string(support::kHeader) + "A,X,0,0,100,100,0.01,0.2,2\n" + b.str();
  const Dataset ds = support::parse(csv);
  const DesignMatrix d = build_design(ds);
  CHECK(d.names == design_names());
  CHECK(d.outcome(0) == 0.0);
  CHECK(d.outcome(1) == doctest::Approx(0.02).epsilon(1e-9));
  CHECK(d.X(0, 2) == doctest::Approx(-2.8134107167600364).epsilon(1e-12));
  CHECK(d.X(0, 1) == doctest::Approx(std::log(100.0)));
  CHECK(d.X(0, 3) == doctest::Approx(std::log(0.2)));
  CHECK(d.X(0, 4) == doctest::Approx(std::log(2.0)));

  ModelConfig total;
  total.growth_annualized = false;
  total.human_capital = HumanCapitalScale::Level;
  const DesignMatrix t = build_design(ds, total);
  CHECK(t.outcome(1) == doctest::Approx(0.56).epsilon(1e-12));
  CHECK(t.X(0, 4) == 2.0);
}

TEST_CASE("log of a non-positive argument is a domain error") {
  const Dataset ds = support::parse(std::string(support::kHeader) + "A,X,0,0,100,100,-0.06,0.2,2\n");
  try {
    build_design(ds);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(e.region() == "A");
  }
}

TEST_CASE("write then parse round-trips exactly") {
  const std::string csv = std::string(support::kHeader) + "A,X,0.1,0.3,100.25,110.5,0.011,0.2,2\n" +
                          "\"B,1\",Y,1e-3,2,123456.789,1,0,0.5,9\n";
  const Dataset ds = support::parse(csv);
  std::ostringstream out;
  write_dataset(out, ds);
  const Dataset back = support::parse(out.str());
  REQUIRE(back.size() == 2);
  CHECK(back.regions[1].region_id == "B,1");
  CHECK(back.regions[0].coord_x == ds.regions[0].coord_x);
  CHECK(back.regions[1].gdp_pw_initial == ds.regions[1].gdp_pw_initial);
}

TEST_CASE("bad model configuration") {
  ModelConfig m;
  m.period_years = 0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = {};
  m.tech_plus_depreciation = 0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
}
