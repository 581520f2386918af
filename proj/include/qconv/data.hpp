#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace qconv {

struct RegionRecord {
  std::string region_id;
  std::string country;
  double coord_x = 0.0;
  double coord_y = 0.0;
  double gdp_pw_initial = 0.0;
  double gdp_pw_final = 0.0;
  double pop_growth = 0.0;
  double saving_rate = 0.0;
  double human_capital = 0.0;
};

// Cross-section of regions in input order.
struct Dataset {
  std::vector<RegionRecord> regions;

  Eigen::Index size() const { return static_cast<Eigen::Index>(regions.size()); }
  std::size_t country_count() const;
  std::vector<std::string> region_ids() const;
  Eigen::MatrixX2d coordinates() const;
};

// Required CSV columns, in canonical order.
const std::vector<std::string>& dataset_columns();

Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::istream& in);
void write_dataset(std::ostream& out, const Dataset& ds);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);

enum class HumanCapitalScale { Log, Level };

struct ModelConfig {
  int period_years = 28;
  double tech_plus_depreciation = 0.05;
  bool growth_annualized = true;
  HumanCapitalScale human_capital = HumanCapitalScale::Log;

  void validate() const;
};

// MRW growth design: outcome g and columns [intercept, q, v, s, h].
struct DesignMatrix {
  Eigen::VectorXd outcome;
  Eigen::MatrixXd X;
  std::vector<std::string> names;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
};

// Column names of the MRW design, intercept first.
const std::vector<std::string>& design_names();

DesignMatrix build_design(const Dataset& ds, const ModelConfig& cfg = {});

}  // namespace qconv
