#include "qconv/data.hpp"

#include "qconv/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace qconv {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  return std::string(s.substr(b, e - b));
}

// Minimal RFC 4180 splitting: commas, optional double quotes with "" escapes.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

double parse_number(const std::string& text, std::size_t row, const std::string& column) {
  if (text.empty()) throw RowError(row, "missing value in column '" + column + "'");
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw RowError(row, "cannot parse '" + text + "' in column '" + column + "' as a number");
  }
  if (!std::isfinite(value)) throw RowError(row, "non-finite value in column '" + column + "'");
  return value;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string full_precision(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& dataset_columns() {
  static const std::vector<std::string> columns = {
      "region_id",      "country",      "coord_x",     "coord_y",      "gdp_pw_initial",
      "gdp_pw_final",   "pop_growth",   "saving_rate", "human_capital"};
  return columns;
}

const std::vector<std::string>& design_names() {
  static const std::vector<std::string> names = {"intercept", "q", "v", "s", "h"};
  return names;
}

std::size_t Dataset::country_count() const {
  std::set<std::string> countries;
  for (const auto& r : regions) countries.insert(r.country);
  return countries.size();
}

std::vector<std::string> Dataset::region_ids() const {
  std::vector<std::string> ids;
  ids.reserve(regions.size());
  for (const auto& r : regions) ids.push_back(r.region_id);
  return ids;
}

Eigen::MatrixX2d Dataset::coordinates() const {
  Eigen::MatrixX2d c(size(), 2);
  for (Eigen::Index i = 0; i < size(); ++i) {
    c(i, 0) = regions[i].coord_x;
    c(i, 1) = regions[i].coord_y;
  }
  return c;
}

Dataset parse_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(dataset_columns().front());
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const auto header = split_csv(line);
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t j = 0; j < header.size(); ++j) position.emplace(header[j], j);
  std::vector<std::size_t> index;
  for (const auto& name : dataset_columns()) {
    auto it = position.find(name);
    if (it == position.end()) throw SchemaError(name);
    index.push_back(it->second);
  }

  Dataset ds;
  std::vector<std::string> invalid;
  std::set<std::string> seen;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto f = split_csv(line);
    if (f.size() != header.size()) {
      throw RowError(row, "expected " + std::to_string(header.size()) + " fields, found " +
                              std::to_string(f.size()));
    }
    const auto& cols = dataset_columns();
    RegionRecord r;
    r.region_id = f[index[0]];
    r.country = f[index[1]];
    if (r.region_id.empty()) throw RowError(row, "empty region_id");
    if (!seen.insert(r.region_id).second) throw RowError(row, "duplicate region_id '" + r.region_id + "'");
    double* numeric[] = {&r.coord_x,     &r.coord_y,    &r.gdp_pw_initial, &r.gdp_pw_final,
                         &r.pop_growth,  &r.saving_rate, &r.human_capital};
    for (std::size_t j = 0; j < 7; ++j) *numeric[j] = parse_number(f[index[j + 2]], row, cols[j + 2]);
    if (!(r.gdp_pw_initial > 0 && r.gdp_pw_final > 0 && r.saving_rate > 0 && r.human_capital > 0)) {
      invalid.push_back(r.region_id);
    }
    ds.regions.push_back(std::move(r));
  }
  if (!invalid.empty()) {
    std::string msg = "invariant violation (gdp_pw_initial, gdp_pw_final, saving_rate, human_capital must be > 0) in regions:";
    for (const auto& id : invalid) msg += " " + id;
    throw ValidationError(msg, invalid);
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_dataset(in);
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  const auto& cols = dataset_columns();
  for (std::size_t j = 0; j < cols.size(); ++j) out << (j ? "," : "") << cols[j];
  out << '\n';
  for (const auto& r : ds.regions) {
    out << quote_if_needed(r.region_id) << ',' << quote_if_needed(r.country) << ',' << full_precision(r.coord_x)
        << ',' << full_precision(r.coord_y) << ',' << full_precision(r.gdp_pw_initial) << ','
        << full_precision(r.gdp_pw_final) << ',' << full_precision(r.pop_growth) << ','
        << full_precision(r.saving_rate) << ',' << full_precision(r.human_capital) << '\n';
  }
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_dataset(out, ds);
}

void ModelConfig::validate() const {
  if (period_years < 1) throw ConfigError("period_years must be >= 1");
  if (!(tech_plus_depreciation > 0) || !std::isfinite(tech_plus_depreciation)) {
    throw ConfigError("tech_plus_depreciation must be > 0");
  }
}

DesignMatrix build_design(const Dataset& ds, const ModelConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = ds.size();
  DesignMatrix d;
  d.names = design_names();
  d.outcome.resize(n);
  d.X.resize(n, 5);
  auto checked_log = [](double arg, const RegionRecord& r, const char* variable) {
    if (!(arg > 0)) throw DomainError(r.region_id, variable);
    return std::log(arg);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = ds.regions[i];
    const double q0 = checked_log(r.gdp_pw_initial, r, "gdp_pw_initial");
    const double q1 = checked_log(r.gdp_pw_final, r, "gdp_pw_final");
    const double growth = q1 - q0;
    d.outcome(i) = cfg.growth_annualized ? growth / cfg.period_years : growth;
    d.X(i, 0) = 1.0;
    d.X(i, 1) = q0;
    d.X(i, 2) = checked_log(r.pop_growth + cfg.tech_plus_depreciation, r, "pop_growth + tech_plus_depreciation");
    d.X(i, 3) = checked_log(r.saving_rate, r, "saving_rate");
    d.X(i, 4) = cfg.human_capital == HumanCapitalScale::Log ? checked_log(r.human_capital, r, "human_capital")
                                                            : r.human_capital;
  }
  if (!d.X.allFinite() || !d.outcome.allFinite()) throw DataError("design contains non-finite entries");
  return d;
}

}  // namespace qconv
