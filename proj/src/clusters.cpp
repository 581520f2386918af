#include "qconv/clusters.hpp"

#include "qconv/errors.hpp"
#include "qconv/loss.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>
#include <unordered_map>

namespace qconv {

std::string to_string(BinningScheme s) { return s == BinningScheme::EqualWidth ? "equal-width" : "equal-count"; }

BinningScheme parse_scheme(const std::string& text) {
  if (text == "equal-width") return BinningScheme::EqualWidth;
  if (text == "equal-count") return BinningScheme::EqualCount;
  throw ConfigError("unknown binning scheme '" + text + "' (expected equal-width or equal-count)");
}

ClusterAssignment classify_residuals(const Eigen::Ref<const Eigen::VectorXd>& residuals,
                                     const std::vector<std::string>& region_ids, int k, BinningScheme scheme) {
  const Eigen::Index n = residuals.size();
  if (k < 2) throw ConfigError("cluster count k must be >= 2");
  if (n < k) throw DataError("need at least k residuals to form k classes");
  if (static_cast<Eigen::Index>(region_ids.size()) != n) {
    throw DimensionError("classify_residuals: one region id per residual required");
  }
  if (!residuals.allFinite()) throw DataError("classify_residuals: non-finite residuals");
  const double lo = residuals.minCoeff();
  const double hi = residuals.maxCoeff();
  if (lo == hi) throw DegenerateError("all residuals are identical; classes would collapse into one");

  ClusterAssignment out;
  out.k = k;
  out.scheme = scheme;
  out.region_ids = region_ids;
  out.residuals = residuals;
  out.boundaries.resize(k - 1);
  out.classes.assign(static_cast<std::size_t>(n), 1);

  if (scheme == BinningScheme::EqualWidth) {
    const double width = (hi - lo) / k;
    for (int j = 1; j < k; ++j) out.boundaries(j - 1) = lo + j * width;
    // Absorb rounding in lo + j*width so values landing on a cut point go up.
    const double slack = 1e-12 * (hi - lo);
    for (Eigen::Index i = 0; i < n; ++i) {
      int c = 1;
      for (int j = 0; j < k - 1; ++j) {
        if (residuals(i) >= out.boundaries(j) - slack) c = j + 2;
      }
      out.classes[i] = c;
    }
  } else {
    for (int j = 1; j < k; ++j) {
      const double tau = static_cast<double>(j) / k;
      out.boundaries(j - 1) = empirical_quantile(residuals, tau);
    }
    for (int j = 1; j < k - 1; ++j) {
      if (!(out.boundaries(j) > out.boundaries(j - 1))) {
        throw DegenerateError("equal-count boundaries coincide (too many tied residuals)");
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      int c = 1;
      for (int j = 0; j < k - 1; ++j) {
        if (residuals(i) > out.boundaries(j)) c = j + 2;
      }
      out.classes[i] = c;
    }
  }
  return out;
}

ClusterSummary cluster_report(const ClusterAssignment& assignment, const Dataset& ds) {
  std::unordered_map<std::string, const RegionRecord*> by_id;
  for (const auto& r : ds.regions) by_id.emplace(r.region_id, &r);
  if (assignment.region_ids.size() != ds.regions.size()) {
    throw DataError("cluster assignment covers " + std::to_string(assignment.region_ids.size()) +
                    " regions but the dataset has " + std::to_string(ds.regions.size()));
  }
  ClusterSummary summary;
  summary.classes.resize(static_cast<std::size_t>(assignment.k));
  for (int c = 0; c < assignment.k; ++c) {
    summary.classes[c].label = c + 1;
    summary.classes[c].residual_min = std::numeric_limits<double>::infinity();
    summary.classes[c].residual_max = -std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = 0; i < assignment.region_ids.size(); ++i) {
    auto it = by_id.find(assignment.region_ids[i]);
    if (it == by_id.end()) throw DataError("region '" + assignment.region_ids[i] + "' not found in dataset");
    const int c = assignment.classes[i] - 1;
    auto& cls = summary.classes[c];
    const double r = assignment.residuals(static_cast<Eigen::Index>(i));
    ++cls.count;
    cls.residual_mean += r;
    cls.residual_min = std::min(cls.residual_min, r);
    cls.residual_max = std::max(cls.residual_max, r);
    auto& row = summary.composition[it->second->country];
    if (row.empty()) row.assign(static_cast<std::size_t>(assignment.k), 0);
    ++row[c];
  }
  for (auto& cls : summary.classes) {
    if (cls.count > 0) {
      cls.residual_mean /= cls.count;
    } else {
      cls.residual_mean = cls.residual_min = cls.residual_max = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return summary;
}

namespace {

std::string sig6(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void write_assignment_csv(std::ostream& out, const ClusterAssignment& assignment) {
  out << "region_id,class,residual\n";
  for (std::size_t i = 0; i < assignment.region_ids.size(); ++i) {
    out << assignment.region_ids[i] << ',' << assignment.classes[i] << ','
        << sig6(assignment.residuals(static_cast<Eigen::Index>(i))) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const ClusterSummary& summary) {
  out << "class,count,residual_mean,residual_min,residual_max\n";
  for (const auto& c : summary.classes) {
    out << c.label << ',' << c.count << ',' << sig6(c.residual_mean) << ',' << sig6(c.residual_min) << ','
        << sig6(c.residual_max) << '\n';
  }
  out << "\ncountry,class,count\n";
  for (const auto& [country, counts] : summary.composition) {
    for (std::size_t c = 0; c < counts.size(); ++c) out << country << ',' << c + 1 << ',' << counts[c] << '\n';
  }
}

}  // namespace qconv
