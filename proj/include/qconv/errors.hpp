#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qconv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user configuration (ranges, flags, grids). Raised before any computation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input data problems.
class DataError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public DataError {
 public:
  explicit SchemaError(std::string column)
      : DataError("missing required column '" + column + "'"), column_(std::move(column)) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

class RowError : public DataError {
 public:
  RowError(std::size_t row, const std::string& what)
      : DataError("row " + std::to_string(row) + ": " + what), row_(row) {}
  // 1-based data row index (header excluded).
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class ValidationError : public DataError {
 public:
  ValidationError(const std::string& what, std::vector<std::string> regions)
      : DataError(what), regions_(std::move(regions)) {}
  const std::vector<std::string>& regions() const { return regions_; }

 private:
  std::vector<std::string> regions_;
};

class DomainError : public DataError {
 public:
  DomainError(std::string region, std::string variable)
      : DataError("non-positive logarithm argument for '" + variable + "' in region '" + region + "'"),
        region_(std::move(region)),
        variable_(std::move(variable)) {}
  const std::string& region() const { return region_; }
  const std::string& variable() const { return variable_; }

 private:
  std::string region_;
  std::string variable_;
};

// Failures of the numerical machinery.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class RankDeficiencyError : public NumericalError {
 public:
  RankDeficiencyError(const std::string& what, double smallest_singular_value,
                      std::vector<std::string> columns)
      : NumericalError(what), smallest_singular_value_(smallest_singular_value), columns_(std::move(columns)) {}
  double smallest_singular_value() const { return smallest_singular_value_; }
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  double smallest_singular_value_;
  std::vector<std::string> columns_;
};

class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double gap) : NumericalError(what), gap_(gap) {}
  double gap() const { return gap_; }

 private:
  double gap_;
};

class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace qconv
