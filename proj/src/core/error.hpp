#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace onebit {

using Index = std::int64_t;

/// Base class for all library failures.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Incompatible matrix/vector shapes.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what) {}
};

/// Invalid configuration value; carries the offending field name.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Numerical failure during an iterative computation.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what) {}
};

/// QR found a numerically dependent column.
class RankDeficiencyError : public NumericError {
 public:
  RankDeficiencyError(Index column, const std::string& what)
      : NumericError(what), column_(column) {}
  Index column() const { return column_; }
  Index iteration() const { return iteration_; }
  void set_iteration(Index t) { iteration_ = t; }

 private:
  Index column_;
  Index iteration_ = -1;
};

/// Iteration budget exhausted; carries the best estimate reached.
class ConvergenceError : public NumericError {
 public:
  ConvergenceError(double best_estimate, const std::string& what)
      : NumericError(what), best_estimate_(best_estimate) {}
  double best_estimate() const { return best_estimate_; }

 private:
  double best_estimate_;
};

}  // namespace onebit
