#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kecho {

// Each category maps to a distinct process exit code in the CLI.
enum class ErrorCategory {
  InvalidArgument,
  Config,
  Truncation,
  Convergence,
  SingularCoefficient,
  PeakNotFound,
  Io,
};

std::string_view category_name(ErrorCategory c);
int exit_code(ErrorCategory c);

/// Compact "%.3e" rendering for error messages.
std::string sci(double v);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCategory::InvalidArgument, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::Config, what) {}
};

/// Population leaked to the edge of a truncated momentum ladder.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, double edge_population)
      : Error(ErrorCategory::Truncation, what), edge_population_(edge_population) {}
  double edge_population() const noexcept { return edge_population_; }

 private:
  double edge_population_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : Error(ErrorCategory::Convergence, what), achieved_(achieved) {}
  /// Best error estimate reached before giving up.
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class SingularCoefficientError : public Error {
 public:
  explicit SingularCoefficientError(const std::string& what)
      : Error(ErrorCategory::SingularCoefficient, what) {}
};

class PeakNotFoundError : public Error {
 public:
  explicit PeakNotFoundError(const std::string& what)
      : Error(ErrorCategory::PeakNotFound, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

}  // namespace kecho
