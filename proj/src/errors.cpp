#include "kecho/errors.hpp"

#include <cstdio>

namespace kecho {

std::string_view category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidArgument: return "invalid_argument";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Truncation: return "truncation";
    case ErrorCategory::Convergence: return "convergence";
    case ErrorCategory::SingularCoefficient: return "singular_coefficient";
    case ErrorCategory::PeakNotFound: return "peak_not_found";
    case ErrorCategory::Io: return "io";
  }
  return "unknown";
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::InvalidArgument: return 2;
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Truncation: return 3;
    case ErrorCategory::Convergence: return 4;
    case ErrorCategory::SingularCoefficient: return 5;
    case ErrorCategory::PeakNotFound: return 6;
    case ErrorCategory::Io: return 7;
  }
  return 1;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace kecho
