#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kecho/config.hpp"

namespace kecho {

inline constexpr int kFormatVersion = 1;

struct Table {
  std::vector<std::string> columns;  // names carry a unit suffix where one applies
  std::vector<std::vector<double>> rows;
};

struct ExperimentResult {
  Table table;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> notes;
};

/// Runs the experiment named by config.kind. Validates first; writes nothing.
ExperimentResult compute(const RunConfig& config);

/// RFC 4180 CSV, values printed with 17 significant digits.
std::string to_csv(const Table& table);

/// Sidecar document: format version, resolved config, derived constants and metrics.
std::string sidecar_json(const RunConfig& config, const ExperimentResult& result);

struct OutputPaths {
  std::string csv;
  std::string json;
};

/// "run1" and "run1.csv" both map to run1.csv + run1.json. Empty means "kecho-<kind>".
OutputPaths output_paths(const RunConfig& config);

/// compute() followed by writing both files. Throws IoError if either cannot be written.
OutputPaths run(const RunConfig& config);

}  // namespace kecho
