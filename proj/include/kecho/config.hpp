#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kecho/units.hpp"

namespace kecho {

enum class ExperimentKind {
  Echo,
  MomentumHistory,
  ScanEps,
  ScanP0,
  ScanAccel,
  FiniteScan,
  TauMinSweep,
  FitScaling,
  PeakShift,
};

std::string_view kind_name(ExperimentKind kind);
ExperimentKind parse_kind(std::string_view name);
const std::vector<ExperimentKind>& all_kinds();

/// Everything one CLI run needs. Times in s, p0 in ħκ units, lengths in m.
struct RunConfig {
  ExperimentKind kind = ExperimentKind::Echo;
  double mass_u = kRb85MassU;
  double lambda_nm = 780.0;

  std::vector<int> N;  // one value for single runs, several for sweeps
  std::optional<double> phi_d;
  std::vector<double> gamma;
  std::optional<double> tau_p;  // s

  double eps = 0.0;            // s
  double p0_hbar_kappa = 0.0;  // ħκ
  double accel = 0.0;          // m/s²
  std::optional<double> sigma;  // m
  std::string measure = "overlap";

  std::string engine = "ladder";
  std::string axis = "eps";  // fit-scaling
  std::vector<int> multiples{1};
  int points = 64;
  std::optional<std::pair<double, double>> range;
  int points_per_decade = 16;
  int parallel = 1;
  std::string out;
};

/// Flat key → value settings as read from a file or flags, before interpretation.
using Settings = std::map<std::string, std::string>;

/// Keys accepted in config files and as --<key> flags.
const std::vector<std::string>& config_keys();

/// Canonical name for a key or one of its alternative spellings (e.g. tau_p_us → tau_p).
std::string canonical_key(std::string_view key);

/// `key = value` lines; `#` starts a comment. Throws ConfigError on malformed lines.
Settings parse_key_value(std::string_view text);
/// The "config" object of a JSON sidecar, or a flat JSON object.
Settings parse_json_settings(std::string_view text);
/// Reads a file in either format (JSON if the first non-blank character is '{').
Settings load_settings(const std::string& path);

/// Interprets settings; throws ConfigError on unknown keys or bad values.
RunConfig make_config(const Settings& settings);

/// Kind-specific completeness and range checks, run before any computation.
void validate(const RunConfig& config);

/// Canonical settings that reproduce `config` through make_config().
Settings to_settings(const RunConfig& config);

PhysicalParams physical_params(const RunConfig& config);

/// "3ns", "2.5 us", "1e-9" (seconds when unitless).
double parse_duration(std::string_view text);
/// "100um", "0.1mm", "1e-4" (metres when unitless).
double parse_length(std::string_view text);
/// "16,32,64" or "16..128" (doubling from the first to the last value).
std::vector<int> parse_int_list(std::string_view text);
std::vector<double> parse_double_list(std::string_view text);

}  // namespace kecho
