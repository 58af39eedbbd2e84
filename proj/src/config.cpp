#include "kecho/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "kecho/errors.hpp"

namespace kecho {
namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::Echo, "echo"},
    {ExperimentKind::MomentumHistory, "momentum-history"},
    {ExperimentKind::ScanEps, "scan-eps"},
    {ExperimentKind::ScanP0, "scan-p0"},
    {ExperimentKind::ScanAccel, "scan-accel"},
    {ExperimentKind::FiniteScan, "finite-scan"},
    {ExperimentKind::TauMinSweep, "tau-min-sweep"},
    {ExperimentKind::FitScaling, "fit-scaling"},
    {ExperimentKind::PeakShift, "peak-shift"},
};

// Alternative spellings accepted on input.
const std::map<std::string, std::string>& aliases() {
  static const std::map<std::string, std::string> a{
      {"V0_over_hbar_kappa2", "gamma"},
      {"l", "multiples"},
      {"tau_p_us", "tau_p"},
      {"sigma_um", "sigma"},
  };
  return a;
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

double parse_number_prefix(std::string_view text, std::string& unit) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || !std::isfinite(v))
    throw ConfigError("not a number: '" + t + "'");
  unit = trim(std::string_view(res.ptr, static_cast<std::size_t>(t.data() + t.size() - res.ptr)));
  return v;
}

double parse_double(std::string_view text) {
  std::string unit;
  const double v = parse_number_prefix(text, unit);
  if (!unit.empty()) throw ConfigError("unexpected unit '" + unit + "' in '" + std::string(text) + "'");
  return v;
}

int parse_int(std::string_view text) {
  const std::string t = trim(text);
  int v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError("not an integer: '" + t + "'");
  return v;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(trim(cur));
  return parts;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F&& fmt) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += fmt(v[i]);
  }
  return s;
}

}  // namespace

std::string canonical_key(std::string_view key) {
  const auto it = aliases().find(std::string(key));
  return it != aliases().end() ? it->second : std::string(key);
}

std::string_view kind_name(ExperimentKind kind) {
  for (const auto& k : kKinds)
    if (k.kind == kind) return k.name;
  return "unknown";
}

ExperimentKind parse_kind(std::string_view name) {
  for (const auto& k : kKinds)
    if (name == k.name) return k.kind;
  throw ConfigError("unknown experiment kind '" + std::string(name) + "'");
}

const std::vector<ExperimentKind>& all_kinds() {
  static const std::vector<ExperimentKind> v = [] {
    std::vector<ExperimentKind> out;
    for (const auto& k : kKinds) out.push_back(k.kind);
    return out;
  }();
  return v;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "kind",  "mass_u",        "lambda_nm", "N",        "phi_d",  "gamma",
      "tau_p", "tau_p_us",      "eps",       "p0_hbar_kappa", "accel", "sigma",
      "sigma_um", "measure",    "engine",    "axis",     "multiples", "points",
      "range", "points_per_decade", "parallel", "out"};
  return keys;
}

double parse_duration(std::string_view text) {
  std::string unit;
  const double v = parse_number_prefix(text, unit);
  if (unit.empty() || unit == "s") return v;
  if (unit == "ms") return v * 1e-3;
  if (unit == "us" || unit == "µs") return v * 1e-6;
  if (unit == "ns") return v * 1e-9;
  if (unit == "ps") return v * 1e-12;
  throw ConfigError("unknown time unit '" + unit + "'");
}

double parse_length(std::string_view text) {
  std::string unit;
  const double v = parse_number_prefix(text, unit);
  if (unit.empty() || unit == "m") return v;
  if (unit == "mm") return v * 1e-3;
  if (unit == "um" || unit == "µm") return v * 1e-6;
  if (unit == "nm") return v * 1e-9;
  throw ConfigError("unknown length unit '" + unit + "'");
}

std::vector<int> parse_int_list(std::string_view text) {
  const std::string t = trim(text);
  const auto dots = t.find("..");
  if (dots != std::string::npos) {
    const int lo = parse_int(std::string_view(t).substr(0, dots));
    const int hi = parse_int(std::string_view(t).substr(dots + 2));
    if (lo < 1 || hi < lo) throw ConfigError("bad range '" + t + "'");
    std::vector<int> v;
    for (long n = lo; n <= hi; n *= 2) v.push_back(static_cast<int>(n));
    return v;
  }
  std::vector<int> v;
  for (const auto& p : split(t, ',')) v.push_back(parse_int(p));
  return v;
}

std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> v;
  for (const auto& p : split(text, ',')) v.push_back(parse_double(p));
  return v;
}

Settings parse_key_value(std::string_view text) {
  Settings s;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    s[key] = value;
  }
  return s;
}

Settings parse_json_settings(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (j.contains("config")) j = j["config"];
  if (!j.is_object()) throw ConfigError("JSON config must be an object");
  Settings s;
  auto scalar = [](const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number() || v.is_boolean()) return v.dump();
    throw ConfigError("unsupported JSON value " + v.dump());
  };
  for (const auto& [key, v] : j.items()) {
    if (v.is_array()) {
      std::string joined;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) joined += ",";
        joined += scalar(v[i]);
      }
      s[key] = joined;
    } else {
      s[key] = scalar(v);
    }
  }
  return s;
}

Settings load_settings(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_json_settings(text);
  return parse_key_value(text);
}

RunConfig make_config(const Settings& settings) {
  RunConfig c;
  std::map<std::string, std::string> seen;
  for (const auto& [raw_key, value] : settings) {
    const std::string key = canonical_key(raw_key);
    if (auto [it, fresh] = seen.emplace(key, raw_key); !fresh)
      throw ConfigError("'" + raw_key + "' and '" + it->second + "' set the same parameter");
    try {
      if (key == "kind") c.kind = parse_kind(trim(value));
      else if (key == "mass_u") c.mass_u = parse_double(value);
      else if (key == "lambda_nm") c.lambda_nm = parse_double(value);
      else if (key == "N") c.N = parse_int_list(value);
      else if (key == "phi_d") c.phi_d = parse_double(value);
      else if (key == "gamma") c.gamma = parse_double_list(value);
      else if (key == "tau_p")
        c.tau_p = raw_key == "tau_p_us" ? parse_double(value) * 1e-6 : parse_duration(value);
      else if (key == "eps") c.eps = parse_duration(value);
      else if (key == "p0_hbar_kappa") c.p0_hbar_kappa = parse_double(value);
      else if (key == "accel") c.accel = parse_double(value);
      else if (key == "sigma")
        c.sigma = raw_key == "sigma_um" ? parse_double(value) * 1e-6 : parse_length(value);
      else if (key == "measure") c.measure = trim(value);
      else if (key == "engine") c.engine = trim(value);
      else if (key == "axis") c.axis = trim(value);
      else if (key == "multiples") c.multiples = parse_int_list(value);
      else if (key == "points") c.points = parse_int(value);
      else if (key == "range") {
        const auto r = parse_double_list(value);
        if (r.size() != 2) throw ConfigError("range needs two values lo,hi");
        c.range = std::make_pair(r[0], r[1]);
      }
      else if (key == "points_per_decade") c.points_per_decade = parse_int(value);
      else if (key == "parallel") c.parallel = parse_int(value);
      else if (key == "out") c.out = trim(value);
      else throw ConfigError("unknown key '" + raw_key + "'");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind("unknown key", 0) == 0) throw;
      throw ConfigError(raw_key + ": " + msg);
    }
  }
  return c;
}

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void require_single_n(const RunConfig& c) {
  require(c.N.size() == 1, std::string(kind_name(c.kind)) + " needs exactly one N");
  require(c.N[0] >= 1, "N must be at least 1");
}

void require_phi(const RunConfig& c) {
  require(c.phi_d.has_value(), std::string(kind_name(c.kind)) + " needs phi_d");
  require(std::isfinite(*c.phi_d) && *c.phi_d >= 0.0, "phi_d must be non-negative");
}

void require_pulse(const RunConfig& c, bool need_tau) {
  require(c.gamma.size() == 1, std::string(kind_name(c.kind)) + " needs one gamma value");
  require(c.gamma[0] > 0.0, "gamma must be positive");
  if (need_tau) {
    require(c.tau_p.has_value(), std::string(kind_name(c.kind)) + " needs tau_p");
  }
  if (c.tau_p) require(*c.tau_p > 0.0, "tau_p must be positive");
}

bool is_one_of(const std::string& v, std::initializer_list<const char*> options) {
  return std::any_of(options.begin(), options.end(), [&](const char* o) { return v == o; });
}

}  // namespace

void validate(const RunConfig& c) {
  require(c.mass_u > 0.0 && std::isfinite(c.mass_u), "mass_u must be positive");
  require(c.lambda_nm > 0.0 && std::isfinite(c.lambda_nm), "lambda_nm must be positive");
  require(c.points >= 32, "points must be at least 32");
  require(c.parallel >= 1, "parallel must be at least 1");
  require(c.points_per_decade >= 1, "points_per_decade must be positive");
  require(is_one_of(c.measure, {"overlap", "fiber-sum"}), "measure must be overlap or fiber-sum");
  require(!c.multiples.empty(), "multiples must not be empty");
  for (int l : c.multiples) require(l >= 1, "Talbot multiples must be at least 1");
  if (c.range) require(c.range->second > c.range->first, "range must be increasing");
  if (c.sigma) require(*c.sigma > 0.0, "sigma must be positive");
  for (int n : c.N) require(n >= 1, "N values must be at least 1");

  switch (c.kind) {
    case ExperimentKind::Echo:
      require_single_n(c);
      require(is_one_of(c.engine, {"ladder", "finite"}), "echo engine must be ladder or finite");
      if (c.engine == "finite") {
        require_pulse(c, true);
        require(c.accel == 0.0, "finite pulses do not support acceleration");
      } else {
        require_phi(c);
      }
      if (c.sigma) {
        require(c.engine == "ladder", "Gaussian echo runs need the ladder engine");
        require(c.p0_hbar_kappa == 0.0, "a Gaussian input is centred at p0 = 0");
      }
      break;
    case ExperimentKind::MomentumHistory:
      require_single_n(c);
      require_phi(c);
      break;
    case ExperimentKind::ScanEps:
    case ExperimentKind::ScanP0:
    case ExperimentKind::ScanAccel:
      require_single_n(c);
      require_phi(c);
      require(*c.phi_d > 0.0, "scans need phi_d > 0");
      require(is_one_of(c.engine, {"ladder", "first-order", "closed", "linearized"}),
              "scan engine must be ladder, first-order, closed or linearized");
      if (c.sigma) {
        require(c.kind != ExperimentKind::ScanP0, "a Gaussian input has no p0 axis");
        require(c.engine == "ladder", "Gaussian inputs need the ladder engine");
      }
      break;
    case ExperimentKind::FiniteScan:
      require_single_n(c);
      require_pulse(c, true);
      require(c.multiples.size() == 1, "finite-scan takes one Talbot multiple");
      break;
    case ExperimentKind::TauMinSweep:
      require(!c.N.empty(), "tau-min-sweep needs N values");
      require(!c.gamma.empty(), "tau-min-sweep needs gamma values");
      for (double g : c.gamma) require(g > 0.0, "gamma must be positive");
      break;
    case ExperimentKind::FitScaling:
      require(c.N.size() >= 4, "fit-scaling needs at least four N values");
      require_phi(c);
      require(*c.phi_d > 0.0, "fit-scaling needs phi_d > 0");
      require(is_one_of(c.axis, {"eps", "p0", "accel"}), "axis must be eps, p0 or accel");
      require(is_one_of(c.engine, {"ladder", "first-order", "closed", "linearized"}),
              "fit-scaling engine must be ladder, first-order, closed or linearized");
      if (c.sigma) require(c.axis != "p0" && c.engine == "ladder",
                           "Gaussian fits need the ladder engine and the eps or accel axis");
      break;
    case ExperimentKind::PeakShift:
      require_single_n(c);
      require_pulse(c, false);
      break;
  }
}

Settings to_settings(const RunConfig& c) {
  Settings s;
  s["kind"] = std::string(kind_name(c.kind));
  s["mass_u"] = format_double(c.mass_u);
  s["lambda_nm"] = format_double(c.lambda_nm);
  if (!c.N.empty()) s["N"] = join(c.N, [](int n) { return std::to_string(n); });
  if (c.phi_d) s["phi_d"] = format_double(*c.phi_d);
  if (!c.gamma.empty()) s["gamma"] = join(c.gamma, format_double);
  if (c.tau_p) s["tau_p"] = format_double(*c.tau_p);
  s["eps"] = format_double(c.eps);
  s["p0_hbar_kappa"] = format_double(c.p0_hbar_kappa);
  s["accel"] = format_double(c.accel);
  if (c.sigma) s["sigma"] = format_double(*c.sigma);
  s["measure"] = c.measure;
  s["engine"] = c.engine;
  s["axis"] = c.axis;
  s["multiples"] = join(c.multiples, [](int n) { return std::to_string(n); });
  s["points"] = std::to_string(c.points);
  if (c.range) s["range"] = format_double(c.range->first) + "," + format_double(c.range->second);
  s["points_per_decade"] = std::to_string(c.points_per_decade);
  s["parallel"] = std::to_string(c.parallel);
  if (!c.out.empty()) s["out"] = c.out;
  return s;
}

PhysicalParams physical_params(const RunConfig& c) {
  return derive_params(c.mass_u * kAtomicMassUnit, c.lambda_nm * 1e-9);
}

}  // namespace kecho
