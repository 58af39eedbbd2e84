#include "kecho/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "kecho/analytic.hpp"
#include "kecho/errors.hpp"
#include "kecho/finite_pulse.hpp"
#include "kecho/ladder.hpp"
#include "kecho/scan.hpp"
#include "kecho/wavepacket.hpp"

namespace kecho {
namespace {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<WavepacketSpec> wavepacket_of(const RunConfig& c) {
  if (!c.sigma) return std::nullopt;
  WavepacketSpec wp;
  wp.sigma_x = *c.sigma;
  wp.measure = c.measure == "fiber-sum" ? GaussianMeasure::FiberSum : GaussianMeasure::Overlap;
  return wp;
}

Engine engine_of(const std::string& name) {
  if (name == "ladder") return Engine::Ladder;
  if (name == "first-order") return Engine::FirstOrder;
  if (name == "closed") return Engine::Closed;
  if (name == "linearized") return Engine::Linearized;
  if (name == "finite") return Engine::FinitePulse;
  throw ConfigError("unknown engine '" + name + "'");
}

ControlAxis axis_of(ExperimentKind kind, const std::string& axis) {
  if (kind == ExperimentKind::ScanEps) return ControlAxis::Detuning;
  if (kind == ExperimentKind::ScanP0) return ControlAxis::InitialMomentum;
  if (kind == ExperimentKind::ScanAccel) return ControlAxis::Acceleration;
  if (axis == "p0") return ControlAxis::InitialMomentum;
  if (axis == "accel") return ControlAxis::Acceleration;
  return ControlAxis::Detuning;
}

// CLI-facing units: p0 in ħκ, the others in SI.
double axis_unit(ControlAxis axis, const PhysicalParams& params) {
  return axis == ControlAxis::InitialMomentum ? params.ladder_momentum() : 1.0;
}

std::string axis_suffix(ControlAxis axis) {
  switch (axis) {
    case ControlAxis::Detuning: return "s";
    case ControlAxis::InitialMomentum: return "hbar_kappa";
    case ControlAxis::Acceleration: return "m_per_s2";
  }
  return "";
}

std::string axis_name(ControlAxis axis) {
  switch (axis) {
    case ControlAxis::Detuning: return "eps";
    case ControlAxis::InitialMomentum: return "p0";
    case ControlAxis::Acceleration: return "accel";
  }
  return "";
}

ScanRequest scan_request(const RunConfig& c, int N, ControlAxis axis, const PhysicalParams& params) {
  ScanRequest r;
  r.axis = axis;
  r.engine = engine_of(c.engine);
  r.params = params;
  r.N = N;
  r.phi_d = c.phi_d.value_or(0.0);
  r.eps = c.eps;
  r.p0 = c.p0_hbar_kappa * params.ladder_momentum();
  r.accel = c.accel;
  r.talbot_multiple = c.multiples.front();
  r.wavepacket = wavepacket_of(c);
  r.n_points = c.points;
  r.parallel = c.parallel;
  if (c.range) {
    const double u = axis_unit(axis, params);
    r.range = std::make_pair(c.range->first * u, c.range->second * u);
  }
  return r;
}

// Sampled curve plus metrics refined on the evaluator.
struct ScanOutcome {
  ScanCurve curve;
  PeakMetrics peak;
  double predicted = 0.0;
};

ScanOutcome scan_and_refine(const ScanRequest& r) {
  ScanOutcome o;
  o.curve = scan(r);
  o.peak = refine_fwhm(o.curve, make_evaluator(r));
  o.predicted = predicted_fwhm(r);
  return o;
}

ExperimentResult run_echo(const RunConfig& c, const PhysicalParams& params) {
  ExperimentResult res;
  const int N = c.N.front();
  const double beta = c.p0_hbar_kappa;
  if (c.engine == "finite") {
    const double gamma = c.gamma.front();
    FinitePulseSpec spec{N, depth_from_gamma(gamma, params), *c.tau_p,
                         params.talbot_time + c.eps, 0.0};
    const FiniteResult r = run_finite_askrs(spec, beta, params);
    res.table.columns = {"N", "gamma", "tau_p_s", "phi_d", "eps_s", "p0_hbar_kappa", "I"};
    res.table.rows.push_back(
        {double(N), gamma, spec.tau_p, pulse_area(spec), c.eps, beta, r.output});
    res.metrics = {{"I", r.output}, {"phi_d", pulse_area(spec)}, {"V0_J", spec.V0}};
    return res;
  }
  const SequenceSpec spec = SequenceSpec::at_detuning(N, *c.phi_d, c.eps, params, c.accel);
  double I = 0.0;
  if (const auto wp = wavepacket_of(c)) {
    const GaussianResult g = gaussian_output(spec, *wp, params);
    I = g.output;
    res.metrics.push_back({"quadrature_error", g.error_estimate});
  } else {
    I = run_askrs(spec, beta, params).output;
  }
  res.table.columns = {"N", "phi_d", "eps_s", "p0_hbar_kappa", "accel_m_per_s2", "I"};
  res.table.rows.push_back({double(N), *c.phi_d, c.eps, beta, c.accel, I});
  res.metrics.insert(res.metrics.begin(), {"I", I});
  return res;
}

ExperimentResult run_history(const RunConfig& c, const PhysicalParams& params) {
  ExperimentResult res;
  const SequenceSpec spec = SequenceSpec::at_detuning(c.N.front(), *c.phi_d, c.eps, params, c.accel);
  const MomentumHistory h = momentum_history(spec, c.p0_hbar_kappa, params);
  res.table.columns = {"step", "time_s"};
  for (int q = h.q_min; q <= h.q_max; ++q) res.table.columns.push_back("P_q" + std::to_string(q));
  for (std::size_t k = 0; k < h.populations.size(); ++k) {
    std::vector<double> row{double(k + 1), double(k + 1) * spec.T};
    row.insert(row.end(), h.populations[k].begin(), h.populations[k].end());
    res.table.rows.push_back(std::move(row));
  }
  const auto& last = h.populations.back();
  res.metrics = {{"I", last[static_cast<std::size_t>(-h.q_min)]},
                 {"q_min", double(h.q_min)},
                 {"q_max", double(h.q_max)}};
  return res;
}

ExperimentResult run_scan(const RunConfig& c, const PhysicalParams& params) {
  ExperimentResult res;
  const ControlAxis axis = axis_of(c.kind, c.axis);
  const ScanOutcome o = scan_and_refine(scan_request(c, c.N.front(), axis, params));
  const double u = axis_unit(axis, params);
  const std::string sfx = axis_suffix(axis);
  res.table.columns = {axis_name(axis) + "_" + sfx, "I"};
  for (std::size_t i = 0; i < o.curve.control.size(); ++i)
    res.table.rows.push_back({o.curve.control[i] / u, o.curve.output[i]});
  res.metrics = {{"fwhm_" + sfx, o.peak.fwhm / u},
                 {"fwhm_predicted_" + sfx, o.predicted / u},
                 {"fwhm_rel_deviation", o.peak.fwhm / o.predicted - 1.0},
                 {"peak_center_" + sfx, o.peak.center / u},
                 {"peak_value", o.peak.peak_value}};
  return res;
}

ExperimentResult run_finite_scan(const RunConfig& c, const PhysicalParams& params) {
  ExperimentResult res;
  const int N = c.N.front();
  const int l = c.multiples.front();
  const double V0 = depth_from_gamma(c.gamma.front(), params);
  FinitePeakOptions po;
  po.parallel = c.parallel;
  const PeakMetrics pk = finite_peak(N, V0, *c.tau_p, params, l, po);

  ScanRequest r;
  r.axis = ControlAxis::Detuning;
  r.engine = Engine::FinitePulse;
  r.params = params;
  r.N = N;
  r.V0 = V0;
  r.tau_p = *c.tau_p;
  r.talbot_multiple = l;
  r.n_points = c.points;
  r.parallel = c.parallel;
  r.range = c.range ? *c.range
                    : std::make_pair(pk.center - 2.0 * pk.fwhm, pk.center + 2.0 * pk.fwhm);
  r.wavepacket = wavepacket_of(c);
  const ScanCurve curve = scan(r);

  res.table.columns = {"eps_s", "I"};
  for (std::size_t i = 0; i < curve.control.size(); ++i)
    res.table.rows.push_back({curve.control[i], curve.output[i]});
  const double phi = V0 * *c.tau_p / (2.0 * kHbar);
  res.metrics = {{"fwhm_s", pk.fwhm},
                 {"delta_eps_s", pk.center},
                 {"peak_value", pk.peak_value},
                 {"phi_d", phi},
                 {"V0_J", V0},
                 {"fwhm_delta_kick_s", fwhm_eps_asymptotic(N, phi, params)}};
  if (r.wavepacket)
    res.notes.push_back("metrics are for the beta = 0 fiber; the curve includes the wavepacket");
  return res;
}

ExperimentResult run_tau_min_sweep(const RunConfig& c, const PhysicalParams& params) {
  ExperimentResult res;
  std::vector<std::pair<double, int>> cases;
  for (double g : c.gamma)
    for (int n : c.N) {
      if (g * n > 1.0) {
        cases.emplace_back(g, n);
      } else {
        res.notes.push_back("skipped gamma=" + format_value(g) + " N=" + std::to_string(n) +
                            " (gamma N <= 1)");
      }
    }
  if (cases.empty()) throw ConfigError("tau-min-sweep: no (gamma, N) pair with gamma N > 1");

  TauSearchOptions opts;
  opts.points_per_decade = c.points_per_decade;
  std::vector<TauMinResult> found(cases.size());
  parallel_map(
      cases.size(),
      [&](std::size_t i) {
        found[i] = find_tau_min(cases[i].second, cases[i].first, params, opts);
        return 0.0;
      },
      c.parallel);

  res.table.columns = {"gamma",       "N",          "tau_min_s",  "w_min_s",
                       "delta_eps_s", "peak_value", "w_min_gamma_N2_s", "tau_min_sqrt_gamma_N_s"};
  std::vector<std::pair<double, double>> w_pts, t_pts;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto [g, n] = cases[i];
    const auto& f = found[i];
    const double gn = g * n;
    res.table.rows.push_back({g, double(n), f.tau_min, f.w_min, f.delta_eps, f.peak_value,
                              f.w_min * gn * n, f.tau_min * std::sqrt(gn)});
    w_pts.emplace_back(n, f.w_min * g);
    t_pts.emplace_back(n, f.tau_min * std::sqrt(g));
  }
  if (w_pts.size() >= 4) {
    try {
      const ScalingFit fw = fit_scaling(w_pts, 1.0, 2.0);
      const ScalingFit ft = fit_scaling(t_pts, 1.0, 2.0);
      res.metrics = {{"w_min_slope", fw.exponent},       {"w_min_prefactor_s", fw.prefactor},
                     {"w_min_residual", fw.residual},    {"tau_min_slope", ft.exponent},
                     {"tau_min_prefactor_s", ft.prefactor}, {"tau_min_residual", ft.residual}};
    } catch (const InvalidArgument& e) {
      res.notes.push_back(std::string("no collapsed fit: ") + e.what());
    }
  } else {
    res.notes.push_back("no collapsed fit: fewer than four points");
  }
  return res;
}

ExperimentResult run_fit_scaling(const RunConfig& c, const PhysicalParams& params) {
  ExperimentResult res;
  const ControlAxis axis = axis_of(c.kind, c.axis);
  const double u = axis_unit(axis, params);
  const std::string sfx = axis_suffix(axis);
  std::vector<std::pair<double, double>> pts;
  res.table.columns = {"N", "fwhm_" + sfx, "fwhm_predicted_" + sfx};
  for (int n : c.N) {
    const ScanOutcome o = scan_and_refine(scan_request(c, n, axis, params));
    res.table.rows.push_back({double(n), o.peak.fwhm / u, o.predicted / u});
    pts.emplace_back(n, o.peak.fwhm / u);
  }
  const ScalingFit f = fit_scaling(pts, 1.0, 2.0);
  res.metrics = {{"slope", f.exponent}, {"prefactor_" + sfx, f.prefactor}, {"residual", f.residual}};
  return res;
}

ExperimentResult run_peak_shift(const RunConfig& c, const PhysicalParams& params) {
  ExperimentResult res;
  const int N = c.N.front();
  const double gamma = c.gamma.front();
  double tau = 0.0;
  if (c.tau_p) {
    tau = *c.tau_p;
  } else {
    TauSearchOptions opts;
    opts.points_per_decade = c.points_per_decade;
    opts.peak.parallel = c.parallel;
    tau = find_tau_min(N, gamma, params, opts).tau_min;
    res.notes.push_back("tau_p chosen as the width-minimizing pulse duration");
  }
  const double V0 = depth_from_gamma(gamma, params);
  FinitePeakOptions po;
  po.parallel = c.parallel;
  res.table.columns = {"l", "delta_eps_s", "fwhm_s", "peak_value"};
  double first = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < c.multiples.size(); ++i) {
    const PeakMetrics pk = finite_peak(N, V0, tau, params, c.multiples[i], po);
    res.table.rows.push_back({double(c.multiples[i]), pk.center, pk.fwhm, pk.peak_value});
    if (i == 0) first = pk.center;
    spread = std::max(spread, std::abs(pk.center - first));
  }
  res.metrics = {{"tau_p_s", tau},
                 {"delta_eps_s", first},
                 {"max_shift_difference_s", spread},
                 {"max_shift_rel_difference", first != 0.0 ? spread / std::abs(first) : 0.0}};
  return res;
}

nlohmann::json typed_value(const std::string& s) {
  if (s.find(',') != std::string::npos) {
    nlohmann::json arr = nlohmann::json::array();
    std::size_t start = 0;
    for (;;) {
      const auto comma = s.find(',', start);
      arr.push_back(typed_value(s.substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return arr;
  }
  if (!s.empty()) {
    char* end = nullptr;
    const long long i = std::strtoll(s.c_str(), &end, 10);
    if (*end == '\0') return i;
    const double d = std::strtod(s.c_str(), &end);
    if (*end == '\0' && std::isfinite(d)) return d;
  }
  return s;
}

nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  f.close();
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace

ExperimentResult compute(const RunConfig& config) {
  validate(config);
  const PhysicalParams params = physical_params(config);
  switch (config.kind) {
    case ExperimentKind::Echo: return run_echo(config, params);
    case ExperimentKind::MomentumHistory: return run_history(config, params);
    case ExperimentKind::ScanEps:
    case ExperimentKind::ScanP0:
    case ExperimentKind::ScanAccel: return run_scan(config, params);
    case ExperimentKind::FiniteScan: return run_finite_scan(config, params);
    case ExperimentKind::TauMinSweep: return run_tau_min_sweep(config, params);
    case ExperimentKind::FitScaling: return run_fit_scaling(config, params);
    case ExperimentKind::PeakShift: return run_peak_shift(config, params);
  }
  throw ConfigError("unhandled experiment kind");
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ',';
    out += table.columns[i];
  }
  out += "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_value(row[i]);
    }
    out += "\r\n";
  }
  return out;
}

std::string sidecar_json(const RunConfig& config, const ExperimentResult& result) {
  const PhysicalParams p = physical_params(config);
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = std::string(kind_name(config.kind));
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : to_settings(config)) cfg[k] = typed_value(v);
  // Strings that look numeric but must stay strings.
  for (const char* k : {"kind", "measure", "engine", "axis", "out"})
    if (cfg.contains(k)) cfg[k] = to_settings(config)[k];
  j["config"] = cfg;

  nlohmann::json derived;
  derived["mass_kg"] = p.mass;
  derived["kappa_per_m"] = p.kappa;
  derived["omega_r_rad_per_s"] = p.omega_r;
  derived["talbot_time_s"] = p.talbot_time;
  derived["gamma_energy_unit_J"] = p.gamma_energy_unit();
  if (config.phi_d) derived["phi_d"] = *config.phi_d;
  if (!config.gamma.empty()) {
    nlohmann::json g = nlohmann::json::array();
    for (double v : config.gamma) g.push_back(v);
    derived["gamma"] = g;
  }
  j["derived"] = derived;

  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, v] : result.metrics) metrics[k] = number_or_null(v);
  j["metrics"] = metrics;
  j["columns"] = result.table.columns;
  j["notes"] = result.notes;
  j["csv"] = std::filesystem::path(output_paths(config).csv).filename().string();
  return j.dump(2) + "\n";
}

OutputPaths output_paths(const RunConfig& config) {
  std::string base = config.out.empty() ? "kecho-" + std::string(kind_name(config.kind)) : config.out;
  for (const char* ext : {".csv", ".json"}) {
    const std::string e = ext;
    if (base.size() > e.size() && base.compare(base.size() - e.size(), e.size(), e) == 0) {
      base.resize(base.size() - e.size());
      break;
    }
  }
  return {base + ".csv", base + ".json"};
}

OutputPaths run(const RunConfig& config) {
  const ExperimentResult result = compute(config);
  const OutputPaths paths = output_paths(config);
  const std::string csv = to_csv(result.table);
  const std::string json = sidecar_json(config, result);
  write_file(paths.csv, csv);
  write_file(paths.json, json);
  return paths;
}

}  // namespace kecho
