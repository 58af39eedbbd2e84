// kecho: command-line driver for the kicked-rotor echo experiments.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <json.hpp>
#include <map>
#include <string>

#include "kecho/config.hpp"
#include "kecho/errors.hpp"
#include "kecho/experiments.hpp"

namespace {

const char* describe(kecho::ExperimentKind kind) {
  using K = kecho::ExperimentKind;
  switch (kind) {
    case K::Echo: return "Return probability of one sequence";
    case K::MomentumHistory: return "Momentum populations after every period";
    case K::ScanEps: return "Output versus detuning from the Talbot time";
    case K::ScanP0: return "Output versus initial momentum";
    case K::ScanAccel: return "Output versus acceleration";
    case K::FiniteScan: return "Finite-pulse detuning scan with peak shift and width";
    case K::TauMinSweep: return "Width-minimizing pulse duration over (gamma, N)";
    case K::FitScaling: return "Width versus N with a power-law fit";
    case K::PeakShift: return "Finite-pulse peak shift at several Talbot multiples";
  }
  return "";
}

void report_error(kecho::ErrorCategory category, const std::string& message) {
  nlohmann::json j;
  j["error"] = std::string(kecho::category_name(category));
  j["exit_code"] = kecho::exit_code(category);
  j["message"] = message;
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anti-symmetrized kicked-rotor echo simulator"};
  app.require_subcommand(1);

  std::string config_path;
  kecho::Settings flags;
  std::map<std::string, std::string> raw;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file (key = value lines or JSON sidecar)");
    for (const auto& key : kecho::config_keys()) {
      if (key == "kind") continue;
      sub->add_option("--" + key, raw[key], "Override '" + key + "'");
    }
  };

  std::map<CLI::App*, std::optional<kecho::ExperimentKind>> subs;
  for (auto kind : kecho::all_kinds()) {
    auto* sub = app.add_subcommand(std::string(kecho::kind_name(kind)), describe(kind));
    add_common(sub);
    subs[sub] = kind;
  }
  auto* run_sub = app.add_subcommand("run", "Run the experiment named by 'kind' in the config");
  add_common(run_sub);
  run_sub->add_option("--kind", raw["kind"], "Experiment kind");
  subs[run_sub] = std::nullopt;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report_error(kecho::ErrorCategory::Config, e.what());
    return kecho::exit_code(kecho::ErrorCategory::Config);
  }

  try {
    kecho::Settings settings;
    if (!config_path.empty()) settings = kecho::load_settings(config_path);
    for (const auto& [sub, kind] : subs) {
      if (!sub->parsed()) continue;
      for (const auto& [key, value] : raw) {
        const CLI::Option* opt = sub->get_option_no_throw("--" + key);
        if (!opt || opt->count() == 0) continue;
        std::erase_if(settings, [&](const auto& kv) {
          return kecho::canonical_key(kv.first) == kecho::canonical_key(key);
        });
        settings[key] = value;
      }
      if (kind) settings["kind"] = std::string(kecho::kind_name(*kind));
    }
    if (!settings.count("kind")) throw kecho::ConfigError("no experiment kind given");
    const kecho::RunConfig config = kecho::make_config(settings);
    const auto paths = kecho::run(config);
    std::cout << paths.csv << "\n" << paths.json << "\n";
    return 0;
  } catch (const kecho::Error& e) {
    report_error(e.category(), e.what());
    return kecho::exit_code(e.category());
  } catch (const std::exception& e) {
    report_error(kecho::ErrorCategory::InvalidArgument, e.what());
    return kecho::exit_code(kecho::ErrorCategory::InvalidArgument);
  }
}
