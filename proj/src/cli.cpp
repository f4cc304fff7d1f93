/*
 * Copyright 2026 The vmshield Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "vmshield/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "vmshield/error.hpp"
#include "vmshield/output.hpp"
#include "vmshield/simulator.hpp"

namespace vmshield {

namespace {

template <typename T>
T parse_number(std::string_view name, std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw Error(Errc::validation, std::string(name) + ": not a valid number: '" +
                                      std::string(text) + "'");
  }
  return value;
}

using Setter = std::function<void(ScenarioConfig&, std::string_view, std::string_view)>;

template <typename T, typename Field>
Setter numeric(Field field) {
  return [field](ScenarioConfig& c, std::string_view name, std::string_view text) {
    field(c) = parse_number<T>(name, text);
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"seed", numeric<std::uint64_t>([](ScenarioConfig& c) -> auto& { return c.seed; })},
      {"duration", numeric<Tick>([](ScenarioConfig& c) -> auto& { return c.duration; })},
      {"audit_interval", numeric<Tick>([](ScenarioConfig& c) -> auto& { return c.audit_interval; })},
      {"breach_dwell_time",
       numeric<Tick>([](ScenarioConfig& c) -> auto& { return c.breach_dwell_time; })},
      {"management_interval",
       numeric<Tick>([](ScenarioConfig& c) -> auto& { return c.management_interval; })},
      {"underload_threshold",
       numeric<double>([](ScenarioConfig& c) -> auto& { return c.underload_threshold; })},
      {"overload_margin",
       numeric<double>([](ScenarioConfig& c) -> auto& { return c.overload_margin; })},
      {"link_probability",
       numeric<double>([](ScenarioConfig& c) -> auto& { return c.link_probability; })},
      {"arrival_rate", numeric<double>([](ScenarioConfig& c) -> auto& { return c.arrivals.rate; })},
      {"attack_count",
       numeric<std::uint32_t>([](ScenarioConfig& c) -> auto& { return c.attack.count; })},
      {"chain_length",
       numeric<std::uint32_t>([](ScenarioConfig& c) -> auto& { return c.attack.chain_length; })},
      {"launch_time", numeric<Tick>([](ScenarioConfig& c) -> auto& { return c.attack.launch_time; })},
  };
  return table;
}

struct GridAxis {
  std::string name;
  std::vector<std::string> values;
};

GridAxis parse_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(Errc::validation, "grid axis must look like name=v1,v2: '" + spec + "'");
  }
  GridAxis axis{spec.substr(0, eq), {}};
  if (!setters().contains(axis.name)) {
    throw Error(Errc::validation, "grid: unknown parameter '" + axis.name + "'");
  }
  std::stringstream values(spec.substr(eq + 1));
  for (std::string v; std::getline(values, v, ',');) {
    if (!v.empty()) axis.values.push_back(v);
  }
  if (axis.values.empty()) throw Error(Errc::validation, "grid axis '" + axis.name + "' is empty");
  return axis;
}

struct Options {
  std::string scenario_path;
  std::string preset_name;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<Tick> duration;
  std::optional<std::string> attack;
  std::optional<Tick> audit_interval;
  std::optional<Tick> dwell;
  std::optional<double> underload_threshold;
  bool no_audit = false;
  bool quiet = false;
  std::string workload_csv;
  std::vector<std::string> grid;
};

void add_scenario_options(CLI::App& cmd, Options& o) {
  auto* scenario = cmd.add_option("--scenario", o.scenario_path, "Scenario JSON file");
  auto* preset_opt = cmd.add_option("--preset", o.preset_name, "Built-in scenario preset")
                         ->check(CLI::IsMember(preset_names()));
  scenario->excludes(preset_opt);
  preset_opt->excludes(scenario);
  cmd.add_option("--seed", o.seed, "Override the RNG seed");
  cmd.add_option("--duration", o.duration, "Override the number of ticks");
  cmd.add_option("--attack", o.attack, "Override the attack scenario")
      ->check(CLI::IsMember({"none", "co-residency", "multi-hijack", "grouped-cascade"}));
  cmd.add_option("--audit-interval", o.audit_interval, "Ticks between security audits");
  cmd.add_option("--dwell", o.dwell, "Breach dwell time in ticks");
  cmd.add_option("--underload-threshold", o.underload_threshold, "Consolidation threshold");
  cmd.add_flag("--no-audit", o.no_audit, "Disable security audits");
  cmd.add_option("-o,--out", o.out_dir, "Output directory (default: $VMSHIELD_OUT)");
  cmd.add_flag("-q,--quiet", o.quiet, "Suppress the summary");
}

ScenarioConfig resolve_scenario(const Options& o) {
  ScenarioConfig config;
  if (!o.scenario_path.empty()) {
    config = load_scenario(o.scenario_path);
  } else if (!o.preset_name.empty()) {
    config = preset(o.preset_name);
  } else {
    throw Error(Errc::validation, "one of --scenario or --preset is required");
  }
  if (o.seed) config.seed = *o.seed;
  if (o.duration) config.duration = *o.duration;
  if (o.attack) config.attack.scenario = *parse_attack_scenario(*o.attack);
  if (o.audit_interval) config.audit_interval = *o.audit_interval;
  if (o.dwell) config.breach_dwell_time = *o.dwell;
  if (o.underload_threshold) config.underload_threshold = *o.underload_threshold;
  if (o.no_audit) config.audit_enabled = false;
  validate(config);
  return config;
}

std::filesystem::path output_dir(const Options& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("VMSHIELD_OUT"); env && *env) return env;
  throw Error(Errc::validation, "no output directory: pass --out or set VMSHIELD_OUT");
}

void print_summary(std::ostream& out, const RunResult& r) {
  const Metrics& m = r.metrics;
  out << "seed=" << r.seed << " energy=" << format_number(m.energy)
      << " active_server_ticks=" << m.active_server_ticks << " migrations=" << m.migrations
      << " terminations=" << m.terminations << " attacks=" << m.attacks_established
      << " prevented=" << m.breaches_prevented << " succeeded=" << m.breaches_succeeded
      << " sla_violations=" << m.sla_violations << '\n';
}

int cmd_run(const Options& o, std::ostream& out) {
  const ScenarioConfig config = resolve_scenario(o);
  const auto dir = output_dir(o);
  Simulator sim(config);
  const RunResult result = sim.run();
  write_run_outputs(dir, result);
  if (!o.workload_csv.empty()) {
    std::ostringstream csv;
    sim.store().write_csv(csv);
    write_text(o.workload_csv, csv.str());
  }
  if (!o.quiet) print_summary(out, result);
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.grid.empty()) throw Error(Errc::validation, "sweep needs at least one --grid axis");
  std::vector<GridAxis> axes;
  for (const std::string& spec : o.grid) axes.push_back(parse_axis(spec));
  const ScenarioConfig base = resolve_scenario(o);
  const auto dir = output_dir(o);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());

  std::string csv = "point";
  for (const GridAxis& a : axes) csv += "," + a.name;
  csv += ",status,energy,active_server_ticks,migrations,terminations,attacks_established,"
         "breaches_prevented,breaches_succeeded,false_positive_terminations,sla_violations\n";

  std::size_t points = 1;
  for (const GridAxis& a : axes) points *= a.values.size();
  std::size_t failures = 0;
  for (std::size_t p = 0; p < points; ++p) {
    // Row-major: the last axis varies fastest.
    std::vector<std::size_t> index(axes.size());
    for (std::size_t rest = p, i = axes.size(); i-- > 0;) {
      index[i] = rest % axes[i].values.size();
      rest /= axes[i].values.size();
    }
    char name[32];
    std::snprintf(name, sizeof name, "point_%04zu", p);
    csv += name;
    for (std::size_t i = 0; i < axes.size(); ++i) csv += "," + axes[i].values[index[i]];

    try {
      ScenarioConfig config = base;
      for (std::size_t i = 0; i < axes.size(); ++i) {
        set_parameter(config, axes[i].name, axes[i].values[index[i]]);
      }
      validate(config);
      const RunResult r = run(config);
      write_run_outputs(dir / name, r);
      const Metrics& m = r.metrics;
      csv += ",ok," + format_number(m.energy);
      for (std::uint64_t v : {m.active_server_ticks, m.migrations, m.terminations,
                              m.attacks_established, m.breaches_prevented, m.breaches_succeeded,
                              m.false_positive_terminations, m.sla_violations}) {
        csv += "," + std::to_string(v);
      }
      csv += '\n';
    } catch (const Error& e) {
      ++failures;
      err << "warning: " << name << " failed: " << e.what() << '\n';
      csv += ",failed,,,,,,,,,\n";
    }
  }
  write_text(dir / "sweep.csv", csv);
  if (!o.quiet) {
    out << points << " points, " << failures << " failed; wrote " << (dir / "sweep.csv").string()
        << '\n';
  }
  return kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out) {
  resolve_scenario(o);
  if (!o.quiet) out << "valid\n";
  return kExitOk;
}

}  // namespace

std::vector<std::string> sweepable_parameters() {
  std::vector<std::string> names;
  for (const auto& [name, setter] : setters()) names.push_back(name);
  return names;
}

void set_parameter(ScenarioConfig& config, std::string_view name, std::string_view value) {
  const auto it = setters().find(name);
  if (it == setters().end()) {
    throw Error(Errc::validation, "unknown parameter '" + std::string(name) + "'");
  }
  it->second(config, name, value);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"vmshield: datacenter VM placement and co-residency defence simulator"};
  app.require_subcommand(1);
  Options o;

  auto* run_cmd = app.add_subcommand("run", "Run one scenario and write its outputs");
  add_scenario_options(*run_cmd, o);
  run_cmd->add_option("--workload-csv", o.workload_csv, "Also dump the retained usage window");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter grid over a base scenario");
  add_scenario_options(*sweep_cmd, o);
  sweep_cmd->add_option("--grid", o.grid, "Axis as name=v1,v2,... (repeatable)");

  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario without running it");
  add_scenario_options(*validate_cmd, o);

  std::string preset_name;
  auto* preset_cmd = app.add_subcommand("preset", "Print a built-in preset as JSON");
  preset_cmd->add_option("name", preset_name, "Preset name")
      ->required()
      ->check(CLI::IsMember(preset_names()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    if (*run_cmd) return cmd_run(o, out);
    if (*sweep_cmd) return cmd_sweep(o, out, err);
    if (*validate_cmd) return cmd_validate(o, out);
    if (*preset_cmd) {
      out << to_json(preset(preset_name)).dump(2) << '\n';
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == Errc::io ? kExitIo : kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace vmshield
