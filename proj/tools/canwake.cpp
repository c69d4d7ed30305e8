#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "canwake/attack.hpp"
#include "canwake/fleet.hpp"
#include "canwake/recon.hpp"
#include "canwake/report.hpp"
#include "canwake/trace_io.hpp"
#include "canwake/units.hpp"
#include "canwake/vehicle_config.hpp"

namespace fs = std::filesystem;
using namespace canwake;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw UsageError("cannot read " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw UsageError("cannot write " + path.string());
  }
  out << content;
}

Duration duration_arg(const std::string& text, std::string_view flag) {
  try {
    const Duration d = parse_duration(text);
    if (d <= Duration::zero()) {
      throw UsageError(fmt::format("{} must be positive", flag));
    }
    return d;
  } catch (const UnitError& e) {
    throw UsageError(fmt::format("{}: {}", flag, e.what()));
  }
}

const std::map<std::string, Scenario> kPlans = {
    {"none", Scenario::None},
    {"wakeup", Scenario::Wakeup},
    {"power-mode", Scenario::PowerMode},
    {"door-cycle", Scenario::DoorCycle},
    {"trunk", Scenario::Trunk},
};

struct PlanFlags {
  std::string flood;
  std::string power_mode = "5s";
  std::string door = "5s";

  ScenarioPeriods periods() const {
    ScenarioPeriods p;
    if (!flood.empty()) {
      p.flood = duration_arg(flood, "--flood-period");
    }
    p.power_mode = duration_arg(power_mode, "--power-mode-period");
    p.door = duration_arg(door, "--door-period");
    return p;
  }
};

void add_plan_flags(CLI::App* cmd, PlanFlags& flags) {
  cmd->add_option("--flood-period", flags.flood, "Wake-up frame period (default: shortest T_wakeup)");
  cmd->add_option("--power-mode-period", flags.power_mode, "Power-mode command period")->capture_default_str();
  cmd->add_option("--door-period", flags.door, "Door lock/unlock command period")->capture_default_str();
}

VehicleConfig vehicle_arg(const std::string& path, std::optional<double> lighting) {
  VehicleConfig v = load_vehicle(path);
  if (lighting) {
    v.door_lighting_multiplier = *lighting;
    v.validate();
  }
  return v;
}

// simulate ------------------------------------------------------------------

struct SimulateArgs {
  std::string vehicle;
  std::string duration = "60s";
  std::string out;
  std::string plan = "none";
  PlanFlags flags;
  std::string ignition_at;
  bool include_attacker = false;
  bool driver_context = false;
  std::uint64_t seed = 1;
};

int run_simulate(const SimulateArgs& a) {
  const VehicleConfig v = load_vehicle(a.vehicle);
  const Duration duration = duration_arg(a.duration, "--duration");
  Trace trace;
  if (a.driver_context) {
    DriverContextOptions opts;
    if (!a.ignition_at.empty()) {
      opts.off_duration = duration_arg(a.ignition_at, "--ignition-at");
    }
    if (duration <= opts.off_duration) {
      throw UsageError("--duration must extend past the ignition time");
    }
    opts.on_duration = duration - opts.off_duration;
    trace = simulate_driver_context(v, a.seed, opts).trace;
  } else {
    BusConfig cfg = v.bus_config();
    Bus bus(cfg);
    if (auto plan = scenario_plan(v, kPlans.at(a.plan), a.flags.periods())) {
      for (const Injection& inj : build_injections(*plan, duration).frames) {
        bus.inject(inj.time, inj.frame);
      }
    }
    if (!a.ignition_at.empty()) {
      const Duration at = duration_arg(a.ignition_at, "--ignition-at");
      bus.run_until(SimTime{0} + at);
      bus.set_ignition(true);
    }
    bus.run_until(SimTime{0} + duration);
    trace = to_trace(bus.trace(), a.include_attacker);
  }
  const std::string text = render_candump(trace);
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_file(a.out, text);
    fmt::print("{} frames written to {}\n", trace.size(), a.out);
  }
  return 0;
}

// attack --------------------------------------------------------------------

struct AttackArgs {
  std::string vehicle;
  std::string plan = "full-drain";
  std::string duration = "72h";
  PlanFlags flags;
  std::optional<double> lighting;
  std::string report_out;
  std::string report_dir;
  std::string csv_out;
  std::string trace_out;
  std::string state_out;
};

int run_attack(const AttackArgs& a) {
  const VehicleConfig v = vehicle_arg(a.vehicle, a.lighting);
  const Duration duration = duration_arg(a.duration, "--duration");

  if (a.plan == "dob") {
    const DobOutcome out = dob_attack(v);
    fmt::print("DoB attack on {}\n", v.name);
    fmt::print("attack time (first injection to last bus-off): {:.6f} s\n", to_seconds(out.attack_duration()));
    fmt::print("distinct IDs before: {}, after: {} (drop {})\n", out.ids_before, out.ids_after,
               static_cast<long>(out.ids_before) - static_cast<long>(out.ids_after));
    std::string off;
    for (const auto& name : out.permanently_off) {
      off += (off.empty() ? "" : ", ") + name;
    }
    fmt::print("permanently off: {}\n", off.empty() ? "none" : off);
    for (const auto& [f, up] : out.availability) {
      fmt::print("  {:<12} {}\n", to_string(f), up ? "available" : "unavailable");
    }
    fmt::print("key-fob authentication: {}\n",
               key_fob_authentication_available(out.availability) ? "available" : "unavailable");
    if (!a.trace_out.empty()) {
      write_file(a.trace_out, render_candump(to_trace(out.trace)));
    }
    if (!a.state_out.empty()) {
      Bus bus(v.bus_config());
      dob_attack(bus, v);
      std::vector<EcuState> states;
      for (const Ecu& n : bus.nodes()) {
        states.push_back(n.state());
      }
      write_file(a.state_out, ecu_states_json(saved_states(v, states)));
    }
    return 0;
  }

  std::vector<Scenario> scenarios;
  if (a.plan == "full-drain") {
    scenarios.assign(std::begin(kCumulativeScenarios), std::end(kCumulativeScenarios));
  } else if (auto it = kPlans.find(a.plan); it != kPlans.end()) {
    scenarios.push_back(it->second);
  } else {
    throw UsageError("unknown plan '" + a.plan + "'");
  }

  const ScenarioPeriods periods = a.flags.periods();
  std::vector<DrainRow> rows;
  std::optional<double> baseline;
  for (Scenario s : scenarios) {
    ExecuteOptions opts;
    opts.integration.baseline_current_a = baseline;
    const AttackOutcome out = execute(scenario_plan(v, s, periods), v, duration, opts);
    if (!baseline) {
      baseline = out.report.baseline_current_a;
    }
    rows.push_back({std::string(scenario_label(s)), out.report.mean_current_a});
    const std::string json = drain_report_json(scenario_label(s), v, duration, out);
    if (!a.report_dir.empty()) {
      write_file(fs::path(a.report_dir) / (std::string(to_string(s)) + ".json"), json);
    }
    if (s == scenarios.back()) {
      if (!a.report_out.empty()) {
        write_file(a.report_out, json);
      }
      if (!a.trace_out.empty()) {
        write_file(a.trace_out, render_candump(to_trace(out.trace)));
      }
      if (!a.state_out.empty()) {
        write_file(a.state_out, ecu_states_json(saved_states(v, out.final_states)));
      }
    }
  }
  if (scenarios.size() == 1 && scenarios.front() != Scenario::None) {
    // Amplification is relative to the unattacked vehicle.
    rows.insert(rows.begin(), DrainRow{std::string(scenario_label(Scenario::None)), *baseline});
  }
  const auto table = drain_table(rows, v.battery);
  fmt::print("{} ({}, {})\n", v.name, a.plan, format_duration(duration));
  std::cout << render_drain_table_text(table);
  if (!a.csv_out.empty()) {
    write_file(a.csv_out, render_drain_table_csv(table));
  }
  return 0;
}

// analyze -------------------------------------------------------------------

struct AnalyzeArgs {
  std::string trace;
  std::string csv_out;
  std::string window = "1s";
  double jump = 1.5;
  double change_fraction = 0.5;
  std::string event_window = "30s";
  std::string persist = "5s";
};

int run_analyze(const AnalyzeArgs& a) {
  const Trace trace = parse_candump(read_file(a.trace));
  ReconOptions opts;
  opts.split.window = duration_arg(a.window, "--window");
  opts.split.jump_factor = a.jump;
  opts.change_fraction = a.change_fraction;
  opts.candidates.event_window = duration_arg(a.event_window, "--event-window");
  opts.candidates.persist = duration_arg(a.persist, "--persist");
  const ReconReport report = analyze(trace, opts);
  std::cout << render_recon_text(report);
  if (!a.csv_out.empty()) {
    write_file(a.csv_out, render_recon_csv(report));
  }
  return 0;
}

// report --------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> files;
  std::string vehicle;
  std::string csv_out;
};

int run_report(const ReportArgs& a) {
  BatteryConfig battery;
  if (!a.vehicle.empty()) {
    battery = load_vehicle(a.vehicle).battery;
  }
  std::vector<DrainRow> rows;
  for (const auto& f : a.files) {
    rows.push_back(parse_drain_report(read_file(f)));
  }
  const auto table = drain_table(rows, battery);
  std::cout << render_drain_table_text(table);
  if (!a.csv_out.empty()) {
    write_file(a.csv_out, render_drain_table_csv(table));
  }
  return 0;
}

// reset ---------------------------------------------------------------------

struct ResetArgs {
  std::string vehicle;
  std::string state;
  std::string kind = "battery";
  std::string out;
};

int run_reset(const ResetArgs& a) {
  const VehicleConfig v = load_vehicle(a.vehicle);
  const auto states = parse_ecu_states(read_file(a.state));
  const ResetKind kind = a.kind == "battery" ? ResetKind::Battery : ResetKind::UserRequest;
  const std::string json = ecu_states_json(apply_reset(v, states, kind));
  if (a.out.empty()) {
    std::cout << json;
  } else {
    write_file(a.out, json);
  }
  return 0;
}

// fleet ---------------------------------------------------------------------

struct FleetArgs {
  std::uint64_t seed = 1;
  std::size_t count = 10;
  std::string era = "modern";
  std::string out_dir;
};

int run_fleet(const FleetArgs& a) {
  const Era era = a.era == "old" ? Era::Old : Era::Modern;
  const auto fleet = generate_fleet(a.seed, a.count, era);
  fmt::print("{:<12} {:>8} {:>6} {:>6} {:>9}\n", "vehicle", "awakened", "S_off", "S_on", "ratio (%)");
  double sum = 0.0;
  for (const VehicleConfig& v : fleet) {
    const AwakeningMeasurement m = measure_awakening(v);
    sum += m.ratio_percent;
    fmt::print("{:<12} {:>8} {:>6} {:>6} {:>9.2f}\n", v.name, m.awakened_ecus, m.s_off.size(), m.s_on.size(),
               m.ratio_percent);
    if (!a.out_dir.empty()) {
      write_file(fs::path(a.out_dir) / (v.name + ".cfg"), render_vehicle(v));
    }
  }
  fmt::print("mean ratio: {:.2f}%\n", sum / static_cast<double>(fleet.size()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CAN wake-up, battery-drain and bus-off attack simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate a vehicle and write a candump trace");
  simulate->add_option("--vehicle", sim.vehicle, "Vehicle config file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--duration", sim.duration, "Simulated time, e.g. 60s or 72h")->capture_default_str();
  simulate->add_option("--out", sim.out, "Trace file (default: stdout)");
  simulate->add_option("--plan", sim.plan, "Attack injected while simulating")
      ->check(CLI::IsMember({"none", "wakeup", "power-mode", "door-cycle", "trunk"}))
      ->capture_default_str();
  add_plan_flags(simulate, sim.flags);
  simulate->add_option("--ignition-at", sim.ignition_at, "Switch the ignition on at this time");
  simulate->add_flag("--include-attacker", sim.include_attacker, "Keep injected frames in the trace");
  simulate->add_flag("--driver-context", sim.driver_context,
                     "Keep the bus awake and plant driver actions before the ignition");
  simulate->add_option("--seed", sim.seed, "Seed for planted driver actions")->capture_default_str();

  AttackArgs atk;
  auto* attack = app.add_subcommand("attack", "Run an attack plan and report battery drain");
  attack->add_option("--vehicle", atk.vehicle, "Vehicle config file")->required()->check(CLI::ExistingFile);
  attack->add_option("--plan", atk.plan, "none, wakeup, power-mode, door-cycle, trunk, full-drain or dob")
      ->check(CLI::IsMember({"none", "wakeup", "power-mode", "door-cycle", "trunk", "full-drain", "dob"}))
      ->capture_default_str();
  attack->add_option("--duration", atk.duration, "Simulated time")->capture_default_str();
  add_plan_flags(attack, atk.flags);
  attack->add_option("--door-lighting-multiplier", atk.lighting, "Scale welcome-light load (night > 1)");
  attack->add_option("--report-out", atk.report_out, "JSON drain report of the last scenario");
  attack->add_option("--report-dir", atk.report_dir, "Directory for one JSON drain report per scenario");
  attack->add_option("--csv", atk.csv_out, "Drain table as CSV");
  attack->add_option("--trace-out", atk.trace_out, "candump trace of the last scenario");
  attack->add_option("--state-out", atk.state_out, "ECU states at the end of the run");

  AnalyzeArgs ana;
  auto* analyze_cmd = app.add_subcommand("analyze", "Reverse-engineer control messages from a trace");
  analyze_cmd->add_option("--trace", ana.trace, "candump trace")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--csv", ana.csv_out, "Candidates as CSV");
  analyze_cmd->add_option("--window", ana.window, "Ignition detection window")->capture_default_str();
  analyze_cmd->add_option("--jump", ana.jump, "Distinct-ID jump factor")->capture_default_str();
  analyze_cmd->add_option("--change-fraction", ana.change_fraction, "Free-running bit threshold")
      ->capture_default_str();
  analyze_cmd->add_option("--event-window", ana.event_window, "Span before the ignition to search")
      ->capture_default_str();
  analyze_cmd->add_option("--persist", ana.persist, "Span after the ignition to search")->capture_default_str();

  ReportArgs rep;
  auto* report = app.add_subcommand("report", "Tabulate drain reports; the first is the reference");
  report->add_option("reports", rep.files, "JSON drain reports")->required()->check(CLI::ExistingFile);
  report->add_option("--vehicle", rep.vehicle, "Take the battery from this vehicle config")
      ->check(CLI::ExistingFile);
  report->add_option("--csv", rep.csv_out, "Table as CSV");

  ResetArgs rst;
  auto* reset = app.add_subcommand("reset", "Apply a reset to saved ECU states");
  reset->add_option("--vehicle", rst.vehicle, "Vehicle config file")->required()->check(CLI::ExistingFile);
  reset->add_option("--state", rst.state, "ECU state JSON")->required()->check(CLI::ExistingFile);
  reset->add_option("--kind", rst.kind, "battery or user-request")
      ->check(CLI::IsMember({"battery", "user-request"}))
      ->capture_default_str();
  reset->add_option("--out", rst.out, "Output state file (default: stdout)");

  FleetArgs flt;
  auto* fleet = app.add_subcommand("fleet", "Generate synthetic vehicles and measure wake-up ratios");
  fleet->add_option("--seed", flt.seed)->capture_default_str();
  fleet->add_option("--count", flt.count)->check(CLI::PositiveNumber)->capture_default_str();
  fleet->add_option("--era", flt.era)->check(CLI::IsMember({"old", "modern"}))->capture_default_str();
  fleet->add_option("--out-dir", flt.out_dir, "Write each vehicle config here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*attack) return run_attack(atk);
    if (*analyze_cmd) return run_analyze(ana);
    if (*report) return run_report(rep);
    if (*reset) return run_reset(rst);
    if (*fleet) return run_fleet(flt);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}
