// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <unistd.h>

#include "canwake/attack.hpp"
#include "canwake/fleet.hpp"
#include "canwake/recon.hpp"
#include "canwake/trace_io.hpp"
#include "canwake/vehicle_config.hpp"
#include "canwake/wakeup.hpp"

namespace fs = std::filesystem;
using namespace canwake;
using namespace std::chrono_literals;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

const VehicleConfig& reference() {
  static const VehicleConfig v = load_vehicle(fs::path(CANWAKE_DATA_DIR) / "reference_2017.cfg");
  return v;
}

double elapsed_s(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

Verdict table_reproduction() {
  Verdict v;
  struct Row {
    double ma;
    double amplification;
    double days;
  };
  const Row expected[] = {{12.2, 1.00, 30.7}, {42.0, 3.44, 8.92}, {74.5, 6.11, 5.02}, {101.1, 8.29, 3.70},
                          {153.3, 12.57, 2.44}};
  const auto start = std::chrono::steady_clock::now();
  double baseline = 0.0;
  for (std::size_t i = 0; i < std::size(kCumulativeScenarios); ++i) {
    const Scenario s = kCumulativeScenarios[i];
    const auto outcome = execute(scenario_plan(reference(), s), reference(), 72h);
    const double ma = outcome.report.mean_current_a * 1e3;
    if (i == 0) {
      baseline = ma;
    }
    const double amp = ma / baseline;
    const double days = operation_time_ideal(reference().battery, ma / 1e3) / 24.0;
    v.require(std::abs(ma - expected[i].ma) < 0.05, fmt::format("{} current {:.3f} mA", scenario_label(s), ma));
    v.require(std::abs(amp - expected[i].amplification) <= 0.01,
              fmt::format("{} amplification {:.3f}", scenario_label(s), amp));
    v.require(std::abs(days - expected[i].days) <= 0.005 * expected[i].days,
              fmt::format("{} days {:.3f}", scenario_label(s), days));
  }
  const double t = elapsed_s(start);
  v.require(t < 60.0, fmt::format("runtime {:.1f}s", t));
  v.note(fmt::format("five scenarios over 72h in {:.1f}s", t));
  return v;
}

Verdict baseline_hours() {
  Verdict v;
  const double h = operation_time_ideal(reference().battery, 0.0122);
  v.require(std::abs(h - 737.7) <= 0.1, fmt::format("{:.3f}h", h));
  v.note(fmt::format("{:.2f}h", h));
  return v;
}

Verdict wakeup_universality() {
  Verdict v;
  std::mt19937_64 rng(0xC0FFEE);
  std::size_t checked = 0;
  for (double rate : {500'000.0, 125'000.0}) {
    v.require(frame_wakes_bus(all_ones_frame(), rate), fmt::format("all-ones frame at {} bit/s", rate));
    for (int i = 0; i < 10'000; ++i) {
      const auto id = static_cast<std::uint16_t>(rng() % (kMaxStandardId + 1));
      std::vector<std::uint8_t> data(rng() % (kMaxDataLength + 1));
      for (auto& b : data) {
        b = static_cast<std::uint8_t>(rng());
      }
      const CanFrame f(id, data);
      if (!frame_wakes_bus(f, rate)) {
        v.require(false, fmt::format("{} at {} bit/s", to_string(f), rate));
        return v;
      }
      ++checked;
    }
  }
  v.note(fmt::format("{} random frames plus the all-ones frame", checked));
  return v;
}

std::optional<std::size_t> replay(const std::vector<bool>& errors) {
  int tec = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    tec = errors[i] ? tec + 8 : std::max(tec - 1, 0);
    if (tec > 255) {
      return i + 1;
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> ecu_bus_off(const EcuConfig& cfg, const std::vector<bool>& errors) {
  Ecu ecu(cfg);
  ecu.on_wakeup_signal(SimTime{0});
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (ecu.on_tx_result(errors[i] ? TxResult::Error : TxResult::Success)) {
      return i + 1;
    }
  }
  return std::nullopt;
}

Verdict bus_off_bound() {
  Verdict v;
  const EcuConfig& cfg = reference().ecus.front();
  v.require(!ecu_bus_off(cfg, std::vector<bool>(31, true)), "bus-off after 31 errors");
  v.require(ecu_bus_off(cfg, std::vector<bool>(32, true)) == std::size_t{32}, "no bus-off at 32 errors");
  std::size_t sequences = 0;
  for (std::size_t n_errors = 1; n_errors <= 36; ++n_errors) {
    for (std::size_t k = 0; k <= 3; ++k) {
      const std::size_t len = n_errors + k;
      std::vector<bool> success(len, false);
      std::fill(success.end() - static_cast<long>(k), success.end(), true);
      do {
        std::vector<bool> errors(len);
        for (std::size_t i = 0; i < len; ++i) {
          errors[i] = !success[i];
        }
        ++sequences;
        if (ecu_bus_off(cfg, errors) != replay(errors)) {
          v.require(false, fmt::format("mismatch with {} errors and {} successes", n_errors, k));
          return v;
        }
      } while (std::next_permutation(success.begin(), success.end()));
    }
  }
  v.note(fmt::format("{} interleavings match the counter replay", sequences));
  return v;
}

Verdict dob_outcome() {
  Verdict v;
  const DobOutcome out = dob_attack(reference());
  v.require(out.permanently_off == std::vector<std::string>{"RCM"},
            fmt::format("permanently off: {}", fmt::join(out.permanently_off, ",")));
  v.require(!key_fob_authentication_available(out.availability), "key fob still available");
  const std::size_t rcm_ids = reference().ecus[*reference().find_ecu("RCM")].schedule.size();
  v.require(out.ids_before >= out.ids_after && out.ids_before - out.ids_after == rcm_ids,
            fmt::format("ID drop {} -> {}", out.ids_before, out.ids_after));
  v.require(out.attack_duration() > Duration::zero() && out.attack_duration() < 5s, "attack duration");
  v.note(fmt::format("off={{RCM}} ids {}->{} (drop {}), attack {:.6f}s", out.ids_before, out.ids_after,
                     out.ids_before - out.ids_after, to_seconds(out.attack_duration())));
  return v;
}

// Sleep intervals of wakeable ECUs under a flood of the given period.
std::vector<Duration> sleep_intervals(Duration period, Duration span, std::size_t& sleeps) {
  const auto outcome = execute(wakeup_flood(period), reference(), span,
                               ExecuteOptions{{}, TraceFilter{false, false, SimTime{0}}});
  std::vector<Duration> intervals;
  std::vector<std::optional<SimTime>> asleep(reference().ecus.size());
  sleeps = 0;
  for (const BusEvent& e : outcome.trace) {
    if (e.node < 0 || reference().ecus[static_cast<std::size_t>(e.node)].terminal != Terminal::T30) {
      continue;
    }
    auto& since = asleep[static_cast<std::size_t>(e.node)];
    if (e.kind == EventKind::Sleep) {
      ++sleeps;
      since = e.time;
    } else if (e.kind == EventKind::WakeupDetected && since) {
      intervals.push_back(e.time - *since);
      since.reset();
    }
  }
  return intervals;
}

Verdict flood_keep_alive() {
  Verdict v;
  std::size_t sleeps = 0;
  sleep_intervals(2s, 1h, sleeps);
  v.require(sleeps == 0, fmt::format("{} sleeps at 2s", sleeps));
  const auto intervals = sleep_intervals(2500ms, 10min, sleeps);
  v.require(!intervals.empty(), "no sleep intervals at 2.5s");
  for (Duration d : intervals) {
    if (std::chrono::abs(d - 500ms) > 1us) {
      v.require(false, fmt::format("interval {}us", d.count()));
      break;
    }
  }
  v.note(fmt::format("2s: 0 sleeps over 1h; 2.5s: {} intervals of 0.5s", intervals.size()));
  return v;
}

Verdict recon_accuracy() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  const ReconReport fixture = analyze(load_candump(fs::path(CANWAKE_DATA_DIR) / "fixtures/door_unlock_0x01.log"));
  const bool verbatim = fixture.candidates.size() == 1 && fixture.candidates[0].id == 0x001 &&
                        fixture.candidates[0].byte == 1 && fixture.candidates[0].baseline == 0x10 &&
                        fixture.candidates[0].event_value == 0x30;
  v.require(verbatim, "fixture example not reproduced");

  FleetOptions fleet_options;
  fleet_options.max_ratio = 0.62;
  const auto fleet = generate_fleet(2024, 100, Era::Modern, fleet_options);
  std::size_t planted_total = 0;
  std::size_t true_positive = 0;
  std::size_t reported = 0;
  Duration worst_boundary{0};
  const SplitOptions split;
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const DriverContext ctx = simulate_driver_context(fleet[i], 1000 + i);
    const ReconReport r = analyze(ctx.trace);
    if (!r.ignition_boundary) {
      v.require(false, fmt::format("{}: no ignition boundary", fleet[i].name));
      continue;
    }
    worst_boundary = std::max(worst_boundary, std::chrono::abs(*r.ignition_boundary - ctx.ignition));
    std::set<std::tuple<std::uint16_t, std::uint8_t, std::uint8_t>> planted;
    for (const PlantedEvent& e : ctx.events) {
      planted.insert({e.id, e.byte, e.changed});
    }
    planted_total += planted.size();
    reported += r.candidates.size();
    for (const ControlCandidate& c : r.candidates) {
      true_positive += planted.count({c.id, c.byte, c.mask});
    }
  }
  const double precision = reported ? static_cast<double>(true_positive) / static_cast<double>(reported) : 0.0;
  const double recall = planted_total ? static_cast<double>(true_positive) / static_cast<double>(planted_total) : 0.0;
  v.require(precision == 1.0, fmt::format("precision {:.4f}", precision));
  v.require(recall == 1.0, fmt::format("recall {:.4f}", recall));
  v.require(worst_boundary <= split.window, fmt::format("boundary error {}us", worst_boundary.count()));
  const double t = elapsed_s(start);
  v.require(t < 10.0, fmt::format("runtime {:.1f}s", t));
  v.note(fmt::format("100 vehicles, {} planted, precision {:.2f} recall {:.2f}, worst boundary error {:.3f}s, {:.1f}s",
                     planted_total, precision, recall, to_seconds(worst_boundary), t));
  return v;
}

Verdict awakening_band() {
  Verdict v;
  const auto modern = generate_fleet(75, 100, Era::Modern);
  double sum = 0.0;
  double lo = 100.0;
  double hi = 0.0;
  for (const VehicleConfig& vehicle : modern) {
    const double r = measure_awakening(vehicle).ratio_percent;
    sum += r;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  const double mean = sum / static_cast<double>(modern.size());
  v.require(lo >= 49.12 && hi <= 94.95, fmt::format("ratio range [{:.2f}, {:.2f}]%", lo, hi));
  v.require(std::abs(mean - 75.44) <= 10.0, fmt::format("mean {:.2f}%", mean));
  std::size_t worst_old = 0;
  for (const VehicleConfig& vehicle : generate_fleet(75, 50, Era::Old)) {
    worst_old = std::max(worst_old, measure_awakening(vehicle).awakened_ecus);
  }
  v.require(worst_old <= 1, fmt::format("old-era vehicle awakened {} ECUs", worst_old));
  v.note(fmt::format("modern range [{:.2f}, {:.2f}]% mean {:.2f}%; old era at most {} ECU", lo, hi, mean, worst_old));
  return v;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict cli_determinism(const std::optional<std::string>& cli) {
  Verdict v;
  if (!cli) {
    v.require(false, "no CLI path given (--cli)");
    return v;
  }
  const fs::path dir = fs::temp_directory_path() / fmt::format("canwake-acceptance-{}", ::getpid());
  fs::create_directories(dir);
  const std::string vehicle = (fs::path(CANWAKE_DATA_DIR) / "reference_2017.cfg").string();
  const std::string fixture = (fs::path(CANWAKE_DATA_DIR) / "fixtures/door_unlock_0x01.log").string();
  auto commands = [&](const fs::path& out) {
    fs::create_directories(out);
    return std::vector<std::string>{
        fmt::format("'{}' simulate --vehicle '{}' --duration 90s --driver-context --seed 7 --out '{}'", *cli, vehicle,
                    (out / "driver.log").string()),
        fmt::format("'{}' attack --vehicle '{}' --plan full-drain --duration 6h --report-dir '{}' --csv '{}' "
                    "--trace-out '{}' --state-out '{}' > '{}'",
                    *cli, vehicle, (out / "reports").string(), (out / "drain.csv").string(),
                    (out / "attack.log").string(), (out / "states.json").string(), (out / "attack.txt").string()),
        fmt::format("'{}' attack --vehicle '{}' --plan dob --duration 1min --report-out '{}' > '{}'", *cli, vehicle,
                    (out / "dob.json").string(), (out / "dob.txt").string()),
        fmt::format("'{}' analyze --trace '{}' --csv '{}' > '{}'", *cli, fixture, (out / "recon.csv").string(),
                    (out / "recon.txt").string()),
        fmt::format("'{}' fleet --seed 11 --count 5 --out-dir '{}' > '{}'", *cli, (out / "fleet").string(),
                    (out / "fleet.txt").string()),
    };
  };
  for (const char* run : {"a", "b"}) {
    for (const std::string& cmd : commands(dir / run)) {
      if (std::system(cmd.c_str()) != 0) {
        v.require(false, "command failed: " + cmd);
        return v;
      }
    }
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    if (!entry.is_regular_file()) {
      continue;
    }
    const fs::path twin = dir / "b" / fs::relative(entry.path(), dir / "a");
    v.require(fs::exists(twin) && slurp(entry.path()) == slurp(twin),
              "differs: " + fs::relative(entry.path(), dir / "a").string());
    ++compared;
  }
  v.require(compared >= 10, fmt::format("only {} output files", compared));
  v.note(fmt::format("{} output files byte-identical across two runs", compared));
  fs::remove_all(dir);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<std::string> cli;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--cli") {
      cli = argv[i + 1];
    }
  }
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"AC1 drain table", table_reproduction},
      {"AC2 baseline operation time", baseline_hours},
      {"AC3 wake-up universality", wakeup_universality},
      {"AC4 bus-off bound", bus_off_bound},
      {"AC5 DoB outcome", dob_outcome},
      {"AC6 wake-flood keep-alive", flood_keep_alive},
      {"AC7 recon accuracy", recon_accuracy},
      {"AC8 awakened-ID band", awakening_band},
      {"AC9 CLI determinism", [&cli] { return cli_determinism(cli); }},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    failures += v.pass ? 0 : 1;
    fmt::print("{} {}: {}\n", v.pass ? "PASS" : "FAIL", name, v.detail);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
