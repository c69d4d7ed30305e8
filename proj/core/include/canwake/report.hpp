#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "canwake/attack.hpp"
#include "canwake/power.hpp"
#include "canwake/recon.hpp"
#include "canwake/vehicle.hpp"

namespace canwake {

struct DrainRow {
  std::string label;
  double mean_current_a = 0.0;
};

/// A drain table row with every derived column recomputed from the current.
struct DrainTableRow {
  std::string label;
  double mean_current_a = 0.0;
  double amplification = 1.0;
  double operation_time_h = 0.0;
  double operation_time_days = 0.0;
  double peukert_time_h = 0.0;
};

/// The first row is the amplification reference.
std::vector<DrainTableRow> drain_table(std::span<const DrainRow> rows, const BatteryConfig& battery);

std::string render_drain_table_text(std::span<const DrainTableRow> rows);
std::string render_drain_table_csv(std::span<const DrainTableRow> rows);

/// Machine-readable attack result; read back by parse_drain_report.
std::string drain_report_json(std::string_view label, const VehicleConfig& vehicle, Duration duration,
                              const AttackOutcome& outcome);
DrainRow parse_drain_report(std::string_view json);

std::string render_recon_text(const ReconReport& report);
std::string render_recon_csv(const ReconReport& report);

struct SavedEcuState {
  std::string name;
  PowerMode mode = PowerMode::Sleep;
  int tec = 0;
  int rec = 0;

  friend bool operator==(const SavedEcuState&, const SavedEcuState&) = default;
};

std::string ecu_states_json(std::span<const SavedEcuState> states);
std::vector<SavedEcuState> parse_ecu_states(std::string_view json);
std::vector<SavedEcuState> saved_states(const VehicleConfig& vehicle, std::span<const EcuState> states);

enum class ResetKind { Battery, UserRequest };

/// Battery reset returns every ECU to its ignition-off mode; a user request
/// lets ECUs whose policy allows it leave bus-off.
std::vector<SavedEcuState> apply_reset(const VehicleConfig& vehicle, std::span<const SavedEcuState> states,
                                       ResetKind kind);

}  // namespace canwake
