#pragma once

#include <optional>
#include <string>
#include <vector>

#include "canwake/bus.hpp"
#include "canwake/ecu.hpp"
#include "canwake/power.hpp"
#include "canwake/wakeup.hpp"

namespace canwake {

/// One CAN bus of a parked vehicle together with its battery.
struct VehicleConfig {
  std::string name;
  double bitrate_bps = 500'000.0;
  double quiescent_load_a = 0.0;
  double door_lighting_multiplier = 1.0;  // > 1 when headlights join the welcome lights at night
  WakeupFilterParams wake_filter;
  BatteryConfig battery;
  std::vector<EcuConfig> ecus;

  /// Unique ECU names, unique message IDs, per-ECU and battery invariants.
  void validate() const;

  BusConfig bus_config() const;
  PowerRoster power_roster() const;

  std::optional<std::size_t> find_ecu(std::string_view name) const;
  /// ECU whose schedule transmits `id`.
  std::optional<std::size_t> transmitter_of(std::uint16_t id) const;
  /// Baseline payload of `id` if some ECU schedules it.
  std::optional<CanFrame> baseline_frame(std::uint16_t id) const;
  /// Shortest T_wakeup among wakeable ECUs.
  std::optional<Duration> min_wakeable_t_wakeup() const;
};

}  // namespace canwake
