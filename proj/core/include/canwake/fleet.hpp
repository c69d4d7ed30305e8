#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "canwake/trace.hpp"
#include "canwake/vehicle.hpp"

namespace canwake {

enum class Era { Old, Modern };

std::string_view to_string(Era era);

struct FleetOptions {
  // Target |S_off| / |S_on| band for modern vehicles.
  double min_ratio = 0.52;
  double max_ratio = 0.94;
  std::size_t min_ids = 24;
  std::size_t max_ids = 72;
};

/// Deterministic per seed: the same arguments always yield identical
/// vehicles. Modern vehicles host power-mode, door and trunk controls on
/// messages of wakeable ECUs; old vehicles have at most one wakeable ECU.
std::vector<VehicleConfig> generate_fleet(std::uint64_t seed, std::size_t count, Era era,
                                          const FleetOptions& options = {});

struct AwakeningMeasurement {
  std::size_t awakened_ecus = 0;
  std::set<std::uint16_t> s_off;  // IDs seen after one wake-up frame
  std::set<std::uint16_t> s_on;   // IDs seen with the ignition on
  double ratio_percent = 0.0;
};

/// Sends one wake-up frame to the parked vehicle, then switches the ignition
/// on, observing the bus for `window` each time.
AwakeningMeasurement measure_awakening(const VehicleConfig& vehicle,
                                       Duration window = std::chrono::seconds(1));

/// A driver action that temporarily rewrites control bits of a message.
struct PlantedEvent {
  VehicleFunction function = VehicleFunction::DoorControl;
  std::uint16_t id = 0;
  std::uint8_t byte = 0;     // 0-based
  std::uint8_t changed = 0;  // bits that differ from the baseline
  std::uint8_t baseline = 0;
  std::uint8_t value = 0;    // byte value while the event lasts
  SimTime from{};
  SimTime to{};
};

struct DriverContextOptions {
  Duration off_duration = std::chrono::seconds(60);  // logging before the ignition turns on
  Duration on_duration = std::chrono::seconds(10);
  Duration lead_min = std::chrono::seconds(2);   // event start before ignition
  Duration lead_max = std::chrono::seconds(20);
  Duration event_length = std::chrono::seconds(3);
  bool plant = true;
};

struct DriverContext {
  Trace trace;  // attacker wake-up frames are not included
  SimTime ignition{};
  std::vector<PlantedEvent> events;
};

/// Keeps the parked vehicle awake with a wake-up flood, plants the driver's
/// unlock, power-mode and trunk actions before the ignition and records the
/// bus. The power-mode change persists into the ignition-on regime; the
/// others revert.
DriverContext simulate_driver_context(const VehicleConfig& vehicle, std::uint64_t seed,
                                      const DriverContextOptions& options = {});

}  // namespace canwake
