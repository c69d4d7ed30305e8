#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "canwake/bus.hpp"
#include "canwake/power.hpp"
#include "canwake/vehicle.hpp"

namespace canwake {

enum class AttackKind { WakeupFlood, PowerModeControl, DoorCycle, TrunkOpen, DoB, Composite };

std::string_view to_string(AttackKind kind);

struct AttackPlan {
  AttackKind kind = AttackKind::WakeupFlood;
  std::optional<std::uint16_t> control_id;
  std::vector<std::uint8_t> control_payload;
  std::vector<std::uint8_t> alternate_payload;  // DoorCycle: the lock command
  std::optional<Duration> injection_period;
  SimTime start{0};
  std::optional<SimTime> stop;
  Duration mismatch_delay = std::chrono::seconds(1);  // DoB: wake-up to bit-rate switch
  std::vector<AttackPlan> parts;                      // Composite

  /// Throws std::invalid_argument when a control plan lacks its ID or a
  /// period is not positive.
  void validate() const;
};

AttackPlan wakeup_flood(Duration period, SimTime start = SimTime{0});
AttackPlan power_mode_control(const CanFrame& command, Duration period, SimTime start = SimTime{0});
AttackPlan door_cycle(const CanFrame& unlock, const CanFrame& lock, Duration period, SimTime start = SimTime{0});
/// `reinject` is set when the trunk lights time out on their own.
AttackPlan trunk_open(const CanFrame& command, std::optional<Duration> reinject = std::nullopt,
                      SimTime start = SimTime{0});
AttackPlan dob(SimTime start = SimTime{0});
AttackPlan composite(std::vector<AttackPlan> parts);

/// Longest flood period that keeps an ECU with this T_wakeup awake.
Duration required_injection_period(Duration t_wakeup);

struct AttackSchedule {
  std::vector<Injection> frames;
  std::vector<MismatchWindow> mismatch;
};

/// Injections over [0, duration); composite parts are merged by time with
/// ties kept in part order.
AttackSchedule build_injections(const AttackPlan& plan, Duration duration);

struct FunctionLoadEntry {
  VehicleFunction function;
  std::string host;
  double load_a = 0.0;
  Activation activation = Activation::WhileRepeated;
  ControlBinding control;
};
using FunctionLoadTable = std::vector<FunctionLoadEntry>;

FunctionLoadTable function_load_table(const VehicleConfig& vehicle);

/// Availability of each standby function: a function is lost while its host
/// ECU sits in bus-off.
using FunctionAvailability = std::map<VehicleFunction, bool>;

FunctionAvailability function_availability(const VehicleConfig& vehicle, std::span<const Ecu> nodes);
bool key_fob_authentication_available(const FunctionAvailability& availability);

/// The cumulative reference scenarios, each a composite of the previous.
enum class Scenario { None, Wakeup, PowerMode, DoorCycle, Trunk };
std::string_view to_string(Scenario s);
std::string_view scenario_label(Scenario s);
inline constexpr Scenario kCumulativeScenarios[] = {Scenario::None, Scenario::Wakeup, Scenario::PowerMode,
                                                    Scenario::DoorCycle, Scenario::Trunk};

struct ScenarioPeriods {
  std::optional<Duration> flood;  // defaults to the shortest T_wakeup
  Duration power_mode = std::chrono::seconds(5);
  Duration door = std::chrono::seconds(5);
};

/// Builds the plan for a cumulative scenario from the vehicle's control
/// bindings. Returns nullopt for Scenario::None.
std::optional<AttackPlan> scenario_plan(const VehicleConfig& vehicle, Scenario scenario,
                                        const ScenarioPeriods& periods = {});

struct ExecuteOptions {
  IntegrationOptions integration;
  TraceFilter trace{true, true, std::chrono::seconds(60)};
};

struct AttackOutcome {
  DrainReport report;
  std::vector<BusEvent> trace;
  FunctionAvailability availability;
  std::vector<std::string> permanently_off;
  std::vector<EcuState> final_states;
};

/// Runs the plan on the vehicle for `duration` and integrates battery drain.
/// Amplification is relative to the same vehicle left alone.
AttackOutcome execute(const std::optional<AttackPlan>& plan, const VehicleConfig& vehicle, Duration duration,
                      const ExecuteOptions& options = {});

struct DobOptions {
  Duration mismatch_delay = std::chrono::seconds(1);
  Duration observe = std::chrono::seconds(1);
  Duration max_attack = std::chrono::seconds(60);
  Duration poll = std::chrono::milliseconds(10);
};

struct DobOutcome {
  std::vector<BusEvent> trace;
  std::vector<std::string> permanently_off;
  SimTime first_injection{};
  SimTime last_bus_off{};
  SimTime mismatch_end{};
  std::size_t ids_before = 0;
  std::size_t ids_after = 0;
  FunctionAvailability availability;

  Duration attack_duration() const { return last_bus_off - first_injection; }
};

/// Wakes the bus, switches the attacker's bit rate until every awake node is
/// bus-off, ends the mismatch and lets the automatic recovery sweep run.
/// Distinct IDs are counted in a wake-up window before and after.
DobOutcome dob_attack(Bus& bus, const VehicleConfig& vehicle, const DobOptions& options = {});
DobOutcome dob_attack(const VehicleConfig& vehicle, const DobOptions& options = {});

}  // namespace canwake
