#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "canwake/frame.hpp"
#include "canwake/time.hpp"
#include "canwake/wakeup.hpp"

namespace canwake {

// Terminal 15 is switched by the ignition; terminal 30 is permanent battery.
enum class Terminal { T15, T30 };

enum class PowerMode { Off, Sleep, Normal, BusOff };

enum class RecoveryPolicy { AutoRecover, NeverRecover, ManualResetOnly };

enum class RecoveryTrigger { Automatic, UserRequest };

enum class TxResult { Success, Error };

enum class VehicleFunction { PKES, RKE, PowerMode, DoorControl, TrunkControl };

enum class Activation { WhileRepeated, LatchedUntilClosed };

std::string_view to_string(Terminal t);
std::string_view to_string(PowerMode m);
std::string_view to_string(RecoveryPolicy p);
std::string_view to_string(VehicleFunction f);
std::string_view to_string(Activation a);

inline constexpr int kTecIncrement = 8;
inline constexpr int kTecBusOffThreshold = 255;

/// Periodic message transmitted while the ECU is in Normal mode.
///
/// Bits set in free_running_mask are complemented on every emission (rolling
/// checksums and counters); all other bits hold the baseline unless a
/// payload override is active.
struct ScheduledMessage {
  std::uint16_t id = 0;
  Duration period{};
  std::uint8_t dlc = 8;
  Payload baseline{};
  Payload free_running_mask{};
};

/// Payload bits that make a received frame a control command.
struct ControlBinding {
  std::uint16_t id = 0;
  std::uint8_t byte = 0;  // 0-based data byte index
  std::uint8_t mask = 0xFF;
  std::uint8_t value = 0;

  bool matches(const CanFrame& frame) const;
  /// Applies the command bits onto a payload template.
  CanFrame apply(CanFrame frame) const;
};

/// A vehicle function hosted by an ECU whose activation adds a current load.
struct FunctionLoad {
  VehicleFunction function = VehicleFunction::DoorControl;
  double load_a = 0.0;
  Activation activation = Activation::WhileRepeated;
  Duration hold{};                     // WhileRepeated: active this long per accepted command
  std::optional<Duration> auto_off;    // LatchedUntilClosed: lights time out after this
  ControlBinding control;
};

struct EcuConfig {
  std::string name;
  Terminal terminal = Terminal::T30;
  Duration t_wakeup = std::chrono::seconds(2);
  double sleep_current_a = 0.0;
  double normal_current_a = 0.0;
  std::vector<ScheduledMessage> schedule;
  RecoveryPolicy recovery = RecoveryPolicy::AutoRecover;
  std::set<VehicleFunction> standby_functions;
  std::vector<FunctionLoad> functions;
  WakeupFilterParams wake_filter;

  /// Throws std::invalid_argument naming the ECU and the broken invariant.
  void validate() const;
};

struct PayloadOverride {
  Payload mask{};
  Payload value{};
};

struct EcuState {
  PowerMode mode = PowerMode::Sleep;
  int tec = 0;
  int rec = 0;
  std::optional<SimTime> wake_deadline;
  bool ignition_hold = false;
  std::vector<SimTime> next_tx;          // per schedule entry
  std::vector<std::uint64_t> emissions;  // per schedule entry
  std::optional<CanFrame> pending;       // frame awaiting retransmission
  SimTime retry_at = kNever;
  std::vector<SimTime> load_until;       // per hosted function; kInactive when off
  std::map<std::uint16_t, PayloadOverride> overrides;

  static constexpr SimTime kInactive = SimTime::min();
};

struct TickResult {
  std::vector<CanFrame> frames;
  bool entered_sleep = false;
  std::vector<std::size_t> loads_off;  // indices into EcuConfig::functions

  void clear() {
    frames.clear();
    entered_sleep = false;
    loads_off.clear();
  }
};

/// Current drawn by one ECU in a given state.
double current_draw(const EcuState& state, const EcuConfig& config, double active_function_loads_a);

/// One ECU: terminal semantics, power modes, message schedule, error
/// confinement and recovery policy. Mutated only by the owning bus loop.
class Ecu {
 public:
  explicit Ecu(EcuConfig config);

  static EcuState initial_state(const EcuConfig& config);

  const EcuConfig& config() const noexcept { return config_; }
  const EcuState& state() const noexcept { return state_; }
  PowerMode mode() const noexcept { return state_.mode; }

  /// Sleep -> Normal, or extends the deadline of a Normal ECU. Off and
  /// BusOff ECUs ignore the signal. Returns true on a Sleep -> Normal edge.
  bool on_wakeup_signal(SimTime now);

  void tick(SimTime now, TickResult& out);
  TickResult tick(SimTime now);

  /// Returns true when this result pushed the ECU into bus-off.
  bool on_tx_result(TxResult result);
  void on_rx_result(TxResult result);
  void schedule_retry(const CanFrame& frame, SimTime at);

  /// Returns true when the ECU left bus-off.
  bool attempt_recovery(RecoveryTrigger trigger);
  void battery_reset();

  /// Returns true when the mode changed.
  bool ignition_on(SimTime now);
  bool ignition_off(SimTime now);

  /// Control-command handling for a frame seen on the bus. Returns the
  /// indices of functions that switched on.
  std::vector<std::size_t> on_frame_received(const CanFrame& frame, SimTime now);

  bool load_active(std::size_t function_index) const;
  double active_function_load_a() const;
  double current_draw() const;

  void set_override(std::uint16_t id, const PayloadOverride& override);
  void clear_override(std::uint16_t id);

  /// Earliest time at which tick() has something to do.
  SimTime next_event_time() const;

 private:
  CanFrame compose(std::size_t index) const;
  void halt();

  EcuConfig config_;
  EcuState state_;
};

}  // namespace canwake
