#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "canwake/ecu.hpp"
#include "canwake/frame.hpp"
#include "canwake/time.hpp"

namespace canwake {

/// Node index used for frames injected by the attacker.
inline constexpr int kAttackerNode = -1;

enum class EventKind : std::uint8_t {
  FrameTx,
  TxError,
  RxError,
  WakeupDetected,
  Sleep,
  BusOff,
  Recovery,
  PowerOn,
  PowerOff,
  LoadOn,
  LoadOff,
};

std::string_view to_string(EventKind kind);

struct BusEvent {
  SimTime time{};
  int node = kAttackerNode;
  EventKind kind = EventKind::FrameTx;
  CanFrame frame;     // FrameTx and TxError
  int function = -1;  // LoadOn / LoadOff: index into the node's functions

  friend bool operator==(const BusEvent&, const BusEvent&) = default;
};

struct Injection {
  SimTime time{};
  CanFrame frame;

  friend bool operator==(const Injection&, const Injection&) = default;
};

/// Half-open interval during which the attacker talks at a foreign bit rate.
struct MismatchWindow {
  SimTime from{};
  SimTime to = kNever;

  bool contains(SimTime t) const { return from <= t && t < to; }
};

enum class KeepAlivePolicy {
  ExternalFramesOnly,  // only injected frames extend a Normal ECU's wake deadline
  AnyFrame,            // every wake-qualifying frame extends it
};

/// Which events the trace keeps. Power-relevant events are always kept.
struct TraceFilter {
  bool frames = true;
  bool errors = true;
  SimTime frames_until = kNever;
};

struct BusConfig {
  double bitrate_bps = 500'000.0;
  std::optional<double> attacker_bitrate_bps;  // defaults to bitrate_bps
  std::vector<EcuConfig> nodes;
  std::vector<MismatchWindow> mismatch;
  KeepAlivePolicy keep_alive = KeepAlivePolicy::ExternalFramesOnly;
  TraceFilter trace;

  double effective_attacker_bitrate() const { return attacker_bitrate_bps.value_or(bitrate_bps); }
  void validate() const;
};

/// Adds windows during which the attacker transmits at attacker_bitrate_bps
/// (half the bus rate when not given).
BusConfig apply_bitrate_mismatch(BusConfig config, std::span<const MismatchWindow> windows,
                                 std::optional<double> attacker_bitrate_bps = std::nullopt);

/// Deterministic broadcast bus.
///
/// Events at one timestamp are processed in a fixed order: injected frames
/// first, then ECU activity by roster index, repeating until no node has work
/// due at that time. The trace records events in that causal order.
class Bus {
 public:
  explicit Bus(BusConfig config);

  /// Queues an attacker frame; must not lie before now().
  void inject(SimTime time, const CanFrame& frame);
  void add_mismatch(MismatchWindow window);
  /// Bit rate the attacker uses inside mismatch windows.
  void set_attacker_bitrate(double bitrate_bps);
  /// Closes every open mismatch window at `at`.
  void end_mismatch(SimTime at);
  bool mismatch_active(SimTime t) const;

  /// Processes every event with time < end.
  void run_until(SimTime end);

  SimTime now() const noexcept { return now_; }
  const BusConfig& config() const noexcept { return config_; }
  std::span<const Ecu> nodes() const noexcept { return nodes_; }
  Ecu& node(std::size_t index) { return nodes_.at(index); }
  const std::vector<BusEvent>& trace() const noexcept { return trace_; }
  std::vector<BusEvent> take_trace();

  /// Offers recovery to every bus-off node at now(). Returns recovered nodes.
  std::vector<std::size_t> recover_all(RecoveryTrigger trigger);
  void battery_reset();
  void set_ignition(bool on);

  void set_override(std::size_t node, std::uint16_t id, const PayloadOverride& override);
  void clear_override(std::size_t node, std::uint16_t id);

  /// Mean total node current right now (function loads included).
  double node_current_a() const;

 private:
  void transmit(int source, const CanFrame& frame, SimTime now);
  void broadcast(int source, const CanFrame& frame, SimTime now);
  void record(SimTime time, int node, EventKind kind, const CanFrame& frame = {}, int function = -1);
  void record_loads_off(std::size_t node, const std::vector<std::size_t>& loads, SimTime now);
  void refresh_next(std::size_t node);
  Duration retransmit_delay(const CanFrame& frame) const;

  BusConfig config_;
  std::vector<Ecu> nodes_;
  std::vector<SimTime> next_;  // cached Ecu::next_event_time
  std::vector<Injection> injections_;
  std::size_t next_injection_ = 0;
  std::vector<MismatchWindow> mismatch_;
  std::vector<BusEvent> trace_;
  SimTime now_{0};
  TickResult scratch_;
};

/// Runs a fresh bus with attacker injections over [0, duration).
std::vector<BusEvent> run(const BusConfig& config, std::span<const Injection> injections, Duration duration);

/// Distinct identifiers among successful transmissions in [from, to).
std::size_t distinct_id_count(std::span<const BusEvent> trace, SimTime from, SimTime to,
                              bool include_attacker = false);
std::set<std::uint16_t> distinct_ids(std::span<const BusEvent> trace, SimTime from, SimTime to,
                                     bool include_attacker = false);

}  // namespace canwake
