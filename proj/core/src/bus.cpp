#include "canwake/bus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace canwake {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::FrameTx: return "frame";
    case EventKind::TxError: return "tx-error";
    case EventKind::RxError: return "rx-error";
    case EventKind::WakeupDetected: return "wakeup";
    case EventKind::Sleep: return "sleep";
    case EventKind::BusOff: return "bus-off";
    case EventKind::Recovery: return "recovery";
    case EventKind::PowerOn: return "power-on";
    case EventKind::PowerOff: return "power-off";
    case EventKind::LoadOn: return "load-on";
    case EventKind::LoadOff: return "load-off";
  }
  return "?";
}

void BusConfig::validate() const {
  if (!(bitrate_bps > 0.0) || !(effective_attacker_bitrate() > 0.0)) {
    throw std::invalid_argument("bus bit rate must be positive");
  }
  if (nodes.empty()) {
    throw std::invalid_argument("bus needs at least one node");
  }
  std::set<std::string> names;
  std::set<std::uint16_t> ids;
  for (const auto& node : nodes) {
    node.validate();
    if (!names.insert(node.name).second) {
      throw std::invalid_argument("duplicate ECU name '" + node.name + "'");
    }
    for (const auto& msg : node.schedule) {
      if (!ids.insert(msg.id).second) {
        throw std::invalid_argument("message id " + std::to_string(msg.id) + " scheduled by more than one ECU");
      }
    }
  }
  for (const auto& w : mismatch) {
    if (w.to < w.from) {
      throw std::invalid_argument("mismatch window ends before it starts");
    }
  }
}

BusConfig apply_bitrate_mismatch(BusConfig config, std::span<const MismatchWindow> windows,
                                 std::optional<double> attacker_bitrate_bps) {
  if (attacker_bitrate_bps) {
    config.attacker_bitrate_bps = attacker_bitrate_bps;
  } else if (config.effective_attacker_bitrate() == config.bitrate_bps) {
    config.attacker_bitrate_bps = config.bitrate_bps / 2.0;
  }
  config.mismatch.insert(config.mismatch.end(), windows.begin(), windows.end());
  return config;
}

Bus::Bus(BusConfig config) : config_(std::move(config)) {
  config_.validate();
  nodes_.reserve(config_.nodes.size());
  for (const auto& node : config_.nodes) {
    nodes_.emplace_back(node);
  }
  next_.assign(nodes_.size(), kNever);
  mismatch_ = config_.mismatch;
}

void Bus::inject(SimTime time, const CanFrame& frame) {
  if (time < now_) {
    throw std::invalid_argument("injection lies in the past");
  }
  auto first = injections_.begin() + static_cast<std::ptrdiff_t>(next_injection_);
  auto pos = std::upper_bound(first, injections_.end(), time,
                              [](SimTime t, const Injection& inj) { return t < inj.time; });
  injections_.insert(pos, Injection{time, frame});
}

void Bus::add_mismatch(MismatchWindow window) { mismatch_.push_back(window); }

void Bus::set_attacker_bitrate(double bitrate_bps) {
  if (!(bitrate_bps > 0.0)) {
    throw std::invalid_argument("attacker bit rate must be positive");
  }
  config_.attacker_bitrate_bps = bitrate_bps;
}

void Bus::end_mismatch(SimTime at) {
  for (auto& w : mismatch_) {
    if (w.to > at) {
      w.to = std::max(at, w.from);
    }
  }
}

bool Bus::mismatch_active(SimTime t) const {
  if (config_.effective_attacker_bitrate() == config_.bitrate_bps) {
    return false;
  }
  return std::any_of(mismatch_.begin(), mismatch_.end(), [t](const MismatchWindow& w) { return w.contains(t); });
}

void Bus::run_until(SimTime end) {
  while (true) {
    SimTime t = kNever;
    if (next_injection_ < injections_.size()) {
      t = injections_[next_injection_].time;
    }
    for (SimTime n : next_) {
      t = std::min(t, n);
    }
    if (t >= end) {
      break;
    }
    now_ = t;
    while (next_injection_ < injections_.size() && injections_[next_injection_].time == t) {
      const CanFrame frame = injections_[next_injection_].frame;
      ++next_injection_;
      transmit(kAttackerNode, frame, t);
    }
    bool progressed = true;
    while (progressed) {
      progressed = false;
      for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (next_[i] > t) {
          continue;
        }
        nodes_[i].tick(t, scratch_);
        // transmit() never ticks a node, so scratch_ stays intact below.
        const TickResult& result = scratch_;
        record_loads_off(i, result.loads_off, t);
        if (result.entered_sleep) {
          record(t, static_cast<int>(i), EventKind::Sleep);
        }
        for (const CanFrame& frame : result.frames) {
          transmit(static_cast<int>(i), frame, t);
        }
        refresh_next(i);
        progressed = true;
      }
    }
  }
  now_ = std::max(now_, end);
}

void Bus::transmit(int source, const CanFrame& frame, SimTime now) {
  const bool mismatch = mismatch_active(now);
  if (source == kAttackerNode) {
    // The attacker controls its own controller and never accumulates errors.
    if (mismatch) {
      for (std::size_t j = 0; j < nodes_.size(); ++j) {
        if (nodes_[j].mode() == PowerMode::Normal) {
          nodes_[j].on_rx_result(TxResult::Error);
          if (config_.trace.errors) {
            record(now, static_cast<int>(j), EventKind::RxError);
          }
        }
      }
      return;
    }
    if (config_.trace.frames && now < config_.trace.frames_until) {
      record(now, kAttackerNode, EventKind::FrameTx, frame);
    }
    broadcast(kAttackerNode, frame, now);
    return;
  }

  const auto src = static_cast<std::size_t>(source);
  Ecu& tx = nodes_[src];
  if (tx.mode() != PowerMode::Normal) {
    return;
  }
  if (mismatch) {
    std::vector<std::size_t> active;
    for (std::size_t f = 0; f < tx.config().functions.size(); ++f) {
      if (tx.load_active(f)) {
        active.push_back(f);
      }
    }
    const bool bus_off = tx.on_tx_result(TxResult::Error);
    if (config_.trace.errors) {
      record(now, source, EventKind::TxError, frame);
    }
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      if (j != src && nodes_[j].mode() == PowerMode::Normal) {
        nodes_[j].on_rx_result(TxResult::Error);
        if (config_.trace.errors) {
          record(now, static_cast<int>(j), EventKind::RxError);
        }
      }
    }
    if (bus_off) {
      record_loads_off(src, active, now);
      record(now, source, EventKind::BusOff);
    } else {
      tx.schedule_retry(frame, now + retransmit_delay(frame));
    }
    refresh_next(src);
    return;
  }

  tx.on_tx_result(TxResult::Success);
  if (config_.trace.frames && now < config_.trace.frames_until) {
    record(now, source, EventKind::FrameTx, frame);
  }
  broadcast(source, frame, now);
}

void Bus::broadcast(int source, const CanFrame& frame, SimTime now) {
  const bool external = source == kAttackerNode;
  std::optional<double> longest;
  auto longest_run = [&]() {
    if (!longest) {
      longest = longest_dominant_us(serialize_frame(frame, config_.bitrate_bps));
    }
    return *longest;
  };
  auto wakes = [&](const Ecu& n) {
    return classify_pulse(longest_run(), n.config().wake_filter) == PulseClass::Wake;
  };

  for (std::size_t j = 0; j < nodes_.size(); ++j) {
    if (static_cast<int>(j) == source) {
      continue;
    }
    Ecu& n = nodes_[j];
    if (n.mode() == PowerMode::Sleep) {
      // The frame that wakes a transceiver is not delivered to the booting ECU.
      if (wakes(n) && n.on_wakeup_signal(now)) {
        record(now, static_cast<int>(j), EventKind::WakeupDetected);
        refresh_next(j);
      }
      continue;
    }
    if (n.mode() != PowerMode::Normal) {
      continue;
    }
    n.on_rx_result(TxResult::Success);
    bool changed = false;
    if ((external || config_.keep_alive == KeepAlivePolicy::AnyFrame) && !n.state().ignition_hold && wakes(n)) {
      n.on_wakeup_signal(now);
      changed = true;
    }
    if (!n.config().functions.empty()) {
      for (std::size_t f : n.on_frame_received(frame, now)) {
        record(now, static_cast<int>(j), EventKind::LoadOn, {}, static_cast<int>(f));
      }
      changed = true;
    }
    if (changed) {
      refresh_next(j);
    }
  }
}

void Bus::record(SimTime time, int node, EventKind kind, const CanFrame& frame, int function) {
  trace_.push_back(BusEvent{time, node, kind, frame, function});
}

void Bus::record_loads_off(std::size_t node, const std::vector<std::size_t>& loads, SimTime now) {
  for (std::size_t f : loads) {
    record(now, static_cast<int>(node), EventKind::LoadOff, {}, static_cast<int>(f));
  }
}

void Bus::refresh_next(std::size_t node) { next_[node] = nodes_[node].next_event_time(); }

Duration Bus::retransmit_delay(const CanFrame& frame) const {
  const BitStream stream = serialize_frame(frame, config_.bitrate_bps);
  return Duration(static_cast<Duration::rep>(std::ceil(stream.duration_us())));
}

std::vector<BusEvent> Bus::take_trace() {
  std::vector<BusEvent> out;
  out.swap(trace_);
  return out;
}

std::vector<std::size_t> Bus::recover_all(RecoveryTrigger trigger) {
  std::vector<std::size_t> recovered;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].attempt_recovery(trigger)) {
      record(now_, static_cast<int>(i), EventKind::Recovery);
      refresh_next(i);
      recovered.push_back(i);
    }
  }
  return recovered;
}

void Bus::battery_reset() {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Ecu& n = nodes_[i];
    std::vector<std::size_t> active;
    for (std::size_t f = 0; f < n.config().functions.size(); ++f) {
      if (n.load_active(f)) {
        active.push_back(f);
      }
    }
    const PowerMode before = n.mode();
    n.battery_reset();
    record_loads_off(i, active, now_);
    if (before != n.mode()) {
      record(now_, static_cast<int>(i), n.mode() == PowerMode::Off ? EventKind::PowerOff : EventKind::Sleep);
    }
    refresh_next(i);
  }
}

void Bus::set_ignition(bool on) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Ecu& n = nodes_[i];
    if (on) {
      if (n.ignition_on(now_)) {
        record(now_, static_cast<int>(i), EventKind::PowerOn);
      }
    } else {
      std::vector<std::size_t> active;
      for (std::size_t f = 0; f < n.config().functions.size(); ++f) {
        if (n.load_active(f)) {
          active.push_back(f);
        }
      }
      if (n.ignition_off(now_)) {
        record_loads_off(i, active, now_);
        record(now_, static_cast<int>(i), EventKind::PowerOff);
      }
    }
    refresh_next(i);
  }
}

void Bus::set_override(std::size_t node, std::uint16_t id, const PayloadOverride& override) {
  nodes_.at(node).set_override(id, override);
}

void Bus::clear_override(std::size_t node, std::uint16_t id) { nodes_.at(node).clear_override(id); }

double Bus::node_current_a() const {
  double total = 0.0;
  for (const Ecu& n : nodes_) {
    total += n.current_draw();
  }
  return total;
}

std::vector<BusEvent> run(const BusConfig& config, std::span<const Injection> injections, Duration duration) {
  if (duration <= Duration::zero()) {
    throw std::invalid_argument("run duration must be positive");
  }
  SimTime previous{0};
  for (const Injection& inj : injections) {
    if (inj.time < SimTime{0} || inj.time >= duration) {
      throw std::invalid_argument("injection at " + std::to_string(inj.time.count()) + "us lies outside the run");
    }
    if (inj.time < previous) {
      throw std::invalid_argument("injections must be time-sorted");
    }
    previous = inj.time;
  }
  Bus bus(config);
  for (const Injection& inj : injections) {
    bus.inject(inj.time, inj.frame);
  }
  bus.run_until(duration);
  return bus.take_trace();
}

std::set<std::uint16_t> distinct_ids(std::span<const BusEvent> trace, SimTime from, SimTime to,
                                     bool include_attacker) {
  std::set<std::uint16_t> ids;
  for (const BusEvent& e : trace) {
    if (e.kind == EventKind::FrameTx && e.time >= from && e.time < to &&
        (include_attacker || e.node != kAttackerNode)) {
      ids.insert(e.frame.id());
    }
  }
  return ids;
}

std::size_t distinct_id_count(std::span<const BusEvent> trace, SimTime from, SimTime to, bool include_attacker) {
  return distinct_ids(trace, from, to, include_attacker).size();
}

}  // namespace canwake
