#include "canwake/ecu.hpp"

#include <algorithm>
#include <stdexcept>

namespace canwake {

std::string_view to_string(Terminal t) { return t == Terminal::T15 ? "15" : "30"; }

std::string_view to_string(PowerMode m) {
  switch (m) {
    case PowerMode::Off: return "off";
    case PowerMode::Sleep: return "sleep";
    case PowerMode::Normal: return "normal";
    case PowerMode::BusOff: return "bus-off";
  }
  return "?";
}

std::string_view to_string(RecoveryPolicy p) {
  switch (p) {
    case RecoveryPolicy::AutoRecover: return "auto";
    case RecoveryPolicy::NeverRecover: return "never";
    case RecoveryPolicy::ManualResetOnly: return "manual";
  }
  return "?";
}

std::string_view to_string(VehicleFunction f) {
  switch (f) {
    case VehicleFunction::PKES: return "PKES";
    case VehicleFunction::RKE: return "RKE";
    case VehicleFunction::PowerMode: return "PowerMode";
    case VehicleFunction::DoorControl: return "DoorControl";
    case VehicleFunction::TrunkControl: return "TrunkControl";
  }
  return "?";
}

std::string_view to_string(Activation a) {
  return a == Activation::WhileRepeated ? "while_repeated" : "latched_until_closed";
}

bool ControlBinding::matches(const CanFrame& frame) const {
  return frame.id() == id && byte < frame.dlc() && (frame.payload()[byte] & mask) == (value & mask);
}

CanFrame ControlBinding::apply(CanFrame frame) const {
  const std::uint8_t current = frame.byte(byte);
  frame.set_byte(byte, static_cast<std::uint8_t>((current & ~mask) | (value & mask)));
  return frame;
}

void EcuConfig::validate() const {
  auto fail = [this](const std::string& what) {
    throw std::invalid_argument("ECU '" + name + "': " + what);
  };
  if (name.empty()) {
    throw std::invalid_argument("ECU without a name");
  }
  if (sleep_current_a < 0.0 || normal_current_a < 0.0) {
    fail("currents must be non-negative");
  }
  if (!(sleep_current_a < normal_current_a)) {
    fail("sleep current must be below normal current");
  }
  if (t_wakeup <= Duration::zero()) {
    fail("t_wakeup must be positive");
  }
  std::set<std::uint16_t> ids;
  for (const auto& msg : schedule) {
    if (msg.id > kMaxStandardId) {
      fail("message id exceeds 11 bits");
    }
    if (msg.period <= Duration::zero()) {
      fail("message period must be positive");
    }
    if (msg.dlc > kMaxDataLength) {
      fail("message dlc exceeds 8");
    }
    if (!ids.insert(msg.id).second) {
      fail("duplicate message id");
    }
  }
  for (const auto& fn : functions) {
    if (fn.load_a < 0.0) {
      fail("function load must be non-negative");
    }
    if (fn.control.byte >= kMaxDataLength || fn.control.id > kMaxStandardId) {
      fail("control binding out of range");
    }
    if (fn.activation == Activation::WhileRepeated && fn.hold <= Duration::zero()) {
      fail("while_repeated function needs a positive hold time");
    }
    if (fn.auto_off && *fn.auto_off <= Duration::zero()) {
      fail("auto-off timeout must be positive");
    }
  }
  try {
    wake_filter.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

double current_draw(const EcuState& state, const EcuConfig& config, double active_function_loads_a) {
  switch (state.mode) {
    case PowerMode::Off: return 0.0;
    case PowerMode::Sleep: return config.sleep_current_a;
    case PowerMode::Normal: return config.normal_current_a + active_function_loads_a;
    case PowerMode::BusOff: return config.sleep_current_a;  // controller down, transceiver powered
  }
  return 0.0;
}

Ecu::Ecu(EcuConfig config) : config_(std::move(config)), state_(initial_state(config_)) {}

EcuState Ecu::initial_state(const EcuConfig& config) {
  EcuState s;
  s.mode = config.terminal == Terminal::T15 ? PowerMode::Off : PowerMode::Sleep;
  s.next_tx.assign(config.schedule.size(), kNever);
  s.emissions.assign(config.schedule.size(), 0);
  s.load_until.assign(config.functions.size(), EcuState::kInactive);
  return s;
}

bool Ecu::on_wakeup_signal(SimTime now) {
  if (state_.mode == PowerMode::Sleep) {
    state_.mode = PowerMode::Normal;
    state_.wake_deadline = now + config_.t_wakeup;
    std::fill(state_.next_tx.begin(), state_.next_tx.end(), now);
    return true;
  }
  if (state_.mode == PowerMode::Normal && !state_.ignition_hold) {
    const SimTime extended = now + config_.t_wakeup;
    if (!state_.wake_deadline || *state_.wake_deadline < extended) {
      state_.wake_deadline = extended;
    }
  }
  return false;
}

TickResult Ecu::tick(SimTime now) {
  TickResult out;
  tick(now, out);
  return out;
}

void Ecu::tick(SimTime now, TickResult& out) {
  out.clear();
  if (state_.mode != PowerMode::Normal) {
    return;
  }
  for (std::size_t i = 0; i < state_.load_until.size(); ++i) {
    const SimTime until = state_.load_until[i];
    if (until != EcuState::kInactive && until != kNever && until <= now) {
      state_.load_until[i] = EcuState::kInactive;
      out.loads_off.push_back(i);
    }
  }
  if (state_.wake_deadline && now >= *state_.wake_deadline) {
    for (std::size_t i = 0; i < state_.load_until.size(); ++i) {
      if (state_.load_until[i] != EcuState::kInactive) {
        out.loads_off.push_back(i);
      }
    }
    halt();
    state_.mode = PowerMode::Sleep;
    out.entered_sleep = true;
    return;
  }

  // A frame awaiting retransmission occupies the transmit buffer; periodic
  // updates that come due meanwhile are dropped.
  const bool busy = state_.pending.has_value();
  if (state_.pending && state_.retry_at <= now) {
    out.frames.push_back(*state_.pending);
    state_.retry_at = kNever;
  }
  for (std::size_t i = 0; i < config_.schedule.size(); ++i) {
    SimTime& due = state_.next_tx[i];
    if (due > now) {
      continue;
    }
    if (!busy) {
      out.frames.push_back(compose(i));
      ++state_.emissions[i];
    }
    const Duration period = config_.schedule[i].period;
    due += period * ((now - due) / period + 1);
  }
}

CanFrame Ecu::compose(std::size_t index) const {
  const ScheduledMessage& msg = config_.schedule[index];
  Payload payload = msg.baseline;
  if (state_.emissions[index] % 2 == 1) {
    for (std::size_t b = 0; b < payload.size(); ++b) {
      payload[b] ^= msg.free_running_mask[b];
    }
  }
  if (auto it = state_.overrides.find(msg.id); it != state_.overrides.end()) {
    for (std::size_t b = 0; b < payload.size(); ++b) {
      payload[b] = static_cast<std::uint8_t>((payload[b] & ~it->second.mask[b]) |
                                             (it->second.value[b] & it->second.mask[b]));
    }
  }
  return CanFrame(msg.id, msg.dlc, std::span<const std::uint8_t>(payload.data(), msg.dlc));
}

void Ecu::halt() {
  state_.wake_deadline.reset();
  state_.pending.reset();
  state_.retry_at = kNever;
  std::fill(state_.load_until.begin(), state_.load_until.end(), EcuState::kInactive);
}

bool Ecu::on_tx_result(TxResult result) {
  if (state_.mode != PowerMode::Normal) {
    return false;
  }
  if (result == TxResult::Success) {
    state_.tec = std::max(state_.tec - 1, 0);
    state_.pending.reset();
    state_.retry_at = kNever;
    return false;
  }
  state_.tec += kTecIncrement;
  if (state_.tec > kTecBusOffThreshold) {
    halt();
    state_.mode = PowerMode::BusOff;
    return true;
  }
  return false;
}

void Ecu::on_rx_result(TxResult result) {
  if (state_.mode != PowerMode::Normal) {
    return;
  }
  // Receive errors never force bus-off; only the transmit counter does.
  if (result == TxResult::Error) {
    ++state_.rec;
  } else {
    state_.rec = std::max(state_.rec - 1, 0);
  }
}

void Ecu::schedule_retry(const CanFrame& frame, SimTime at) {
  if (state_.mode != PowerMode::Normal) {
    return;
  }
  state_.pending = frame;
  state_.retry_at = at;
}

bool Ecu::attempt_recovery(RecoveryTrigger trigger) {
  if (state_.mode != PowerMode::BusOff) {
    return false;
  }
  const bool permitted =
      config_.recovery == RecoveryPolicy::AutoRecover ||
      (config_.recovery == RecoveryPolicy::ManualResetOnly && trigger == RecoveryTrigger::UserRequest);
  if (!permitted) {
    return false;
  }
  state_.tec = 0;
  state_.rec = 0;
  state_.mode = PowerMode::Sleep;
  return true;
}

void Ecu::battery_reset() { state_ = initial_state(config_); }

bool Ecu::ignition_on(SimTime now) {
  state_.ignition_hold = true;
  state_.wake_deadline.reset();
  if (state_.mode == PowerMode::Off || state_.mode == PowerMode::Sleep) {
    state_.mode = PowerMode::Normal;
    std::fill(state_.next_tx.begin(), state_.next_tx.end(), now);
    return true;
  }
  return false;
}

bool Ecu::ignition_off(SimTime now) {
  state_.ignition_hold = false;
  if (config_.terminal == Terminal::T15) {
    if (state_.mode == PowerMode::Off) {
      return false;
    }
    const auto mode = state_.mode;
    state_ = initial_state(config_);
    return mode != PowerMode::Off;
  }
  if (state_.mode == PowerMode::Normal) {
    state_.wake_deadline = now + config_.t_wakeup;
  }
  return false;
}

std::vector<std::size_t> Ecu::on_frame_received(const CanFrame& frame, SimTime now) {
  std::vector<std::size_t> switched_on;
  if (state_.mode != PowerMode::Normal) {
    return switched_on;
  }
  for (std::size_t i = 0; i < config_.functions.size(); ++i) {
    const FunctionLoad& fn = config_.functions[i];
    if (!fn.control.matches(frame)) {
      continue;
    }
    SimTime& until = state_.load_until[i];
    const bool was_active = until != EcuState::kInactive;
    if (fn.activation == Activation::WhileRepeated) {
      until = std::max(until, now + fn.hold);
    } else if (!was_active) {
      until = fn.auto_off ? now + *fn.auto_off : kNever;
    }
    if (!was_active) {
      switched_on.push_back(i);
    }
  }
  return switched_on;
}

bool Ecu::load_active(std::size_t function_index) const {
  return state_.load_until.at(function_index) != EcuState::kInactive;
}

double Ecu::active_function_load_a() const {
  double total = 0.0;
  for (std::size_t i = 0; i < config_.functions.size(); ++i) {
    if (state_.load_until[i] != EcuState::kInactive) {
      total += config_.functions[i].load_a;
    }
  }
  return total;
}

double Ecu::current_draw() const { return canwake::current_draw(state_, config_, active_function_load_a()); }

void Ecu::set_override(std::uint16_t id, const PayloadOverride& override) { state_.overrides[id] = override; }

void Ecu::clear_override(std::uint16_t id) { state_.overrides.erase(id); }

SimTime Ecu::next_event_time() const {
  if (state_.mode != PowerMode::Normal) {
    return kNever;
  }
  SimTime next = state_.wake_deadline.value_or(kNever);
  next = std::min(next, state_.retry_at);
  for (SimTime t : state_.next_tx) {
    next = std::min(next, t);
  }
  for (SimTime t : state_.load_until) {
    if (t != EcuState::kInactive) {
      next = std::min(next, t);
    }
  }
  return next;
}

}  // namespace canwake
