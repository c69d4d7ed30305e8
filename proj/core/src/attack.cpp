#include "canwake/attack.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace canwake {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::WakeupFlood: return "wakeup-flood";
    case AttackKind::PowerModeControl: return "power-mode";
    case AttackKind::DoorCycle: return "door-cycle";
    case AttackKind::TrunkOpen: return "trunk";
    case AttackKind::DoB: return "dob";
    case AttackKind::Composite: return "composite";
  }
  return "?";
}

void AttackPlan::validate() const {
  if (injection_period && *injection_period <= Duration::zero()) {
    throw std::invalid_argument("injection period must be positive");
  }
  if (stop && *stop < start) {
    throw std::invalid_argument("attack stops before it starts");
  }
  switch (kind) {
    case AttackKind::WakeupFlood:
      if (!injection_period) {
        throw std::invalid_argument("wake-up flood needs an injection period");
      }
      break;
    case AttackKind::PowerModeControl:
    case AttackKind::DoorCycle:
      if (!injection_period) {
        throw std::invalid_argument(std::string(to_string(kind)) + " needs an injection period");
      }
      [[fallthrough]];
    case AttackKind::TrunkOpen:
      if (!control_id) {
        throw std::invalid_argument(std::string(to_string(kind)) + " needs a control message id");
      }
      if (*control_id > kMaxStandardId) {
        throw std::invalid_argument("control message id exceeds 11 bits");
      }
      if (control_payload.size() > kMaxDataLength || alternate_payload.size() > kMaxDataLength) {
        throw std::invalid_argument("control payload exceeds 8 bytes");
      }
      if (kind == AttackKind::DoorCycle && alternate_payload.empty()) {
        throw std::invalid_argument("door cycle needs a lock payload");
      }
      break;
    case AttackKind::DoB:
      if (mismatch_delay < Duration::zero()) {
        throw std::invalid_argument("mismatch delay must be non-negative");
      }
      break;
    case AttackKind::Composite:
      if (parts.empty()) {
        throw std::invalid_argument("composite plan without parts");
      }
      for (const AttackPlan& p : parts) {
        p.validate();
      }
      break;
  }
}

namespace {

std::vector<std::uint8_t> bytes_of(const CanFrame& frame) {
  return {frame.data().begin(), frame.data().end()};
}

AttackPlan control_plan(AttackKind kind, const CanFrame& command, std::optional<Duration> period, SimTime start) {
  AttackPlan p;
  p.kind = kind;
  p.control_id = command.id();
  p.control_payload = bytes_of(command);
  p.injection_period = period;
  p.start = start;
  return p;
}

void periodic(std::vector<Injection>& out, SimTime start, SimTime end, Duration period,
              const std::vector<CanFrame>& cycle) {
  std::size_t k = 0;
  for (SimTime t = start; t < end; t += period, ++k) {
    out.push_back({t, cycle[k % cycle.size()]});
  }
}

}  // namespace

AttackPlan wakeup_flood(Duration period, SimTime start) {
  AttackPlan p;
  p.kind = AttackKind::WakeupFlood;
  p.injection_period = period;
  p.start = start;
  return p;
}

AttackPlan power_mode_control(const CanFrame& command, Duration period, SimTime start) {
  return control_plan(AttackKind::PowerModeControl, command, period, start);
}

AttackPlan door_cycle(const CanFrame& unlock, const CanFrame& lock, Duration period, SimTime start) {
  if (unlock.id() != lock.id()) {
    throw std::invalid_argument("lock and unlock commands must share one id");
  }
  AttackPlan p = control_plan(AttackKind::DoorCycle, unlock, period, start);
  p.alternate_payload = bytes_of(lock);
  return p;
}

AttackPlan trunk_open(const CanFrame& command, std::optional<Duration> reinject, SimTime start) {
  return control_plan(AttackKind::TrunkOpen, command, reinject, start);
}

AttackPlan dob(SimTime start) {
  AttackPlan p;
  p.kind = AttackKind::DoB;
  p.start = start;
  return p;
}

AttackPlan composite(std::vector<AttackPlan> parts) {
  AttackPlan p;
  p.kind = AttackKind::Composite;
  p.parts = std::move(parts);
  return p;
}

Duration required_injection_period(Duration t_wakeup) {
  if (t_wakeup <= Duration::zero()) {
    throw std::invalid_argument("t_wakeup must be positive");
  }
  return t_wakeup;
}

AttackSchedule build_injections(const AttackPlan& plan, Duration duration) {
  plan.validate();
  AttackSchedule out;
  const SimTime end = plan.stop ? std::min<SimTime>(*plan.stop, duration) : duration;
  switch (plan.kind) {
    case AttackKind::WakeupFlood:
      periodic(out.frames, plan.start, end, *plan.injection_period, {all_ones_frame()});
      break;
    case AttackKind::PowerModeControl:
      periodic(out.frames, plan.start, end, *plan.injection_period,
               {CanFrame(*plan.control_id, plan.control_payload)});
      break;
    case AttackKind::DoorCycle:
      periodic(out.frames, plan.start, end, *plan.injection_period,
               {CanFrame(*plan.control_id, plan.control_payload), CanFrame(*plan.control_id, plan.alternate_payload)});
      break;
    case AttackKind::TrunkOpen: {
      const CanFrame command(*plan.control_id, plan.control_payload);
      if (plan.injection_period) {
        periodic(out.frames, plan.start, end, *plan.injection_period, {command});
      } else if (plan.start < end) {
        out.frames.push_back({plan.start, command});
      }
      break;
    }
    case AttackKind::DoB:
      if (plan.start < end) {
        out.frames.push_back({plan.start, all_ones_frame()});
        out.mismatch.push_back({plan.start + plan.mismatch_delay, plan.stop.value_or(kNever)});
      }
      break;
    case AttackKind::Composite:
      for (const AttackPlan& part : plan.parts) {
        AttackSchedule sub = build_injections(part, duration);
        const auto middle = static_cast<std::ptrdiff_t>(out.frames.size());
        out.frames.insert(out.frames.end(), sub.frames.begin(), sub.frames.end());
        std::inplace_merge(out.frames.begin(), out.frames.begin() + middle, out.frames.end(),
                           [](const Injection& a, const Injection& b) { return a.time < b.time; });
        out.mismatch.insert(out.mismatch.end(), sub.mismatch.begin(), sub.mismatch.end());
      }
      break;
  }
  return out;
}

FunctionLoadTable function_load_table(const VehicleConfig& vehicle) {
  FunctionLoadTable table;
  for (const EcuConfig& ecu : vehicle.bus_config().nodes) {
    for (const FunctionLoad& fn : ecu.functions) {
      table.push_back({fn.function, ecu.name, fn.load_a, fn.activation, fn.control});
    }
  }
  return table;
}

FunctionAvailability function_availability(const VehicleConfig& vehicle, std::span<const Ecu> nodes) {
  FunctionAvailability out;
  auto mark = [&out](VehicleFunction f, bool up) {
    auto [it, inserted] = out.try_emplace(f, up);
    if (!inserted) {
      it->second = it->second && up;
    }
  };
  for (std::size_t i = 0; i < vehicle.ecus.size() && i < nodes.size(); ++i) {
    const bool up = nodes[i].mode() != PowerMode::BusOff;
    for (VehicleFunction f : vehicle.ecus[i].standby_functions) {
      mark(f, up);
    }
    for (const FunctionLoad& fn : vehicle.ecus[i].functions) {
      mark(fn.function, up);
    }
  }
  return out;
}

bool key_fob_authentication_available(const FunctionAvailability& availability) {
  for (VehicleFunction f : {VehicleFunction::PKES, VehicleFunction::RKE}) {
    auto it = availability.find(f);
    if (it == availability.end() || !it->second) {
      return false;
    }
  }
  return true;
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::None: return "none";
    case Scenario::Wakeup: return "wakeup";
    case Scenario::PowerMode: return "power-mode";
    case Scenario::DoorCycle: return "door-cycle";
    case Scenario::Trunk: return "trunk";
  }
  return "?";
}

std::string_view scenario_label(Scenario s) {
  switch (s) {
    case Scenario::None: return "None";
    case Scenario::Wakeup: return "Wake-up";
    case Scenario::PowerMode: return "+ Power mode";
    case Scenario::DoorCycle: return "+ Door lock/unlock";
    case Scenario::Trunk: return "+ Trunk open";
  }
  return "?";
}

namespace {

const FunctionLoadEntry& require_function(const FunctionLoadTable& table, VehicleFunction f) {
  for (const FunctionLoadEntry& e : table) {
    if (e.function == f) {
      return e;
    }
  }
  throw std::invalid_argument("vehicle has no " + std::string(to_string(f)) + " function to attack");
}

CanFrame command_template(const VehicleConfig& vehicle, std::uint16_t id) {
  if (auto frame = vehicle.baseline_frame(id)) {
    return *frame;
  }
  const Payload zero{};
  return CanFrame(id, zero);
}

}  // namespace

std::optional<AttackPlan> scenario_plan(const VehicleConfig& vehicle, Scenario scenario,
                                        const ScenarioPeriods& periods) {
  if (scenario == Scenario::None) {
    return std::nullopt;
  }
  const auto t_wakeup = vehicle.min_wakeable_t_wakeup();
  if (!t_wakeup) {
    throw std::invalid_argument("vehicle has no wakeable ECU");
  }
  std::vector<AttackPlan> parts;
  parts.push_back(wakeup_flood(periods.flood.value_or(required_injection_period(*t_wakeup))));
  const FunctionLoadTable table = function_load_table(vehicle);
  if (scenario >= Scenario::PowerMode) {
    const auto& e = require_function(table, VehicleFunction::PowerMode);
    parts.push_back(power_mode_control(e.control.apply(command_template(vehicle, e.control.id)), periods.power_mode));
  }
  if (scenario >= Scenario::DoorCycle) {
    const auto& e = require_function(table, VehicleFunction::DoorControl);
    const CanFrame lock = command_template(vehicle, e.control.id);
    parts.push_back(door_cycle(e.control.apply(lock), lock, periods.door));
  }
  if (scenario >= Scenario::Trunk) {
    const auto& e = require_function(table, VehicleFunction::TrunkControl);
    std::optional<Duration> reinject;
    for (const EcuConfig& ecu : vehicle.ecus) {
      for (const FunctionLoad& fn : ecu.functions) {
        if (fn.function == VehicleFunction::TrunkControl && fn.auto_off) {
          reinject = *fn.auto_off;
        }
      }
    }
    parts.push_back(trunk_open(e.control.apply(command_template(vehicle, e.control.id)), reinject));
  }
  if (parts.size() == 1) {
    return parts.front();
  }
  return composite(std::move(parts));
}

namespace {

bool contains_dob(const AttackPlan& plan) {
  if (plan.kind == AttackKind::DoB) {
    return true;
  }
  return std::any_of(plan.parts.begin(), plan.parts.end(), contains_dob);
}

}  // namespace

AttackOutcome execute(const std::optional<AttackPlan>& plan, const VehicleConfig& vehicle, Duration duration,
                      const ExecuteOptions& options) {
  vehicle.validate();
  if (duration <= Duration::zero()) {
    throw std::invalid_argument("attack duration must be positive");
  }
  BusConfig config = vehicle.bus_config();
  config.trace = options.trace;
  const PowerRoster roster = vehicle.power_roster();

  IntegrationOptions integration = options.integration;
  if (plan && !integration.baseline_current_a) {
    // The parked vehicle left alone; nothing but attacker frames wakes it.
    Bus idle(config);
    idle.run_until(duration);
    integration.baseline_current_a =
        integrate_drain(idle.trace(), roster, vehicle.battery, duration, integration).mean_current_a;
  }

  Bus bus(config);
  if (plan) {
    if (plan->kind == AttackKind::DoB) {
      bus.run_until(plan->start);
      DobOptions dob_options;
      dob_options.mismatch_delay = plan->mismatch_delay;
      dob_attack(bus, vehicle, dob_options);
    } else {
      if (contains_dob(*plan)) {
        throw std::invalid_argument("a DoB attack cannot be part of a composite plan");
      }
      AttackSchedule schedule = build_injections(*plan, duration);
      if (!schedule.mismatch.empty() && config.effective_attacker_bitrate() == config.bitrate_bps) {
        bus.set_attacker_bitrate(config.bitrate_bps / 2.0);
      }
      for (const MismatchWindow& w : schedule.mismatch) {
        bus.add_mismatch(w);
      }
      for (const Injection& inj : schedule.frames) {
        bus.inject(inj.time, inj.frame);
      }
    }
  }
  bus.run_until(duration);

  AttackOutcome out;
  out.trace = bus.take_trace();
  out.report = integrate_drain(out.trace, roster, vehicle.battery, duration, integration);
  out.availability = function_availability(vehicle, bus.nodes());
  for (const Ecu& n : bus.nodes()) {
    out.final_states.push_back(n.state());
    if (n.mode() == PowerMode::BusOff) {
      out.permanently_off.push_back(n.config().name);
    }
  }
  return out;
}

DobOutcome dob_attack(Bus& bus, const VehicleConfig& vehicle, const DobOptions& options) {
  if (options.poll <= Duration::zero() || options.observe <= Duration::zero()) {
    throw std::invalid_argument("DoB poll and observation windows must be positive");
  }
  const bool wakeable = std::any_of(bus.nodes().begin(), bus.nodes().end(), [](const Ecu& n) {
    return n.mode() == PowerMode::Sleep || n.mode() == PowerMode::Normal;
  });
  if (!wakeable) {
    throw std::invalid_argument("DoB needs at least one wakeable ECU");
  }
  const std::size_t trace_start = bus.trace().size();
  DobOutcome out;

  const SimTime t0 = bus.now();
  out.first_injection = t0;
  bus.inject(t0, all_ones_frame());
  const SimTime mismatch_from = t0 + options.mismatch_delay;
  bus.run_until(mismatch_from);
  out.ids_before = distinct_id_count(std::span(bus.trace()).subspan(trace_start), t0, mismatch_from);

  if (bus.config().effective_attacker_bitrate() == bus.config().bitrate_bps) {
    bus.set_attacker_bitrate(bus.config().bitrate_bps / 2.0);
  }
  bus.add_mismatch({mismatch_from, kNever});
  const SimTime give_up = mismatch_from + options.max_attack;
  auto any_normal = [&bus] {
    return std::any_of(bus.nodes().begin(), bus.nodes().end(),
                       [](const Ecu& n) { return n.mode() == PowerMode::Normal; });
  };
  while (any_normal() && bus.now() < give_up) {
    bus.run_until(std::min<SimTime>(bus.now() + options.poll, give_up));
  }
  out.mismatch_end = bus.now();
  bus.end_mismatch(out.mismatch_end);
  out.last_bus_off = t0;
  for (std::size_t i = trace_start; i < bus.trace().size(); ++i) {
    if (bus.trace()[i].kind == EventKind::BusOff) {
      out.last_bus_off = std::max(out.last_bus_off, bus.trace()[i].time);
    }
  }

  bus.recover_all(RecoveryTrigger::Automatic);

  const SimTime t1 = bus.now();
  bus.inject(t1, all_ones_frame());
  bus.run_until(t1 + options.observe);
  out.ids_after = distinct_id_count(std::span(bus.trace()).subspan(trace_start), t1, t1 + options.observe);

  for (const Ecu& n : bus.nodes()) {
    if (n.mode() == PowerMode::BusOff) {
      out.permanently_off.push_back(n.config().name);
    }
  }
  out.availability = function_availability(vehicle, bus.nodes());
  out.trace.assign(bus.trace().begin() + static_cast<std::ptrdiff_t>(trace_start), bus.trace().end());
  return out;
}

DobOutcome dob_attack(const VehicleConfig& vehicle, const DobOptions& options) {
  vehicle.validate();
  Bus bus(vehicle.bus_config());
  return dob_attack(bus, vehicle, options);
}

}  // namespace canwake
