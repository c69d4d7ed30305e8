#include "canwake/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

#include "canwake/attack.hpp"
#include "canwake/recon.hpp"

namespace canwake {

std::string_view to_string(Era era) { return era == Era::Old ? "old" : "modern"; }

namespace {

// Draws built from raw engine output so that results do not depend on the
// standard library's distribution implementations.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = 0;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double between_real(double lo, double hi) { return lo + (hi - lo) * unit(); }
  std::uint8_t byte() { return static_cast<std::uint8_t>(engine_() & 0xFF); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

constexpr std::int64_t kPeriodsMs[] = {100, 200, 250, 500, 1000};
constexpr std::uint8_t kControlMasks[] = {0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x0F, 0xF0, 0x30, 0x03};

ScheduledMessage random_message(Draw& draw, std::uint16_t id) {
  ScheduledMessage m;
  m.id = id;
  m.period = std::chrono::milliseconds(kPeriodsMs[draw.below(std::size(kPeriodsMs))]);
  m.dlc = 8;
  for (auto& b : m.baseline) {
    b = draw.byte();
  }
  // Checksum or counter bytes at the end of the payload.
  const auto free_bytes = draw.below(3);
  for (std::size_t i = 0; i < free_bytes; ++i) {
    m.free_running_mask[m.dlc - 1 - i] = 0xFF;
  }
  return m;
}

double milliamps(Draw& draw, double lo, double hi) {
  return std::round(draw.between_real(lo, hi) * 100.0) / 100.0 * 1e-3;
}

void distribute(Draw& draw, std::vector<EcuConfig>& ecus, const std::vector<std::uint16_t>& ids) {
  // Every ECU gets one message; the rest go to random ECUs.
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::size_t owner = i < ecus.size() ? i : draw.below(ecus.size());
    ecus[owner].schedule.push_back(random_message(draw, ids[i]));
  }
}

VehicleConfig modern_vehicle(Draw& draw, std::size_t index, const FleetOptions& options) {
  const auto n_on = static_cast<std::size_t>(
      draw.between(static_cast<std::int64_t>(options.min_ids), static_cast<std::int64_t>(options.max_ids)));
  const double target = draw.between_real(options.min_ratio, options.max_ratio);
  auto n_off = static_cast<std::size_t>(std::lround(target * static_cast<double>(n_on)));
  const auto ratio = [&](std::size_t off) { return static_cast<double>(off) / static_cast<double>(n_on); };
  while (n_off > 3 && ratio(n_off) > options.max_ratio) {
    --n_off;
  }
  while (n_off + 1 < n_on && ratio(n_off) < options.min_ratio) {
    ++n_off;
  }
  n_off = std::clamp<std::size_t>(n_off, 3, n_on - 1);

  std::vector<std::uint16_t> pool;
  for (std::uint16_t id = 0x010; id < 0x7F0; ++id) {
    pool.push_back(id);
  }
  draw.shuffle(pool);

  VehicleConfig v;
  v.name = fmt::format("modern-{:03d}", index);
  v.quiescent_load_a = milliamps(draw, 5.0, 15.0);

  const auto wake_ecus = std::min<std::size_t>(static_cast<std::size_t>(draw.between(2LL, 6LL)), n_off);
  const auto ign_ecus = std::min<std::size_t>(static_cast<std::size_t>(draw.between(2LL, 8LL)), n_on - n_off);
  std::vector<EcuConfig> wake(wake_ecus);
  for (std::size_t i = 0; i < wake.size(); ++i) {
    wake[i].name = fmt::format("W{}", i + 1);
    wake[i].terminal = Terminal::T30;
    wake[i].sleep_current_a = milliamps(draw, 0.05, 0.1);
    wake[i].normal_current_a = milliamps(draw, 3.0, 12.0);
  }
  wake[0].recovery = RecoveryPolicy::NeverRecover;
  wake[0].standby_functions = {VehicleFunction::PKES, VehicleFunction::RKE};
  std::vector<EcuConfig> ign(ign_ecus);
  for (std::size_t i = 0; i < ign.size(); ++i) {
    ign[i].name = fmt::format("N{}", i + 1);
    ign[i].terminal = Terminal::T15;
    ign[i].sleep_current_a = milliamps(draw, 0.05, 0.1);
    ign[i].normal_current_a = milliamps(draw, 5.0, 20.0);
  }
  distribute(draw, wake, std::vector<std::uint16_t>(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_off)));
  distribute(draw, ign, std::vector<std::uint16_t>(pool.begin() + static_cast<std::ptrdiff_t>(n_off),
                                                   pool.begin() + static_cast<std::ptrdiff_t>(n_on)));

  // Three distinct wakeable messages carry the control commands.
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t e = 0; e < wake.size(); ++e) {
    for (std::size_t m = 0; m < wake[e].schedule.size(); ++m) {
      slots.emplace_back(e, m);
    }
  }
  draw.shuffle(slots);
  constexpr VehicleFunction kControls[] = {VehicleFunction::PowerMode, VehicleFunction::DoorControl,
                                           VehicleFunction::TrunkControl};
  for (std::size_t c = 0; c < std::size(kControls); ++c) {
    const ScheduledMessage& msg = wake[slots[c].first].schedule[slots[c].second];
    std::size_t fixed_bytes = msg.dlc;
    while (fixed_bytes > 0 && msg.free_running_mask[fixed_bytes - 1] != 0) {
      --fixed_bytes;
    }
    FunctionLoad fn;
    fn.function = kControls[c];
    fn.load_a = milliamps(draw, 10.0, 60.0);
    fn.control.id = msg.id;
    fn.control.byte = static_cast<std::uint8_t>(draw.below(fixed_bytes));
    fn.control.mask = kControlMasks[draw.below(std::size(kControlMasks))];
    std::uint8_t flip = 0;
    while (flip == 0) {
      flip = static_cast<std::uint8_t>(draw.byte() & fn.control.mask);
    }
    fn.control.value = static_cast<std::uint8_t>(msg.baseline[fn.control.byte] ^ flip);
    if (fn.function == VehicleFunction::TrunkControl) {
      fn.activation = Activation::LatchedUntilClosed;
    } else {
      fn.activation = Activation::WhileRepeated;
      fn.hold = std::chrono::seconds(fn.function == VehicleFunction::PowerMode ? 5 : 30);
    }
    wake[draw.below(wake.size())].functions.push_back(fn);
  }

  v.ecus = std::move(wake);
  v.ecus.insert(v.ecus.end(), ign.begin(), ign.end());
  return v;
}

VehicleConfig old_vehicle(Draw& draw, std::size_t index) {
  VehicleConfig v;
  v.name = fmt::format("old-{:03d}", index);
  v.quiescent_load_a = milliamps(draw, 5.0, 15.0);
  std::vector<std::uint16_t> pool;
  for (std::uint16_t id = 0x010; id < 0x7F0; ++id) {
    pool.push_back(id);
  }
  draw.shuffle(pool);
  const auto n_ids = static_cast<std::size_t>(draw.between(8LL, 30LL));
  std::size_t next = 0;
  if (draw.below(2) == 1) {
    EcuConfig w;
    w.name = "W1";
    w.terminal = Terminal::T30;
    w.sleep_current_a = milliamps(draw, 0.05, 0.1);
    w.normal_current_a = milliamps(draw, 3.0, 8.0);
    const auto k = static_cast<std::size_t>(draw.between(1LL, 2LL));
    for (std::size_t i = 0; i < k; ++i) {
      w.schedule.push_back(random_message(draw, pool[next++]));
    }
    v.ecus.push_back(std::move(w));
  }
  std::vector<EcuConfig> ign(static_cast<std::size_t>(draw.between(3LL, 8LL)));
  for (std::size_t i = 0; i < ign.size(); ++i) {
    ign[i].name = fmt::format("N{}", i + 1);
    ign[i].terminal = Terminal::T15;
    ign[i].sleep_current_a = milliamps(draw, 0.05, 0.1);
    ign[i].normal_current_a = milliamps(draw, 5.0, 20.0);
  }
  distribute(draw, ign, std::vector<std::uint16_t>(pool.begin() + static_cast<std::ptrdiff_t>(next),
                                                   pool.begin() + static_cast<std::ptrdiff_t>(next + n_ids)));
  v.ecus.insert(v.ecus.end(), ign.begin(), ign.end());
  return v;
}

}  // namespace

std::vector<VehicleConfig> generate_fleet(std::uint64_t seed, std::size_t count, Era era,
                                          const FleetOptions& options) {
  if (count == 0) {
    throw std::invalid_argument("fleet size must be positive");
  }
  if (!(options.min_ratio > 0.0 && options.min_ratio <= options.max_ratio && options.max_ratio < 1.0)) {
    throw std::invalid_argument("ratio band must satisfy 0 < min <= max < 1");
  }
  if (options.min_ids < 8 || options.max_ids < options.min_ids || options.max_ids > 1000) {
    throw std::invalid_argument("ID count band must satisfy 8 <= min <= max <= 1000");
  }
  Draw draw(seed);
  std::vector<VehicleConfig> fleet;
  fleet.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    fleet.push_back(era == Era::Modern ? modern_vehicle(draw, i, options) : old_vehicle(draw, i));
    fleet.back().validate();
  }
  return fleet;
}

AwakeningMeasurement measure_awakening(const VehicleConfig& vehicle, Duration window) {
  vehicle.validate();
  Bus bus(vehicle.bus_config());
  bus.inject(SimTime{0}, all_ones_frame());
  bus.run_until(window);
  bus.set_ignition(true);
  bus.run_until(2 * window);

  AwakeningMeasurement m;
  for (const BusEvent& e : bus.trace()) {
    if (e.kind == EventKind::WakeupDetected) {
      ++m.awakened_ecus;
    }
  }
  m.s_off = distinct_ids(bus.trace(), SimTime{0}, window);
  m.s_on = distinct_ids(bus.trace(), window, 2 * window);
  m.ratio_percent = awakened_ratio(m.s_off.size(), m.s_on.size());
  return m;
}

DriverContext simulate_driver_context(const VehicleConfig& vehicle, std::uint64_t seed,
                                      const DriverContextOptions& options) {
  vehicle.validate();
  if (options.lead_min <= Duration::zero() || options.lead_max < options.lead_min ||
      options.lead_max >= options.off_duration || options.event_length <= Duration::zero()) {
    throw std::invalid_argument("event leads must satisfy 0 < min <= max < off_duration");
  }
  Draw draw(seed);
  DriverContext ctx;
  ctx.ignition = SimTime{0} + options.off_duration;
  const SimTime end = ctx.ignition + options.on_duration;

  Bus bus(vehicle.bus_config());
  if (auto t_wakeup = vehicle.min_wakeable_t_wakeup()) {
    for (SimTime t{0}; t < ctx.ignition; t += required_injection_period(*t_wakeup)) {
      bus.inject(t, all_ones_frame());
    }
  }

  struct Action {
    SimTime at;
    std::size_t node;
    std::uint16_t id;
    std::optional<PayloadOverride> set;
  };
  std::vector<Action> actions;
  if (options.plant) {
    const std::int64_t lead_lo = options.lead_min.count() / 1000;
    const std::int64_t lead_hi = options.lead_max.count() / 1000;
    for (std::size_t host = 0; host < vehicle.ecus.size(); ++host) {
      for (const FunctionLoad& fn : vehicle.ecus[host].functions) {
        const auto sender = vehicle.transmitter_of(fn.control.id);
        if (!sender || vehicle.ecus[*sender].terminal != Terminal::T30) {
          continue;
        }
        const CanFrame base = *vehicle.baseline_frame(fn.control.id);
        if (fn.control.byte >= base.dlc()) {
          continue;
        }
        PlantedEvent ev;
        ev.function = fn.function;
        ev.id = fn.control.id;
        ev.byte = fn.control.byte;
        ev.baseline = base.byte(ev.byte);
        ev.value = fn.control.apply(base).byte(ev.byte);
        ev.changed = static_cast<std::uint8_t>(ev.baseline ^ ev.value);
        if (ev.changed == 0) {
          continue;
        }
        ev.from = ctx.ignition - std::chrono::milliseconds(draw.between(lead_lo, lead_hi));
        ev.to = fn.function == VehicleFunction::PowerMode ? end : ev.from + options.event_length;
        PayloadOverride ov;
        ov.mask[ev.byte] = fn.control.mask;
        ov.value[ev.byte] = fn.control.value;
        actions.push_back({ev.from, *sender, ev.id, ov});
        if (ev.to < end) {
          actions.push_back({ev.to, *sender, ev.id, std::nullopt});
        }
        ctx.events.push_back(ev);
      }
    }
  }
  std::stable_sort(actions.begin(), actions.end(), [](const Action& a, const Action& b) { return a.at < b.at; });

  bool ignition_on = false;
  auto apply_until = [&](SimTime t) {
    if (!ignition_on && ctx.ignition <= t) {
      bus.run_until(ctx.ignition);
      bus.set_ignition(true);
      ignition_on = true;
    }
    bus.run_until(t);
  };
  for (const Action& a : actions) {
    apply_until(a.at);
    if (a.set) {
      bus.set_override(a.node, a.id, *a.set);
    } else {
      bus.clear_override(a.node, a.id);
    }
  }
  apply_until(end);
  ctx.trace = to_trace(bus.trace());
  return ctx;
}

}  // namespace canwake
