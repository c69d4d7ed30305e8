#include "canwake/power.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace canwake {

void BatteryConfig::validate() const {
  if (!(capacity_ah > 0.0)) {
    throw std::invalid_argument("battery capacity must be positive");
  }
  if (!(soc_min_start >= 0.0 && soc_min_start < soc_start && soc_start <= 1.0)) {
    throw std::invalid_argument("battery requires 0 <= soc_min_start < soc_start <= 1");
  }
  if (!(peukert_exponent >= 1.0)) {
    throw std::invalid_argument("Peukert exponent must be >= 1");
  }
  if (!(rated_discharge_hours > 0.0)) {
    throw std::invalid_argument("rated discharge time must be positive");
  }
  if (!(capacity_derating > 0.0 && capacity_derating <= 1.0)) {
    throw std::invalid_argument("capacity derating must lie in (0, 1]");
  }
  if (!(parasitic_threshold_a >= 0.0)) {
    throw std::invalid_argument("parasitic threshold must be non-negative");
  }
}

double BatteryConfig::usable_capacity_ah() const {
  return capacity_ah * capacity_derating * (soc_start - soc_min_start);
}

double operation_time_ideal(const BatteryConfig& cfg, double current_a) {
  if (!(current_a > 0.0)) {
    throw std::invalid_argument("discharge current must be positive");
  }
  return cfg.usable_capacity_ah() / current_a;
}

double operation_time_peukert(const BatteryConfig& cfg, double current_a) {
  if (!(current_a > 0.0)) {
    throw std::invalid_argument("discharge current must be positive");
  }
  if (!(cfg.peukert_exponent >= 1.0)) {
    throw std::invalid_argument("Peukert exponent must be >= 1");
  }
  const double h = cfg.rated_discharge_hours;
  return h * std::pow(cfg.usable_capacity_ah() / (current_a * h), cfg.peukert_exponent);
}

double amplification(double current_a, double baseline_a) {
  if (!(baseline_a > 0.0)) {
    throw std::invalid_argument("baseline current must be positive");
  }
  return current_a / baseline_a;
}

std::vector<CurrentSegment> current_profile(std::span<const BusEvent> trace, const PowerRoster& roster,
                                            Duration span) {
  struct NodePower {
    PowerMode mode;
    std::vector<bool> loads;
  };
  std::vector<NodePower> nodes;
  nodes.reserve(roster.nodes.size());
  for (const EcuConfig& cfg : roster.nodes) {
    nodes.push_back({Ecu::initial_state(cfg).mode, std::vector<bool>(cfg.functions.size(), false)});
  }
  auto total = [&]() {
    double sum = roster.quiescent_load_a;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      double loads = 0.0;
      for (std::size_t f = 0; f < nodes[i].loads.size(); ++f) {
        if (nodes[i].loads[f]) {
          loads += roster.nodes[i].functions[f].load_a;
        }
      }
      EcuState s;
      s.mode = nodes[i].mode;
      sum += current_draw(s, roster.nodes[i], loads);
    }
    return sum;
  };

  std::vector<CurrentSegment> profile;
  SimTime cursor{0};
  double current = total();
  auto close_segment = [&](SimTime until) {
    if (until <= cursor) {
      return;
    }
    if (!profile.empty() && profile.back().current_a == current && profile.back().to == cursor) {
      profile.back().to = until;
    } else {
      profile.push_back({cursor, until, current});
    }
    cursor = until;
  };

  for (const BusEvent& e : trace) {
    if (e.node < 0 || static_cast<std::size_t>(e.node) >= nodes.size()) {
      continue;
    }
    if (e.time >= span) {
      break;
    }
    NodePower& n = nodes[static_cast<std::size_t>(e.node)];
    switch (e.kind) {
      case EventKind::WakeupDetected:
      case EventKind::PowerOn: n.mode = PowerMode::Normal; break;
      case EventKind::Sleep:
      case EventKind::Recovery: n.mode = PowerMode::Sleep; break;
      case EventKind::BusOff: n.mode = PowerMode::BusOff; break;
      case EventKind::PowerOff: n.mode = PowerMode::Off; break;
      case EventKind::LoadOn: n.loads.at(static_cast<std::size_t>(e.function)) = true; break;
      case EventKind::LoadOff: n.loads.at(static_cast<std::size_t>(e.function)) = false; break;
      default: continue;
    }
    close_segment(e.time);
    current = total();
  }
  close_segment(span);
  return profile;
}

DrainReport integrate_profile(std::span<const CurrentSegment> profile, const BatteryConfig& cfg, Duration span,
                              const IntegrationOptions& options) {
  cfg.validate();
  if (options.dt <= Duration::zero()) {
    throw std::invalid_argument("integration step must be positive");
  }
  if (span <= Duration::zero()) {
    throw std::invalid_argument("integration span must be positive");
  }
  const double capacity_as = cfg.capacity_ah * cfg.capacity_derating * 3600.0;

  // Charge drawn over [0, t), evaluated at nondecreasing t.
  std::size_t seg = 0;
  double charge_before_seg = 0.0;
  auto charge_until = [&](SimTime t) {
    while (seg < profile.size() && profile[seg].to <= t) {
      charge_before_seg += profile[seg].current_a * to_seconds(profile[seg].to - profile[seg].from);
      ++seg;
    }
    double partial = 0.0;
    if (seg < profile.size() && profile[seg].from < t) {
      partial = profile[seg].current_a * to_seconds(t - profile[seg].from);
    }
    return charge_before_seg + partial;
  };

  DrainReport report;
  report.soc_timeline.push_back({SimTime{0}, cfg.soc_start});
  double soc = cfg.soc_start;
  double charge_prev = 0.0;
  for (SimTime t{0}; t < span;) {
    const SimTime next = std::min<SimTime>(t + options.dt, span);
    const double charge = charge_until(next);
    soc -= (charge - charge_prev) / capacity_as;
    charge_prev = charge;
    if (!report.immobilized_at && soc <= cfg.soc_min_start) {
      report.immobilized_at = next;
    }
    if (next == span || (next.count() % options.sample_interval.count()) == 0) {
      report.soc_timeline.push_back({next, soc});
    }
    t = next;
  }

  report.mean_current_a = charge_prev / to_seconds(span);
  report.baseline_current_a = options.baseline_current_a.value_or(report.mean_current_a);
  report.amplification = report.baseline_current_a > 0.0
                             ? amplification(report.mean_current_a, report.baseline_current_a)
                             : 1.0;
  if (report.mean_current_a > 0.0) {
    report.operation_time_ideal_h = operation_time_ideal(cfg, report.mean_current_a);
    report.operation_time_peukert_h = operation_time_peukert(cfg, report.mean_current_a);
  } else {
    report.operation_time_ideal_h = std::numeric_limits<double>::infinity();
    report.operation_time_peukert_h = std::numeric_limits<double>::infinity();
  }
  report.exceeds_parasitic_threshold = report.mean_current_a > cfg.parasitic_threshold_a;
  return report;
}

DrainReport integrate_drain(std::span<const BusEvent> trace, const PowerRoster& roster, const BatteryConfig& cfg,
                            Duration span, const IntegrationOptions& options) {
  const auto profile = current_profile(trace, roster, span);
  return integrate_profile(profile, cfg, span, options);
}

}  // namespace canwake
