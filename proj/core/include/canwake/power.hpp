#pragma once

#include <optional>
#include <span>
#include <vector>

#include "canwake/bus.hpp"
#include "canwake/ecu.hpp"
#include "canwake/time.hpp"

namespace canwake {

struct BatteryConfig {
  double capacity_ah = 45.0;
  double soc_start = 0.70;
  double soc_min_start = 0.50;  // minimum state of charge for a cold start
  double parasitic_threshold_a = 0.030;
  double peukert_exponent = 1.0;
  double rated_discharge_hours = 20.0;
  double capacity_derating = 1.0;  // user-set factor for cold or aged batteries

  void validate() const;
  double usable_capacity_ah() const;
};

/// Hours until the state of charge falls from soc_start to soc_min_start.
double operation_time_ideal(const BatteryConfig& cfg, double current_a);

/// Same, with the usable capacity corrected by Peukert's law against the
/// rated discharge time: H * (C / (I * H))^k.
double operation_time_peukert(const BatteryConfig& cfg, double current_a);

double amplification(double current_a, double baseline_a);

struct SocSample {
  SimTime time{};
  double soc = 0.0;
};

struct DrainReport {
  double mean_current_a = 0.0;
  double baseline_current_a = 0.0;
  double amplification = 1.0;
  double operation_time_ideal_h = 0.0;
  double operation_time_peukert_h = 0.0;
  bool exceeds_parasitic_threshold = false;
  std::vector<SocSample> soc_timeline;
  std::optional<SimTime> immobilized_at;
};

/// Nodes whose modes the trace describes, plus the always-on vehicle load
/// that no ECU accounts for (clock, alarm, telematics).
struct PowerRoster {
  std::vector<EcuConfig> nodes;
  double quiescent_load_a = 0.0;
};

struct CurrentSegment {
  SimTime from{};
  SimTime to{};
  double current_a = 0.0;
};

/// Piecewise-constant total current over [0, span) replayed from a trace.
/// Nodes start in their ignition-off modes.
std::vector<CurrentSegment> current_profile(std::span<const BusEvent> trace, const PowerRoster& roster,
                                            Duration span);

struct IntegrationOptions {
  Duration dt = std::chrono::seconds(1);
  Duration sample_interval = std::chrono::hours(1);
  std::optional<double> baseline_current_a;  // amplification reference; self when absent
};

/// Steps the state of charge over [0, span) with step dt, decrementing it by
/// the charge drawn in each step.
DrainReport integrate_drain(std::span<const BusEvent> trace, const PowerRoster& roster, const BatteryConfig& cfg,
                            Duration span, const IntegrationOptions& options = {});

DrainReport integrate_profile(std::span<const CurrentSegment> profile, const BatteryConfig& cfg, Duration span,
                              const IntegrationOptions& options = {});

}  // namespace canwake
