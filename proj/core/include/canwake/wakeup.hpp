#pragma once

#include "canwake/frame.hpp"

namespace canwake {

/// Transceiver bus wake-up filter window.
///
/// Dominant pulses shorter than t_filter_min_us never wake a transceiver;
/// pulses of at least gray_zone_threshold_us always do. Pulses in between
/// fall in the window where the actual filter time depends on the part; they
/// are treated as not waking, which is the hardest case for an attacker when
/// the threshold sits at t_filter_max_us.
struct WakeupFilterParams {
  double t_filter_min_us = 0.5;
  double t_filter_max_us = 5.0;
  double gray_zone_threshold_us = 5.0;

  /// Throws std::invalid_argument unless 0 < min <= threshold <= max.
  void validate() const;

  friend bool operator==(const WakeupFilterParams&, const WakeupFilterParams&) = default;
};

enum class PulseClass { Ignored, GrayZone, Wake };

PulseClass classify_pulse(double duration_us, const WakeupFilterParams& params);

/// Longest dominant run in the stream, in microseconds (0 if none).
double longest_dominant_us(const BitStream& stream);

bool detect_wakeup(const BitStream& stream, const WakeupFilterParams& params = {});

bool frame_wakes_bus(const CanFrame& frame, double bitrate_bps, const WakeupFilterParams& params = {});

}  // namespace canwake
