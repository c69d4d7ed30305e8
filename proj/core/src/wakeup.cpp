#include "canwake/wakeup.hpp"

#include <algorithm>
#include <stdexcept>

namespace canwake {

namespace {
// Run durations are integer multiples of the bit width; this absorbs the
// rounding of 1e6 / bitrate so a 5.0us run is not read as 4.9999999us.
constexpr double kTimeEpsilonUs = 1e-9;
}  // namespace

void WakeupFilterParams::validate() const {
  if (!(t_filter_min_us > 0.0) || !(t_filter_min_us <= gray_zone_threshold_us) ||
      !(gray_zone_threshold_us <= t_filter_max_us)) {
    throw std::invalid_argument(
        "wake-up filter requires 0 < t_filter_min <= gray_zone_threshold <= t_filter_max");
  }
}

PulseClass classify_pulse(double duration_us, const WakeupFilterParams& params) {
  if (duration_us + kTimeEpsilonUs < params.t_filter_min_us) {
    return PulseClass::Ignored;
  }
  if (duration_us + kTimeEpsilonUs >= params.gray_zone_threshold_us) {
    return PulseClass::Wake;
  }
  return PulseClass::GrayZone;
}

double longest_dominant_us(const BitStream& stream) {
  double longest = 0.0;
  for (const DominantRun& run : dominant_runs(stream)) {
    longest = std::max(longest, run.duration_us);
  }
  return longest;
}

bool detect_wakeup(const BitStream& stream, const WakeupFilterParams& params) {
  // Maximal runs are separated by recessive level by construction, so each
  // run is an independent candidate pulse.
  const auto runs = dominant_runs(stream);
  return std::any_of(runs.begin(), runs.end(), [&](const DominantRun& run) {
    return classify_pulse(run.duration_us, params) == PulseClass::Wake;
  });
}

bool frame_wakes_bus(const CanFrame& frame, double bitrate_bps, const WakeupFilterParams& params) {
  return detect_wakeup(serialize_frame(frame, bitrate_bps), params);
}

}  // namespace canwake
