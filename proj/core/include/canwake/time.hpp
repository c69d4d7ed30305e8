#pragma once

#include <chrono>

namespace canwake {

// Simulated time since the start of a run, microsecond resolution.
using SimTime = std::chrono::microseconds;
using Duration = std::chrono::microseconds;

inline constexpr SimTime kNever = SimTime::max();

inline double to_seconds(Duration d) { return std::chrono::duration<double>(d).count(); }
inline double to_hours(Duration d) { return to_seconds(d) / 3600.0; }

inline Duration from_seconds(double s) {
  return std::chrono::duration_cast<Duration>(std::chrono::duration<double>(s));
}

}  // namespace canwake
