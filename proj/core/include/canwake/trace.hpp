#pragma once

#include <span>
#include <vector>

#include "canwake/bus.hpp"
#include "canwake/frame.hpp"
#include "canwake/time.hpp"

namespace canwake {

struct TraceRecord {
  SimTime time{};
  CanFrame frame;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Time-ordered frame log as a passive listener sees it.
using Trace = std::vector<TraceRecord>;

/// Successful transmissions from a bus trace. Attacker frames are left out
/// unless requested.
Trace to_trace(std::span<const BusEvent> events, bool include_attacker = false);

/// True when timestamps never decrease.
bool is_time_ordered(std::span<const TraceRecord> trace);

}  // namespace canwake
