#include "canwake/recon.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdlib>
#include <iterator>
#include <stdexcept>
#include <tuple>

namespace canwake {

Trace to_trace(std::span<const BusEvent> events, bool include_attacker) {
  Trace out;
  for (const BusEvent& e : events) {
    if (e.kind == EventKind::FrameTx && (include_attacker || e.node != kAttackerNode)) {
      out.push_back({e.time, e.frame});
    }
  }
  return out;
}

bool is_time_ordered(std::span<const TraceRecord> trace) {
  return std::is_sorted(trace.begin(), trace.end(),
                        [](const TraceRecord& a, const TraceRecord& b) { return a.time < b.time; });
}

std::set<std::uint16_t> id_set(std::span<const TraceRecord> trace) {
  std::set<std::uint16_t> ids;
  for (const TraceRecord& r : trace) {
    ids.insert(r.frame.id());
  }
  return ids;
}

std::optional<IgnitionSplit> split_ignition(std::span<const TraceRecord> trace, const SplitOptions& options) {
  if (options.window <= Duration::zero()) {
    throw std::invalid_argument("analysis window must be positive");
  }
  if (!(options.jump_factor > 1.0)) {
    throw std::invalid_argument("jump factor must exceed 1");
  }
  if (!is_time_ordered(trace)) {
    throw std::invalid_argument("trace timestamps must be nondecreasing");
  }
  if (trace.empty()) {
    return std::nullopt;
  }
  const SimTime origin = trace.front().time;
  std::set<std::uint16_t> seen;
  std::size_t running = 0;
  std::size_t i = 0;
  while (i < trace.size()) {
    const auto k = (trace[i].time - origin) / options.window;
    const SimTime window_end = origin + options.window * (k + 1);
    std::size_t j = i;
    std::set<std::uint16_t> ids;
    while (j < trace.size() && trace[j].time < window_end) {
      ids.insert(trace[j].frame.id());
      ++j;
    }
    if (running > 0 && static_cast<double>(ids.size()) >= options.jump_factor * static_cast<double>(running)) {
      std::size_t b = i;
      for (std::size_t r = i; r < j; ++r) {
        if (!seen.contains(trace[r].frame.id())) {
          b = r;
          break;
        }
      }
      IgnitionSplit split;
      split.boundary = trace[b].time;
      // Records sharing the boundary timestamp belong to the on regime.
      while (b > 0 && trace[b - 1].time == split.boundary) {
        --b;
      }
      split.off.assign(trace.begin(), trace.begin() + static_cast<std::ptrdiff_t>(b));
      split.on.assign(trace.begin() + static_cast<std::ptrdiff_t>(b), trace.end());
      return split;
    }
    running = std::max(running, ids.size());
    seen.insert(ids.begin(), ids.end());
    i = j;
  }
  return std::nullopt;
}

namespace {

std::map<std::uint16_t, std::vector<const TraceRecord*>> group_by_id(std::span<const TraceRecord> trace) {
  std::map<std::uint16_t, std::vector<const TraceRecord*>> groups;
  for (const TraceRecord& r : trace) {
    groups[r.frame.id()].push_back(&r);
  }
  return groups;
}

Payload delta_mask(const DeltaOff& delta, std::uint16_t id) {
  Payload mask{};
  if (auto it = delta.find(id); it != delta.end()) {
    for (const BitPosition& p : it->second) {
      mask[p.byte] |= static_cast<std::uint8_t>(1u << p.bit);
    }
  }
  return mask;
}

}  // namespace

DeltaOffResult compute_delta_off(std::span<const TraceRecord> off, double change_fraction) {
  if (!(change_fraction > 0.0 && change_fraction <= 1.0)) {
    throw std::invalid_argument("change fraction must lie in (0, 1]");
  }
  DeltaOffResult out;
  for (const auto& [id, records] : group_by_id(off)) {
    if (records.size() < 2) {
      out.skipped.push_back(id);
      continue;
    }
    std::array<std::array<std::size_t, 8>, kMaxDataLength> changes{};
    for (std::size_t r = 1; r < records.size(); ++r) {
      const Payload& a = records[r - 1]->frame.payload();
      const Payload& b = records[r]->frame.payload();
      for (std::size_t byte = 0; byte < kMaxDataLength; ++byte) {
        const std::uint8_t diff = a[byte] ^ b[byte];
        for (std::size_t bit = 0; bit < 8; ++bit) {
          if (diff & (1u << bit)) {
            ++changes[byte][bit];
          }
        }
      }
    }
    const double pairs = static_cast<double>(records.size() - 1);
    BitSet& positions = out.delta[id];
    for (std::size_t byte = 0; byte < kMaxDataLength; ++byte) {
      for (std::size_t bit = 0; bit < 8; ++bit) {
        if (changes[byte][bit] > 0 && static_cast<double>(changes[byte][bit]) >= change_fraction * pairs) {
          positions.insert({static_cast<std::uint8_t>(byte), static_cast<std::uint8_t>(bit)});
        }
      }
    }
  }
  return out;
}

DeltaOff intersect_delta_off(std::span<const DeltaOff> sessions) {
  if (sessions.empty()) {
    return {};
  }
  DeltaOff out = sessions.front();
  for (const DeltaOff& s : sessions.subspan(1)) {
    for (auto it = out.begin(); it != out.end();) {
      auto other = s.find(it->first);
      if (other == s.end()) {
        it = out.erase(it);
        continue;
      }
      BitSet common;
      std::set_intersection(it->second.begin(), it->second.end(), other->second.begin(), other->second.end(),
                            std::inserter(common, common.end()));
      it->second = std::move(common);
      ++it;
    }
  }
  return out;
}

std::vector<BitPosition> ControlCandidate::positions() const {
  std::vector<BitPosition> out;
  for (std::uint8_t bit = 0; bit < 8; ++bit) {
    if (mask & (1u << bit)) {
      out.push_back({byte, bit});
    }
  }
  return out;
}

std::vector<ControlCandidate> find_control_candidates(std::span<const TraceRecord> off,
                                                      std::span<const TraceRecord> on, const DeltaOff& delta_off,
                                                      SimTime boundary, const CandidateOptions& options) {
  const SimTime window_from = boundary - options.event_window;
  const SimTime window_to = boundary + options.persist;
  const auto on_groups = group_by_id(on);

  std::vector<ControlCandidate> out;
  for (const auto& [id, records] : group_by_id(off)) {
    // Bitwise majority over the records preceding the event window; the
    // whole off regime stands in when nothing precedes it.
    std::vector<const TraceRecord*> reference;
    for (const TraceRecord* r : records) {
      if (r->time < window_from) {
        reference.push_back(r);
      }
    }
    if (reference.empty()) {
      reference = records;
    }
    Payload baseline{};
    for (std::size_t byte = 0; byte < kMaxDataLength; ++byte) {
      for (std::size_t bit = 0; bit < 8; ++bit) {
        std::size_t ones = 0;
        for (const TraceRecord* r : reference) {
          ones += (r->frame.payload()[byte] >> bit) & 1u;
        }
        if (2 * ones > reference.size()) {
          baseline[byte] |= static_cast<std::uint8_t>(1u << bit);
        }
      }
    }
    const Payload ignore = delta_mask(delta_off, id);

    std::array<std::optional<ControlCandidate>, kMaxDataLength> found;
    auto scan = [&](const TraceRecord& r) {
      if (r.time < window_from || r.time >= window_to) {
        return;
      }
      for (std::size_t byte = 0; byte < r.frame.dlc(); ++byte) {
        const auto dev = static_cast<std::uint8_t>((r.frame.payload()[byte] ^ baseline[byte]) & ~ignore[byte]);
        if (dev == 0) {
          continue;
        }
        auto& c = found[byte];
        if (!c) {
          c = ControlCandidate{id, static_cast<std::uint8_t>(byte), 0, baseline[byte], r.frame.payload()[byte],
                               r.time, r.time};
        }
        c->mask |= dev;
        c->last_seen = r.time;
      }
    };
    for (const TraceRecord* r : records) {
      scan(*r);
    }
    if (auto it = on_groups.find(id); it != on_groups.end()) {
      for (const TraceRecord* r : it->second) {
        scan(*r);
      }
    }
    for (auto& c : found) {
      if (c) {
        out.push_back(*c);
      }
    }
  }

  auto distance = [boundary](const ControlCandidate& c) {
    return std::abs((boundary - c.first_seen).count());
  };
  std::stable_sort(out.begin(), out.end(), [&](const ControlCandidate& a, const ControlCandidate& b) {
    const auto da = distance(a);
    const auto db = distance(b);
    if (da != db) {
      return da < db;
    }
    const int pa = std::popcount(a.mask);
    const int pb = std::popcount(b.mask);
    if (pa != pb) {
      return pa < pb;
    }
    return std::tie(a.id, a.byte) < std::tie(b.id, b.byte);
  });
  return out;
}

double awakened_ratio(std::size_t s_off, std::size_t s_on) {
  if (s_on == 0) {
    throw std::invalid_argument("awakened ratio needs a nonempty ignition-on ID set");
  }
  return 100.0 * static_cast<double>(s_off) / static_cast<double>(s_on);
}

ReconReport analyze(std::span<const TraceRecord> trace, const ReconOptions& options) {
  ReconReport report;
  const auto split = split_ignition(trace, options.split);
  std::span<const TraceRecord> off = trace;
  if (split) {
    off = split->off;
    report.ignition_boundary = split->boundary;
    report.s_on = id_set(split->on);
  }
  report.s_off = id_set(off);
  DeltaOffResult delta = compute_delta_off(off, options.change_fraction);
  report.delta_off = std::move(delta.delta);
  report.skipped = std::move(delta.skipped);
  if (split) {
    report.candidates =
        find_control_candidates(split->off, split->on, report.delta_off, split->boundary, options.candidates);
    report.ratio_percent = awakened_ratio(report.s_off.size(), report.s_on.size());
  }
  return report;
}

}  // namespace canwake
