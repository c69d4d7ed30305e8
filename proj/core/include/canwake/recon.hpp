#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "canwake/trace.hpp"

namespace canwake {

/// A data-field bit: 0-based byte index and bit index (0 = least significant).
struct BitPosition {
  std::uint8_t byte = 0;
  std::uint8_t bit = 0;

  friend auto operator<=>(const BitPosition&, const BitPosition&) = default;
};

using BitSet = std::set<BitPosition>;
using DeltaOff = std::map<std::uint16_t, BitSet>;

struct SplitOptions {
  Duration window = std::chrono::seconds(1);
  double jump_factor = 1.5;
};

struct IgnitionSplit {
  SimTime boundary{};
  Trace off;  // records before the boundary
  Trace on;   // records from the boundary on
};

/// Finds the first analysis window whose distinct-ID count reaches
/// jump_factor times the largest count of the windows before it. The
/// boundary is the first record in that window carrying a not yet seen ID.
/// Returns nullopt for a single-regime trace.
std::optional<IgnitionSplit> split_ignition(std::span<const TraceRecord> trace, const SplitOptions& options = {});

struct DeltaOffResult {
  DeltaOff delta;
  std::vector<std::uint16_t> skipped;  // IDs with fewer than two records
};

/// Bit positions that change in at least change_fraction of consecutive
/// record pairs of the same ID.
DeltaOffResult compute_delta_off(std::span<const TraceRecord> off, double change_fraction = 0.5);

/// Positions flagged in every session.
DeltaOff intersect_delta_off(std::span<const DeltaOff> sessions);

struct CandidateOptions {
  Duration event_window = std::chrono::seconds(30);  // analysed span before the boundary
  Duration persist = std::chrono::seconds(5);        // span after the boundary
};

struct ControlCandidate {
  std::uint16_t id = 0;
  std::uint8_t byte = 0;  // 0-based
  std::uint8_t mask = 0;  // deviating bits within the byte
  std::uint8_t baseline = 0;
  std::uint8_t event_value = 0;
  SimTime first_seen{};
  SimTime last_seen{};

  std::vector<BitPosition> positions() const;
  friend bool operator==(const ControlCandidate&, const ControlCandidate&) = default;
};

/// Bits of S_off messages outside Δ_off that leave their pre-window
/// baseline shortly before the ignition boundary. Ranked by proximity to the
/// boundary, then fewest changed bits, then ID and byte.
std::vector<ControlCandidate> find_control_candidates(std::span<const TraceRecord> off,
                                                      std::span<const TraceRecord> on, const DeltaOff& delta_off,
                                                      SimTime boundary, const CandidateOptions& options = {});

/// 100 * |S_off| / |S_on|.
double awakened_ratio(std::size_t s_off, std::size_t s_on);

std::set<std::uint16_t> id_set(std::span<const TraceRecord> trace);

struct ReconOptions {
  SplitOptions split;
  double change_fraction = 0.5;
  CandidateOptions candidates;
};

struct ReconReport {
  std::set<std::uint16_t> s_off;
  std::set<std::uint16_t> s_on;
  DeltaOff delta_off;
  std::vector<std::uint16_t> skipped;
  std::optional<SimTime> ignition_boundary;
  std::vector<ControlCandidate> candidates;
  std::optional<double> ratio_percent;
};

ReconReport analyze(std::span<const TraceRecord> trace, const ReconOptions& options = {});

}  // namespace canwake
