#include "canwake/report.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

namespace canwake {

using Json = nlohmann::ordered_json;

std::vector<DrainTableRow> drain_table(std::span<const DrainRow> rows, const BatteryConfig& battery) {
  if (rows.empty()) {
    throw std::invalid_argument("drain table needs at least one row");
  }
  const double baseline = rows.front().mean_current_a;
  std::vector<DrainTableRow> out;
  for (const DrainRow& r : rows) {
    DrainTableRow t;
    t.label = r.label;
    t.mean_current_a = r.mean_current_a;
    t.amplification = amplification(r.mean_current_a, baseline);
    t.operation_time_h = operation_time_ideal(battery, r.mean_current_a);
    t.operation_time_days = t.operation_time_h / 24.0;
    t.peukert_time_h = operation_time_peukert(battery, r.mean_current_a);
    out.push_back(std::move(t));
  }
  return out;
}

std::string render_drain_table_text(std::span<const DrainTableRow> rows) {
  std::size_t width = std::string_view("Attack").size();
  for (const auto& r : rows) {
    width = std::max(width, r.label.size());
  }
  std::string out = fmt::format("{:<{}}  {:>12}  {:>13}  {:>18}  {:>10}  {:>12}\n", "Attack", width, "Current (mA)",
                                "Amplification", "Operation time (h)", "(days)", "Peukert (h)");
  for (const auto& r : rows) {
    out += fmt::format("{:<{}}  {:>12.1f}  {:>12.2f}x  {:>18.1f}  {:>10.2f}  {:>12.1f}\n", r.label, width,
                       r.mean_current_a * 1e3, r.amplification, r.operation_time_h, r.operation_time_days,
                       r.peukert_time_h);
  }
  return out;
}

std::string render_drain_table_csv(std::span<const DrainTableRow> rows) {
  std::string out = "attack,current_ma,amplification,operation_time_h,operation_time_days,peukert_time_h\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f}\n", r.label, r.mean_current_a * 1e3, r.amplification,
                       r.operation_time_h, r.operation_time_days, r.peukert_time_h);
  }
  return out;
}

std::string drain_report_json(std::string_view label, const VehicleConfig& vehicle, Duration duration,
                              const AttackOutcome& outcome) {
  const DrainReport& r = outcome.report;
  auto finite_or_null = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  Json j;
  j["label"] = label;
  j["vehicle"] = vehicle.name;
  j["duration_s"] = to_seconds(duration);
  j["mean_current_a"] = r.mean_current_a;
  j["baseline_current_a"] = r.baseline_current_a;
  j["amplification"] = r.amplification;
  j["operation_time_ideal_h"] = finite_or_null(r.operation_time_ideal_h);
  j["operation_time_peukert_h"] = finite_or_null(r.operation_time_peukert_h);
  j["exceeds_parasitic_threshold"] = r.exceeds_parasitic_threshold;
  j["immobilized_at_h"] = r.immobilized_at ? Json(to_hours(*r.immobilized_at)) : Json(nullptr);
  Json availability = Json::object();
  for (const auto& [f, up] : outcome.availability) {
    availability[std::string(to_string(f))] = up;
  }
  j["function_availability"] = availability;
  j["key_fob_authentication"] = key_fob_authentication_available(outcome.availability);
  j["permanently_off"] = outcome.permanently_off;
  Json soc = Json::array();
  for (const SocSample& s : r.soc_timeline) {
    soc.push_back(Json::array({to_hours(s.time), s.soc}));
  }
  j["soc_timeline"] = soc;
  return j.dump(2) + "\n";
}

DrainRow parse_drain_report(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed drain report: ") + e.what());
  }
  if (!j.is_object() || !j.contains("label") || !j.contains("mean_current_a") || !j["label"].is_string() ||
      !j["mean_current_a"].is_number()) {
    throw std::invalid_argument("drain report lacks label or mean_current_a");
  }
  return {j["label"].get<std::string>(), j["mean_current_a"].get<double>()};
}

namespace {

std::string seconds(SimTime t) {
  const auto us = t.count();
  return fmt::format("{}{}.{:06d}", us < 0 ? "-" : "", std::abs(us) / 1'000'000, std::abs(us) % 1'000'000);
}

std::string delta_line(std::uint16_t id, const BitSet& bits) {
  Payload mask{};
  for (const BitPosition& p : bits) {
    mask[p.byte] |= static_cast<std::uint8_t>(1u << p.bit);
  }
  std::string out = fmt::format("  0x{:03X}:", id);
  if (bits.empty()) {
    return out + " none\n";
  }
  for (std::size_t b = 0; b < mask.size(); ++b) {
    if (mask[b]) {
      out += fmt::format(" byte {} mask 0x{:02X};", b + 1, mask[b]);
    }
  }
  out.back() = '\n';
  return out;
}

std::string id_list(const std::set<std::uint16_t>& ids) {
  std::string out;
  for (std::uint16_t id : ids) {
    out += fmt::format("{}0x{:03X}", out.empty() ? "" : " ", id);
  }
  return out;
}

}  // namespace

std::string render_recon_text(const ReconReport& report) {
  std::string out;
  if (report.ignition_boundary) {
    out += fmt::format("ignition boundary: {} s\n", seconds(*report.ignition_boundary));
  } else {
    out += "ignition boundary: none (single-regime trace)\n";
  }
  out += fmt::format("S_off ({}): {}\n", report.s_off.size(), id_list(report.s_off));
  out += fmt::format("S_on ({}): {}\n", report.s_on.size(), id_list(report.s_on));
  if (report.ratio_percent) {
    out += fmt::format("awakened ratio: {:.2f}%\n", *report.ratio_percent);
  }
  out += "delta_off:\n";
  for (const auto& [id, bits] : report.delta_off) {
    if (!bits.empty()) {
      out += delta_line(id, bits);
    }
  }
  if (!report.skipped.empty()) {
    std::set<std::uint16_t> skipped(report.skipped.begin(), report.skipped.end());
    out += fmt::format("skipped (fewer than 2 records): {}\n", id_list(skipped));
  }
  out += fmt::format("candidates ({}):\n", report.candidates.size());
  std::size_t rank = 0;
  for (const ControlCandidate& c : report.candidates) {
    out += fmt::format("  {}. 0x{:03X} byte {} mask 0x{:02X}: 0x{:02X} -> 0x{:02X} (seen {} to {} s)\n", ++rank, c.id,
                       c.byte + 1, c.mask, c.baseline, c.event_value, seconds(c.first_seen), seconds(c.last_seen));
  }
  return out;
}

std::string render_recon_csv(const ReconReport& report) {
  std::string out = "rank,id,byte,mask,baseline,event_value,first_seen_us,last_seen_us\n";
  std::size_t rank = 0;
  for (const ControlCandidate& c : report.candidates) {
    out += fmt::format("{},0x{:03X},{},0x{:02X},0x{:02X},0x{:02X},{},{}\n", ++rank, c.id, c.byte + 1, c.mask,
                       c.baseline, c.event_value, c.first_seen.count(), c.last_seen.count());
  }
  return out;
}

std::string ecu_states_json(std::span<const SavedEcuState> states) {
  Json arr = Json::array();
  for (const SavedEcuState& s : states) {
    Json j;
    j["name"] = s.name;
    j["mode"] = std::string(to_string(s.mode));
    j["tec"] = s.tec;
    j["rec"] = s.rec;
    arr.push_back(j);
  }
  Json root;
  root["ecus"] = arr;
  return root.dump(2) + "\n";
}

std::vector<SavedEcuState> parse_ecu_states(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed ECU state file: ") + e.what());
  }
  if (!root.is_object() || !root.contains("ecus") || !root["ecus"].is_array()) {
    throw std::invalid_argument("ECU state file lacks an 'ecus' list");
  }
  std::vector<SavedEcuState> out;
  for (const Json& j : root["ecus"]) {
    SavedEcuState s;
    try {
      s.name = j.at("name").get<std::string>();
      s.tec = j.at("tec").get<int>();
      s.rec = j.at("rec").get<int>();
      const auto mode = j.at("mode").get<std::string>();
      bool known = false;
      for (PowerMode m : {PowerMode::Off, PowerMode::Sleep, PowerMode::Normal, PowerMode::BusOff}) {
        if (mode == to_string(m)) {
          s.mode = m;
          known = true;
        }
      }
      if (!known) {
        throw std::invalid_argument("unknown power mode '" + mode + "'");
      }
    } catch (const Json::exception& e) {
      throw std::invalid_argument(std::string("malformed ECU state entry: ") + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SavedEcuState> saved_states(const VehicleConfig& vehicle, std::span<const EcuState> states) {
  std::vector<SavedEcuState> out;
  for (std::size_t i = 0; i < vehicle.ecus.size() && i < states.size(); ++i) {
    out.push_back({vehicle.ecus[i].name, states[i].mode, states[i].tec, states[i].rec});
  }
  return out;
}

std::vector<SavedEcuState> apply_reset(const VehicleConfig& vehicle, std::span<const SavedEcuState> states,
                                       ResetKind kind) {
  std::vector<SavedEcuState> out;
  for (const SavedEcuState& s : states) {
    const auto index = vehicle.find_ecu(s.name);
    if (!index) {
      throw std::invalid_argument("ECU '" + s.name + "' is not part of vehicle '" + vehicle.name + "'");
    }
    const EcuConfig& cfg = vehicle.ecus[*index];
    SavedEcuState next = s;
    if (kind == ResetKind::Battery) {
      next.mode = Ecu::initial_state(cfg).mode;
      next.tec = 0;
      next.rec = 0;
    } else if (s.mode == PowerMode::BusOff && cfg.recovery != RecoveryPolicy::NeverRecover) {
      next.mode = PowerMode::Sleep;
      next.tec = 0;
      next.rec = 0;
    }
    out.push_back(std::move(next));
  }
  return out;
}

}  // namespace canwake
