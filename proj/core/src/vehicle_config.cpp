#include "canwake/vehicle_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "canwake/units.hpp"

namespace canwake {

ConfigError::ConfigError(std::string source, int line, const std::string& message)
    : std::runtime_error(line > 0 ? fmt::format("{}:{}: {}", source, line, message)
                                  : fmt::format("{}: {}", source, message)),
      source_(std::move(source)),
      line_(line) {}

void VehicleConfig::validate() const {
  if (ecus.empty()) {
    throw std::invalid_argument("vehicle '" + name + "' has no ECUs");
  }
  if (!(quiescent_load_a >= 0.0)) {
    throw std::invalid_argument("quiescent load must be non-negative");
  }
  if (!(door_lighting_multiplier >= 0.0)) {
    throw std::invalid_argument("door lighting multiplier must be non-negative");
  }
  wake_filter.validate();
  battery.validate();
  bus_config().validate();
}

BusConfig VehicleConfig::bus_config() const {
  BusConfig cfg;
  cfg.bitrate_bps = bitrate_bps;
  cfg.nodes = ecus;
  for (EcuConfig& ecu : cfg.nodes) {
    for (FunctionLoad& fn : ecu.functions) {
      if (fn.function == VehicleFunction::DoorControl) {
        fn.load_a *= door_lighting_multiplier;
      }
    }
  }
  return cfg;
}

PowerRoster VehicleConfig::power_roster() const { return {bus_config().nodes, quiescent_load_a}; }

std::optional<std::size_t> VehicleConfig::find_ecu(std::string_view ecu_name) const {
  for (std::size_t i = 0; i < ecus.size(); ++i) {
    if (ecus[i].name == ecu_name) {
      return i;
    }
  }
  return std::nullopt;
}

std::optional<std::size_t> VehicleConfig::transmitter_of(std::uint16_t id) const {
  for (std::size_t i = 0; i < ecus.size(); ++i) {
    for (const ScheduledMessage& m : ecus[i].schedule) {
      if (m.id == id) {
        return i;
      }
    }
  }
  return std::nullopt;
}

std::optional<CanFrame> VehicleConfig::baseline_frame(std::uint16_t id) const {
  if (auto i = transmitter_of(id)) {
    for (const ScheduledMessage& m : ecus[*i].schedule) {
      if (m.id == id) {
        return CanFrame(id, m.dlc, std::span<const std::uint8_t>(m.baseline.data(), m.dlc));
      }
    }
  }
  return std::nullopt;
}

std::optional<Duration> VehicleConfig::min_wakeable_t_wakeup() const {
  std::optional<Duration> best;
  for (const EcuConfig& e : ecus) {
    if (e.terminal == Terminal::T30 && (!best || e.t_wakeup < *best)) {
      best = e.t_wakeup;
    }
  }
  return best;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& message) const {
    throw ConfigError(source_, at.Mark().is_null() ? 0 : at.Mark().line + 1, message);
  }

  void expect_map(const YAML::Node& node, std::string_view what, std::initializer_list<std::string_view> keys) const {
    if (!node.IsMap()) {
      fail(node, fmt::format("{} must be a mapping", what));
    }
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        fail(kv.first, fmt::format("unknown key '{}' in {}", key, what));
      }
    }
  }

  YAML::Node require(const YAML::Node& map, const char* key) const {
    YAML::Node n = map[key];
    if (!n) {
      fail(map, fmt::format("missing required key '{}'", key));
    }
    return n;
  }

  std::string scalar(const YAML::Node& n) const {
    if (!n.IsScalar()) {
      fail(n, "expected a scalar value");
    }
    return n.Scalar();
  }

  template <typename F>
  auto with_unit(const YAML::Node& n, F parse) const {
    try {
      return parse(scalar(n));
    } catch (const UnitError& e) {
      fail(n, e.what());
    }
  }

  double current(const YAML::Node& n) const { return with_unit(n, [](const std::string& s) { return parse_current_a(s); }); }
  Duration duration(const YAML::Node& n) const { return with_unit(n, [](const std::string& s) { return parse_duration(s); }); }
  double micros(const YAML::Node& n) const { return with_unit(n, [](const std::string& s) { return parse_time_us(s); }); }

  double number(const YAML::Node& n) const {
    const std::string s = scalar(n);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
      fail(n, fmt::format("expected a plain number, got '{}'", s));
    }
    return v;
  }

  std::uint64_t integer(const YAML::Node& n, std::uint64_t max) const {
    const std::string s = scalar(n);
    std::string_view digits = s;
    int base = 10;
    if (digits.starts_with("0x") || digits.starts_with("0X")) {
      digits.remove_prefix(2);
      base = 16;
    }
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v, base);
    if (digits.empty() || ec != std::errc() || end != digits.data() + digits.size()) {
      fail(n, fmt::format("expected an integer, got '{}'", s));
    }
    if (v > max) {
      fail(n, fmt::format("value {} exceeds {}", s, max));
    }
    return v;
  }

  std::vector<std::uint8_t> hex_bytes(const YAML::Node& n) const {
    std::istringstream in(scalar(n));
    std::vector<std::uint8_t> out;
    std::string tok;
    while (in >> tok) {
      std::uint8_t b = 0;
      const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), b, 16);
      if (tok.size() != 2 || ec != std::errc() || end != tok.data() + tok.size()) {
        fail(n, fmt::format("expected space-separated hex bytes, got '{}'", tok));
      }
      out.push_back(b);
    }
    if (out.size() > kMaxDataLength) {
      fail(n, "payload longer than 8 bytes");
    }
    return out;
  }

  VehicleFunction function(const YAML::Node& n) const {
    const std::string s = scalar(n);
    for (VehicleFunction f : {VehicleFunction::PKES, VehicleFunction::RKE, VehicleFunction::PowerMode,
                              VehicleFunction::DoorControl, VehicleFunction::TrunkControl}) {
      if (s == to_string(f)) {
        return f;
      }
    }
    fail(n, fmt::format("unknown vehicle function '{}'", s));
  }

  WakeupFilterParams wake_filter(const YAML::Node& n) const {
    expect_map(n, "wake_filter", {"t_min", "t_max", "threshold"});
    WakeupFilterParams p;
    if (n["t_min"]) p.t_filter_min_us = micros(n["t_min"]);
    if (n["t_max"]) p.t_filter_max_us = micros(n["t_max"]);
    if (n["threshold"]) p.gray_zone_threshold_us = micros(n["threshold"]);
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      fail(n, e.what());
    }
    return p;
  }

  BatteryConfig battery(const YAML::Node& n) const {
    expect_map(n, "battery",
               {"capacity", "soc_start", "soc_min", "parasitic_threshold", "peukert_exponent",
                "rated_discharge_time", "derating"});
    BatteryConfig b;
    if (n["capacity"]) b.capacity_ah = with_unit(n["capacity"], [](const std::string& s) { return parse_capacity_ah(s); });
    if (n["soc_start"]) b.soc_start = number(n["soc_start"]);
    if (n["soc_min"]) b.soc_min_start = number(n["soc_min"]);
    if (n["parasitic_threshold"]) b.parasitic_threshold_a = current(n["parasitic_threshold"]);
    if (n["peukert_exponent"]) b.peukert_exponent = number(n["peukert_exponent"]);
    if (n["rated_discharge_time"]) b.rated_discharge_hours = micros(n["rated_discharge_time"]) / 3600e6;
    if (n["derating"]) b.capacity_derating = number(n["derating"]);
    try {
      b.validate();
    } catch (const std::invalid_argument& e) {
      fail(n, e.what());
    }
    return b;
  }

  ScheduledMessage message(const YAML::Node& n) const {
    expect_map(n, "message", {"id", "period", "data", "free_running"});
    ScheduledMessage m;
    m.id = static_cast<std::uint16_t>(integer(require(n, "id"), kMaxStandardId));
    m.period = duration(require(n, "period"));
    if (m.period <= Duration::zero()) {
      fail(n["period"], "message period must be positive");
    }
    const auto data = hex_bytes(require(n, "data"));
    m.dlc = static_cast<std::uint8_t>(data.size());
    std::copy(data.begin(), data.end(), m.baseline.begin());
    if (n["free_running"]) {
      const auto mask = hex_bytes(n["free_running"]);
      if (mask.size() != data.size()) {
        fail(n["free_running"], "free_running mask must have as many bytes as data");
      }
      std::copy(mask.begin(), mask.end(), m.free_running_mask.begin());
    }
    return m;
  }

  FunctionLoad function_load(const YAML::Node& n) const {
    expect_map(n, "function", {"function", "load", "activation", "hold", "auto_off", "control"});
    FunctionLoad fn;
    fn.function = function(require(n, "function"));
    fn.load_a = current(require(n, "load"));
    if (fn.load_a < 0.0) {
      fail(n["load"], "function load must be non-negative");
    }
    const YAML::Node act = require(n, "activation");
    const std::string a = scalar(act);
    if (a == "while_repeated") {
      fn.activation = Activation::WhileRepeated;
      fn.hold = duration(require(n, "hold"));
    } else if (a == "latched_until_closed") {
      fn.activation = Activation::LatchedUntilClosed;
    } else {
      fail(act, fmt::format("unknown activation '{}'", a));
    }
    if (n["auto_off"]) {
      fn.auto_off = duration(n["auto_off"]);
    }
    const YAML::Node c = require(n, "control");
    expect_map(c, "control", {"id", "byte", "mask", "value"});
    fn.control.id = static_cast<std::uint16_t>(integer(require(c, "id"), kMaxStandardId));
    const auto ordinal = integer(require(c, "byte"), kMaxDataLength);
    if (ordinal == 0) {
      fail(c["byte"], "control byte is 1-based");
    }
    fn.control.byte = static_cast<std::uint8_t>(ordinal - 1);
    fn.control.mask = c["mask"] ? static_cast<std::uint8_t>(integer(c["mask"], 0xFF)) : 0xFF;
    fn.control.value = static_cast<std::uint8_t>(integer(require(c, "value"), 0xFF));
    return fn;
  }

  EcuConfig ecu(const YAML::Node& n, const WakeupFilterParams& vehicle_filter) const {
    expect_map(n, "ECU",
               {"name", "terminal", "t_wakeup", "sleep_current", "normal_current", "recovery", "standby",
                "wake_filter", "messages", "functions"});
    EcuConfig e;
    e.name = scalar(require(n, "name"));
    const YAML::Node term = require(n, "terminal");
    const std::string t = scalar(term);
    if (t == "30") {
      e.terminal = Terminal::T30;
    } else if (t == "15") {
      e.terminal = Terminal::T15;
    } else {
      fail(term, fmt::format("terminal must be 15 or 30, got '{}'", t));
    }
    if (n["t_wakeup"]) e.t_wakeup = duration(n["t_wakeup"]);
    e.sleep_current_a = current(require(n, "sleep_current"));
    e.normal_current_a = current(require(n, "normal_current"));
    if (n["recovery"]) {
      const std::string r = scalar(n["recovery"]);
      if (r == "auto") {
        e.recovery = RecoveryPolicy::AutoRecover;
      } else if (r == "never") {
        e.recovery = RecoveryPolicy::NeverRecover;
      } else if (r == "manual") {
        e.recovery = RecoveryPolicy::ManualResetOnly;
      } else {
        fail(n["recovery"], fmt::format("recovery must be auto, never or manual, got '{}'", r));
      }
    }
    if (n["standby"]) {
      if (!n["standby"].IsSequence()) {
        fail(n["standby"], "standby must be a list of functions");
      }
      for (const auto& f : n["standby"]) {
        e.standby_functions.insert(function(f));
      }
    }
    e.wake_filter = n["wake_filter"] ? wake_filter(n["wake_filter"]) : vehicle_filter;
    if (n["messages"]) {
      if (!n["messages"].IsSequence()) {
        fail(n["messages"], "messages must be a list");
      }
      for (const auto& m : n["messages"]) {
        e.schedule.push_back(message(m));
      }
    }
    if (n["functions"]) {
      if (!n["functions"].IsSequence()) {
        fail(n["functions"], "functions must be a list");
      }
      for (const auto& f : n["functions"]) {
        e.functions.push_back(function_load(f));
      }
    }
    try {
      e.validate();
    } catch (const std::invalid_argument& ex) {
      fail(n, ex.what());
    }
    return e;
  }

  VehicleConfig vehicle(const YAML::Node& root) const {
    if (!root || root.IsNull()) {
      throw ConfigError(source_, 0, "empty vehicle file");
    }
    expect_map(root, "vehicle",
               {"name", "bitrate", "quiescent_load", "door_lighting_multiplier", "wake_filter", "battery", "ecus"});
    VehicleConfig v;
    v.name = scalar(require(root, "name"));
    v.bitrate_bps = with_unit(require(root, "bitrate"), [](const std::string& s) { return parse_bitrate_bps(s); });
    if (!(v.bitrate_bps > 0.0)) {
      fail(root["bitrate"], "bit rate must be positive");
    }
    if (root["quiescent_load"]) {
      v.quiescent_load_a = current(root["quiescent_load"]);
      if (v.quiescent_load_a < 0.0) {
        fail(root["quiescent_load"], "quiescent load must be non-negative");
      }
    }
    if (root["door_lighting_multiplier"]) {
      v.door_lighting_multiplier = number(root["door_lighting_multiplier"]);
      if (v.door_lighting_multiplier < 0.0) {
        fail(root["door_lighting_multiplier"], "door lighting multiplier must be non-negative");
      }
    }
    if (root["wake_filter"]) v.wake_filter = wake_filter(root["wake_filter"]);
    if (root["battery"]) v.battery = battery(root["battery"]);

    const YAML::Node ecus = require(root, "ecus");
    if (!ecus.IsSequence() || ecus.size() == 0) {
      fail(ecus, "the ECU roster is empty");
    }
    std::set<std::string> names;
    std::map<std::uint16_t, std::string> owners;
    for (const auto& n : ecus) {
      EcuConfig e = ecu(n, v.wake_filter);
      if (!names.insert(e.name).second) {
        fail(n["name"], fmt::format("duplicate ECU name '{}'", e.name));
      }
      std::size_t k = 0;
      for (const auto& m : e.schedule) {
        auto [it, fresh] = owners.emplace(m.id, e.name);
        if (!fresh) {
          fail(n["messages"][k], fmt::format("message id 0x{:03X} already scheduled by {}", m.id, it->second));
        }
        ++k;
      }
      v.ecus.push_back(std::move(e));
    }
    try {
      v.validate();
    } catch (const std::invalid_argument& e) {
      fail(root, e.what());
    }
    return v;
  }

 private:
  std::string source_;
};

}  // namespace

VehicleConfig parse_vehicle(std::string_view text, std::string_view source) {
  const Parser parser{std::string(source)};
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string(source), e.mark.line + 1, e.msg);
  }
  try {
    return parser.vehicle(root);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string(source), e.mark.is_null() ? 0 : e.mark.line + 1, e.msg);
  }
}

VehicleConfig load_vehicle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(path.string(), 0, "cannot open vehicle file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_vehicle(buf.str(), path.string());
}

namespace {

std::string hex_string(std::span<const std::uint8_t> bytes) {
  std::string out;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    out += fmt::format("{}{:02X}", i == 0 ? "" : " ", bytes[i]);
  }
  return out;
}

std::string micros(double us) { return fmt::format("{} us", us); }
std::string micros(Duration d) { return fmt::format("{} us", d.count()); }
std::string amps(double a) { return fmt::format("{} A", a); }

std::string_view recovery_key(RecoveryPolicy p) {
  switch (p) {
    case RecoveryPolicy::AutoRecover: return "auto";
    case RecoveryPolicy::NeverRecover: return "never";
    case RecoveryPolicy::ManualResetOnly: return "manual";
  }
  return "auto";
}

void emit_filter(YAML::Emitter& out, const WakeupFilterParams& p) {
  out << YAML::BeginMap;
  out << YAML::Key << "t_min" << YAML::Value << micros(p.t_filter_min_us);
  out << YAML::Key << "t_max" << YAML::Value << micros(p.t_filter_max_us);
  out << YAML::Key << "threshold" << YAML::Value << micros(p.gray_zone_threshold_us);
  out << YAML::EndMap;
}

}  // namespace

std::string render_vehicle(const VehicleConfig& v) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << v.name;
  out << YAML::Key << "bitrate" << YAML::Value << fmt::format("{} bit/s", v.bitrate_bps);
  out << YAML::Key << "quiescent_load" << YAML::Value << amps(v.quiescent_load_a);
  out << YAML::Key << "door_lighting_multiplier" << YAML::Value << fmt::format("{}", v.door_lighting_multiplier);
  out << YAML::Key << "wake_filter" << YAML::Value;
  emit_filter(out, v.wake_filter);

  const BatteryConfig& b = v.battery;
  out << YAML::Key << "battery" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "capacity" << YAML::Value << fmt::format("{} Ah", b.capacity_ah);
  out << YAML::Key << "soc_start" << YAML::Value << fmt::format("{}", b.soc_start);
  out << YAML::Key << "soc_min" << YAML::Value << fmt::format("{}", b.soc_min_start);
  out << YAML::Key << "parasitic_threshold" << YAML::Value << amps(b.parasitic_threshold_a);
  out << YAML::Key << "peukert_exponent" << YAML::Value << fmt::format("{}", b.peukert_exponent);
  out << YAML::Key << "rated_discharge_time" << YAML::Value << fmt::format("{} h", b.rated_discharge_hours);
  out << YAML::Key << "derating" << YAML::Value << fmt::format("{}", b.capacity_derating);
  out << YAML::EndMap;

  out << YAML::Key << "ecus" << YAML::Value << YAML::BeginSeq;
  for (const EcuConfig& e : v.ecus) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << e.name;
    out << YAML::Key << "terminal" << YAML::Value << std::string(to_string(e.terminal));
    out << YAML::Key << "t_wakeup" << YAML::Value << micros(e.t_wakeup);
    out << YAML::Key << "sleep_current" << YAML::Value << amps(e.sleep_current_a);
    out << YAML::Key << "normal_current" << YAML::Value << amps(e.normal_current_a);
    out << YAML::Key << "recovery" << YAML::Value << std::string(recovery_key(e.recovery));
    if (!e.standby_functions.empty()) {
      out << YAML::Key << "standby" << YAML::Value << YAML::Flow << YAML::BeginSeq;
      for (VehicleFunction f : e.standby_functions) {
        out << std::string(to_string(f));
      }
      out << YAML::EndSeq;
    }
    if (!(e.wake_filter == v.wake_filter)) {
      out << YAML::Key << "wake_filter" << YAML::Value;
      emit_filter(out, e.wake_filter);
    }
    out << YAML::Key << "messages" << YAML::Value << YAML::BeginSeq;
    for (const ScheduledMessage& m : e.schedule) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "id" << YAML::Value << fmt::format("0x{:03X}", m.id);
      out << YAML::Key << "period" << YAML::Value << micros(m.period);
      out << YAML::Key << "data" << YAML::Value << hex_string({m.baseline.data(), m.dlc});
      if (std::any_of(m.free_running_mask.begin(), m.free_running_mask.end(), [](auto x) { return x != 0; })) {
        out << YAML::Key << "free_running" << YAML::Value << hex_string({m.free_running_mask.data(), m.dlc});
      }
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    if (!e.functions.empty()) {
      out << YAML::Key << "functions" << YAML::Value << YAML::BeginSeq;
      for (const FunctionLoad& fn : e.functions) {
        out << YAML::BeginMap;
        out << YAML::Key << "function" << YAML::Value << std::string(to_string(fn.function));
        out << YAML::Key << "load" << YAML::Value << amps(fn.load_a);
        out << YAML::Key << "activation" << YAML::Value << std::string(to_string(fn.activation));
        if (fn.activation == Activation::WhileRepeated) {
          out << YAML::Key << "hold" << YAML::Value << micros(fn.hold);
        }
        if (fn.auto_off) {
          out << YAML::Key << "auto_off" << YAML::Value << micros(*fn.auto_off);
        }
        out << YAML::Key << "control" << YAML::Value << YAML::Flow << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << fmt::format("0x{:03X}", fn.control.id);
        out << YAML::Key << "byte" << YAML::Value << static_cast<int>(fn.control.byte) + 1;
        out << YAML::Key << "mask" << YAML::Value << fmt::format("0x{:02X}", fn.control.mask);
        out << YAML::Key << "value" << YAML::Value << fmt::format("0x{:02X}", fn.control.value);
        out << YAML::EndMap;
        out << YAML::EndMap;
      }
      out << YAML::EndSeq;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace canwake
