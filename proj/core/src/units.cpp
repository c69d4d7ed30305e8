#include "canwake/units.hpp"

#include <charconv>
#include <cmath>
#include <utility>

#include <fmt/format.h>

namespace canwake {

namespace {

struct Unit {
  std::string_view symbol;
  double scale;
};

template <std::size_t N>
double parse_quantity(std::string_view text, const Unit (&units)[N], std::string_view what) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
      s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
      s.remove_suffix(1);
    }
    return s;
  };
  const std::string_view s = trim(text);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end == s.data()) {
    throw UnitError(fmt::format("expected a {} like '12 {}', got '{}'", what, units[0].symbol, text));
  }
  const std::string_view unit = trim(s.substr(static_cast<std::size_t>(end - s.data())));
  if (unit.empty()) {
    throw UnitError(fmt::format("{} '{}' lacks a unit", what, text));
  }
  for (const Unit& u : units) {
    if (unit == u.symbol) {
      if (!std::isfinite(value)) {
        throw UnitError(fmt::format("{} '{}' is not finite", what, text));
      }
      return value * u.scale;
    }
  }
  throw UnitError(fmt::format("unknown {} unit '{}' in '{}'", what, unit, text));
}

constexpr Unit kCurrent[] = {{"mA", 1e-3}, {"A", 1.0}, {"uA", 1e-6}, {"µA", 1e-6}};
constexpr Unit kCapacity[] = {{"Ah", 1.0}, {"mAh", 1e-3}};
constexpr Unit kBitrate[] = {{"kbit/s", 1e3}, {"bit/s", 1.0}, {"Mbit/s", 1e6}};
constexpr Unit kTime[] = {{"s", 1e6},    {"ms", 1e3},         {"us", 1.0}, {"µs", 1.0},
                          {"min", 60e6}, {"h", 3600e6}, {"d", 86400e6}};

}  // namespace

double parse_current_a(std::string_view text) { return parse_quantity(text, kCurrent, "current"); }

double parse_capacity_ah(std::string_view text) { return parse_quantity(text, kCapacity, "capacity"); }

double parse_bitrate_bps(std::string_view text) { return parse_quantity(text, kBitrate, "bit rate"); }

double parse_time_us(std::string_view text) { return parse_quantity(text, kTime, "duration"); }

Duration parse_duration(std::string_view text) {
  const double us = parse_time_us(text);
  if (std::abs(us) > 9.0e18) {
    throw UnitError(fmt::format("duration '{}' out of range", text));
  }
  return Duration(static_cast<Duration::rep>(std::llround(us)));
}

std::string format_current(double amperes) { return fmt::format("{:.1f}mA", amperes * 1e3); }

std::string format_duration(Duration d) {
  const auto us = d.count();
  constexpr std::pair<std::int64_t, std::string_view> steps[] = {
      {86'400'000'000, "d"}, {3'600'000'000, "h"}, {60'000'000, "min"}, {1'000'000, "s"}, {1'000, "ms"}};
  for (const auto& [scale, symbol] : steps) {
    if (us != 0 && us % scale == 0) {
      return fmt::format("{}{}", us / scale, symbol);
    }
  }
  return fmt::format("{}us", us);
}

}  // namespace canwake
