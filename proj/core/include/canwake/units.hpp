#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "canwake/time.hpp"

namespace canwake {

class UnitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Each parser accepts "<number> <unit>" (the space is optional) and throws
// UnitError for a missing or foreign unit.

double parse_current_a(std::string_view text);    // A, mA, uA
double parse_capacity_ah(std::string_view text);  // Ah, mAh
double parse_bitrate_bps(std::string_view text);  // bit/s, kbit/s, Mbit/s
double parse_time_us(std::string_view text);      // us, ms, s, min, h, d
Duration parse_duration(std::string_view text);   // as parse_time_us, rounded to whole microseconds

std::string format_current(double amperes);  // "12.2mA"
std::string format_duration(Duration d);     // largest exact unit: "3d", "2s", "500ms"

}  // namespace canwake
