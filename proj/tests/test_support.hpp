#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "canwake/vehicle_config.hpp"

namespace canwake::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(CANWAKE_DATA_DIR) / name;
}

inline const VehicleConfig& reference_vehicle() {
  static const VehicleConfig vehicle = load_vehicle(data_path("reference_2017.cfg"));
  return vehicle;
}

inline std::vector<std::uint8_t> bits_of(const std::string& text) {
  std::vector<std::uint8_t> out;
  for (char c : text) {
    out.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return out;
}

inline std::string bit_string(const std::vector<std::uint8_t>& bits) {
  std::string out;
  for (auto b : bits) {
    out.push_back(static_cast<char>('0' + b));
  }
  return out;
}

}  // namespace canwake::testing
