#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "canwake/vehicle.hpp"

namespace canwake {

/// Malformed or inconsistent vehicle file. line() is 1-based, 0 if unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, const std::string& message);

  const std::string& source() const noexcept { return source_; }
  int line() const noexcept { return line_; }

 private:
  std::string source_;
  int line_;
};

VehicleConfig parse_vehicle(std::string_view text, std::string_view source = "<string>");
VehicleConfig load_vehicle(const std::filesystem::path& path);

/// Writes a config that parse_vehicle reads back to the same vehicle.
std::string render_vehicle(const VehicleConfig& vehicle);

}  // namespace canwake
