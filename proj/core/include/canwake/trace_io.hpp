#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "canwake/trace.hpp"

namespace canwake {

inline constexpr std::string_view kDefaultChannel = "vcan0";

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(int line, const std::string& message);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// candump log lines: "(<seconds>.<micros>) <channel> <ID>#<DATA>".
std::string render_candump(std::span<const TraceRecord> trace, std::string_view channel = kDefaultChannel);
void write_candump(std::ostream& out, std::span<const TraceRecord> trace, std::string_view channel = kDefaultChannel);

/// Blank lines and lines starting with '#' are skipped. Timestamps must not
/// decrease.
Trace parse_candump(std::string_view text);
Trace load_candump(const std::filesystem::path& path);

}  // namespace canwake
