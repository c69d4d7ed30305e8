#include "canwake/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace canwake {

TraceParseError::TraceParseError(int line, const std::string& message)
    : std::runtime_error(fmt::format("line {}: {}", line, message)), line_(line) {}

namespace {

void append_line(std::string& out, const TraceRecord& r, std::string_view channel) {
  const auto us = r.time.count();
  fmt::format_to(std::back_inserter(out), "({}.{:06d}) {} {:03X}#", us / 1'000'000, us % 1'000'000, channel,
                 r.frame.id());
  for (std::uint8_t b : r.frame.data()) {
    fmt::format_to(std::back_inserter(out), "{:02X}", b);
  }
  out += '\n';
}

template <typename T>
bool parse_int(std::string_view s, T& value, int base = 10) {
  if (s.empty()) {
    return false;
  }
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value, base);
  return ec == std::errc() && end == s.data() + s.size();
}

}  // namespace

std::string render_candump(std::span<const TraceRecord> trace, std::string_view channel) {
  std::string out;
  out.reserve(trace.size() * 40);
  for (const TraceRecord& r : trace) {
    if (r.time < SimTime{0}) {
      throw std::invalid_argument("candump timestamps must be non-negative");
    }
    append_line(out, r, channel);
  }
  return out;
}

void write_candump(std::ostream& out, std::span<const TraceRecord> trace, std::string_view channel) {
  out << render_candump(trace, channel);
}

Trace parse_candump(std::string_view text) {
  Trace trace;
  int line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (line.empty() || line.front() == '#') {
      continue;
    }
    auto fail = [line_no](const std::string& what) { throw TraceParseError(line_no, what); };

    if (line.front() != '(') {
      fail("expected '(' opening the timestamp");
    }
    const auto close = line.find(')');
    if (close == std::string_view::npos) {
      fail("unterminated timestamp");
    }
    const std::string_view stamp = line.substr(1, close - 1);
    const auto dot = stamp.find('.');
    std::int64_t secs = 0;
    std::int64_t micros = 0;
    if (dot == std::string_view::npos || !parse_int(stamp.substr(0, dot), secs) ||
        stamp.size() - dot - 1 != 6 || !parse_int(stamp.substr(dot + 1), micros) || secs < 0 || micros < 0) {
      fail(fmt::format("malformed timestamp '{}'", stamp));
    }

    std::string_view rest = line.substr(close + 1);
    if (rest.empty() || rest.front() != ' ') {
      fail("expected a channel after the timestamp");
    }
    rest.remove_prefix(1);
    const auto space = rest.find(' ');
    if (space == 0 || space == std::string_view::npos) {
      fail("expected '<channel> <ID>#<DATA>'");
    }
    const std::string_view frame = rest.substr(space + 1);
    const auto hash = frame.find('#');
    if (hash == std::string_view::npos) {
      fail("expected '#' between ID and data");
    }
    const std::string_view id_text = frame.substr(0, hash);
    const std::string_view data_text = frame.substr(hash + 1);
    std::uint32_t id = 0;
    if (id_text.size() != 3 || !parse_int(id_text, id, 16) || id > kMaxStandardId) {
      fail(fmt::format("'{}' is not a standard 11-bit identifier", id_text));
    }
    if (data_text.size() % 2 != 0 || data_text.size() > 2 * kMaxDataLength) {
      fail(fmt::format("malformed data field '{}'", data_text));
    }
    std::vector<std::uint8_t> data;
    for (std::size_t i = 0; i < data_text.size(); i += 2) {
      std::uint8_t b = 0;
      if (!parse_int(data_text.substr(i, 2), b, 16)) {
        fail(fmt::format("malformed data field '{}'", data_text));
      }
      data.push_back(b);
    }
    const SimTime t{secs * 1'000'000 + micros};
    if (!trace.empty() && t < trace.back().time) {
      fail("timestamp goes backwards");
    }
    trace.push_back({t, CanFrame(static_cast<std::uint16_t>(id), data)});
  }
  return trace;
}

Trace load_candump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open trace file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_candump(buf.str());
}

}  // namespace canwake
