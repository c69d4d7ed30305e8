#include "canwake/frame.hpp"

#include <algorithm>
#include <cstdio>

namespace canwake {

namespace {

constexpr std::size_t kIdBits = 11;
constexpr std::size_t kDlcBits = 4;
constexpr std::size_t kCrcBits = 15;
constexpr std::size_t kEofBits = 7;
constexpr std::uint16_t kCrcPolynomial = 0x4599;

void check_id(std::uint16_t id) {
  if (id > kMaxStandardId) {
    throw FrameError(FrameError::Kind::InvalidId, "identifier exceeds 11 bits: " + std::to_string(id));
  }
}

void append_bits(std::vector<std::uint8_t>& out, std::uint32_t value, std::size_t width) {
  for (std::size_t i = width; i-- > 0;) {
    out.push_back(static_cast<std::uint8_t>((value >> i) & 1U));
  }
}

// Applies the stuffing rule to an unstuffed bit sequence.
void append_stuffed(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> raw) {
  std::uint8_t run_value = 2;
  std::size_t run_length = 0;
  for (std::uint8_t bit : raw) {
    out.push_back(bit);
    if (bit == run_value) {
      ++run_length;
    } else {
      run_value = bit;
      run_length = 1;
    }
    if (run_length == 5) {
      const auto stuff = static_cast<std::uint8_t>(run_value ^ 1U);
      out.push_back(stuff);
      run_value = stuff;
      run_length = 1;
    }
  }
}

class StuffedReader {
 public:
  explicit StuffedReader(const std::vector<std::uint8_t>& bits) : bits_(bits) {}

  std::uint8_t next() {
    if (run_length_ == 5) {
      const std::uint8_t stuff = raw();
      if (stuff == run_value_) {
        throw FrameError(FrameError::Kind::StuffingViolation,
                         "six identical consecutive bits at position " + std::to_string(pos_ - 1));
      }
      run_value_ = stuff;
      run_length_ = 1;
    }
    const std::uint8_t bit = raw();
    if (bit == run_value_) {
      ++run_length_;
    } else {
      run_value_ = bit;
      run_length_ = 1;
    }
    return bit;
  }

  std::uint32_t field(std::size_t width, std::vector<std::uint8_t>& unstuffed) {
    std::uint32_t value = 0;
    for (std::size_t i = 0; i < width; ++i) {
      const std::uint8_t bit = next();
      unstuffed.push_back(bit);
      value = (value << 1U) | bit;
    }
    return value;
  }

  // Consumes the stuff bit that may follow the last CRC bit.
  void finish_stuffed_region() {
    if (run_length_ == 5) {
      const std::uint8_t stuff = raw();
      if (stuff == run_value_) {
        throw FrameError(FrameError::Kind::StuffingViolation, "missing stuff bit after CRC sequence");
      }
    }
    run_length_ = 0;
  }

  std::uint8_t raw() {
    if (pos_ >= bits_.size()) {
      throw FrameError(FrameError::Kind::Malformed, "truncated bit stream");
    }
    return bits_[pos_++];
  }

  std::size_t position() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bits_;
  std::size_t pos_ = 0;
  std::uint8_t run_value_ = 2;
  std::size_t run_length_ = 0;
};

void expect_recessive(StuffedReader& reader, const char* field) {
  if (reader.raw() != 1) {
    throw FrameError(FrameError::Kind::Malformed, std::string(field) + " must be recessive");
  }
}

}  // namespace

CanFrame::CanFrame(std::uint16_t id, std::span<const std::uint8_t> data) : id_(id) {
  check_id(id);
  if (data.size() > kMaxDataLength) {
    throw FrameError(FrameError::Kind::InvalidDlc, "data longer than 8 bytes");
  }
  dlc_ = static_cast<std::uint8_t>(data.size());
  std::copy(data.begin(), data.end(), data_.begin());
}

CanFrame::CanFrame(std::uint16_t id, std::uint8_t dlc, std::span<const std::uint8_t> data) : id_(id) {
  check_id(id);
  if (dlc > kMaxDataLength) {
    throw FrameError(FrameError::Kind::InvalidDlc, "dlc exceeds 8: " + std::to_string(dlc));
  }
  if (data.size() != dlc) {
    throw FrameError(FrameError::Kind::DlcMismatch, "dlc " + std::to_string(dlc) + " but " +
                                                        std::to_string(data.size()) + " data bytes");
  }
  dlc_ = dlc;
  std::copy(data.begin(), data.end(), data_.begin());
}

std::uint8_t CanFrame::byte(std::size_t index) const {
  if (index >= dlc_) {
    throw std::out_of_range("byte index beyond dlc");
  }
  return data_[index];
}

void CanFrame::set_byte(std::size_t index, std::uint8_t value) {
  if (index >= dlc_) {
    throw std::out_of_range("byte index beyond dlc");
  }
  data_[index] = value;
}

CanFrame all_ones_frame() {
  const Payload ones{0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF};
  return CanFrame(kMaxStandardId, ones);
}

double bit_width_us(double bitrate_bps) {
  if (!(bitrate_bps > 0.0)) {
    throw std::invalid_argument("bit rate must be positive");
  }
  return 1e6 / bitrate_bps;
}

std::uint16_t crc15(std::span<const std::uint8_t> bits) {
  std::uint16_t crc = 0;
  for (std::uint8_t bit : bits) {
    const bool next = ((crc >> 14U) & 1U) != bit;
    crc = static_cast<std::uint16_t>((crc << 1U) & 0x7FFFU);
    if (next) {
      crc ^= kCrcPolynomial;
    }
  }
  return crc;
}

BitStream serialize_frame(const CanFrame& frame, double bitrate_bps, SerializeOptions options) {
  BitStream stream;
  stream.bit_width_us = bit_width_us(bitrate_bps);

  std::vector<std::uint8_t> raw;
  raw.reserve(19 + 8 * kMaxDataLength + kCrcBits);
  raw.push_back(0);                  // SOF
  append_bits(raw, frame.id(), kIdBits);
  raw.push_back(0);                  // RTR
  raw.push_back(0);                  // IDE
  raw.push_back(0);                  // r0
  append_bits(raw, frame.dlc(), kDlcBits);
  for (std::uint8_t byte : frame.data()) {
    append_bits(raw, byte, 8);
  }
  append_bits(raw, crc15(raw), kCrcBits);

  stream.bits.reserve(raw.size() + raw.size() / 4 + 10);
  append_stuffed(stream.bits, raw);
  stream.stuffed_length = stream.bits.size();

  stream.bits.push_back(1);  // CRC delimiter
  stream.bits.push_back(options.ack_dominant ? 0 : 1);
  stream.bits.push_back(1);  // ACK delimiter
  stream.bits.insert(stream.bits.end(), kEofBits, 1);
  return stream;
}

CanFrame deserialize_frame(const BitStream& stream) {
  StuffedReader reader(stream.bits);
  std::vector<std::uint8_t> unstuffed;

  if (reader.field(1, unstuffed) != 0) {
    throw FrameError(FrameError::Kind::Malformed, "missing start of frame");
  }
  const auto id = static_cast<std::uint16_t>(reader.field(kIdBits, unstuffed));
  if (reader.field(1, unstuffed) != 0) {
    throw FrameError(FrameError::Kind::Malformed, "remote frames are not supported");
  }
  if (reader.field(1, unstuffed) != 0) {
    throw FrameError(FrameError::Kind::Malformed, "extended format is not supported");
  }
  if (reader.field(1, unstuffed) != 0) {
    throw FrameError(FrameError::Kind::Malformed, "reserved bit r0 must be dominant");
  }
  const auto dlc = static_cast<std::uint8_t>(reader.field(kDlcBits, unstuffed));
  if (dlc > kMaxDataLength) {
    throw FrameError(FrameError::Kind::Malformed, "dlc exceeds 8");
  }
  Payload data{};
  for (std::size_t i = 0; i < dlc; ++i) {
    data[i] = static_cast<std::uint8_t>(reader.field(8, unstuffed));
  }
  const std::uint16_t expected_crc = crc15(unstuffed);
  std::vector<std::uint8_t> crc_bits;
  const auto crc = static_cast<std::uint16_t>(reader.field(kCrcBits, crc_bits));
  reader.finish_stuffed_region();
  if (crc != expected_crc) {
    throw FrameError(FrameError::Kind::CrcMismatch, "CRC mismatch");
  }

  expect_recessive(reader, "CRC delimiter");
  reader.raw();  // ACK slot, either level
  expect_recessive(reader, "ACK delimiter");
  for (std::size_t i = 0; i < kEofBits; ++i) {
    expect_recessive(reader, "end of frame");
  }
  for (std::size_t i = reader.position(); i < stream.bits.size(); ++i) {
    if (stream.bits[i] != 1) {
      throw FrameError(FrameError::Kind::Malformed, "dominant level after end of frame");
    }
  }
  return CanFrame(id, dlc, std::span<const std::uint8_t>(data.data(), dlc));
}

std::vector<DominantRun> dominant_runs(const BitStream& stream) {
  std::vector<DominantRun> runs;
  const auto& bits = stream.bits;
  std::size_t i = 0;
  while (i < bits.size()) {
    if (bits[i] != 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < bits.size() && bits[j] == 0) {
      ++j;
    }
    const std::size_t length = j - i;
    runs.push_back({i, length, static_cast<double>(i) * stream.bit_width_us,
                    static_cast<double>(length) * stream.bit_width_us});
    i = j;
  }
  return runs;
}

std::string to_string(const CanFrame& frame) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%03X#", frame.id());
  std::string out(buf);
  for (std::uint8_t byte : frame.data()) {
    std::snprintf(buf, sizeof buf, "%02X", byte);
    out += buf;
  }
  return out;
}

}  // namespace canwake
