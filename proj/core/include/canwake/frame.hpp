#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace canwake {

inline constexpr std::uint16_t kMaxStandardId = 0x7FF;
inline constexpr std::size_t kMaxDataLength = 8;

using Payload = std::array<std::uint8_t, kMaxDataLength>;

class FrameError : public std::runtime_error {
 public:
  enum class Kind { InvalidId, InvalidDlc, DlcMismatch, StuffingViolation, Malformed, CrcMismatch };

  FrameError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Standard-format (11-bit identifier) CAN data frame.
///
/// Bytes past dlc() are kept zero so that defaulted equality compares only
/// the transmitted content.
class CanFrame {
 public:
  CanFrame() = default;
  CanFrame(std::uint16_t id, std::span<const std::uint8_t> data);
  /// Rejects a data span whose length differs from dlc.
  CanFrame(std::uint16_t id, std::uint8_t dlc, std::span<const std::uint8_t> data);

  std::uint16_t id() const noexcept { return id_; }
  std::uint8_t dlc() const noexcept { return dlc_; }
  std::span<const std::uint8_t> data() const noexcept { return {data_.data(), dlc_}; }
  const Payload& payload() const noexcept { return data_; }

  std::uint8_t byte(std::size_t index) const;
  void set_byte(std::size_t index, std::uint8_t value);

  friend bool operator==(const CanFrame&, const CanFrame&) = default;

 private:
  std::uint16_t id_ = 0;
  std::uint8_t dlc_ = 0;
  Payload data_{};
};

/// The attacker's wake-up message: ID, DLC and DATA all recessive.
CanFrame all_ones_frame();

enum class BusLevel : std::uint8_t { Dominant = 0, Recessive = 1 };

/// Bit-level image of a frame on the wire, SOF through end of frame.
struct BitStream {
  std::vector<std::uint8_t> bits;  // 0 = dominant, 1 = recessive
  double bit_width_us = 0.0;
  std::size_t stuffed_length = 0;  // bits [0, stuffed_length) are subject to stuffing

  double duration_us() const { return static_cast<double>(bits.size()) * bit_width_us; }
};

struct SerializeOptions {
  bool ack_dominant = true;  // some receiver acknowledged the frame
};

double bit_width_us(double bitrate_bps);

/// 15-bit CAN CRC (polynomial 0x4599) over unstuffed bits.
std::uint16_t crc15(std::span<const std::uint8_t> bits);

BitStream serialize_frame(const CanFrame& frame, double bitrate_bps, SerializeOptions options = {});
CanFrame deserialize_frame(const BitStream& stream);

struct DominantRun {
  std::size_t first_bit = 0;
  std::size_t length = 0;
  double start_us = 0.0;
  double duration_us = 0.0;
};

/// Maximal runs of dominant bits, in stream order.
std::vector<DominantRun> dominant_runs(const BitStream& stream);

std::string to_string(const CanFrame& frame);

}  // namespace canwake
