#include <gtest/gtest.h>

#include <random>
#include <string>

#include "canwake/frame.hpp"
#include "test_support.hpp"

namespace canwake {
namespace {

using testing::bit_string;
using testing::bits_of;

// Bit images produced by an independent encoder (CRC by polynomial long
// division) and frozen here.
struct GoldenFrame {
  std::uint16_t id;
  std::vector<std::uint8_t> data;
  std::uint16_t crc;
  std::size_t stuffed_length;
  std::string wire;
};

const std::vector<GoldenFrame>& golden_frames() {
  static const std::vector<GoldenFrame> frames = {
      {0x7FF,
       {0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF},
       0x4C89,
       113,
       "011111011111010001000111110111110111110111110111110111110111110111110111110111110111110111110111110001100100"
       "010011011111111"},
      {0x000, {}, 0x0000, 40, "00000100000100000100000100000100000100001011111111"},
      {0x123, {0x11, 0x22, 0x33}, 0x65ED, 59, "000100100011000001110001000100100010001100111100101111011011011111111"},
      {0x001,
       {0x00, 0x10, 0x00, 0x00, 0xFF, 0x00, 0xAB, 0xCD},
       0x2E8C,
       108,
       "00000100000101000100000100000100001000001000001000001000001111101111000001000101010111100110101011101000110010"
       "11111111"},
  };
  return frames;
}

TEST(Crc15, StandardCheckValue) {
  std::vector<std::uint8_t> bits;
  for (char c : std::string("123456789")) {
    for (int i = 7; i >= 0; --i) {
      bits.push_back(static_cast<std::uint8_t>((c >> i) & 1));
    }
  }
  EXPECT_EQ(crc15(bits), 0x059E);
}

TEST(Crc15, EmptyInputIsZero) { EXPECT_EQ(crc15({}), 0); }

TEST(Serialize, MatchesIndependentEncoder) {
  for (const GoldenFrame& g : golden_frames()) {
    const CanFrame frame(g.id, g.data);
    const BitStream s = serialize_frame(frame, 500'000.0);
    EXPECT_EQ(bit_string(s.bits), g.wire) << to_string(frame);
    EXPECT_EQ(s.stuffed_length, g.stuffed_length) << to_string(frame);
    EXPECT_DOUBLE_EQ(s.bit_width_us, 2.0);
  }
}

TEST(Serialize, RecessiveAckWhenUnacknowledged) {
  const GoldenFrame& g = golden_frames()[2];
  const BitStream s = serialize_frame(CanFrame(g.id, g.data), 500'000.0, {.ack_dominant = false});
  std::string expected = g.wire;
  expected[g.stuffed_length + 1] = '1';
  EXPECT_EQ(bit_string(s.bits), expected);
}

TEST(Serialize, TrailerIsDelimitersAndEndOfFrame) {
  const BitStream s = serialize_frame(all_ones_frame(), 125'000.0);
  ASSERT_EQ(s.bits.size(), s.stuffed_length + 10);
  EXPECT_EQ(bit_string({s.bits.begin() + static_cast<long>(s.stuffed_length), s.bits.end()}), "1011111111");
  EXPECT_DOUBLE_EQ(s.bit_width_us, 8.0);
  EXPECT_DOUBLE_EQ(s.duration_us(), 8.0 * static_cast<double>(s.bits.size()));
}

TEST(Deserialize, RoundTripsGoldenFrames) {
  for (const GoldenFrame& g : golden_frames()) {
    BitStream s{bits_of(g.wire), 2.0, g.stuffed_length};
    EXPECT_EQ(deserialize_frame(s), CanFrame(g.id, g.data));
  }
}

TEST(Deserialize, RoundTripsRandomFrames) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto id = static_cast<std::uint16_t>(rng() % (kMaxStandardId + 1));
    std::vector<std::uint8_t> data(rng() % (kMaxDataLength + 1));
    for (auto& b : data) {
      b = static_cast<std::uint8_t>(rng());
    }
    const CanFrame frame(id, data);
    EXPECT_EQ(deserialize_frame(serialize_frame(frame, 500'000.0)), frame);
  }
}

TEST(Deserialize, RejectsStuffingViolation) {
  BitStream s{bits_of(golden_frames()[1].wire), 2.0, 40};
  s.bits[5] = 0;  // six dominant bits in a row
  try {
    deserialize_frame(s);
    FAIL() << "expected a stuffing violation";
  } catch (const FrameError& e) {
    EXPECT_EQ(e.kind(), FrameError::Kind::StuffingViolation);
  }
}

TEST(Deserialize, RejectsCorruptedCrc) {
  const GoldenFrame& g = golden_frames()[2];
  BitStream s{bits_of(g.wire), 2.0, g.stuffed_length};
  s.bits[g.stuffed_length - 3] ^= 1U;
  EXPECT_THROW(deserialize_frame(s), FrameError);
}

TEST(Serialize, NoRunLongerThanFiveInStuffedRegion) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    std::vector<std::uint8_t> data(rng() % 9, static_cast<std::uint8_t>(rng() % 2 ? 0x00 : 0xFF));
    const BitStream s = serialize_frame(CanFrame(static_cast<std::uint16_t>(rng() & 0x7FF), data), 500'000.0);
    std::size_t run = 0;
    for (std::size_t b = 0; b < s.stuffed_length; ++b) {
      run = (b > 0 && s.bits[b] == s.bits[b - 1]) ? run + 1 : 1;
      ASSERT_LE(run, 5U);
    }
  }
}

TEST(CanFrame, RejectsOutOfRangeFields) {
  const std::vector<std::uint8_t> nine(9, 0);
  const std::vector<std::uint8_t> two(2, 0);
  EXPECT_THROW(CanFrame(0x800, two), FrameError);
  EXPECT_THROW(CanFrame(0x100, nine), FrameError);
  EXPECT_THROW(CanFrame(0x100, 3, two), FrameError);
}

TEST(CanFrame, ByteAccessIsBoundedByDlc) {
  const std::vector<std::uint8_t> two{0xAA, 0xBB};
  CanFrame f(0x10, two);
  EXPECT_EQ(f.byte(1), 0xBB);
  EXPECT_THROW(f.byte(2), std::out_of_range);
  f.set_byte(0, 0x01);
  EXPECT_EQ(f.byte(0), 0x01);
}

TEST(CanFrame, AllOnesFrame) {
  const CanFrame f = all_ones_frame();
  EXPECT_EQ(f.id(), 0x7FF);
  EXPECT_EQ(f.dlc(), 8);
  for (auto b : f.data()) {
    EXPECT_EQ(b, 0xFF);
  }
}

TEST(DominantRuns, AllOnesFrameRunsAtOneHundredTwentyFiveKbit) {
  const BitStream s = serialize_frame(all_ones_frame(), 125'000.0);
  const auto runs = dominant_runs(s);
  ASSERT_FALSE(runs.empty());
  EXPECT_EQ(runs.front().first_bit, 0U);
  EXPECT_EQ(runs.front().length, 1U);
  std::size_t longest = 0;
  for (const auto& r : runs) {
    longest = std::max(longest, r.length);
    EXPECT_DOUBLE_EQ(r.duration_us, 8.0 * static_cast<double>(r.length));
    EXPECT_DOUBLE_EQ(r.start_us, 8.0 * static_cast<double>(r.first_bit));
  }
  EXPECT_EQ(longest, 3U);
}

TEST(BitWidth, RejectsNonPositiveRate) {
  EXPECT_DOUBLE_EQ(bit_width_us(1'000'000.0), 1.0);
  EXPECT_THROW(bit_width_us(0.0), std::invalid_argument);
}

}  // namespace
}  // namespace canwake
