#ifndef CDMA_IOT_FRAMING_HPP_
#define CDMA_IOT_FRAMING_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cdma_iot/spreading.hpp"

namespace cdma_iot {

// Frame layout, MSB first per field:
//   address(8) | length(4) | reserved(4) = 0 | payload(8 * length) | crc(16)
// The CRC covers every bit before it.
inline constexpr std::size_t kMaxPayloadBytes = 15;
inline constexpr std::size_t kAddressBits = 8;
inline constexpr std::size_t kLengthBits = 4;
inline constexpr std::size_t kReservedBits = 4;
inline constexpr std::size_t kHeaderBits = kAddressBits + kLengthBits + kReservedBits;
inline constexpr std::size_t kCrcBits = 16;
inline constexpr std::size_t kFrameOverheadBits = kHeaderBits + kCrcBits;

struct MacFrame {
  std::uint8_t source_address = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const MacFrame&) const = default;
};

/// Serialized bit count for a payload of `payload_bytes` bytes.
constexpr std::size_t frame_bit_length(std::size_t payload_bytes) {
  return kFrameOverheadBits + 8 * payload_bytes;
}

struct IntegrityFailure {
  enum class Reason { kTooShort, kLengthMismatch, kReservedBits, kCrcMismatch };

  Reason reason;
  /// CRC carried in the frame, and the CRC recomputed over the received bits.
  /// Only meaningful for kCrcMismatch.
  std::uint16_t received_crc = 0;
  std::uint16_t computed_crc = 0;

  std::string describe() const;
};

using DecodeResult = std::variant<MacFrame, IntegrityFailure>;

/// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection, no xorout)
/// over a bit sequence, MSB-first. Table driven per whole byte.
std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bits);

/// Same CRC over packed bytes.
std::uint16_t crc16_ccitt_false_bytes(std::span<const std::uint8_t> bytes);

/// Throws std::invalid_argument on address > 255 or payload > 15 bytes.
BitVector encode_frame(int source_address, std::span<const std::uint8_t> payload);
BitVector encode_frame(const MacFrame& frame);

/// Never throws; malformed input is reported as IntegrityFailure.
DecodeResult decode_frame(std::span<const std::uint8_t> bits);

/// Reads the 4-bit length field from a serialized header. Requires
/// bits.size() >= kHeaderBits.
std::size_t parse_length_field(std::span<const std::uint8_t> bits);

/// MSB-first helpers.
void append_bits(BitVector& out, std::uint32_t value, std::size_t width);
std::uint32_t read_bits(std::span<const std::uint8_t> bits, std::size_t offset, std::size_t width);

}  // namespace cdma_iot

#endif  // CDMA_IOT_FRAMING_HPP_
