#include "cdma_iot/framing.hpp"

#include <array>
#include <cstdio>
#include <stdexcept>

namespace cdma_iot {
namespace {

constexpr std::uint16_t kPoly = 0x1021;
constexpr std::uint16_t kInit = 0xFFFF;

constexpr std::array<std::uint16_t, 256> make_crc_table() {
  std::array<std::uint16_t, 256> table{};
  for (unsigned byte = 0; byte < 256; ++byte) {
    auto reg = static_cast<std::uint16_t>(byte << 8);
    for (int i = 0; i < 8; ++i) {
      reg = (reg & 0x8000) ? static_cast<std::uint16_t>((reg << 1) ^ kPoly)
                           : static_cast<std::uint16_t>(reg << 1);
    }
    table[byte] = reg;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

std::uint16_t crc_update_byte(std::uint16_t crc, std::uint8_t byte) {
  return static_cast<std::uint16_t>((crc << 8) ^ kCrcTable[((crc >> 8) ^ byte) & 0xFF]);
}

std::uint16_t crc_update_bit(std::uint16_t crc, std::uint8_t bit) {
  const bool feedback = ((crc >> 15) & 1) != (bit & 1);
  crc = static_cast<std::uint16_t>(crc << 1);
  return feedback ? static_cast<std::uint16_t>(crc ^ kPoly) : crc;
}

}  // namespace

std::string IntegrityFailure::describe() const {
  switch (reason) {
    case Reason::kTooShort:
      return "frame shorter than header";
    case Reason::kLengthMismatch:
      return "bit count does not match length field";
    case Reason::kReservedBits:
      return "reserved bits set";
    case Reason::kCrcMismatch: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "crc mismatch: received 0x%04X, computed 0x%04X", received_crc,
                    computed_crc);
      return buf;
    }
  }
  return "unknown";
}

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bits) {
  std::uint16_t crc = kInit;
  std::size_t i = 0;
  for (; i + 8 <= bits.size(); i += 8) {
    std::uint8_t byte = 0;
    for (std::size_t b = 0; b < 8; ++b) byte = static_cast<std::uint8_t>((byte << 1) | (bits[i + b] & 1));
    crc = crc_update_byte(crc, byte);
  }
  for (; i < bits.size(); ++i) crc = crc_update_bit(crc, bits[i]);
  return crc;
}

std::uint16_t crc16_ccitt_false_bytes(std::span<const std::uint8_t> bytes) {
  std::uint16_t crc = kInit;
  for (auto byte : bytes) crc = crc_update_byte(crc, byte);
  return crc;
}

void append_bits(BitVector& out, std::uint32_t value, std::size_t width) {
  for (std::size_t i = width; i-- > 0;) out.push_back(static_cast<std::uint8_t>((value >> i) & 1));
}

std::uint32_t read_bits(std::span<const std::uint8_t> bits, std::size_t offset, std::size_t width) {
  std::uint32_t value = 0;
  for (std::size_t i = 0; i < width; ++i) value = (value << 1) | (bits[offset + i] & 1u);
  return value;
}

BitVector encode_frame(int source_address, std::span<const std::uint8_t> payload) {
  if (source_address < 0 || source_address > 255) {
    throw std::invalid_argument("source address must be in [0, 255]");
  }
  if (payload.size() > kMaxPayloadBytes) {
    throw std::invalid_argument("payload exceeds 15 bytes");
  }
  BitVector bits;
  bits.reserve(frame_bit_length(payload.size()));
  append_bits(bits, static_cast<std::uint32_t>(source_address), kAddressBits);
  append_bits(bits, static_cast<std::uint32_t>(payload.size()), kLengthBits);
  append_bits(bits, 0, kReservedBits);
  for (auto byte : payload) append_bits(bits, byte, 8);
  append_bits(bits, crc16_ccitt_false(bits), kCrcBits);
  return bits;
}

BitVector encode_frame(const MacFrame& frame) {
  return encode_frame(frame.source_address, frame.payload);
}

std::size_t parse_length_field(std::span<const std::uint8_t> bits) {
  return read_bits(bits, kAddressBits, kLengthBits);
}

DecodeResult decode_frame(std::span<const std::uint8_t> bits) {
  using Reason = IntegrityFailure::Reason;
  if (bits.size() < kFrameOverheadBits) return IntegrityFailure{Reason::kTooShort};
  const std::size_t length = parse_length_field(bits);
  const std::size_t expected_bits = frame_bit_length(length);
  if (bits.size() != expected_bits) return IntegrityFailure{Reason::kLengthMismatch};

  const std::size_t body_bits = expected_bits - kCrcBits;
  const auto received = static_cast<std::uint16_t>(read_bits(bits, body_bits, kCrcBits));
  const auto computed = crc16_ccitt_false(bits.first(body_bits));
  if (received != computed) return IntegrityFailure{Reason::kCrcMismatch, received, computed};
  if (read_bits(bits, kAddressBits + kLengthBits, kReservedBits) != 0) {
    return IntegrityFailure{Reason::kReservedBits};
  }

  MacFrame frame;
  frame.source_address = static_cast<std::uint8_t>(read_bits(bits, 0, kAddressBits));
  frame.payload.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    frame.payload[i] = static_cast<std::uint8_t>(read_bits(bits, kHeaderBits + 8 * i, 8));
  }
  return frame;
}

}  // namespace cdma_iot
