#include "cdma_iot/spreading.hpp"

#include <bit>
#include <string>

namespace cdma_iot {

bool is_power_of_two(long long value) {
  return value > 0 && std::has_single_bit(static_cast<unsigned long long>(value));
}

SpreadingCode::SpreadingCode(int order, int row_index) : order_(order), row_(row_index) {
  if (!is_power_of_two(order) || order < 2 || order > 4096) {
    throw std::invalid_argument("hadamard order must be a power of two in [2, 4096], got " +
                                std::to_string(order));
  }
  if (row_index < 0 || row_index >= order) {
    throw std::invalid_argument("hadamard row " + std::to_string(row_index) +
                                " out of range for order " + std::to_string(order));
  }
  chips_.resize(order);
  for (int n = 0; n < order; ++n) {
    const auto parity = std::popcount(static_cast<unsigned>(n & row_index)) & 1;
    chips_(n) = parity ? -1.0 : 1.0;
  }
}

SpreadingCode hadamard_row(int order, int row_index) { return SpreadingCode(order, row_index); }

Eigen::VectorXd spread(std::span<const std::uint8_t> bits, const SpreadingCode& code) {
  const Eigen::Index order = code.order();
  Eigen::VectorXd out(static_cast<Eigen::Index>(bits.size()) * order);
  for (std::size_t k = 0; k < bits.size(); ++k) {
    out.segment(static_cast<Eigen::Index>(k) * order, order) = bit_to_symbol(bits[k]) * code.chips();
  }
  return out;
}

}  // namespace cdma_iot
