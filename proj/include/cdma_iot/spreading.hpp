#ifndef CDMA_IOT_SPREADING_HPP_
#define CDMA_IOT_SPREADING_HPP_

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace cdma_iot {

/// Hard bits, one per element, each 0 or 1.
using BitVector = std::vector<std::uint8_t>;

inline constexpr int kDefaultOrder = 64;
/// All-ones DC row; never assigned.
inline constexpr int kDcRow = 0;
/// Shared packet preamble row.
inline constexpr int kPreambleRow = 1;
/// First row a UE may be assigned.
inline constexpr int kFirstUeRow = 2;

/// BPSK mapping shared by spreading and modem: 0 -> +1, 1 -> -1.
constexpr double bit_to_symbol(std::uint8_t bit) { return bit ? -1.0 : 1.0; }

/// Inverse of bit_to_symbol. A metric of exactly zero decides 0.
constexpr std::uint8_t hard_decision(double metric) { return metric < 0.0 ? 1 : 0; }

/// One row of a Sylvester Hadamard matrix in +-1 chip form.
///
/// Row `r` of order `N` has chip `n` equal to (-1)^popcount(n & r), which is
/// the closed form of the recursive construction H_2N = [[H, H], [H, -H]].
class SpreadingCode {
 public:
  SpreadingCode(int order, int row_index);

  int order() const { return order_; }
  int row_index() const { return row_; }
  const Eigen::VectorXd& chips() const { return chips_; }

  bool operator==(const SpreadingCode& other) const {
    return order_ == other.order_ && row_ == other.row_;
  }

 private:
  int order_;
  int row_;
  Eigen::VectorXd chips_;
};

/// Throws std::invalid_argument unless `order` is a power of two in
/// [2, 4096] and `row_index` is in [0, order).
SpreadingCode hadamard_row(int order, int row_index);

bool is_power_of_two(long long value);

/// Maps each bit to its BPSK symbol and multiplies it onto the code chips.
/// The result has bits.size() * order entries.
Eigen::VectorXd spread(std::span<const std::uint8_t> bits, const SpreadingCode& code);

/// Per-bit soft metrics dot(group, chips) / order over consecutive groups of
/// `order` chips. Works on any real vector expression.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> despread(
    const Eigen::MatrixBase<Derived>& chips, const SpreadingCode& code) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index order = code.order();
  if (chips.size() % order != 0) {
    throw std::invalid_argument("despread: chip count is not a multiple of the code order");
  }
  const Eigen::Index n_bits = chips.size() / order;
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> plain = chips;
  const Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> groups(
      plain.data(), order, n_bits);
  return (groups.transpose() * code.chips().template cast<Scalar>()) / static_cast<Scalar>(order);
}

template <typename Derived>
BitVector hard_decide(const Eigen::MatrixBase<Derived>& metrics) {
  BitVector bits(static_cast<std::size_t>(metrics.size()));
  for (Eigen::Index i = 0; i < metrics.size(); ++i) {
    bits[static_cast<std::size_t>(i)] = hard_decision(static_cast<double>(metrics(i)));
  }
  return bits;
}

}  // namespace cdma_iot

#endif  // CDMA_IOT_SPREADING_HPP_
