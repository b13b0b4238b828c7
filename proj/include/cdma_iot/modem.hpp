#ifndef CDMA_IOT_MODEM_HPP_
#define CDMA_IOT_MODEM_HPP_

#include <cstddef>
#include <span>

#include "cdma_iot/framing.hpp"
#include "cdma_iot/signal.hpp"
#include "cdma_iot/spreading.hpp"

namespace cdma_iot {

/// Transmit parameters for one UE. The preamble is shared by all UEs; the UE
/// is identified by its data code.
struct TxConfig {
  SpreadingCode ue_code = hadamard_row(kDefaultOrder, kFirstUeRow);
  SpreadingCode preamble_code = hadamard_row(kDefaultOrder, kPreambleRow);
  int samples_per_chip = 1;
  double amplitude = 1.0;

  /// Default config with the data code set to `row` of order 64.
  static TxConfig for_row(int row);

  /// Throws std::invalid_argument on reserved rows, mismatched orders, or
  /// nonpositive samples_per_chip / amplitude.
  void validate() const;
};

/// Samples in one packet carrying `payload_bytes` bytes.
std::size_t packet_length_samples(std::size_t payload_bytes, const TxConfig& cfg);

/// Preamble chips followed by the spread frame, rectangular chips, real BPSK.
BasebandSignal build_packet_signal(const MacFrame& frame, const TxConfig& cfg);

/// Packets back to back with `inter_packet_gap_samples` zeros between them.
/// Throws std::invalid_argument on an empty frame list.
BasebandSignal build_packet_train(std::span<const MacFrame> frames,
                                  std::size_t inter_packet_gap_samples, const TxConfig& cfg);

/// Start sample of each packet in a train built with the same arguments.
std::vector<std::size_t> packet_train_offsets(std::span<const MacFrame> frames,
                                              std::size_t inter_packet_gap_samples,
                                              const TxConfig& cfg);

/// Information bits per second at the given sample rate.
double nominal_bit_rate(const TxConfig& cfg, double sample_rate_hz = kDefaultSampleRateHz);

/// Repeats each chip `samples_per_chip` times.
Eigen::VectorXd expand_chips(const Eigen::VectorXd& chips, int samples_per_chip);

}  // namespace cdma_iot

#endif  // CDMA_IOT_MODEM_HPP_
