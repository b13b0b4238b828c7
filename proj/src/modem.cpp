#include "cdma_iot/modem.hpp"

#include <stdexcept>

namespace cdma_iot {

TxConfig TxConfig::for_row(int row) {
  TxConfig cfg;
  cfg.ue_code = hadamard_row(kDefaultOrder, row);
  cfg.validate();
  return cfg;
}

void TxConfig::validate() const {
  if (ue_code.order() != preamble_code.order()) {
    throw std::invalid_argument("UE code and preamble code orders differ");
  }
  if (ue_code.row_index() == kDcRow || ue_code.row_index() == kPreambleRow) {
    throw std::invalid_argument("code rows 0 and 1 are reserved");
  }
  if (samples_per_chip < 1) throw std::invalid_argument("samples_per_chip must be positive");
  if (!(amplitude > 0.0)) throw std::invalid_argument("amplitude must be positive");
}

Eigen::VectorXd expand_chips(const Eigen::VectorXd& chips, int samples_per_chip) {
  if (samples_per_chip == 1) return chips;
  const Eigen::MatrixXd tiled = chips.transpose().replicate(samples_per_chip, 1);
  return tiled.reshaped();
}

std::size_t packet_length_samples(std::size_t payload_bytes, const TxConfig& cfg) {
  const auto order = static_cast<std::size_t>(cfg.ue_code.order());
  return (order + order * frame_bit_length(payload_bytes)) *
         static_cast<std::size_t>(cfg.samples_per_chip);
}

BasebandSignal build_packet_signal(const MacFrame& frame, const TxConfig& cfg) {
  cfg.validate();
  const BitVector bits = encode_frame(frame);
  const Eigen::VectorXd body = spread(bits, cfg.ue_code);
  Eigen::VectorXd chips(cfg.preamble_code.order() + body.size());
  chips << cfg.preamble_code.chips(), body;

  BasebandSignal out;
  out.samples = (cfg.amplitude * expand_chips(chips, cfg.samples_per_chip)).cast<std::complex<double>>();
  return out;
}

std::vector<std::size_t> packet_train_offsets(std::span<const MacFrame> frames,
                                              std::size_t inter_packet_gap_samples,
                                              const TxConfig& cfg) {
  std::vector<std::size_t> offsets;
  std::size_t cursor = 0;
  for (const auto& frame : frames) {
    offsets.push_back(cursor);
    cursor += packet_length_samples(frame.payload.size(), cfg) + inter_packet_gap_samples;
  }
  return offsets;
}

BasebandSignal build_packet_train(std::span<const MacFrame> frames,
                                  std::size_t inter_packet_gap_samples, const TxConfig& cfg) {
  if (frames.empty()) throw std::invalid_argument("packet train needs at least one frame");
  const auto offsets = packet_train_offsets(frames, inter_packet_gap_samples, cfg);
  const std::size_t total =
      offsets.back() + packet_length_samples(frames.back().payload.size(), cfg);

  BasebandSignal out;
  out.samples = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(total));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto packet = build_packet_signal(frames[i], cfg);
    out.samples.segment(static_cast<Eigen::Index>(offsets[i]), packet.size()) = packet.samples;
  }
  return out;
}

double nominal_bit_rate(const TxConfig& cfg, double sample_rate_hz) {
  return sample_rate_hz / (static_cast<double>(cfg.samples_per_chip) * cfg.ue_code.order());
}

}  // namespace cdma_iot
