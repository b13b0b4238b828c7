#ifndef CDMA_IOT_RECEIVER_HPP_
#define CDMA_IOT_RECEIVER_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include "cdma_iot/framing.hpp"
#include "cdma_iot/signal.hpp"
#include "cdma_iot/spreading.hpp"

namespace cdma_iot {

inline constexpr std::size_t kDefaultWindowSamples = 10000;

struct DetectorConfig {
  SpreadingCode preamble_code = hadamard_row(kDefaultOrder, kPreambleRow);
  /// Registered UE codes, tried in ascending row order.
  std::vector<SpreadingCode> candidate_codes;
  int samples_per_chip = 1;
  std::size_t window_samples = kDefaultWindowSamples;
  /// Normalized correlation a peak must exceed, in (0, 1].
  double threshold = 0.7;
  std::size_t detection_tolerance_samples = 2;
  /// Largest half-width of the CRC-arbitrated timing search around a
  /// correlation peak. The row-1 preamble is a Nyquist-rate tone, so its
  /// correlation peak is nearly flat over several samples. Only offsets whose
  /// correlation is within noise of the peak are searched.
  std::size_t timing_search_samples = 16;

  /// Sorts candidate codes by row and throws std::invalid_argument on any
  /// violated invariant.
  void validate();

  std::size_t preamble_samples() const {
    return static_cast<std::size_t>(preamble_code.order()) * static_cast<std::size_t>(samples_per_chip);
  }
};

/// Candidate set of rows [first, last] at order 64.
std::vector<SpreadingCode> code_range(int first_row, int last_row, int order = kDefaultOrder);

enum class DecodeStatus {
  kDecoded,
  /// Body present but no candidate code produced a CRC-valid frame.
  kCrcFail,
  /// Stream ended before a full header followed the peak.
  kTruncated,
};

struct DetectionEvent {
  std::size_t start_index = 0;
  double peak_value = 0.0;
  std::optional<MacFrame> decoded;
  std::optional<int> matched_code_row;
  DecodeStatus status = DecodeStatus::kCrcFail;
};

/// Normalized sliding correlation |<Re x_k, p>| / (|p| |Re x_k|) of the
/// chip-expanded preamble against every full-length segment of `window`.
/// Zero-energy segments give 0. Throws std::invalid_argument when the window
/// is shorter than the preamble.
Eigen::VectorXd correlate_preamble(const BasebandSignal& window, const SpreadingCode& preamble,
                                   int samples_per_chip = 1);

/// Same as above on a real sample vector.
Eigen::VectorXd correlate_preamble(const Eigen::Ref<const Eigen::VectorXd>& real_samples,
                                   const SpreadingCode& preamble, int samples_per_chip = 1);

/// Despreads the header to learn the frame length, then returns that many
/// hard bits (fewer if the body runs out, capped at `max_bits`). Returns an
/// empty vector when the header itself does not fit.
BitVector demodulate_body(const Eigen::Ref<const Eigen::VectorXd>& body_samples,
                          const SpreadingCode& code, std::size_t max_bits,
                          int samples_per_chip = 1);

/// Full receive chain over one stream. Never throws on signal content.
std::vector<DetectionEvent> detect_and_decode(const BasebandSignal& stream, DetectorConfig cfg);

/// Number of correlation windows the detector scans over a stream of
/// `stream_samples` samples.
std::size_t scan_window_count(std::size_t stream_samples, const DetectorConfig& cfg);

}  // namespace cdma_iot

#endif  // CDMA_IOT_RECEIVER_HPP_
