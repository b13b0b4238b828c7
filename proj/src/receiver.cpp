#include "cdma_iot/receiver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cdma_iot/modem.hpp"

namespace cdma_iot {
namespace {

constexpr double kTimingSearchSigmas = 4.0;
// Keeps exact ties in the window when the noise floor is negligible.
constexpr double kTimingSearchFloor = 1e-6;

// Sliding sum of `width` consecutive samples.
Eigen::VectorXd boxcar(const Eigen::Ref<const Eigen::VectorXd>& x, int width) {
  if (width == 1) return x;
  const Eigen::Index out_len = x.size() - width + 1;
  Eigen::VectorXd out(out_len);
  for (Eigen::Index k = 0; k < out_len; ++k) out(k) = x.segment(k, width).sum();
  return out;
}

// In-place Sylvester butterfly: after the pass at half-length h, y[k] holds the
// correlation of the first 2h chip slots starting at k. Row bits select the
// sign of the upper half at each level.
void walsh_sliding_pass(std::vector<double>& y, std::size_t half, double sign) {
  const std::size_t out_len = y.size() - half;
  double* data = y.data();
  for (std::size_t k = 0; k < out_len; ++k) data[k] += sign * data[k + half];
  y.resize(out_len);
}

std::vector<double> sliding_walsh(const Eigen::VectorXd& chip_sums, int order, int row, int spc) {
  std::vector<double> y(chip_sums.data(), chip_sums.data() + chip_sums.size());
  for (int level = 0; (1 << level) < order; ++level) {
    const double sign = ((row >> level) & 1) ? -1.0 : 1.0;
    walsh_sliding_pass(y, static_cast<std::size_t>(spc) << level, sign);
  }
  return y;
}

struct DecodeAttempt {
  DecodeStatus status = DecodeStatus::kCrcFail;
  std::optional<MacFrame> frame;
};

DecodeAttempt try_decode(const Eigen::VectorXd& x, std::size_t start, const SpreadingCode& code,
                         const DetectorConfig& cfg) {
  const std::size_t body_start = start + cfg.preamble_samples();
  const std::size_t bit_samples =
      static_cast<std::size_t>(code.order()) * static_cast<std::size_t>(cfg.samples_per_chip);
  const auto n = static_cast<std::size_t>(x.size());
  if (body_start + kFrameOverheadBits * bit_samples > n) return {DecodeStatus::kTruncated, {}};

  const auto body = x.segment(static_cast<Eigen::Index>(body_start),
                              static_cast<Eigen::Index>(n - body_start));
  // Cheap header screen: reserved bits must be zero before the full despread.
  const BitVector header = demodulate_body(
      body.head(static_cast<Eigen::Index>(kFrameOverheadBits * bit_samples)), code, kHeaderBits,
      cfg.samples_per_chip);
  if (read_bits(header, kAddressBits + kLengthBits, kReservedBits) != 0) return {};

  const BitVector bits =
      demodulate_body(body, code, frame_bit_length(kMaxPayloadBytes), cfg.samples_per_chip);
  if (bits.size() < frame_bit_length(parse_length_field(bits))) {
    return {DecodeStatus::kTruncated, {}};
  }
  auto result = decode_frame(bits);
  if (auto* frame = std::get_if<MacFrame>(&result)) return {DecodeStatus::kDecoded, std::move(*frame)};
  return {};
}

struct TimingFit {
  std::size_t start = 0;
  double score = 0.0;
};

// Data-aided timing: the offset within `radius` of `coarse` whose samples best
// match the re-modulated packet, scored by normalized correlation. Earliest
// offset wins ties.
TimingFit refine_start(const Eigen::VectorXd& x, std::size_t coarse, const MacFrame& frame,
                       const SpreadingCode& code, const DetectorConfig& cfg) {
  TxConfig tx;
  tx.ue_code = code;
  tx.preamble_code = cfg.preamble_code;
  tx.samples_per_chip = cfg.samples_per_chip;
  const Eigen::VectorXd reference = build_packet_signal(frame, tx).samples.real();

  const auto len = static_cast<std::size_t>(reference.size());
  const auto n = static_cast<std::size_t>(x.size());
  const std::size_t radius = cfg.timing_search_samples;
  const std::size_t lo = coarse > radius ? coarse - radius : 0;
  const std::size_t hi = std::min(coarse + radius, n >= len ? n - len : 0);

  TimingFit best{coarse, -1.0};
  for (std::size_t o = lo; o <= hi; ++o) {
    const auto segment = x.segment(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(len));
    const double energy = segment.squaredNorm();
    if (!(energy > 0.0)) continue;
    const double score = segment.dot(reference) / std::sqrt(energy * reference.squaredNorm());
    if (score > best.score) best = {o, score};
  }
  return best;
}

// Offsets near a peak whose preamble correlation is statistically
// indistinguishable from the peak value, nearest first. The spread of a
// normalized correlation estimate over n chips is about (1 - rho^2) / sqrt(n).
std::vector<std::size_t> search_offsets(const Eigen::VectorXd& rho, std::size_t peak, int order,
                                        std::size_t radius) {
  const double peak_value = rho(static_cast<Eigen::Index>(peak));
  const double margin = std::max(
      kTimingSearchFloor,
      kTimingSearchSigmas * (1.0 - peak_value * peak_value) / std::sqrt(static_cast<double>(order)));
  const auto limit = static_cast<std::size_t>(rho.size());
  std::vector<std::size_t> offsets{peak};
  auto admit = [&](std::size_t o) {
    if (rho(static_cast<Eigen::Index>(o)) >= peak_value - margin) offsets.push_back(o);
  };
  for (std::size_t d = 1; d <= radius; ++d) {
    if (peak >= d) admit(peak - d);
    if (peak + d < limit) admit(peak + d);
  }
  return offsets;
}

}  // namespace

std::vector<SpreadingCode> code_range(int first_row, int last_row, int order) {
  std::vector<SpreadingCode> codes;
  for (int row = first_row; row <= last_row; ++row) codes.push_back(hadamard_row(order, row));
  return codes;
}

void DetectorConfig::validate() {
  if (candidate_codes.empty()) throw std::invalid_argument("detector needs at least one candidate code");
  if (samples_per_chip < 1) throw std::invalid_argument("samples_per_chip must be positive");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must be in (0, 1]");
  if (window_samples < preamble_samples()) {
    throw std::invalid_argument("window must hold at least one preamble");
  }
  for (const auto& code : candidate_codes) {
    if (code.order() != preamble_code.order()) throw std::invalid_argument("code orders differ");
    if (code.row_index() == kDcRow || code.row_index() == kPreambleRow) {
      throw std::invalid_argument("candidate codes may not use reserved rows 0 and 1");
    }
  }
  std::sort(candidate_codes.begin(), candidate_codes.end(),
            [](const auto& a, const auto& b) { return a.row_index() < b.row_index(); });
  candidate_codes.erase(std::unique(candidate_codes.begin(), candidate_codes.end()),
                        candidate_codes.end());
}

Eigen::VectorXd correlate_preamble(const Eigen::Ref<const Eigen::VectorXd>& real_samples,
                                   const SpreadingCode& preamble, int samples_per_chip) {
  if (samples_per_chip < 1) throw std::invalid_argument("samples_per_chip must be positive");
  const Eigen::Index span = static_cast<Eigen::Index>(preamble.order()) * samples_per_chip;
  if (real_samples.size() < span) {
    throw std::invalid_argument("correlation window is shorter than the preamble");
  }
  const std::vector<double> dots =
      sliding_walsh(boxcar(real_samples, samples_per_chip), preamble.order(), preamble.row_index(),
                    samples_per_chip);
  const Eigen::VectorXd squares = real_samples.array().square();
  const std::vector<double> energy =
      sliding_walsh(boxcar(squares, samples_per_chip), preamble.order(), 0, samples_per_chip);

  const double code_norm = std::sqrt(static_cast<double>(span));
  Eigen::VectorXd rho(static_cast<Eigen::Index>(dots.size()));
  for (std::size_t k = 0; k < dots.size(); ++k) {
    const double e = energy[k];
    rho(static_cast<Eigen::Index>(k)) =
        e > 0.0 ? std::min(1.0, std::abs(dots[k]) / (code_norm * std::sqrt(e))) : 0.0;
  }
  return rho;
}

Eigen::VectorXd correlate_preamble(const BasebandSignal& window, const SpreadingCode& preamble,
                                   int samples_per_chip) {
  const Eigen::VectorXd re = window.samples.real();
  return correlate_preamble(re, preamble, samples_per_chip);
}

BitVector demodulate_body(const Eigen::Ref<const Eigen::VectorXd>& body_samples,
                          const SpreadingCode& code, std::size_t max_bits, int samples_per_chip) {
  const auto bit_samples = static_cast<std::size_t>(code.order()) * static_cast<std::size_t>(samples_per_chip);
  const std::size_t available = static_cast<std::size_t>(body_samples.size()) / bit_samples;
  const std::size_t header_bits = std::min(kFrameOverheadBits, max_bits);
  if (available < header_bits || header_bits < kHeaderBits) return {};

  auto despread_bits = [&](std::size_t n_bits) {
    const auto n_samples = static_cast<Eigen::Index>(n_bits * bit_samples);
    Eigen::VectorXd chips;
    if (samples_per_chip == 1) {
      chips = body_samples.head(n_samples);
    } else {
      // Integrate each chip's samples before despreading.
      const Eigen::VectorXd plain = body_samples.head(n_samples);
      const Eigen::Map<const Eigen::MatrixXd> per_chip(plain.data(), samples_per_chip,
                                                       n_samples / samples_per_chip);
      chips = per_chip.colwise().sum().transpose();
    }
    return hard_decide(despread(chips, code));
  };

  BitVector header = despread_bits(header_bits);
  if (max_bits <= kHeaderBits) {
    header.resize(max_bits);
    return header;
  }
  const std::size_t total = std::min({frame_bit_length(parse_length_field(header)), max_bits, available});
  return despread_bits(total);
}

std::size_t scan_window_count(std::size_t stream_samples, const DetectorConfig& cfg) {
  const std::size_t span = cfg.preamble_samples();
  if (stream_samples < span) return 0;
  const std::size_t positions = stream_samples - span + 1;
  const std::size_t per_window = cfg.window_samples - span + 1;
  return (positions + per_window - 1) / per_window;
}

std::vector<DetectionEvent> detect_and_decode(const BasebandSignal& stream, DetectorConfig cfg) {
  cfg.validate();
  std::vector<DetectionEvent> events;
  const std::size_t span = cfg.preamble_samples();
  if (static_cast<std::size_t>(stream.size()) < span) return events;

  const Eigen::VectorXd x = stream.samples.real();
  // Correlation is position-wise, so computing it in one pass is identical
  // to computing it window by window with (span - 1) samples of overlap.
  const Eigen::VectorXd rho = correlate_preamble(x, cfg.preamble_code, cfg.samples_per_chip);
  const auto positions = static_cast<std::size_t>(rho.size());

  std::size_t cursor = 0;
  while (cursor < positions) {
    std::size_t first = cursor;
    while (first < positions && !(rho(static_cast<Eigen::Index>(first)) > cfg.threshold)) ++first;
    if (first == positions) break;

    const std::size_t end = std::min(first + span, positions);
    Eigen::Index rel = 0;
    rho.segment(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(end - first)).maxCoeff(&rel);
    const std::size_t peak = first + static_cast<std::size_t>(rel);
    const double peak_value = rho(static_cast<Eigen::Index>(peak));

    // Every CRC pass in the timing window is a hypothesis. Shifted Walsh rows
    // alias onto each other, so one packet can pass under several codes and
    // offsets, always with the same frame content. Keep the best-fitting
    // hypothesis per frame and per code.
    struct Hypothesis {
      DetectionEvent event;
      double score = 0.0;
    };
    std::vector<Hypothesis> passes;
    bool truncated_at_peak = false;
    for (std::size_t offset : search_offsets(rho, peak, cfg.preamble_code.order(), cfg.timing_search_samples)) {
      for (const auto& code : cfg.candidate_codes) {
        DecodeAttempt attempt = try_decode(x, offset, code, cfg);
        if (offset == peak && attempt.status == DecodeStatus::kTruncated) truncated_at_peak = true;
        if (attempt.status != DecodeStatus::kDecoded) continue;
        const bool seen = std::any_of(passes.begin(), passes.end(), [&](const Hypothesis& h) {
          return *h.event.matched_code_row == code.row_index() && *h.event.decoded == *attempt.frame;
        });
        if (seen) continue;
        const TimingFit fit = refine_start(x, offset, *attempt.frame, code, cfg);
        Hypothesis h;
        h.event.start_index = fit.start;
        h.event.peak_value = peak_value;
        h.event.decoded = std::move(attempt.frame);
        h.event.matched_code_row = code.row_index();
        h.event.status = DecodeStatus::kDecoded;
        h.score = fit.score;
        passes.push_back(std::move(h));
      }
    }
    std::stable_sort(passes.begin(), passes.end(),
                     [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
    std::vector<DetectionEvent> decoded;
    for (auto& h : passes) {
      const bool clash = std::any_of(decoded.begin(), decoded.end(), [&](const DetectionEvent& e) {
        return e.matched_code_row == h.event.matched_code_row || *e.decoded == *h.event.decoded;
      });
      if (!clash) decoded.push_back(std::move(h.event));
    }
    std::sort(decoded.begin(), decoded.end(), [](const DetectionEvent& a, const DetectionEvent& b) {
      return a.start_index != b.start_index ? a.start_index < b.start_index
                                            : *a.matched_code_row < *b.matched_code_row;
    });

    if (decoded.empty()) {
      DetectionEvent event;
      event.start_index = peak;
      event.peak_value = peak_value;
      event.status = truncated_at_peak ? DecodeStatus::kTruncated : DecodeStatus::kCrcFail;
      events.push_back(std::move(event));
      cursor = peak + span;
      continue;
    }

    std::size_t resume = peak + 1;
    for (auto& event : decoded) {
      TxConfig tx;
      tx.ue_code = hadamard_row(cfg.preamble_code.order(), *event.matched_code_row);
      tx.preamble_code = cfg.preamble_code;
      tx.samples_per_chip = cfg.samples_per_chip;
      resume = std::max(resume, event.start_index + packet_length_samples(event.decoded->payload.size(), tx));
      events.push_back(std::move(event));
    }
    cursor = resume;
  }
  return events;
}

}  // namespace cdma_iot
