#ifndef CDMA_IOT_HARNESS_HPP_
#define CDMA_IOT_HARNESS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdma_iot/channel.hpp"
#include "cdma_iot/spreading.hpp"

namespace cdma_iot {

inline constexpr int kMaxUes = 62;
inline constexpr double kDefaultFalseAlarmTarget = 1e-4;

/// Inclusive integer range; a single value has min == max.
struct SizeRange {
  std::size_t min = 0;
  std::size_t max = 0;
  bool operator==(const SizeRange&) const = default;
};

/// Full description of one Monte Carlo experiment.
struct ScenarioConfig {
  int n_ues = 1;
  /// Data code rows, one per UE. Empty means rows 2, 3, ... n_ues + 1.
  std::vector<int> code_rows;
  SizeRange payload_bytes{15, 15};
  std::vector<double> sinr_grid_db{0.0};
  std::size_t trials_per_point = 10000;
  /// Packets each UE sends per trial, separated by a gap drawn from
  /// inter_packet_gap_samples.
  std::size_t packets_per_trial = 1;
  SizeRange inter_packet_gap_samples{0, 0};
  bool asynchronous = true;
  std::optional<OfdmInterfererConfig> interferer;
  /// Interferer power levels for a coexistence power sweep. Empty means the
  /// interferer's own relative_power_db.
  std::vector<double> interferer_power_grid_db;
  double self_interference_cancellation_db = 30.0;
  std::uint64_t master_seed = 0;
  /// Absent means calibrate from noise at false_alarm_target.
  std::optional<double> threshold;
  double false_alarm_target = kDefaultFalseAlarmTarget;
  /// Noise windows for calibration; 0 means ceil(10 / false_alarm_target).
  std::size_t calibration_windows = 0;
  std::size_t window_samples = 10000;
  std::size_t detection_tolerance_samples = 2;
  std::size_t timing_search_samples = 16;
  /// Noise-only lead before the first packet, uniform in [0, lead_samples_max).
  std::size_t lead_samples_max = 256;
  int samples_per_chip = 1;

  void validate() const;
  std::vector<int> resolved_code_rows() const;
  std::size_t resolved_calibration_windows() const;
};

struct RateCi {
  double rate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval at 95%.
RateCi wilson_interval(std::size_t successes, std::size_t n);

/// Outcome counts for one grid point. Every transmitted packet lands in
/// exactly one of decoded_correct, decoded_wrong, undecoded_detected, missed.
struct GridPointResult {
  double sinr_db = 0.0;
  std::size_t packets = 0;
  std::size_t decoded_correct = 0;
  std::size_t decoded_wrong = 0;
  std::size_t undecoded_detected = 0;
  std::size_t missed = 0;
  std::size_t false_alarms = 0;
  std::size_t windows = 0;

  std::size_t detected() const { return decoded_correct + decoded_wrong + undecoded_detected; }
  std::size_t packet_errors() const { return packets - decoded_correct; }
  RateCi detection_rate() const { return wilson_interval(detected(), packets); }
  RateCi packet_error_rate() const { return wilson_interval(packet_errors(), packets); }
  double false_alarm_rate() const {
    return windows ? static_cast<double>(false_alarms) / static_cast<double>(windows) : 0.0;
  }

  GridPointResult& operator+=(const GridPointResult& other);
};

struct SweepResult {
  std::vector<GridPointResult> points;
  double threshold = 0.0;
  /// UE code row for per-UE results, absent for pooled results.
  std::optional<int> code_row;
};

/// Empirical (1 - false_alarm_target) quantile of the per-window maximum
/// normalized preamble correlation over pure-noise windows. Throws
/// std::invalid_argument unless 0 < target < 1 and
/// n_noise_windows >= 10 / target.
double calibrate_threshold(const SpreadingCode& preamble, std::size_t window_samples,
                           double false_alarm_target, std::size_t n_noise_windows,
                           std::uint64_t seed, int samples_per_chip = 1, unsigned threads = 1);

/// Per-window maxima the calibration quantile is taken over.
std::vector<double> noise_window_maxima(const SpreadingCode& preamble, std::size_t window_samples,
                                        std::size_t n_noise_windows, std::uint64_t seed,
                                        int samples_per_chip = 1, unsigned threads = 1);

/// Explicit threshold, or the calibrated one seeded from the master seed.
double resolve_threshold(const ScenarioConfig& cfg, unsigned threads = 1);

SweepResult run_single_link_sweep(const ScenarioConfig& cfg, unsigned threads = 1);

/// One result per UE, in code_rows order.
std::vector<SweepResult> run_multi_ue_sweep(const ScenarioConfig& cfg, unsigned threads = 1);

SweepResult run_coexistence_sweep(const ScenarioConfig& cfg, unsigned threads = 1);

/// One coexistence sweep per entry of interferer_power_grid_db.
std::vector<SweepResult> run_coexistence_power_sweep(const ScenarioConfig& cfg,
                                                     unsigned threads = 1);

/// Sums per-UE results. False alarms belong to the shared stream, so they are
/// taken from the first UE only.
SweepResult pool_results(std::span<const SweepResult> per_ue);

inline constexpr const char* kSweepCsvHeader =
    "sinr_db,detection_rate,det_ci_lo,det_ci_hi,per,per_ci_lo,per_ci_hi,false_alarm_rate,trials";

std::string to_csv(const SweepResult& result);

}  // namespace cdma_iot

#endif  // CDMA_IOT_HARNESS_HPP_
