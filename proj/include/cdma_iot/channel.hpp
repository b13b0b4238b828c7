#ifndef CDMA_IOT_CHANNEL_HPP_
#define CDMA_IOT_CHANNEL_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cdma_iot/signal.hpp"

namespace cdma_iot {

/// Generic CP-OFDM interferer with unit-power QPSK on the occupied
/// subcarriers.
struct OfdmInterfererConfig {
  int fft_size = 64;
  int cp_length = 16;
  std::vector<int> occupied_subcarriers;
  /// Interferer power relative to a unit-power IoT signal.
  double relative_power_db = 0.0;
  std::uint64_t qpsk_seed = 0;

  void validate() const;
};

/// Subcarrier set [0, fft_size).
std::vector<int> all_subcarriers(int fft_size);

struct ChannelConfig {
  /// IoT signal power over noise power in the full sample band.
  double sinr_db = 0.0;
  std::uint64_t seed = 0;
  std::optional<OfdmInterfererConfig> interferer;
  double self_interference_cancellation_db = 30.0;
  /// Per-UE signal power the SINR and interferer level refer to. Measured
  /// from the IoT signal when absent.
  std::optional<double> reference_power;
};

struct UePlacement {
  int ue_id = 0;
  BasebandSignal signal;
  std::size_t offset_samples = 0;
  double gain_db = 0.0;
};

/// Mean |x|^2 over the samples that are not exactly zero; 0 if there are none.
double mean_signal_power(const BasebandSignal& signal);

/// Mean |x|^2 over all samples.
double mean_power(const BasebandSignal& signal);

/// Adds circular complex Gaussian noise of total per-sample variance
/// `noise_power`. Deterministic in `seed`.
BasebandSignal add_noise(const BasebandSignal& signal, double noise_power, std::uint64_t seed);

/// Noise variance P / 10^(sinr_db / 10), where P is mean_signal_power.
/// Throws std::invalid_argument on a zero-power signal or non-finite SINR.
BasebandSignal apply_awgn(const BasebandSignal& signal, double sinr_db, std::uint64_t seed);

/// Sum of gain-scaled placements on a zero stream of `total_length` samples.
/// Throws std::invalid_argument when a placement does not fit.
BasebandSignal superpose(std::span<const UePlacement> placements, std::size_t total_length);

/// CP-OFDM symbols, truncated to `length` samples. Mean power is
/// reference_power * 10^(relative_power_db / 10) in expectation.
BasebandSignal generate_ofdm_interferer(const OfdmInterfererConfig& cfg, std::size_t length,
                                        double reference_power = 1.0);

/// Residual after abstract self-interference cancellation.
BasebandSignal apply_self_interference_cancellation(const BasebandSignal& interferer,
                                                    double cancellation_db);

/// IoT signal + residual interferer + AWGN. Noise is referenced to the IoT
/// signal alone; the interferer is seeded from its own qpsk_seed.
BasebandSignal apply_channel(const BasebandSignal& iot, const ChannelConfig& cfg);

double db_to_power(double db);
double db_to_amplitude(double db);

}  // namespace cdma_iot

#endif  // CDMA_IOT_CHANNEL_HPP_
