#include "cdma_iot/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cdma_iot/rng.hpp"
#include "cdma_iot/spreading.hpp"

namespace cdma_iot {

double db_to_power(double db) { return std::pow(10.0, db / 10.0); }
double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

void OfdmInterfererConfig::validate() const {
  if (!is_power_of_two(fft_size)) throw std::invalid_argument("fft_size must be a power of two");
  if (cp_length < 0 || cp_length > fft_size) {
    throw std::invalid_argument("cp_length must be in [0, fft_size]");
  }
  if (occupied_subcarriers.empty()) throw std::invalid_argument("interferer needs occupied subcarriers");
  for (int k : occupied_subcarriers) {
    if (k < 0 || k >= fft_size) {
      throw std::invalid_argument("subcarrier " + std::to_string(k) + " outside [0, fft_size)");
    }
  }
  if (!std::isfinite(relative_power_db)) throw std::invalid_argument("relative_power_db must be finite");
}

std::vector<int> all_subcarriers(int fft_size) {
  std::vector<int> out(static_cast<std::size_t>(fft_size));
  for (int k = 0; k < fft_size; ++k) out[static_cast<std::size_t>(k)] = k;
  return out;
}

double mean_signal_power(const BasebandSignal& signal) {
  const Eigen::ArrayXd p = signal.samples.array().abs2();
  const auto active = (p > 0.0).count();
  return active ? p.sum() / static_cast<double>(active) : 0.0;
}

double mean_power(const BasebandSignal& signal) {
  return signal.size() ? signal.samples.squaredNorm() / static_cast<double>(signal.size()) : 0.0;
}

BasebandSignal add_noise(const BasebandSignal& signal, double noise_power, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(noise_power / 2.0));
  BasebandSignal out = signal;
  for (Eigen::Index n = 0; n < out.size(); ++n) {
    const double re = gauss(rng);
    const double im = gauss(rng);
    out.samples(n) += std::complex<double>(re, im);
  }
  return out;
}

BasebandSignal apply_awgn(const BasebandSignal& signal, double sinr_db, std::uint64_t seed) {
  if (!std::isfinite(sinr_db)) throw std::invalid_argument("sinr_db must be finite");
  const double power = mean_signal_power(signal);
  if (!(power > 0.0)) throw std::invalid_argument("SINR is undefined for a zero-power signal");
  return add_noise(signal, power / db_to_power(sinr_db), seed);
}

BasebandSignal superpose(std::span<const UePlacement> placements, std::size_t total_length) {
  BasebandSignal out;
  out.samples = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(total_length));
  for (const auto& p : placements) {
    if (p.offset_samples + static_cast<std::size_t>(p.signal.size()) > total_length) {
      throw std::invalid_argument("placement of UE " + std::to_string(p.ue_id) +
                                  " overflows the composite stream");
    }
    out.samples.segment(static_cast<Eigen::Index>(p.offset_samples), p.signal.size()) +=
        db_to_amplitude(p.gain_db) * p.signal.samples;
    out.sample_rate_hz = p.signal.sample_rate_hz;
  }
  return out;
}

BasebandSignal generate_ofdm_interferer(const OfdmInterfererConfig& cfg, std::size_t length,
                                        double reference_power) {
  cfg.validate();
  const int n_fft = cfg.fft_size;
  const auto n_occ = static_cast<Eigen::Index>(cfg.occupied_subcarriers.size());

  // Inverse DFT restricted to the occupied bins, scaled so that unit-modulus
  // symbols give unit mean power over the useful part of each symbol.
  Eigen::MatrixXcd idft(n_fft, n_occ);
  for (int n = 0; n < n_fft; ++n) {
    for (Eigen::Index j = 0; j < n_occ; ++j) {
      const double phase = 2.0 * std::numbers::pi * cfg.occupied_subcarriers[static_cast<std::size_t>(j)] *
                           n / n_fft;
      idft(n, j) = std::polar(1.0, phase);
    }
  }
  idft /= std::sqrt(static_cast<double>(n_occ));

  const double scale = std::sqrt(reference_power * db_to_power(cfg.relative_power_db));
  const double qpsk = std::numbers::sqrt2 / 2.0;
  Rng rng(cfg.qpsk_seed);

  BasebandSignal out;
  out.samples.resize(static_cast<Eigen::Index>(length));
  const Eigen::Index symbol_len = n_fft + cfg.cp_length;
  Eigen::VectorXcd symbols(n_occ);
  Eigen::VectorXcd with_cp(symbol_len);
  for (Eigen::Index pos = 0; pos < static_cast<Eigen::Index>(length); pos += symbol_len) {
    std::uint64_t bits = 0;
    int left = 0;
    for (Eigen::Index j = 0; j < n_occ; ++j) {
      if (left < 2) {
        bits = rng();
        left = 64;
      }
      symbols(j) = {(bits & 1) ? -qpsk : qpsk, (bits & 2) ? -qpsk : qpsk};
      bits >>= 2;
      left -= 2;
    }
    const Eigen::VectorXcd body = scale * (idft * symbols);
    with_cp << body.tail(cfg.cp_length), body;
    const Eigen::Index take = std::min(symbol_len, static_cast<Eigen::Index>(length) - pos);
    out.samples.segment(pos, take) = with_cp.head(take);
  }
  return out;
}

BasebandSignal apply_self_interference_cancellation(const BasebandSignal& interferer,
                                                    double cancellation_db) {
  if (cancellation_db < 0.0) throw std::invalid_argument("cancellation_db must be nonnegative");
  BasebandSignal out = interferer;
  out.samples *= db_to_amplitude(-cancellation_db);
  return out;
}

BasebandSignal apply_channel(const BasebandSignal& iot, const ChannelConfig& cfg) {
  if (!std::isfinite(cfg.sinr_db)) throw std::invalid_argument("sinr_db must be finite");
  const double power = cfg.reference_power ? *cfg.reference_power : mean_signal_power(iot);
  if (!(power > 0.0)) throw std::invalid_argument("SINR is undefined for a zero-power signal");

  BasebandSignal composite = iot;
  if (cfg.interferer) {
    const auto interferer = generate_ofdm_interferer(*cfg.interferer, static_cast<std::size_t>(iot.size()), power);
    composite.samples +=
        apply_self_interference_cancellation(interferer, cfg.self_interference_cancellation_db).samples;
  }
  return add_noise(composite, power / db_to_power(cfg.sinr_db), cfg.seed);
}

}  // namespace cdma_iot
