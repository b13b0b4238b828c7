#include "cdma_iot/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "cdma_iot/modem.hpp"
#include "cdma_iot/receiver.hpp"
#include "cdma_iot/rng.hpp"

namespace cdma_iot {
namespace {

constexpr double kZ95 = 1.959963984540054;

// Runs body(i) for i in [0, n). Work is claimed dynamically; callers write
// results into slots indexed by i, so output does not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned count = std::min<unsigned>(threads, static_cast<unsigned>(n));
  for (unsigned t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi_inclusive) {
  return std::uniform_int_distribution<std::size_t>(lo, hi_inclusive)(rng);
}

MacFrame random_frame(Rng& rng, const SizeRange& payload) {
  MacFrame frame;
  frame.source_address = static_cast<std::uint8_t>(uniform_index(rng, 0, 255));
  frame.payload.resize(uniform_index(rng, payload.min, payload.max));
  for (auto& byte : frame.payload) byte = static_cast<std::uint8_t>(uniform_index(rng, 0, 255));
  return frame;
}

struct SentPacket {
  std::size_t ue = 0;
  int code_row = 0;
  std::size_t start = 0;
  MacFrame frame;
};

bool within(std::size_t a, std::size_t b, std::size_t tol) {
  return (a > b ? a - b : b - a) <= tol;
}

// One trial: every UE transmits, the channel mixes, the receiver scans, and
// each transmitted packet is classified. Returns one count set per UE.
std::vector<GridPointResult> run_trial(const ScenarioConfig& cfg, const std::vector<int>& rows,
                                       const DetectorConfig& detector, double sinr_db,
                                       const std::optional<OfdmInterfererConfig>& interferer,
                                       std::size_t grid_index, std::size_t trial_index) {
  Rng rng(derive_seed(cfg.master_seed, StreamTag::kContent, grid_index, trial_index));
  const std::size_t lead = cfg.lead_samples_max ? uniform_index(rng, 0, cfg.lead_samples_max - 1) : 0;

  std::vector<SentPacket> sent;
  std::vector<UePlacement> placements;
  std::size_t stream_len = 0;
  for (std::size_t u = 0; u < rows.size(); ++u) {
    TxConfig tx = TxConfig::for_row(rows[u]);
    tx.samples_per_chip = cfg.samples_per_chip;

    std::vector<MacFrame> frames;
    for (std::size_t p = 0; p < cfg.packets_per_trial; ++p) frames.push_back(random_frame(rng, cfg.payload_bytes));
    const std::size_t gap = uniform_index(rng, cfg.inter_packet_gap_samples.min, cfg.inter_packet_gap_samples.max);

    std::size_t offset = lead;
    if (rows.size() > 1 && cfg.asynchronous) {
      offset += uniform_index(rng, 0, packet_length_samples(frames.front().payload.size(), tx) - 1);
    }
    const auto starts = packet_train_offsets(frames, gap, tx);
    for (std::size_t p = 0; p < frames.size(); ++p) {
      sent.push_back({u, rows[u], offset + starts[p], frames[p]});
    }
    UePlacement placement;
    placement.ue_id = static_cast<int>(u);
    placement.signal = build_packet_train(frames, gap, tx);
    placement.offset_samples = offset;
    stream_len = std::max(stream_len, offset + static_cast<std::size_t>(placement.signal.size()));
    placements.push_back(std::move(placement));
  }
  stream_len += detector.preamble_samples() + cfg.timing_search_samples;

  ChannelConfig channel;
  channel.sinr_db = sinr_db;
  channel.seed = derive_seed(cfg.master_seed, StreamTag::kNoise, grid_index, trial_index);
  channel.self_interference_cancellation_db = cfg.self_interference_cancellation_db;
  if (rows.size() > 1) channel.reference_power = 1.0;
  if (interferer) {
    channel.interferer = *interferer;
    channel.interferer->qpsk_seed =
        derive_seed(interferer->qpsk_seed, StreamTag::kInterferer, grid_index, trial_index);
  }
  const BasebandSignal stream = apply_channel(superpose(placements, stream_len), channel);
  const auto events = detect_and_decode(stream, detector);

  std::vector<GridPointResult> per_ue(rows.size());
  for (const auto& pkt : sent) {
    auto& r = per_ue[pkt.ue];
    ++r.packets;
    bool correct = false, wrong = false, seen = false;
    for (const auto& e : events) {
      if (!within(e.start_index, pkt.start, cfg.detection_tolerance_samples)) continue;
      seen = true;
      if (e.decoded && e.matched_code_row == pkt.code_row) {
        if (*e.decoded == pkt.frame) correct = true;
        else wrong = true;
      }
    }
    if (correct) ++r.decoded_correct;
    else if (wrong) ++r.decoded_wrong;
    else if (seen) ++r.undecoded_detected;
    else ++r.missed;
  }

  std::size_t false_alarms = 0;
  for (const auto& e : events) {
    const bool matched = std::any_of(sent.begin(), sent.end(), [&](const SentPacket& pkt) {
      return within(e.start_index, pkt.start, cfg.detection_tolerance_samples);
    });
    if (!matched) ++false_alarms;
  }
  const std::size_t windows = scan_window_count(stream_len, detector);
  for (auto& r : per_ue) {
    r.sinr_db = sinr_db;
    r.false_alarms = false_alarms;
    r.windows = windows;
  }
  return per_ue;
}

std::vector<SweepResult> run_sweep(const ScenarioConfig& cfg,
                                   const std::optional<OfdmInterfererConfig>& interferer,
                                   double threshold, unsigned threads) {
  const std::vector<int> rows = cfg.resolved_code_rows();
  DetectorConfig detector;
  for (int row : rows) detector.candidate_codes.push_back(hadamard_row(kDefaultOrder, row));
  detector.samples_per_chip = cfg.samples_per_chip;
  detector.window_samples = cfg.window_samples;
  detector.threshold = threshold;
  detector.detection_tolerance_samples = cfg.detection_tolerance_samples;
  detector.timing_search_samples = cfg.timing_search_samples;
  detector.validate();

  std::vector<SweepResult> results(rows.size());
  for (std::size_t u = 0; u < rows.size(); ++u) {
    results[u].threshold = threshold;
    results[u].code_row = rows[u];
  }

  const std::size_t n_trials = cfg.trials_per_point;
  for (std::size_t g = 0; g < cfg.sinr_grid_db.size(); ++g) {
    std::vector<std::vector<GridPointResult>> outcomes(n_trials);
    parallel_for(n_trials, threads, [&](std::size_t t) {
      outcomes[t] = run_trial(cfg, rows, detector, cfg.sinr_grid_db[g], interferer, g, t);
    });
    for (std::size_t u = 0; u < rows.size(); ++u) {
      GridPointResult point;
      point.sinr_db = cfg.sinr_grid_db[g];
      for (const auto& trial : outcomes) point += trial[u];
      results[u].points.push_back(point);
    }
  }
  return results;
}

}  // namespace

GridPointResult& GridPointResult::operator+=(const GridPointResult& other) {
  packets += other.packets;
  decoded_correct += other.decoded_correct;
  decoded_wrong += other.decoded_wrong;
  undecoded_detected += other.undecoded_detected;
  missed += other.missed;
  false_alarms += other.false_alarms;
  windows += other.windows;
  return *this;
}

RateCi wilson_interval(std::size_t successes, std::size_t n) {
  if (n == 0) return {0.0, 0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = kZ95 * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

void ScenarioConfig::validate() const {
  if (n_ues < 1 || n_ues > kMaxUes) throw std::invalid_argument("n_ues must be in [1, 62]");
  if (!code_rows.empty()) {
    if (code_rows.size() != static_cast<std::size_t>(n_ues)) {
      throw std::invalid_argument("code_rows must list exactly n_ues rows");
    }
    std::vector<int> sorted = code_rows;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("code_rows must be distinct");
    }
    for (int row : code_rows) {
      if (row < kFirstUeRow || row >= kDefaultOrder) {
        throw std::invalid_argument("code rows must be in [2, 63]");
      }
    }
  }
  if (payload_bytes.min > payload_bytes.max || payload_bytes.max > kMaxPayloadBytes) {
    throw std::invalid_argument("payload_bytes must be a range within [0, 15]");
  }
  if (inter_packet_gap_samples.min > inter_packet_gap_samples.max) {
    throw std::invalid_argument("inter_packet_gap_samples range is inverted");
  }
  if (sinr_grid_db.empty()) throw std::invalid_argument("sinr_grid_db must not be empty");
  if (!std::is_sorted(sinr_grid_db.begin(), sinr_grid_db.end())) {
    throw std::invalid_argument("sinr_grid_db must be sorted");
  }
  for (double s : sinr_grid_db) {
    if (!std::isfinite(s)) throw std::invalid_argument("sinr_grid_db values must be finite");
  }
  if (trials_per_point == 0) throw std::invalid_argument("trials_per_point must be positive");
  if (packets_per_trial == 0) throw std::invalid_argument("packets_per_trial must be positive");
  if (interferer) interferer->validate();
  if (!interferer_power_grid_db.empty() && !interferer) {
    throw std::invalid_argument("interferer power grid given without an interferer");
  }
  if (self_interference_cancellation_db < 0.0) {
    throw std::invalid_argument("self_interference_cancellation_db must be nonnegative");
  }
  if (threshold && !(*threshold > 0.0 && *threshold <= 1.0)) {
    throw std::invalid_argument("threshold must be in (0, 1]");
  }
  if (!(false_alarm_target > 0.0 && false_alarm_target < 1.0)) {
    throw std::invalid_argument("false_alarm_target must be in (0, 1)");
  }
  if (samples_per_chip < 1) throw std::invalid_argument("samples_per_chip must be positive");
  if (window_samples < static_cast<std::size_t>(kDefaultOrder * samples_per_chip)) {
    throw std::invalid_argument("window_samples must hold one preamble");
  }
}

std::vector<int> ScenarioConfig::resolved_code_rows() const {
  if (!code_rows.empty()) return code_rows;
  std::vector<int> rows;
  for (int u = 0; u < n_ues; ++u) rows.push_back(kFirstUeRow + u);
  return rows;
}

std::size_t ScenarioConfig::resolved_calibration_windows() const {
  if (calibration_windows) return calibration_windows;
  return static_cast<std::size_t>(std::ceil(10.0 / false_alarm_target - 1e-9));
}

std::vector<double> noise_window_maxima(const SpreadingCode& preamble, std::size_t window_samples,
                                        std::size_t n_noise_windows, std::uint64_t seed,
                                        int samples_per_chip, unsigned threads) {
  std::vector<double> maxima(n_noise_windows);
  parallel_for(n_noise_windows, threads, [&](std::size_t w) {
    // Normalized correlation is scale invariant and uses only the real part,
    // so unit-variance real noise stands in for any complex noise level.
    Rng rng(derive_seed(seed, StreamTag::kCalibration, w));
    std::normal_distribution<double> gauss;
    Eigen::VectorXd noise(static_cast<Eigen::Index>(window_samples));
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = gauss(rng);
    maxima[w] = correlate_preamble(noise, preamble, samples_per_chip).maxCoeff();
  });
  return maxima;
}

double calibrate_threshold(const SpreadingCode& preamble, std::size_t window_samples,
                           double false_alarm_target, std::size_t n_noise_windows,
                           std::uint64_t seed, int samples_per_chip, unsigned threads) {
  if (!(false_alarm_target > 0.0 && false_alarm_target < 1.0)) {
    throw std::invalid_argument("false alarm target must be in (0, 1)");
  }
  if (static_cast<double>(n_noise_windows) * false_alarm_target < 10.0 - 1e-9) {
    throw std::invalid_argument("need at least 10 / false_alarm_target noise windows");
  }
  std::vector<double> maxima =
      noise_window_maxima(preamble, window_samples, n_noise_windows, seed, samples_per_chip, threads);
  // Smallest order statistic with at most target * n windows strictly above it.
  const auto allowed = static_cast<std::size_t>(
      std::floor(false_alarm_target * static_cast<double>(n_noise_windows) + 1e-9));
  const std::size_t index = n_noise_windows - allowed - 1;
  std::nth_element(maxima.begin(), maxima.begin() + static_cast<std::ptrdiff_t>(index), maxima.end());
  return maxima[index];
}

double resolve_threshold(const ScenarioConfig& cfg, unsigned threads) {
  if (cfg.threshold) return *cfg.threshold;
  return calibrate_threshold(hadamard_row(kDefaultOrder, kPreambleRow), cfg.window_samples,
                             cfg.false_alarm_target, cfg.resolved_calibration_windows(),
                             derive_seed(cfg.master_seed, StreamTag::kCalibration, 0),
                             cfg.samples_per_chip, threads);
}

SweepResult run_single_link_sweep(const ScenarioConfig& cfg, unsigned threads) {
  cfg.validate();
  if (cfg.n_ues != 1) throw std::invalid_argument("single-link sweep needs n_ues = 1");
  return run_sweep(cfg, cfg.interferer, resolve_threshold(cfg, threads), threads).front();
}

std::vector<SweepResult> run_multi_ue_sweep(const ScenarioConfig& cfg, unsigned threads) {
  cfg.validate();
  if (cfg.n_ues < 2) throw std::invalid_argument("multi-UE sweep needs n_ues >= 2");
  return run_sweep(cfg, cfg.interferer, resolve_threshold(cfg, threads), threads);
}

SweepResult run_coexistence_sweep(const ScenarioConfig& cfg, unsigned threads) {
  cfg.validate();
  if (!cfg.interferer) throw std::invalid_argument("coexistence sweep needs an interferer");
  auto per_ue = run_sweep(cfg, cfg.interferer, resolve_threshold(cfg, threads), threads);
  return per_ue.size() == 1 ? per_ue.front() : pool_results(per_ue);
}

std::vector<SweepResult> run_coexistence_power_sweep(const ScenarioConfig& cfg, unsigned threads) {
  cfg.validate();
  if (!cfg.interferer) throw std::invalid_argument("coexistence sweep needs an interferer");
  const double threshold = resolve_threshold(cfg, threads);
  std::vector<double> powers = cfg.interferer_power_grid_db;
  if (powers.empty()) powers.push_back(cfg.interferer->relative_power_db);

  std::vector<SweepResult> out;
  for (double p : powers) {
    OfdmInterfererConfig interferer = *cfg.interferer;
    interferer.relative_power_db = p;
    auto per_ue = run_sweep(cfg, interferer, threshold, threads);
    out.push_back(per_ue.size() == 1 ? per_ue.front() : pool_results(per_ue));
  }
  return out;
}

SweepResult pool_results(std::span<const SweepResult> per_ue) {
  if (per_ue.empty()) throw std::invalid_argument("nothing to pool");
  SweepResult pooled = per_ue.front();
  pooled.code_row.reset();
  for (std::size_t u = 1; u < per_ue.size(); ++u) {
    for (std::size_t g = 0; g < pooled.points.size(); ++g) {
      GridPointResult add = per_ue[u].points[g];
      add.false_alarms = 0;
      add.windows = 0;
      pooled.points[g] += add;
    }
  }
  return pooled;
}

std::string to_csv(const SweepResult& result) {
  std::string out = kSweepCsvHeader;
  out += '\n';
  char line[256];
  for (const auto& p : result.points) {
    const RateCi det = p.detection_rate();
    const RateCi per = p.packet_error_rate();
    std::snprintf(line, sizeof line, "%g,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.8f,%zu\n", p.sinr_db, det.rate,
                  det.lo, det.hi, per.rate, per.lo, per.hi, p.false_alarm_rate(), p.packets);
    out += line;
  }
  return out;
}

}  // namespace cdma_iot
