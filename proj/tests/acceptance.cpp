// Acceptance run: one PASS/FAIL line per criterion. Criterion 11 is reported
// but does not affect the exit status.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cdma_iot/channel.hpp"
#include "cdma_iot/framing.hpp"
#include "cdma_iot/harness.hpp"
#include "cdma_iot/modem.hpp"
#include "cdma_iot/receiver.hpp"
#include "oracles.hpp"

using namespace cdma_iot;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

MacFrame random_frame(std::mt19937_64& rng, std::size_t len) {
  std::uniform_int_distribution<int> byte(0, 255);
  MacFrame f;
  f.source_address = static_cast<std::uint8_t>(byte(rng));
  f.payload.resize(len);
  for (auto& b : f.payload) b = static_cast<std::uint8_t>(byte(rng));
  return f;
}

double calibrated_threshold() {
  static const double threshold = [] {
    ScenarioConfig cfg;
    cfg.master_seed = kSeed;
    cfg.false_alarm_target = 1e-4;
    return resolve_threshold(cfg, worker_threads());
  }();
  return threshold;
}

Verdict per_claim() {
  ScenarioConfig cfg;
  cfg.master_seed = kSeed;
  cfg.payload_bytes = {15, 15};
  cfg.sinr_grid_db = {0, 1, 2, 3, 4, 5};
  cfg.trials_per_point = 10000;
  cfg.threshold = calibrated_threshold();
  const auto r = run_single_link_sweep(cfg, worker_threads());
  bool ok = true;
  std::string detail = fmt("threshold=%.4f", r.threshold);
  for (const auto& p : r.points) {
    const double per = p.packet_error_rate().rate;
    ok = ok && per <= 0.05;
    detail += fmt(" | %gdB PER=%.4f", p.sinr_db, per);
  }
  const auto& zero = r.points.front();
  ok = ok && zero.missed > zero.decoded_wrong;
  detail += fmt(" | 0dB missed=%zu wrong=%zu undecoded=%zu", zero.missed, zero.decoded_wrong,
                zero.undecoded_detected);

  // Diagnostic only: the error breakdown where errors actually occur.
  cfg.sinr_grid_db = {-3.0};
  const auto low = run_single_link_sweep(cfg, worker_threads()).points.front();
  detail += fmt(" | diagnostic -3dB PER=%.4f missed=%zu wrong=%zu undecoded=%zu",
                low.packet_error_rate().rate, low.missed, low.decoded_wrong, low.undecoded_detected);
  return {ok, detail};
}

Verdict data_rate() {
  const double rate = nominal_bit_rate(TxConfig::for_row(2), 1e6);
  return {rate == 15625.0, fmt("nominal bit rate %.1f b/s", rate)};
}

Verdict packet_size() {
  const TxConfig tx = TxConfig::for_row(2);
  const std::size_t len = packet_length_samples(kMaxPayloadBytes, tx);
  const std::size_t formula = 64 + 64 * (32 + 8 * kMaxPayloadBytes);
  const auto built = static_cast<std::size_t>(build_packet_signal(MacFrame{1, std::vector<std::uint8_t>(15, 0)}, tx).size());
  const double rel = std::abs(static_cast<double>(len) - 10000.0) / 10000.0;
  return {len == 9792 && len == formula && built == len && rel <= 0.03,
          fmt("max packet %zu samples, %.2f%% from 10000", len, 100.0 * rel)};
}

Verdict orthogonality() {
  const Eigen::MatrixXi h = oracle::sylvester(64);
  bool dots_ok = true;
  for (int i = 0; i < 64; ++i) {
    const Eigen::VectorXi ci = hadamard_row(64, i).chips().cast<int>();
    dots_ok = dots_ok && ci == h.row(i).transpose();
    for (int j = 0; j < 64; ++j) {
      dots_ok = dots_ok && ci.dot(hadamard_row(64, j).chips().cast<int>()) == (i == j ? 64 : 0);
    }
  }
  ScenarioConfig cfg;
  cfg.master_seed = kSeed + 4;
  cfg.n_ues = 2;
  cfg.asynchronous = false;
  cfg.payload_bytes = {0, 15};
  cfg.sinr_grid_db = {300.0};
  cfg.trials_per_point = 1000;
  cfg.threshold = calibrated_threshold();
  const auto pooled = pool_results(run_multi_ue_sweep(cfg, worker_threads())).points.front();
  return {dots_ok && pooled.packet_errors() == 0,
          fmt("4096 row pairs %s; two-UE synchronized PER=%zu/%zu", dots_ok ? "exact" : "WRONG",
              pooled.packet_errors(), pooled.packets)};
}

Verdict loopback() {
  std::mt19937_64 rng(kSeed + 5);
  std::uniform_int_distribution<std::size_t> len(0, kMaxPayloadBytes), lead(0, 2000);
  DetectorConfig det;
  det.candidate_codes = code_range(kFirstUeRow, 63);
  det.threshold = calibrated_threshold();
  std::size_t detected = 0, exact = 0;
  for (int i = 0; i < 1000; ++i) {
    const int row = kFirstUeRow + i % 62;
    const MacFrame f = random_frame(rng, len(rng));
    const auto packet = build_packet_signal(f, TxConfig::for_row(row));
    const std::size_t at = lead(rng);
    BasebandSignal s;
    s.samples = Eigen::VectorXcd::Zero(packet.size() + static_cast<Eigen::Index>(at + 100));
    s.samples.segment(static_cast<Eigen::Index>(at), packet.size()) = packet.samples;
    const auto events = detect_and_decode(s, det);
    if (events.size() == 1 && events[0].start_index == at) {
      ++detected;
      if (events[0].decoded == f && events[0].matched_code_row == row) ++exact;
    }
  }
  return {detected == 1000 && exact == 1000,
          fmt("detected at exact offset %zu/1000, bit-exact %zu/1000, 62 codes", detected, exact)};
}

Verdict cfar() {
  const double thr = calibrated_threshold();
  const auto pre = hadamard_row(64, kPreambleRow);
  const auto maxima = noise_window_maxima(pre, 10000, 10000, kSeed + 61, 1, worker_threads());
  const auto above = std::count_if(maxima.begin(), maxima.end(), [&](double m) { return m > thr; });
  const double fa = static_cast<double>(above) / 10000.0;

  DetectorConfig det;
  det.candidate_codes = code_range(kFirstUeRow, 63);
  det.threshold = thr;
  std::size_t events = 0, decodes = 0;
  constexpr std::size_t kChunk = 1000000;
  for (std::uint64_t c = 0; c < 10; ++c) {
    BasebandSignal z;
    z.samples = Eigen::VectorXcd::Zero(kChunk);
    for (const auto& e : detect_and_decode(add_noise(z, 1.0, kSeed + 620 + c), det)) {
      ++events;
      if (e.decoded) ++decodes;
    }
  }
  std::string detail =
      fmt("held-out FA=%.1e (%ld/10000 windows); 1e7 noise samples: %zu peaks, %zu CRC-valid decodes", fa,
          static_cast<long>(above), events, decodes);

  // Diagnostic only: a low threshold puts the decoder on many noise peaks.
  det.threshold = 0.42;
  std::size_t stress_events = 0, stress_decodes = 0;
  for (std::uint64_t c = 0; c < 2; ++c) {
    BasebandSignal z;
    z.samples = Eigen::VectorXcd::Zero(kChunk);
    for (const auto& e : detect_and_decode(add_noise(z, 1.0, kSeed + 640 + c), det)) {
      ++stress_events;
      if (e.decoded) ++stress_decodes;
    }
  }
  detail += fmt(" | diagnostic threshold 0.42 over 2e6 samples: %zu peaks, %zu CRC-valid decodes", stress_events,
                stress_decodes);
  return {fa <= 2e-4 && decodes == 0, detail};
}

Verdict crc_oracle() {
  const std::string check = "123456789";
  const std::vector<std::uint8_t> bytes(check.begin(), check.end());
  bool ok = crc16_ccitt_false_bytes(bytes) == 0x29B1 &&
            oracle::crc16_long_division(oracle::bytes_to_bits(bytes)) == 0x29B1;
  std::mt19937_64 rng(kSeed + 7);
  std::uniform_int_distribution<int> len(0, 512), bit(0, 1);
  std::size_t mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    BitVector bits(static_cast<std::size_t>(len(rng)));
    for (auto& b : bits) b = static_cast<std::uint8_t>(bit(rng));
    if (crc16_ccitt_false(bits) != oracle::crc16_long_division(bits)) ++mismatches;
  }
  ok = ok && mismatches == 0;
  return {ok, fmt("check value 0x%04X; %zu/10000 mismatches vs long division",
                  crc16_ccitt_false_bytes(bytes), mismatches)};
}

Verdict channel_statistics() {
  bool ok = true;
  std::string detail;
  const auto packet = build_packet_signal(MacFrame{3, std::vector<std::uint8_t>(15, 0x5A)}, TxConfig::for_row(9));
  BasebandSignal s;
  s.samples = packet.samples.replicate<103, 1>().head(1000000);
  for (double target : {-5.0, 0.0, 10.0}) {
    const auto y = apply_awgn(s, target, kSeed + 80 + static_cast<std::uint64_t>(target + 10));
    const double noise = (y.samples - s.samples).squaredNorm() / static_cast<double>(s.size());
    const double measured = 10.0 * std::log10(mean_signal_power(s) / noise);
    ok = ok && std::abs(measured - target) <= 0.05;
    detail += fmt("SINR %g->%.3f dB; ", target, measured);
  }
  for (const std::vector<int>& occupied : {all_subcarriers(64), std::vector<int>{5}}) {
    for (double rel : {-10.0, 0.0, 10.0}) {
      OfdmInterfererConfig cfg;
      cfg.occupied_subcarriers = occupied;
      cfg.relative_power_db = rel;
      cfg.qpsk_seed = kSeed + 81;
      const double p = mean_power(generate_ofdm_interferer(cfg, 1000000));
      const double err = p / db_to_power(rel) - 1.0;
      ok = ok && std::abs(err) <= 0.01;
      detail += fmt("OFDM[%zu sc] %gdB err=%+.3f%%; ", occupied.size(), rel, 100.0 * err);
    }
  }
  return {ok, detail};
}

GridPointResult coexistence_point(const std::vector<int>& occupied, double relative_db, std::size_t trials) {
  ScenarioConfig cfg;
  cfg.master_seed = kSeed + 9;
  cfg.sinr_grid_db = {10.0};
  cfg.trials_per_point = trials;
  cfg.threshold = calibrated_threshold();
  cfg.self_interference_cancellation_db = 0.0;
  OfdmInterfererConfig i;
  i.occupied_subcarriers = occupied;
  i.relative_power_db = relative_db;
  i.qpsk_seed = kSeed + 90;
  cfg.interferer = i;
  return run_coexistence_sweep(cfg, worker_threads()).points.front();
}

Verdict coexistence() {
  const std::vector<int> narrow{5};
  const auto n = coexistence_point(narrow, 3.0, 5000).packet_error_rate();
  const auto w = coexistence_point(all_subcarriers(64), 3.0, 5000).packet_error_rate();
  std::string detail = fmt("+3 dB interferer, SINR 10 dB, no cancellation: narrow PER=%.4f [%.4f,%.4f] "
                           "full PER=%.4f [%.4f,%.4f]",
                           n.rate, n.lo, n.hi, w.rate, w.lo, w.hi);
  detail += " | profile (500 trials):";
  for (double rel : {-3.0, 0.0, 6.0, 10.0}) {
    detail += fmt(" %gdB narrow=%.3f full=%.3f", rel, coexistence_point(narrow, rel, 500).packet_error_rate().rate,
                  coexistence_point(all_subcarriers(64), rel, 500).packet_error_rate().rate);
  }
  return {n.rate < w.rate && n.hi < w.lo, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / "cdma_iot_acceptance";
  fs::create_directories(dir);
  struct Case {
    const char* name;
    const char* config;
  };
  const Case cases[] = {
      {"single", "sinr_grid_db=-4,-2,0,2\ntrials_per_point=300\nmaster_seed=77\npayload_bytes=0-15\n"
                 "calibration_windows=2000\nfalse_alarm_target=0.005\n"},
      {"multi", "n_ues=4\nsinr_grid_db=0,6\ntrials_per_point=100\nmaster_seed=78\nthreshold=0.64\n"},
      {"coex", "sinr_grid_db=3\ntrials_per_point=100\nmaster_seed=79\nthreshold=0.64\ninterferer=ofdm\n"
               "ofdm_relative_power_db=-3,3\n"},
  };
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const fs::path cfg = dir / (std::string(c.name) + ".cfg");
    std::ofstream(cfg) << c.config;
    std::string outputs[2];
    int rc = 0;
    for (int k = 0; k < 2; ++k) {
      const fs::path csv = dir / fmt("%s_t%d.csv", c.name, k == 0 ? 1 : 8);
      const std::string cmd = std::string(CDMA_IOT_CLI_PATH) + " sweep --config " + cfg.string() + " --out " +
                              csv.string() + " --threads " + (k == 0 ? "1" : "8") + " > /dev/null";
      rc |= std::system(cmd.c_str());
      outputs[k] = slurp(csv);
    }
    const bool same = rc == 0 && !outputs[0].empty() && outputs[0] == outputs[1];
    ok = ok && same;
    detail += fmt("%s %s (%zu bytes); ", c.name, same ? "identical" : "DIFFERENT", outputs[0].size());
  }
  return {ok, detail};
}

Verdict throughput() {
  std::mt19937_64 rng(kSeed + 11);
  std::normal_distribution<double> g;
  const Eigen::VectorXd x = Eigen::VectorXd::NullaryExpr(10000000, [&] { return g(rng); });
  const auto pre = hadamard_row(64, kPreambleRow);
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::VectorXd rho = correlate_preamble(x, pre);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double rate = static_cast<double>(x.size()) / seconds;
  return {rate >= 1e6, fmt("%.2e samples/s single-threaded (%.1f us per 10000-sample window, max rho %.3f)",
                           rate, 1e6 * 10000.0 / rate, rho.maxCoeff())};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
    bool gating;
  };
  const std::vector<Criterion> criteria = {
      {1, "PER <= 5% over 0..5 dB, misses dominate at 0 dB", per_claim, true},
      {2, "nominal data rate 15625 b/s", data_rate, true},
      {3, "max packet length 9792 samples", packet_size, true},
      {4, "orthogonality and synchronized two-UE decode", orthogonality, true},
      {5, "noiseless loopback completeness", loopback, true},
      {6, "CFAR calibration and no false decodes", cfar, true},
      {7, "CRC oracle equivalence", crc_oracle, true},
      {8, "channel statistics", channel_statistics, true},
      {9, "narrowband interferer rejection", coexistence, true},
      {10, "thread-count determinism of sweep CSV", determinism, true},
      {11, "correlation throughput (non-gating)", throughput, false},
  };

  std::printf("calibrated threshold at FA 1e-4: %.6f\n", calibrated_threshold());
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s #%d %s [%.1fs]: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, s, v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass && c.gating) ++failures;
  }
  std::printf("%d gating criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
