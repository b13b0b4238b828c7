// cdma-iot: transmit, receive, calibrate and sweep the CDMA IoT uplink.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cdma_iot/channel.hpp"
#include "cdma_iot/framing.hpp"
#include "cdma_iot/harness.hpp"
#include "cdma_iot/io.hpp"
#include "cdma_iot/modem.hpp"
#include "cdma_iot/receiver.hpp"
#include "cdma_iot/scenario_file.hpp"

namespace {

using namespace cdma_iot;

constexpr int kExitOk = 0;
constexpr int kExitNoFrames = 1;
constexpr int kExitError = 2;

std::vector<std::uint8_t> parse_hex(std::string text) {
  if (text.rfind("0x", 0) == 0 || text.rfind("0X", 0) == 0) text = text.substr(2);
  if (text.size() % 2 != 0) throw std::invalid_argument("hex payload needs an even number of digits");
  std::vector<std::uint8_t> bytes;
  for (std::size_t i = 0; i < text.size(); i += 2) {
    const std::string pair = text.substr(i, 2);
    if (pair.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos) {
      throw std::invalid_argument("bad hex digits '" + pair + "'");
    }
    bytes.push_back(static_cast<std::uint8_t>(std::stoul(pair, nullptr, 16)));
  }
  return bytes;
}

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  char buf[3];
  for (auto b : bytes) {
    std::snprintf(buf, sizeof buf, "%02x", b);
    out += buf;
  }
  return out;
}

int parse_address(const std::string& text) {
  std::size_t used = 0;
  const unsigned long v = std::stoul(text, &used, 0);
  if (used != text.size()) throw std::invalid_argument("bad address '" + text + "'");
  if (v > 255) throw std::invalid_argument("address must be in [0, 255]");
  return static_cast<int>(v);
}

// "2,5,7-9" -> {2, 5, 7, 8, 9}
std::vector<int> parse_rows(const std::string& text) {
  std::vector<int> rows;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto dash = item.find('-');
    const int lo = std::stoi(item.substr(0, dash));
    const int hi = dash == std::string::npos ? lo : std::stoi(item.substr(dash + 1));
    for (int r = lo; r <= hi; ++r) rows.push_back(r);
  }
  if (rows.empty()) throw std::invalid_argument("no code rows given");
  return rows;
}

std::string event_line(const DetectionEvent& e) {
  char buf[160];
  if (e.decoded) {
    std::snprintf(buf, sizeof buf, "t=%zu peak=%.4f code=%d addr=0x%02x len=%zu crc=ok", e.start_index,
                  e.peak_value, *e.matched_code_row, e.decoded->source_address, e.decoded->payload.size());
  } else {
    std::snprintf(buf, sizeof buf, "t=%zu peak=%.4f code=- addr=- len=- crc=%s", e.start_index, e.peak_value,
                  e.status == DecodeStatus::kTruncated ? "-" : "fail");
  }
  return buf;
}

std::string frame_line(const MacFrame& f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "addr=0x%02x len=%zu payload=", f.source_address, f.payload.size());
  return std::string(buf) + to_hex(f.payload) + " crc=ok";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string sibling_path(const std::string& path, const std::string& tag) {
  const std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + "." + tag + p.extension().string())).string();
}

struct TxArgs {
  std::string addr = "0";
  std::string payload;
  int code = kFirstUeRow;
  std::size_t gap = 0;
  std::size_t count = 1;
  std::size_t lead = 0;
  int spc = 1;
  double amplitude = 1.0;
  std::optional<double> sinr_db;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_tx(const TxArgs& a) {
  TxConfig tx = TxConfig::for_row(a.code);
  tx.samples_per_chip = a.spc;
  tx.amplitude = a.amplitude;
  tx.validate();

  MacFrame frame{static_cast<std::uint8_t>(parse_address(a.addr)), parse_hex(a.payload)};
  encode_frame(frame);  // range checks
  const std::vector<MacFrame> frames(a.count, frame);
  BasebandSignal signal = build_packet_train(frames, a.gap, tx);
  if (a.lead) {
    Eigen::VectorXcd padded = Eigen::VectorXcd::Zero(signal.size() + static_cast<Eigen::Index>(a.lead));
    padded.tail(signal.size()) = signal.samples;
    signal.samples = std::move(padded);
  }
  if (a.sinr_db) signal = apply_awgn(signal, *a.sinr_db, a.seed);
  write_iq_file(a.out, signal);
  std::printf("samples=%lld bit_rate=%.1f\n", static_cast<long long>(signal.size()),
              nominal_bit_rate(tx, signal.sample_rate_hz));
  return kExitOk;
}

struct RxArgs {
  std::string in;
  std::string codes = "2-63";
  std::string threshold = "auto";
  double fa_target = kDefaultFalseAlarmTarget;
  std::size_t calibration_windows = 0;
  std::size_t window = kDefaultWindowSamples;
  std::size_t search = 16;
  int spc = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool frames = false;
};

int cmd_rx(const RxArgs& a) {
  BasebandSignal stream;
  try {
    stream = read_iq_file(a.in);
  } catch (const IqFormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }

  DetectorConfig cfg;
  for (int row : parse_rows(a.codes)) cfg.candidate_codes.push_back(hadamard_row(kDefaultOrder, row));
  cfg.samples_per_chip = a.spc;
  cfg.window_samples = a.window;
  cfg.timing_search_samples = a.search;
  if (a.threshold == "auto") {
    const std::size_t windows =
        a.calibration_windows ? a.calibration_windows
                              : static_cast<std::size_t>(std::ceil(10.0 / a.fa_target - 1e-9));
    cfg.threshold = calibrate_threshold(cfg.preamble_code, a.window, a.fa_target, windows, a.seed, a.spc,
                                        a.threads);
  } else {
    cfg.threshold = std::stod(a.threshold);
  }

  std::size_t decoded = 0;
  for (const auto& e : detect_and_decode(stream, cfg)) {
    if (e.decoded) ++decoded;
    if (!a.frames) std::cout << event_line(e) << '\n';
    else if (e.decoded) std::cout << frame_line(*e.decoded) << '\n';
  }
  return decoded ? kExitOk : kExitNoFrames;
}

struct SweepArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

void print_summary(const SweepResult& r) {
  for (const auto& p : r.points) {
    std::printf("sinr_db=%g detection=%.4f per=%.4f false_alarm=%.2e packets=%zu\n", p.sinr_db,
                p.detection_rate().rate, p.packet_error_rate().rate, p.false_alarm_rate(), p.packets);
  }
}

int cmd_sweep(const SweepArgs& a) {
  ScenarioConfig cfg = load_scenario(a.config);
  if (a.seed) cfg.master_seed = *a.seed;

  if (cfg.interferer) {
    const auto results = run_coexistence_power_sweep(cfg, a.threads);
    write_text(a.out, to_csv(results.front()));
    if (cfg.interferer_power_grid_db.size() > 1) {
      for (std::size_t i = 0; i < results.size(); ++i) {
        char tag[48];
        std::snprintf(tag, sizeof tag, "rp%gdB", cfg.interferer_power_grid_db[i]);
        write_text(sibling_path(a.out, tag), to_csv(results[i]));
        std::printf("# relative_power_db=%g threshold=%.6f\n", cfg.interferer_power_grid_db[i],
                    results[i].threshold);
        print_summary(results[i]);
      }
    } else {
      std::printf("# threshold=%.6f\n", results.front().threshold);
      print_summary(results.front());
    }
  } else if (cfg.n_ues > 1) {
    const auto per_ue = run_multi_ue_sweep(cfg, a.threads);
    const SweepResult pooled = pool_results(per_ue);
    write_text(a.out, to_csv(pooled));
    for (const auto& r : per_ue) {
      write_text(sibling_path(a.out, "ue" + std::to_string(*r.code_row)), to_csv(r));
      std::printf("# ue code=%d threshold=%.6f\n", *r.code_row, r.threshold);
      print_summary(r);
    }
  } else {
    const SweepResult r = run_single_link_sweep(cfg, a.threads);
    write_text(a.out, to_csv(r));
    std::printf("# threshold=%.6f\n", r.threshold);
    print_summary(r);
  }
  return kExitOk;
}

struct CalibrateArgs {
  std::size_t window = kDefaultWindowSamples;
  double fa_target = kDefaultFalseAlarmTarget;
  std::size_t windows = 0;
  std::uint64_t seed = 0;
  int spc = 1;
  unsigned threads = 1;
};

int cmd_calibrate(const CalibrateArgs& a) {
  const std::size_t windows =
      a.windows ? a.windows : static_cast<std::size_t>(std::ceil(10.0 / a.fa_target - 1e-9));
  const double threshold = calibrate_threshold(hadamard_row(kDefaultOrder, kPreambleRow), a.window,
                                               a.fa_target, windows, a.seed, a.spc, a.threads);
  std::printf("threshold=%.6f\n", threshold);
  std::printf("# window=%zu fa_target=%g noise_windows=%zu seed=%llu\n", a.window, a.fa_target, windows,
              static_cast<unsigned long long>(a.seed));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CDMA-underlay IoT uplink link simulator"};
  app.set_version_flag("--version", std::string("cdma-iot ") + CDMA_IOT_VERSION);
  app.require_subcommand(1);

  TxArgs tx;
  auto* tx_cmd = app.add_subcommand("tx", "Write a packet train to an IQ file");
  tx_cmd->add_option("--addr", tx.addr, "Source address (decimal or 0x hex)");
  tx_cmd->add_option("--payload", tx.payload, "Payload bytes as hex, at most 15 bytes");
  tx_cmd->add_option("--code", tx.code, "UE code row (2..63)");
  tx_cmd->add_option("--gap", tx.gap, "Zero samples between packets");
  tx_cmd->add_option("--count", tx.count, "Number of packets")->check(CLI::PositiveNumber);
  tx_cmd->add_option("--lead", tx.lead, "Zero samples before the first packet");
  tx_cmd->add_option("--spc", tx.spc, "Samples per chip")->check(CLI::PositiveNumber);
  tx_cmd->add_option("--amplitude", tx.amplitude, "Chip amplitude");
  tx_cmd->add_option("--sinr-db", tx.sinr_db, "Add AWGN at this SINR");
  tx_cmd->add_option("--seed", tx.seed, "Noise seed");
  tx_cmd->add_option("--out", tx.out, "Output IQ path")->required();

  RxArgs rx;
  auto* rx_cmd = app.add_subcommand("rx", "Detect and decode packets in an IQ file");
  rx_cmd->add_option("--in", rx.in, "Input IQ path")->required();
  rx_cmd->add_option("--codes", rx.codes, "Candidate code rows, e.g. 2,5,7-9");
  rx_cmd->add_option("--threshold", rx.threshold, "Normalized threshold in (0,1] or 'auto'");
  rx_cmd->add_option("--fa-target", rx.fa_target, "False-alarm target per window for auto");
  rx_cmd->add_option("--calibration-windows", rx.calibration_windows, "Noise windows for auto");
  rx_cmd->add_option("--window", rx.window, "Correlation window in samples");
  rx_cmd->add_option("--search", rx.search, "Timing search half-width in samples");
  rx_cmd->add_option("--spc", rx.spc, "Samples per chip")->check(CLI::PositiveNumber);
  rx_cmd->add_option("--seed", rx.seed, "Calibration seed");
  rx_cmd->add_option("--threads", rx.threads, "Calibration threads");
  rx_cmd->add_flag("--frames", rx.frames, "Print decoded frames instead of events");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a Monte Carlo sweep from a config file");
  sweep_cmd->add_option("--config", sweep.config, "Scenario config path")->required();
  sweep_cmd->add_option("--out", sweep.out, "Output CSV path")->required();
  sweep_cmd->add_option("--seed", sweep.seed, "Override master_seed");
  sweep_cmd->add_option("--threads", sweep.threads, "Worker threads")->check(CLI::PositiveNumber);

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Calibrate the detection threshold on noise");
  cal_cmd->add_option("--window", cal.window, "Window length in samples");
  cal_cmd->add_option("--fa-target", cal.fa_target, "False-alarm probability per window");
  cal_cmd->add_option("--windows", cal.windows, "Noise windows (default 10 / fa-target)");
  cal_cmd->add_option("--seed", cal.seed, "Noise seed");
  cal_cmd->add_option("--spc", cal.spc, "Samples per chip")->check(CLI::PositiveNumber);
  cal_cmd->add_option("--threads", cal.threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*tx_cmd) return cmd_tx(tx);
    if (*rx_cmd) return cmd_rx(rx);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*cal_cmd) return cmd_calibrate(cal);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
