#include "cdma_iot/scenario_file.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace cdma_iot {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  return parts;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  throw ConfigError("config key '" + key + "': invalid value '" + value + "' (" + why + ")");
}

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = begin + text.size();
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    begin += 2;
    base = 16;
  }
  const auto [ptr, ec] = std::from_chars(begin, end, value, base);
  if (text.empty() || ec != std::errc() || ptr != end) bad_value(key, text, "expected an integer");
  return value;
}

double parse_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  bad_value(key, text, "expected a real number");
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  bad_value(key, text, "expected true or false");
}

SizeRange parse_range(const std::string& key, const std::string& text) {
  const auto dash = text.find('-');
  if (dash == std::string::npos) {
    const auto v = parse_integer<std::size_t>(key, text);
    return {v, v};
  }
  SizeRange r{parse_integer<std::size_t>(key, trim(text.substr(0, dash))),
              parse_integer<std::size_t>(key, trim(text.substr(dash + 1)))};
  if (r.min > r.max) bad_value(key, text, "range is inverted");
  return r;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) {
    const auto r = parse_range(key, item);
    for (std::size_t v = r.min; v <= r.max; ++v) out.push_back(static_cast<int>(v));
  }
  return out;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_real(key, item));
  if (out.empty()) bad_value(key, text, "expected at least one value");
  return out;
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_range(const SizeRange& r) {
  return r.min == r.max ? std::to_string(r.min) : std::to_string(r.min) + "-" + std::to_string(r.max);
}

template <typename T, typename F>
std::string join(const std::vector<T>& values, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += fmt(values[i]);
  }
  return out;
}

constexpr const char* kOfdmKeys[] = {"ofdm_fft_size", "ofdm_cp_length", "ofdm_occupied_subcarriers",
                                     "ofdm_relative_power_db", "ofdm_qpsk_seed"};

}  // namespace

ScenarioConfig parse_scenario(const std::string& text) {
  std::map<std::string, std::string> entries;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!entries.emplace(key, trim(line.substr(eq + 1))).second) {
      throw ConfigError("config key '" + key + "' given more than once");
    }
  }

  ScenarioConfig cfg;
  OfdmInterfererConfig ofdm;
  ofdm.occupied_subcarriers = all_subcarriers(ofdm.fft_size);
  bool subcarriers_all = true;
  bool seed_given = false;
  std::string interferer_kind = "none";

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"n_ues", [&](auto& k, auto& v) { cfg.n_ues = parse_integer<int>(k, v); }},
      {"code_rows",
       [&](auto& k, auto& v) { cfg.code_rows = (v.empty() || v == "auto") ? std::vector<int>{} : parse_int_list(k, v); }},
      {"payload_bytes", [&](auto& k, auto& v) { cfg.payload_bytes = parse_range(k, v); }},
      {"sinr_grid_db", [&](auto& k, auto& v) { cfg.sinr_grid_db = parse_real_list(k, v); }},
      {"trials_per_point", [&](auto& k, auto& v) { cfg.trials_per_point = parse_integer<std::size_t>(k, v); }},
      {"packets_per_trial", [&](auto& k, auto& v) { cfg.packets_per_trial = parse_integer<std::size_t>(k, v); }},
      {"inter_packet_gap_samples", [&](auto& k, auto& v) { cfg.inter_packet_gap_samples = parse_range(k, v); }},
      {"asynchronous", [&](auto& k, auto& v) { cfg.asynchronous = parse_bool(k, v); }},
      {"interferer",
       [&](auto& k, auto& v) {
         if (v != "none" && v != "ofdm") bad_value(k, v, "expected none or ofdm");
         interferer_kind = v;
       }},
      {"ofdm_fft_size", [&](auto& k, auto& v) { ofdm.fft_size = parse_integer<int>(k, v); }},
      {"ofdm_cp_length", [&](auto& k, auto& v) { ofdm.cp_length = parse_integer<int>(k, v); }},
      {"ofdm_occupied_subcarriers",
       [&](auto& k, auto& v) {
         subcarriers_all = (v == "all");
         if (!subcarriers_all) ofdm.occupied_subcarriers = parse_int_list(k, v);
       }},
      {"ofdm_relative_power_db",
       [&](auto& k, auto& v) {
         const auto powers = parse_real_list(k, v);
         ofdm.relative_power_db = powers.front();
         if (powers.size() > 1) cfg.interferer_power_grid_db = powers;
       }},
      {"ofdm_qpsk_seed", [&](auto& k, auto& v) { ofdm.qpsk_seed = parse_integer<std::uint64_t>(k, v); }},
      {"self_interference_cancellation_db",
       [&](auto& k, auto& v) { cfg.self_interference_cancellation_db = parse_real(k, v); }},
      {"master_seed",
       [&](auto& k, auto& v) {
         cfg.master_seed = parse_integer<std::uint64_t>(k, v);
         seed_given = true;
       }},
      {"threshold",
       [&](auto& k, auto& v) {
         if (v == "auto") cfg.threshold.reset();
         else cfg.threshold = parse_real(k, v);
       }},
      {"false_alarm_target", [&](auto& k, auto& v) { cfg.false_alarm_target = parse_real(k, v); }},
      {"calibration_windows", [&](auto& k, auto& v) { cfg.calibration_windows = parse_integer<std::size_t>(k, v); }},
      {"window_samples", [&](auto& k, auto& v) { cfg.window_samples = parse_integer<std::size_t>(k, v); }},
      {"detection_tolerance_samples",
       [&](auto& k, auto& v) { cfg.detection_tolerance_samples = parse_integer<std::size_t>(k, v); }},
      {"timing_search_samples",
       [&](auto& k, auto& v) { cfg.timing_search_samples = parse_integer<std::size_t>(k, v); }},
      {"lead_samples_max", [&](auto& k, auto& v) { cfg.lead_samples_max = parse_integer<std::size_t>(k, v); }},
      {"samples_per_chip", [&](auto& k, auto& v) { cfg.samples_per_chip = parse_integer<int>(k, v); }},
  };

  for (const auto& [key, value] : entries) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(key, value);
  }
  if (!seed_given) throw ConfigError("config key 'master_seed' is required");

  if (interferer_kind == "ofdm") {
    if (subcarriers_all) ofdm.occupied_subcarriers = all_subcarriers(ofdm.fft_size);
    cfg.interferer = ofdm;
  } else {
    for (const char* key : kOfdmKeys) {
      if (entries.count(key)) throw ConfigError("config key '" + std::string(key) + "' requires interferer=ofdm");
    }
  }

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

std::string serialize_scenario(const ScenarioConfig& cfg) {
  std::ostringstream out;
  auto fmt_int = [](int v) { return std::to_string(v); };
  out << "n_ues=" << cfg.n_ues << '\n';
  out << "code_rows=" << (cfg.code_rows.empty() ? std::string("auto") : join(cfg.code_rows, fmt_int)) << '\n';
  out << "payload_bytes=" << fmt_range(cfg.payload_bytes) << '\n';
  out << "sinr_grid_db=" << join(cfg.sinr_grid_db, fmt_real) << '\n';
  out << "trials_per_point=" << cfg.trials_per_point << '\n';
  out << "packets_per_trial=" << cfg.packets_per_trial << '\n';
  out << "inter_packet_gap_samples=" << fmt_range(cfg.inter_packet_gap_samples) << '\n';
  out << "asynchronous=" << (cfg.asynchronous ? "true" : "false") << '\n';
  out << "interferer=" << (cfg.interferer ? "ofdm" : "none") << '\n';
  if (cfg.interferer) {
    const auto& o = *cfg.interferer;
    out << "ofdm_fft_size=" << o.fft_size << '\n';
    out << "ofdm_cp_length=" << o.cp_length << '\n';
    out << "ofdm_occupied_subcarriers="
        << (o.occupied_subcarriers == all_subcarriers(o.fft_size) ? std::string("all")
                                                                   : join(o.occupied_subcarriers, fmt_int))
        << '\n';
    out << "ofdm_relative_power_db="
        << (cfg.interferer_power_grid_db.empty() ? fmt_real(o.relative_power_db)
                                                 : join(cfg.interferer_power_grid_db, fmt_real))
        << '\n';
    out << "ofdm_qpsk_seed=" << o.qpsk_seed << '\n';
  }
  out << "self_interference_cancellation_db=" << fmt_real(cfg.self_interference_cancellation_db) << '\n';
  out << "master_seed=" << cfg.master_seed << '\n';
  out << "threshold=" << (cfg.threshold ? fmt_real(*cfg.threshold) : std::string("auto")) << '\n';
  out << "false_alarm_target=" << fmt_real(cfg.false_alarm_target) << '\n';
  out << "calibration_windows=" << cfg.calibration_windows << '\n';
  out << "window_samples=" << cfg.window_samples << '\n';
  out << "detection_tolerance_samples=" << cfg.detection_tolerance_samples << '\n';
  out << "timing_search_samples=" << cfg.timing_search_samples << '\n';
  out << "lead_samples_max=" << cfg.lead_samples_max << '\n';
  out << "samples_per_chip=" << cfg.samples_per_chip << '\n';
  return out.str();
}

}  // namespace cdma_iot
