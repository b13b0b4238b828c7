#include "cdma_iot/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

namespace cdma_iot {
namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
}

void put_float(std::vector<char>& out, float value) {
  const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(value));
  char bytes[4];
  std::memcpy(bytes, &bits, 4);
  out.insert(out.end(), bytes, bytes + 4);
}

float get_float(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  return std::bit_cast<float>(to_little_endian(bits));
}

}  // namespace

std::string meta_path(const std::string& iq_path) { return iq_path + ".meta"; }

void write_iq_file(const std::string& path, const BasebandSignal& signal) {
  std::vector<char> bytes;
  bytes.reserve(static_cast<std::size_t>(signal.size()) * 8);
  for (Eigen::Index n = 0; n < signal.size(); ++n) {
    put_float(bytes, static_cast<float>(signal.samples(n).real()));
    put_float(bytes, static_cast<float>(signal.samples(n).imag()));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IqFormatError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IqFormatError("write failed: " + path);

  std::ofstream meta(meta_path(path), std::ios::trunc);
  char rate[64];
  std::snprintf(rate, sizeof rate, "%.17g", signal.sample_rate_hz);
  meta << "sample_rate_hz=" << rate << '\n';
  if (!meta) throw IqFormatError("write failed: " + meta_path(path));
}

BasebandSignal read_iq_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IqFormatError("cannot open " + path);
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 8 != 0) {
    throw IqFormatError(path + ": size " + std::to_string(bytes.size()) +
                        " bytes is not a whole number of I/Q float32 pairs");
  }

  BasebandSignal signal;
  const auto n = static_cast<Eigen::Index>(bytes.size() / 8);
  signal.samples.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const char* p = bytes.data() + 8 * i;
    signal.samples(i) = {get_float(p), get_float(p + 4)};
  }

  const std::string meta = meta_path(path);
  if (std::filesystem::exists(meta)) {
    std::ifstream m(meta);
    std::string line;
    bool found = false;
    while (std::getline(m, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos || line.substr(0, eq) != "sample_rate_hz") {
        throw IqFormatError(meta + ": unexpected line '" + line + "'");
      }
      try {
        std::size_t used = 0;
        const std::string value = line.substr(eq + 1);
        signal.sample_rate_hz = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw IqFormatError(meta + ": bad sample rate '" + line.substr(eq + 1) + "'");
      }
      found = true;
    }
    if (!found || !(signal.sample_rate_hz > 0.0) || !std::isfinite(signal.sample_rate_hz)) {
      throw IqFormatError(meta + ": missing or invalid sample_rate_hz");
    }
  }
  return signal;
}

}  // namespace cdma_iot
