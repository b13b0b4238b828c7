#ifndef CDMA_IOT_IO_HPP_
#define CDMA_IOT_IO_HPP_

#include <stdexcept>
#include <string>

#include "cdma_iot/signal.hpp"

namespace cdma_iot {

/// Malformed or unreadable sample file.
class IqFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Headerless interleaved little-endian float32 I/Q, plus a `<path>.meta`
/// sidecar holding `sample_rate_hz=<real>`.
void write_iq_file(const std::string& path, const BasebandSignal& signal);

/// Throws IqFormatError when the file cannot be read, its size is not a
/// multiple of 8 bytes, or the sidecar is malformed. A missing sidecar means
/// the default 1 MSps.
BasebandSignal read_iq_file(const std::string& path);

std::string meta_path(const std::string& iq_path);

}  // namespace cdma_iot

#endif  // CDMA_IOT_IO_HPP_
