#ifndef CDMA_IOT_SCENARIO_FILE_HPP_
#define CDMA_IOT_SCENARIO_FILE_HPP_

#include <stdexcept>
#include <string>

#include "cdma_iot/harness.hpp"

namespace cdma_iot {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses flat `key=value` lines into a ScenarioConfig. Lines starting with
/// `#` are comments; lists are comma separated; ranges are written `lo-hi`.
/// Unknown keys, duplicate keys, bad values, and a missing master_seed throw
/// ConfigError naming the offending key.
ScenarioConfig parse_scenario(const std::string& text);

ScenarioConfig load_scenario(const std::string& path);

/// Canonical text form: every key, fixed order. parse_scenario accepts it.
std::string serialize_scenario(const ScenarioConfig& cfg);

}  // namespace cdma_iot

#endif  // CDMA_IOT_SCENARIO_FILE_HPP_
