#ifndef CDMA_IOT_SIGNAL_HPP_
#define CDMA_IOT_SIGNAL_HPP_

#include <Eigen/Core>

namespace cdma_iot {

inline constexpr double kDefaultSampleRateHz = 1e6;

/// Complex baseband samples at a declared rate.
struct BasebandSignal {
  Eigen::VectorXcd samples;
  double sample_rate_hz = kDefaultSampleRateHz;

  Eigen::Index size() const { return samples.size(); }
  bool all_finite() const { return samples.allFinite(); }
};

}  // namespace cdma_iot

#endif  // CDMA_IOT_SIGNAL_HPP_
