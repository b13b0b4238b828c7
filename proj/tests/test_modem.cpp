#include "doctest.h"

#include <random>

#include "cdma_iot/modem.hpp"
#include "cdma_iot/receiver.hpp"

using namespace cdma_iot;

namespace {

MacFrame frame_with(std::size_t len, std::uint8_t addr = 0x42) {
  MacFrame f;
  f.source_address = addr;
  for (std::size_t i = 0; i < len; ++i) f.payload.push_back(static_cast<std::uint8_t>(17 * i + 3));
  return f;
}

}  // namespace

TEST_SUITE("modem") {
  TEST_CASE("packet lengths") {
    const TxConfig cfg = TxConfig::for_row(7);
    CHECK(build_packet_signal(frame_with(15), cfg).size() == 9792);
    CHECK(build_packet_signal(frame_with(0), cfg).size() == 2112);
    CHECK(packet_length_samples(15, cfg) == 9792);
  }

  TEST_CASE("property: length formula and sample invariants over payload and oversampling") {
    for (int spc = 1; spc <= 3; ++spc) {
      for (std::size_t len = 0; len <= kMaxPayloadBytes; ++len) {
        TxConfig cfg = TxConfig::for_row(2 + static_cast<int>(len));
        cfg.samples_per_chip = spc;
        const auto s = build_packet_signal(frame_with(len), cfg);
        CHECK(static_cast<std::size_t>(s.size()) == (64 + 64 * (32 + 8 * len)) * static_cast<std::size_t>(spc));
        CHECK((s.samples.imag().array() == 0.0).all());
        CHECK((s.samples.array().abs2() == 1.0).all());
        const Eigen::VectorXd preamble = expand_chips(cfg.preamble_code.chips(), spc);
        CHECK(s.samples.real().head(64 * spc) == preamble);
      }
    }
  }

  TEST_CASE("expand_chips repeats each chip") {
    const Eigen::VectorXd chips = Eigen::Vector3d(1, -1, 1);
    const Eigen::VectorXd out = expand_chips(chips, 2);
    CHECK(out == (Eigen::VectorXd(6) << 1, 1, -1, -1, 1, 1).finished());
  }

  TEST_CASE("amplitude scales every sample") {
    TxConfig cfg = TxConfig::for_row(3);
    cfg.amplitude = 0.5;
    const auto s = build_packet_signal(frame_with(4), cfg);
    CHECK((s.samples.array().abs() == 0.5).all());
  }

  TEST_CASE("reserved and mismatched codes are rejected") {
    CHECK_THROWS_AS(TxConfig::for_row(0), std::invalid_argument);
    CHECK_THROWS_AS(TxConfig::for_row(1), std::invalid_argument);
    TxConfig cfg;
    cfg.ue_code = hadamard_row(128, 5);
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }

  TEST_CASE("packet trains") {
    const TxConfig cfg = TxConfig::for_row(4);
    const std::vector<MacFrame> one{frame_with(6)};
    CHECK(build_packet_train(one, 500, cfg).samples == build_packet_signal(one[0], cfg).samples);

    const std::vector<MacFrame> two{frame_with(0), frame_with(0, 7)};
    const auto train = build_packet_train(two, 100, cfg);
    CHECK(train.size() == 4324);
    CHECK((train.samples.segment(2112, 100).array() == 0.0).all());
    CHECK_THROWS_AS(build_packet_train(std::vector<MacFrame>{}, 0, cfg), std::invalid_argument);
  }

  TEST_CASE("back-to-back packets are detected as two starts one packet apart") {
    const TxConfig cfg = TxConfig::for_row(4);
    const std::vector<MacFrame> two{frame_with(0), frame_with(0, 7)};
    DetectorConfig det;
    det.candidate_codes = {cfg.ue_code};
    det.threshold = 0.7;
    const auto events = detect_and_decode(build_packet_train(two, 0, cfg), det);
    REQUIRE(events.size() == 2);
    CHECK(events[0].start_index == 0);
    CHECK(events[1].start_index == 2112);
    CHECK(events[1].decoded == two[1]);
  }

  TEST_CASE("nominal bit rate") {
    TxConfig cfg = TxConfig::for_row(2);
    CHECK(nominal_bit_rate(cfg, 1e6) == 15625.0);
    cfg.samples_per_chip = 2;
    CHECK(nominal_bit_rate(cfg, 1e6) == 7812.5);
    TxConfig wide;
    wide.ue_code = hadamard_row(128, 2);
    wide.preamble_code = hadamard_row(128, 1);
    CHECK(nominal_bit_rate(wide, 1e6) == 7812.5);
  }
}
