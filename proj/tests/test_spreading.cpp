#include "doctest.h"

#include <random>

#include "cdma_iot/spreading.hpp"
#include "oracles.hpp"

using namespace cdma_iot;

TEST_SUITE("spreading") {
  TEST_CASE("order-2 base case") {
    CHECK(hadamard_row(2, 0).chips() == Eigen::Vector2d(1, 1));
    CHECK(hadamard_row(2, 1).chips() == Eigen::Vector2d(1, -1));
  }

  TEST_CASE("row 0 is all ones") {
    CHECK((hadamard_row(64, 0).chips().array() == 1.0).all());
  }

  TEST_CASE("rows match the recursive Sylvester construction") {
    for (int order : {2, 4, 8, 64, 256}) {
      const Eigen::MatrixXi h = oracle::sylvester(order);
      for (int r = 0; r < order; ++r) {
        CHECK(hadamard_row(order, r).chips().cast<int>() == h.row(r).transpose());
      }
    }
  }

  TEST_CASE("distinct rows of order 64 are orthogonal, exact integer dot") {
    for (int i = 0; i < 64; ++i) {
      const Eigen::VectorXi ci = hadamard_row(64, i).chips().cast<int>();
      for (int j = 0; j < 64; ++j) {
        const Eigen::VectorXi cj = hadamard_row(64, j).chips().cast<int>();
        CHECK(ci.dot(cj) == (i == j ? 64 : 0));
      }
    }
  }

  TEST_CASE("invalid arguments") {
    CHECK_THROWS_AS(hadamard_row(3, 0), std::invalid_argument);
    CHECK_THROWS_AS(hadamard_row(1, 0), std::invalid_argument);
    CHECK_THROWS_AS(hadamard_row(8192, 0), std::invalid_argument);
    CHECK_THROWS_AS(hadamard_row(64, 64), std::invalid_argument);
    CHECK_THROWS_AS(hadamard_row(64, -1), std::invalid_argument);
    CHECK_NOTHROW(hadamard_row(4096, 4095));
  }

  TEST_CASE("spread examples") {
    const auto c = hadamard_row(2, 1);
    const BitVector zero{0}, one{1};
    CHECK(spread(zero, c) == Eigen::Vector2d(1, -1));
    CHECK(spread(one, c) == Eigen::Vector2d(-1, 1));

    const auto c64 = hadamard_row(64, 9);
    const BitVector two{0, 1};
    const Eigen::VectorXd s = spread(two, c64);
    REQUIRE(s.size() == 128);
    CHECK(s.head(64) == c64.chips());
    CHECK(s.tail(64) == -c64.chips());
  }

  TEST_CASE("bit-to-symbol convention is pinned") {
    CHECK(bit_to_symbol(0) == 1.0);
    CHECK(bit_to_symbol(1) == -1.0);
    CHECK(hard_decision(0.3) == 0);
    CHECK(hard_decision(-0.3) == 1);
    CHECK(hard_decision(0.0) == 0);
  }

  TEST_CASE("despread examples") {
    const auto c = hadamard_row(64, 5);
    const BitVector bits{0, 1, 1, 0};
    const Eigen::VectorXd metrics = despread(spread(bits, c), c);
    CHECK(metrics == Eigen::Vector4d(1, -1, -1, 1));

    const BitVector zero{0};
    CHECK(despread(spread(zero, hadamard_row(64, 5)), hadamard_row(64, 6))(0) == 0.0);

    CHECK_THROWS_AS(despread(Eigen::VectorXd::Ones(65), c), std::invalid_argument);
  }

  TEST_CASE("despread works on float expressions") {
    const auto c = hadamard_row(8, 3);
    const Eigen::VectorXf chips = (2.0 * c.chips()).cast<float>();
    const Eigen::VectorXf m = despread(chips, c);
    CHECK(m(0) == doctest::Approx(2.0f));
  }

  TEST_CASE("property: round trip, orthogonal rejection, linearity") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> bit(0, 1), row(0, 63), len(1, 200);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 200; ++trial) {
      BitVector bits(static_cast<std::size_t>(len(rng)));
      for (auto& b : bits) b = static_cast<std::uint8_t>(bit(rng));
      const int i = row(rng);
      int j = row(rng);
      if (j == i) j = (i + 1) % 64;
      const auto ci = hadamard_row(64, i);
      const auto cj = hadamard_row(64, j);

      const Eigen::VectorXd tx = spread(bits, ci);
      CHECK(hard_decide(despread(tx, ci)) == bits);
      CHECK((despread(tx, cj).array() == 0.0).all());

      const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(tx.size(), [&] { return gauss(rng); });
      const double a = gauss(rng), b = gauss(rng);
      const Eigen::VectorXd lhs = despread(a * tx + b * y, ci);
      const Eigen::VectorXd rhs = a * despread(tx, ci) + b * despread(y, ci);
      CHECK((lhs - rhs).norm() <= 1e-9 * std::max(1.0, rhs.norm()));
    }
  }
}
