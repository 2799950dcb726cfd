#include <cmath>
#include <set>

#include "doctest.h"
#include "oracle.hpp"

#include "v2xtwin/errors.hpp"
#include "v2xtwin/stochastic.hpp"
#include "v2xtwin/units.hpp"

using namespace v2xtwin;

TEST_CASE("LoS probability values") {
  CHECK(p_los(10) == 1.0);
  CHECK(p_los(18) == 1.0);
  CHECK(std::abs(p_los(36) - 0.68394) < 1e-5);
  CHECK(std::abs(p_los(1000) - 0.0180) < 1e-4);
  for (double d = 0.5; d < 2000; d *= 1.37) CHECK(p_los(d) == doctest::Approx(oracle::p_los(d)).epsilon(1e-14));
  CHECK_THROWS_AS(p_los(0.0), NonPositiveDistance);
  CHECK_THROWS_AS(p_los(-3.0), NonPositiveDistance);
}

TEST_CASE("LoS probability is one up to 18 m then non-increasing") {
  for (double d = 0.01; d <= 18.0; d += 0.01) CHECK(p_los(d) == 1.0);
  double prev = p_los(18.0);
  for (double d = 18.0; d < 5000; d += 0.5) {
    CHECK(p_los(d) <= prev);
    prev = p_los(d);
  }
}

TEST_CASE("short links are always LoS") {
  StochasticParams params;
  for (std::uint64_t serial = 0; serial < 200; ++serial) {
    auto rng = link_stream(serial, VehicleId{1}, VehicleId{2}, serial);
    CHECK(sample_channel(12.0, params, rng).los);
  }
}

TEST_CASE("draws are reproducible per stream") {
  StochasticParams params;
  auto a = link_stream(9, VehicleId{3}, VehicleId{8}, 77);
  auto b = link_stream(9, VehicleId{8}, VehicleId{3}, 77);
  const auto x = sample_channel(80.0, params, a);
  const auto y = sample_channel(80.0, params, b);
  CHECK(x == y);
  auto c = link_stream(9, VehicleId{3}, VehicleId{8}, 78);
  CHECK_FALSE(sample_channel(80.0, params, c) == x);
}

TEST_CASE("Monte-Carlo LoS fraction at 36 m") {
  StochasticParams params;
  std::mt19937_64 rng(2024);
  int los = 0;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) los += sample_channel(36.0, params, rng).los ? 1 : 0;
  CHECK(std::abs(static_cast<double>(los) / kDraws - 0.684) < 0.01);
}

TEST_CASE("without shadowing the gain is exactly two-valued") {
  StochasticParams params;
  params.shadow_sigma_los_db = 0.0;
  params.shadow_sigma_nlos_db = 0.0;
  std::mt19937_64 rng(4);
  std::set<double> values;
  for (int i = 0; i < 2000; ++i) values.insert(sample_channel(60.0, params, rng).total_gain);
  REQUIRE(values.size() == 2);
  const double hi = linear_to_db(*values.rbegin());
  const double lo = linear_to_db(*values.begin());
  CHECK(hi - lo == doctest::Approx(15.0).epsilon(1e-9));
  CHECK(hi == doctest::Approx(oracle::friis_gain_db(60.0, params.fc)).epsilon(1e-9));
}

TEST_CASE("mean loss matches the LoS/NLoS mixture") {
  StochasticParams params;
  std::mt19937_64 rng(99);
  const double d = 70.0;
  constexpr int kDraws = 100000;
  double sum = 0.0;
  for (int i = 0; i < kDraws; ++i) sum += -linear_to_db(sample_channel(d, params, rng).total_gain);
  const double p = oracle::p_los(d);
  const double pl = -oracle::friis_gain_db(d, params.fc);
  const double expect = p * pl + (1 - p) * (pl + params.nlos_excess_db);
  CHECK(std::abs(sum / kDraws - expect) < 0.1);
}

TEST_CASE("injected LoS overrides the draw") {
  StochasticParams params;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    CHECK_FALSE(sample_channel(5.0, params, rng, false).los);
    CHECK(sample_channel(900.0, params, rng, true).los);
  }
}

TEST_CASE("free-space reference at 1 m") {
  CHECK(fspl_1m_db(5.89e9) == doctest::Approx(-oracle::friis_gain_db(1.0, 5.89e9)).epsilon(1e-12));
  StochasticParams params;
  params.los_exponent = 3.0;
  CHECK(los_path_loss_db(100.0, params) == doctest::Approx(fspl_1m_db(params.fc) + 60.0));
}
