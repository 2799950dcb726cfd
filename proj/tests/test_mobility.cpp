#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracle.hpp"

#include "v2xtwin/errors.hpp"
#include "v2xtwin/mobility.hpp"

using namespace v2xtwin;

namespace {

VehicleState moving(Vec3 p, Vec3 v) {
  VehicleState s;
  s.position = p;
  s.velocity = v;
  return s;
}

}  // namespace

TEST_CASE("trace interpolation") {
  const auto trace = parse_trace("t,vehicle_id,x,y,z\n0,1,0,0,0\n1,1,10,0,0\n");
  const auto s = trace.state_at(VehicleId{1}, 0.5);
  REQUIRE(s.has_value());
  CHECK(s->position.x == doctest::Approx(5.0));
  CHECK(s->velocity.x == doctest::Approx(10.0));
  CHECK(s->heading == doctest::Approx(0.0));
  CHECK_FALSE(trace.state_at(VehicleId{1}, 1.5).has_value());
  CHECK_FALSE(trace.state_at(VehicleId{2}, 0.5).has_value());
}

TEST_CASE("interpolation hits samples exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  std::ostringstream csv;
  csv << "t,vehicle_id,x,y,z\n";
  std::vector<Vec3> pts;
  for (int i = 0; i < 40; ++i) {
    pts.push_back({u(rng), u(rng), 0});
    csv << 2.0 * i << ",4," << pts.back().x << ',' << pts.back().y << ",0\n";
  }
  const auto trace = parse_trace(csv.str());
  const auto& series = trace.series().at(VehicleId{4});
  for (std::size_t i = 0; i < series.size(); ++i) {
    CHECK(trace.state_at(VehicleId{4}, series[i].t)->position == series[i].position);
  }
}

TEST_CASE("active set of a 20 x 100 trace") {
  std::ostringstream csv;
  csv << "t,vehicle_id,x,y,z\n";
  for (int row = 0; row < 100; ++row) {
    for (int id = 0; id < 20; ++id) csv << row * 0.1 << ',' << id << ',' << row << ',' << id * 5 << ",0\n";
  }
  const auto trace = parse_trace(csv.str());
  CHECK(trace.active_at(5.0).size() == 20);
  CHECK(trace.size() == 20);
  CHECK(trace.start_time() == 0.0);
  CHECK(trace.end_time() == doctest::Approx(9.9));
}

TEST_CASE("out-of-order rows are rejected") {
  CHECK_THROWS_AS(parse_trace("t,vehicle_id,x,y,z\n1,1,0,0,0\n0,1,1,0,0\n"), NonMonotonicTime);
  try {
    parse_trace("t,vehicle_id,x,y,z\n1,7,0,0,0\n2,8,0,0,0\n0.5,7,1,0,0\n");
  } catch (const NonMonotonicTime& e) {
    CHECK(e.vehicle() == 7);
    CHECK(e.row() == 3);
  }
  CHECK_THROWS_AS(parse_trace("t,vehicle_id,x,y\n0,1,0,0\n"), ParseError);
}

TEST_CASE("trace text round-trips") {
  const auto trace = parse_trace(
      "t,vehicle_id,x,y,z,vx,vy,vz,heading\n0,1,0,0,0,1,0,0,0\n1,1,1,0,0,1,0,0,0\n"
      "0,2,5,5,0,0,2,0,1.5707963267948966\n1,2,5,7,0,0,2,0,1.5707963267948966\n");
  const auto again = parse_trace(write_trace(trace));
  CHECK(again.series() == trace.series());
}

TEST_CASE("missing heading follows the velocity") {
  const auto trace = parse_trace("t,vehicle_id,x,y,z\n0,1,0,0,0\n1,1,0,3,0\n");
  CHECK(trace.series().at(VehicleId{1}).front().heading == doctest::Approx(kPi / 2));
}

TEST_CASE("coherence time") {
  CHECK(std::abs(coherence_time(30, 5.89e9) - 7.18e-4) < 1e-6);
  CHECK(coherence_time(30, 5.89e9) == doctest::Approx(oracle::coherence_time(30, 5.89e9)).epsilon(1e-12));
  CHECK(coherence_time(0, 5.89e9) == std::numeric_limits<double>::infinity());
}

TEST_CASE("update gating") {
  GatingConfig cfg;
  CHECK(gate_update(std::nullopt, moving({0, 0, 0}, {0, 0, 0}), cfg));

  cfg.delta_d0 = 1.0;
  cfg.coherence_time_override = 5e-3;
  CHECK_FALSE(gate_update(Vec3{0, 0, 0}, moving({0.5, 0, 0}, {20, 0, 0}), cfg));
  CHECK(movement_threshold(moving({0, 0, 0}, {20, 0, 0}), cfg) == doctest::Approx(1.0));

  cfg.delta_d0 = 0.1;
  cfg.coherence_time_override = 0.02;
  CHECK(movement_threshold(moving({0, 0, 0}, {30, 0, 0}), cfg) == doctest::Approx(0.6));
  CHECK_FALSE(gate_update(Vec3{0, 0, 0}, moving({0.5, 0, 0}, {30, 0, 0}), cfg));
  CHECK(gate_update(Vec3{0, 0, 0}, moving({0.7, 0, 0}, {30, 0, 0}), cfg));
}

TEST_CASE("gating is monotone in displacement") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 3);
  GatingConfig cfg;
  for (int i = 0; i < 500; ++i) {
    const double speed = 10 * u(rng);
    const double d = u(rng);
    const double d2 = d + u(rng);
    const bool first = gate_update(Vec3{}, moving({d, 0, 0}, {speed, 0, 0}), cfg);
    const bool second = gate_update(Vec3{}, moving({d2, 0, 0}, {speed, 0, 0}), cfg);
    if (first) CHECK(second);
  }
}

TEST_CASE("zero threshold gates every displacement") {
  GatingConfig cfg;
  cfg.delta_d0 = 0.0;
  CHECK(gate_update(Vec3{}, moving({1e-6, 0, 0}, {0, 0, 0}), cfg));
  CHECK_FALSE(gate_update(Vec3{}, moving({0, 0, 0}, {0, 0, 0}), cfg));
}

TEST_CASE("angle difference wraps") {
  CHECK(angle_difference(0.1, 2 * kPi - 0.1) == doctest::Approx(0.2));
  CHECK(angle_difference(-kPi + 0.05, kPi - 0.05) == doctest::Approx(0.1));
}
