#include <cmath>

#include "doctest.h"
#include "oracle.hpp"

#include "v2xtwin/coexistence.hpp"
#include "v2xtwin/errors.hpp"
#include "v2xtwin/units.hpp"

using namespace v2xtwin;

namespace {

RatSpec rat(RatId id, double fc, double bw, double scs, double slot) { return {id, fc, bw, scs, slot}; }

double band_width(const ResourceGrid& g, RatId id) {
  const auto [a, b] = g.band_blocks(id);
  double sum = 0.0;
  for (std::size_t i = a; i < b; ++i) sum += g.block_bandwidth(i);
  return sum;
}

// Two vehicles on one 10 MHz band: desired 1 W from vehicle 1, optional interferer from 2.
struct Pair {
  std::vector<RatSpec> rats{rat(RatId::dsrc, 5.9e9, 10e6, 156.25e3, 8e-6),
                            rat(RatId::nr_v2x, 5.9e9, 10e6, 60e3, 0.25e-3)};
  ResourceGrid grid = ResourceGrid::build(rats);
  TransmissionTracker tracker{10e-6};
  double g_desired = 1e-9;
  double g_interferer = 1e-10;
  SinrConfig cfg;

  Pair() { cfg.noise_density = 1e-19; }
  ChannelFn channel() const {
    return [this](VehicleId tx, VehicleId) { return tx.value == 1 ? g_desired : g_interferer; };
  }
};

}  // namespace

TEST_CASE("one 60 kHz RAT tiles its band with a partial last block") {
  const auto g = ResourceGrid::build({rat(RatId::nr_v2x, 5.9e9, 10e6, 60e3, 0.25e-3)});
  CHECK(g.freq_blocks() == 167);
  std::size_t full = 0;
  for (std::size_t i = 0; i < g.freq_blocks(); ++i) full += std::abs(g.block_bandwidth(i) - 60e3) < 1e-3 ? 1 : 0;
  CHECK(full == 166);
  CHECK(g.block_bandwidth(166) == doctest::Approx(40e3));
  CHECK(std::abs(band_width(g, RatId::nr_v2x) - 10e6) < 1.0);
}

TEST_CASE("identical bands are covered by both RATs everywhere") {
  const auto g = ResourceGrid::build({default_rat_spec(RatId::dsrc), default_rat_spec(RatId::nr_v2x)});
  for (std::size_t i = 0; i < g.freq_blocks(); ++i) CHECK(g.cover_mask(i) == 3U);
}

TEST_CASE("offset bands overlap over 5 MHz") {
  const auto g = ResourceGrid::build({rat(RatId::dsrc, 5.900e9, 10e6, 156.25e3, 8e-6),
                                      rat(RatId::nr_v2x, 5.905e9, 10e6, 60e3, 0.25e-3)});
  double both = 0.0;
  for (std::size_t i = 0; i < g.freq_blocks(); ++i) {
    const auto mask = g.cover_mask(i);
    CHECK(mask != 0U);
    if (mask == 3U) both += g.block_bandwidth(i);
  }
  CHECK(std::abs(both - 5e6) < 1.0);
  CHECK(std::abs(band_width(g, RatId::dsrc) - 10e6) < 1.0);
  CHECK(std::abs(band_width(g, RatId::nr_v2x) - 10e6) < 1.0);
}

TEST_CASE("every band is tiled on random grids") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto in = oracle::make_sinr_instance(seed);
    const auto g = ResourceGrid::build(in.rats);
    for (const auto& r : in.rats) {
      CHECK(std::abs(band_width(g, r.rat_id) - r.bandwidth) < 1.0);
      const auto [a, b] = g.band_blocks(r.rat_id);
      for (std::size_t i = a; i < b; ++i) CHECK(g.covers(i, r.rat_id));
      CHECK(g.freq_edges()[a] == doctest::Approx(r.low()));
      CHECK(g.freq_edges()[b] == doctest::Approx(r.high()));
    }
  }
}

TEST_CASE("invalid RAT specs") {
  CHECK_THROWS_AS(validate(rat(RatId::dsrc, 5.9e9, 0.0, 156.25e3, 8e-6)), InvalidSpec);
  CHECK_THROWS_AS(validate(rat(RatId::dsrc, 5.9e9, 10e6, 20e6, 8e-6)), InvalidSpec);
  CHECK_THROWS_AS(validate(rat(RatId::dsrc, 5.9e9, 10e6, 156.25e3, 0.0)), InvalidSpec);
  CHECK_THROWS_AS(ResourceGrid::build({}), InvalidSpec);
}

TEST_CASE("tracking objects") {
  TransmissionTracker tracker(10e-6);
  const auto& o = tracker.register_tx(VehicleId{1}, default_rat_spec(RatId::dsrc), 0.0, 1e-3, 1.0);
  CHECK(o.psd == doctest::Approx(1e-7));
  CHECK(std::abs(o.power() - 1.0) < 1e-3);
  const auto id = o.transmission_id;

  CHECK_THROWS_AS(tracker.register_tx(VehicleId{1}, default_rat_spec(RatId::nr_v2x), 5e-4, 1e-3, 1.0),
                  HalfDuplexViolation);
  CHECK_THROWS_AS(tracker.register_tx(VehicleId{2}, default_rat_spec(RatId::dsrc), 0.0, 0.0, 1.0),
                  InvalidConfig);
  tracker.register_tx(VehicleId{1}, default_rat_spec(RatId::dsrc), 1e-3, 1e-3, 1.0);

  tracker.expire(1e-3 + 5e-6);
  CHECK(tracker.find(id) != nullptr);
  tracker.expire(1e-3 + 2e-5);
  CHECK(tracker.find(id) == nullptr);
  CHECK(tracker.size() == 1);
}

TEST_CASE("inactive vehicles cannot transmit") {
  TransmissionTracker tracker(10e-6, [](VehicleId v) { return v.value != 4; });
  CHECK_THROWS_AS(tracker.register_tx(VehicleId{4}, default_rat_spec(RatId::dsrc), 0, 1e-3, 1), InactiveVehicle);
}

TEST_CASE("SINR hand examples") {
  Pair p;
  const auto desired = p.tracker.register_tx(VehicleId{1}, p.rats[0], 0.0, 1e-4, 1.0);

  auto r = evaluate_sinr(VehicleId{0}, desired, p.grid, p.tracker, p.channel(), p.cfg);
  CHECK(r.aggregate == doctest::Approx(1000.0).epsilon(1e-12));
  for (const auto& [k, v] : r.per_block()) CHECK(v == doctest::Approx(1000.0).epsilon(1e-12));

  p.tracker.register_tx(VehicleId{2}, p.rats[1], 0.0, 1e-4, 1.0);
  r = evaluate_sinr(VehicleId{0}, desired, p.grid, p.tracker, p.channel(), p.cfg);
  CHECK(std::abs(linear_to_db(r.aggregate) - linear_to_db(1e-9 / (1e-12 + 1e-10))) < 1e-3);
  CHECK(std::abs(linear_to_db(r.aggregate) - 9.96) < 0.01);
  REQUIRE(r.considered_interferers.size() == 1);
  CHECK(r.considered_interferers[0].vehicle_id == VehicleId{2});

  p.cfg.g_thr = p.g_interferer * 1.000001;
  r = evaluate_sinr(VehicleId{0}, desired, p.grid, p.tracker, p.channel(), p.cfg);
  CHECK(r.aggregate == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(r.considered_interferers.empty());
  REQUIRE(r.discarded_interferers.size() == 1);
  CHECK(r.discarded_interferers[0].vehicle_id == VehicleId{2});
}

TEST_CASE("disabled coexistence ignores the other RAT") {
  Pair p;
  p.cfg.coexistence = false;
  const auto desired = p.tracker.register_tx(VehicleId{1}, p.rats[0], 0.0, 1e-4, 1.0);
  const auto snr = evaluate_sinr(VehicleId{0}, desired, p.grid, p.tracker, p.channel(), p.cfg);
  p.tracker.register_tx(VehicleId{2}, p.rats[1], 0.0, 1e-4, 1.0);
  const auto r = evaluate_sinr(VehicleId{0}, desired, p.grid, p.tracker, p.channel(), p.cfg);
  CHECK(r.aggregate == snr.aggregate);
  CHECK(r.per_block() == snr.per_block());
  CHECK(r.considered_interferers.empty());
}

TEST_CASE("partial time overlap scales the interference") {
  Pair p;
  const auto desired = p.tracker.register_tx(VehicleId{1}, p.rats[1], 0.0, 0.25e-3, 1.0);
  p.tracker.register_tx(VehicleId{2}, p.rats[1], 0.125e-3, 1e-3, 1.0);
  const auto nr_only = ResourceGrid::build({p.rats[1]});
  const auto r = evaluate_sinr(VehicleId{0}, desired, nr_only, p.tracker, p.channel(), p.cfg);
  // one slot, half covered
  REQUIRE(r.slot_edges.size() == 2);
  const double expect = 1e-16 / (1e-19 + 0.5 * 1e-17);
  CHECK(r.aggregate == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("a desired signal outside the grid is rejected") {
  Pair p;
  TrackingObject off;
  off.vehicle_id = VehicleId{1};
  off.fc = 2.4e9;
  off.bandwidth = 10e6;
  off.duration = 1e-4;
  off.psd = 1e-7;
  CHECK_THROWS_AS(evaluate_sinr(VehicleId{0}, off, p.grid, p.tracker, p.channel(), p.cfg), NoDesiredOverlap);
}

TEST_CASE("agreement with the brute-force evaluator") {
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    const auto c = oracle::random_sinr_case(seed);
    CHECK(c.same_edges);
    CHECK(c.same_blocks);
    CHECK(c.blocks > 0);
    CHECK(c.max_block_error <= 1e-9);
    CHECK(c.aggregate_error <= 1e-9);
  }
}

TEST_CASE("report invariants on random instances") {
  for (std::uint64_t seed = 200; seed < 240; ++seed) {
    auto in = oracle::make_sinr_instance(seed);
    const auto grid = ResourceGrid::build(in.rats);
    const auto channel = in.channel();

    const auto base = evaluate_sinr(in.rx, in.desired, grid, in.tracker, channel, in.cfg);
    CHECK(std::abs(aggregate_from_blocks(base, grid) - base.aggregate) <= 1e-10 * base.aggregate);

    for (const auto& o : in.objects()) CHECK(std::abs(o.psd * o.bandwidth - o.power()) <= 1e-3 * o.power());

    auto raised = in.cfg;
    raised.g_thr = 1e-11;
    const auto thinner = evaluate_sinr(in.rx, in.desired, grid, in.tracker, channel, raised);
    const auto before = base.per_block();
    for (const auto& [k, v] : thinner.per_block()) CHECK(v >= before.at(k) * (1 - 1e-12));

    auto on = in.cfg;
    on.coexistence = true;
    auto off = in.cfg;
    off.coexistence = false;
    const auto with = evaluate_sinr(in.rx, in.desired, grid, in.tracker, channel, on);
    const auto without = evaluate_sinr(in.rx, in.desired, grid, in.tracker, channel, off);
    CHECK(with.aggregate <= without.aggregate * (1 + 1e-12));
  }
}
