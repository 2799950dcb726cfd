#include <cmath>
#include <map>

#include "doctest.h"
#include "city_fixture.hpp"

#include "v2xtwin/event_queue.hpp"
#include "v2xtwin/metrics.hpp"
#include "v2xtwin/report.hpp"
#include "v2xtwin/simulation.hpp"

using namespace v2xtwin;

namespace {

struct Interval {
  VehicleId tx;
  RatId rat;
  double start;
  double end;
};

// One entry per transmission seen in the record stream.
std::vector<Interval> airtimes(const std::vector<ReceptionRecord>& records) {
  std::map<std::tuple<std::uint64_t, double>, Interval> seen;
  for (const auto& r : records) seen[{r.packet_id, r.t_start}] = {r.tx, r.rat, r.t_start, r.t_end};
  std::vector<Interval> out;
  for (const auto& [k, v] : seen) out.push_back(v);
  return out;
}

SimulationResult run(const City& city, ChannelKind kind, std::uint64_t seed, std::optional<bool> coex = {},
                     unsigned workers = 1) {
  auto engine = make_engine(city.scenario, city.trace, true, workers);
  LocalChannelService local(engine);
  SimulationOptions opts;
  opts.seed = seed;
  opts.channel = kind;
  opts.coexistence = coex;
  return run_simulation(city.scenario, city.trace, opts, &local);
}

}  // namespace

TEST_CASE("event queue ordering") {
  EventQueue q;
  std::vector<int> order;
  q.schedule(2.0, 0, [&] { order.push_back(3); });
  q.schedule(1.0, 1, [&] { order.push_back(2); });
  q.schedule(1.0, 0, [&] { order.push_back(1); });
  const auto h = q.schedule(1.5, 0, [&] { order.push_back(99); });
  q.cancel(h);
  q.schedule(1.0, 1, [&] { order.push_back(21); });
  CHECK(q.run_until(10.0) == 4);
  CHECK(order == std::vector<int>{1, 2, 21, 3});
  CHECK(q.now() == 2.0);
}

TEST_CASE("runs are reproducible and independent of worker count") {
  const auto city = small_city(6, 5.0);
  const auto a = run(city, ChannelKind::ray, 11);
  const auto b = run(city, ChannelKind::ray, 11, {}, 3);
  CHECK(a.records.size() > 0);
  CHECK(a.records == b.records);
  const auto s1 = run(city, ChannelKind::stochastic, 11);
  const auto s2 = run(city, ChannelKind::stochastic, 11);
  CHECK(s1.records == s2.records);
  const auto s3 = run(city, ChannelKind::stochastic, 12);
  CHECK_FALSE(s1.records == s3.records);
}

TEST_CASE("record invariants") {
  const auto city = small_city(8, 6.0);
  const auto res = run(city, ChannelKind::ray, 5);
  for (const auto& r : res.records) {
    CHECK(r.t_end > r.t_start);
    CHECK(r.tx != r.rx);
    if (r.decoded) {
      CHECK(r.rssi_dbm >= city.scenario.radio(r.rat).sensitivity_dbm);
      CHECK(r.sinr_db >= city.scenario.radio(r.rat).sinr_threshold_db);
      CHECK(r.reason == DropReason::none);
    }
    CHECK(std::is_sorted(r.interferers.begin(), r.interferers.end()));
  }
  const double p = prr(res.records);
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
}

TEST_CASE("nobody receives while transmitting") {
  const auto city = small_city(8, 6.0);
  const auto res = run(city, ChannelKind::stochastic, 9);
  const auto air = airtimes(res.records);
  for (const auto& r : res.records) {
    if (!r.decoded) continue;
    for (const auto& a : air) {
      if (a.tx != r.rx) continue;
      CHECK_FALSE((a.start < r.t_end && r.t_start < a.end));
    }
  }
  // and no vehicle ever holds two overlapping transmissions
  for (std::size_t i = 0; i < air.size(); ++i) {
    for (std::size_t j = i + 1; j < air.size(); ++j) {
      if (air[i].tx != air[j].tx) continue;
      CHECK_FALSE((air[i].start < air[j].end && air[j].start < air[i].end));
    }
  }
}

TEST_CASE("CSMA access timing") {
  const auto city = small_city(6, 8.0, 7, "[fleet]\nrat_cycle = dsrc\n");
  const auto res = run(city, ChannelKind::ray, 2);
  const auto air = airtimes(res.records);
  const CsmaConfig csma;
  std::map<std::uint64_t, double> created;
  for (const auto& p : res.packets) created[p.packet_id] = p.created_at;

  std::size_t idle_checked = 0;
  for (const auto& r : res.records) {
    const double c = created.at(r.packet_id);
    bool quiet = true;
    for (const auto& a : air) quiet = quiet && !(a.start < r.t_start && a.end > c);
    if (!quiet) continue;
    const double slots = (r.t_start - c - csma.aifs()) / csma.slot;
    CHECK(slots > -1e-6);
    CHECK(slots < csma.cw + 1e-6);
    CHECK(std::abs(slots - std::round(slots)) < 1e-6);
    ++idle_checked;
  }
  CHECK(idle_checked > 0);

  // overlapping airtimes only happen when two stations finish backoff in the same slot
  std::size_t overlaps = 0;
  for (std::size_t i = 0; i < air.size(); ++i) {
    for (std::size_t j = i + 1; j < air.size(); ++j) {
      if (!(air[i].start < air[j].end && air[j].start < air[i].end)) continue;
      ++overlaps;
      CHECK(std::abs(air[i].start - air[j].start) < 1e-9);
    }
  }
  MESSAGE("same-slot collisions: " << overlaps);
}

TEST_CASE("enabling coexistence never raises a packet's SINR") {
  const auto city = small_city(8, 6.0);
  for (auto kind : {ChannelKind::stochastic, ChannelKind::ray}) {
    const auto on = run(city, kind, 4, true);
    const auto off = run(city, kind, 4, false);
    REQUIRE(on.records.size() == off.records.size());
    for (std::size_t i = 0; i < on.records.size(); ++i) {
      const auto& a = on.records[i];
      const auto& b = off.records[i];
      REQUIRE(a.packet_id == b.packet_id);
      REQUIRE(a.rx == b.rx);
      CHECK(a.t_start == b.t_start);
      CHECK(a.sinr_db <= b.sinr_db + 1e-9);
      CHECK(a.decoded <= b.decoded);
    }
    CHECK(prr(on.records) <= prr(off.records));
  }
}

TEST_CASE("outputs are deterministic text") {
  const auto city = small_city(5, 4.0);
  const auto a = run(city, ChannelKind::stochastic, 1);
  const auto b = run(city, ChannelKind::stochastic, 1);
  CHECK(records_csv(a.records) == records_csv(b.records));
  SimulationOptions opts;
  opts.channel = ChannelKind::stochastic;
  CHECK(run_summary(city.scenario, opts, a).dump() == run_summary(city.scenario, opts, b).dump());
  const auto header = records_csv(a.records).substr(0, records_csv(a.records).find('\n'));
  CHECK(header.find("packet_id") != std::string::npos);
}

TEST_CASE("a duration override ends the run early") {
  const auto city = small_city(4, 6.0);
  auto engine = make_engine(city.scenario, city.trace);
  LocalChannelService local(engine);
  SimulationOptions opts;
  opts.duration = 2.0;
  const auto res = run_simulation(city.scenario, city.trace, opts, &local);
  CHECK(res.end_time <= res.start_time + 2.0 + 1e-9);
  for (const auto& p : res.packets) CHECK(p.created_at <= res.end_time + 1e-9);
}
