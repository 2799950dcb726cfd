// Acceptance run: one PASS/FAIL line per criterion, nonzero exit when any fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include "oracle.hpp"

#include "v2xtwin/errors.hpp"
#include "v2xtwin/metrics.hpp"
#include "v2xtwin/raychannel.hpp"
#include "v2xtwin/report.hpp"
#include "v2xtwin/simulation.hpp"
#include "v2xtwin/stochastic.hpp"
#include "v2xtwin/synth.hpp"
#include "v2xtwin/twinlink.hpp"
#include "v2xtwin/udp.hpp"
#include "v2xtwin/units.hpp"

using namespace v2xtwin;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int n, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " [" << n << "] " << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

Endpoint ep(Vec3 p) { return Endpoint{p, {}, std::nullopt}; }

struct Demo {
  Scenario scenario;
  TraceStore trace;
};

Demo load_demo() {
  const std::string dir = std::string(V2XTWIN_DATA_DIR) + "/demo/";
  return {load_scenario(dir + "scenario.txt"), ingest_trace(dir + "trace.csv")};
}

SimulationResult run_local(const Scenario& sc, const TraceStore& trace, ChannelKind kind,
                           std::optional<bool> coexistence, bool caching = true,
                           ChannelEngine** engine_out = nullptr) {
  static std::unique_ptr<ChannelEngine> kept;
  kept = std::make_unique<ChannelEngine>(make_engine(sc, trace, caching));
  LocalChannelService local(*kept);
  SimulationOptions opts;
  opts.channel = kind;
  opts.coexistence = coexistence;
  auto res = run_simulation(sc, trace, opts, &local);
  if (engine_out) *engine_out = kept.get();
  return res;
}

void friis() {
  const auto t0 = Clock::now();
  const auto set = trace_paths(parse_scene(""), {}, ep({0, 0, 1.8}), ep({100, 0, 1.8}), TracerConfig{});
  const double g = linear_to_db(summarize(set).total_gain);
  const double dt = seconds_since(t0);
  report(1, "free-space gain at 100 m", std::abs(g + 87.85) < 0.01 && dt < 1.0,
         fmt(g, 6) + " dB (oracle " + fmt(oracle::friis_gain_db(100, 5.89e9), 6) + "), " + fmt(dt, 3) + " s");
}

void los_probability() {
  bool ok = true;
  for (double d = 0.25; d <= 18.0; d += 0.25) ok = ok && p_los(d) == 1.0;
  const double p36 = p_los(36.0);
  ok = ok && std::abs(p36 - 0.68394) < 1e-5;
  StochasticParams params;
  std::mt19937_64 rng(36);
  int los = 0;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) los += sample_channel(36.0, params, rng).los ? 1 : 0;
  const double frac = static_cast<double>(los) / kDraws;
  ok = ok && std::abs(frac - 0.68394) < 0.01;
  report(2, "LoS probability", ok, "p_los(36) = " + fmt(p36, 7) + ", Monte Carlo " + fmt(frac, 5));
}

void sinr_oracle() {
  const auto t0 = Clock::now();
  bool ok = true;
  double worst = 0.0;
  for (std::uint64_t seed = 1000; seed < 1050; ++seed) {
    const auto c = oracle::random_sinr_case(seed, 8);
    ok = ok && c.same_blocks && c.same_edges && c.blocks > 0;
    worst = std::max({worst, c.max_block_error, c.aggregate_error});
  }
  const double dt = seconds_since(t0);
  ok = ok && worst <= 1e-9 && dt < 30.0;
  report(3, "SINR against brute force", ok, "50 instances, worst relative error " + fmt(worst, 3) + ", " + fmt(dt, 3) + " s");
}

Scenario grid_scenario(const GridCity& city) {
  return parse_scenario(city.buildings + "\n[mobility]\nstep = 0.1\n");
}

void cache_transparency() {
  GridCityConfig cfg;
  cfg.vehicles = 20;
  cfg.duration = 30.0;
  const auto city = make_grid_city(cfg);
  const auto sc = grid_scenario(city);
  ChannelEngine* engine = nullptr;
  const auto cached = run_local(sc, city.trace, ChannelKind::ray, std::nullopt, true, &engine);
  const auto stats = run_stats(engine->timing_log());
  const auto fresh = run_local(sc, city.trace, ChannelKind::ray, std::nullopt, false);
  const bool same = cached.records == fresh.records;
  report(4, "cache transparency", same && stats.cache_hit_ratio > 0.9 && !cached.records.empty(),
         std::to_string(cached.records.size()) + " records " + (same ? "identical" : "DIFFER") +
             ", hit ratio " + fmt(stats.cache_hit_ratio));
}

void hit_ratio_sweep() {
  const auto t0 = Clock::now();
  std::vector<std::pair<int, RunStats>> rows;
  for (int n : {5, 10, 20}) {
    GridCityConfig cfg;
    cfg.vehicles = n;
    const auto city = make_grid_city(cfg);
    const auto sc = grid_scenario(city);
    ChannelEngine* engine = nullptr;
    run_local(sc, city.trace, ChannelKind::ray, std::nullopt, true, &engine);
    rows.emplace_back(n, run_stats(engine->timing_log()));
  }
  const double dt = seconds_since(t0);
  bool ok = dt < 300.0 && rows[2].second.speedup_vs_no_cache > 5.0;
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) ok = ok && rows[i].second.cache_hit_ratio >= rows[i - 1].second.cache_hit_ratio;
    detail += std::to_string(rows[i].first) + " vehicles: hit " + fmt(rows[i].second.cache_hit_ratio) +
              " speedup " + fmt(rows[i].second.speedup_vs_no_cache, 3) + "; ";
  }
  report(5, "hit ratio over fleet size", ok, detail + fmt(dt, 3) + " s");
}

struct DemoRuns {
  SimulationResult ray;
  SimulationResult stochastic;
  SimulationResult stochastic_off;
};

void bimodality(const DemoRuns& runs) {
  const auto s = histogram(sinr_series(runs.stochastic.records), kHistogramBinDb);
  const auto r = histogram(sinr_series(runs.ray.records), kHistogramBinDb);
  std::string modes;
  for (auto b : r.mode_bins) modes += fmt(r.bin_center(b), 3) + " ";
  report(6, "SINR histogram modes", s.modes() >= 2 && r.modes() == 1,
         "stochastic " + std::to_string(s.modes()) + " modes, ray " + std::to_string(r.modes()) +
             " modes (at " + modes + "dB)");
}

void coexistence_ordering(const DemoRuns& runs) {
  const double off = prr(runs.stochastic_off.records);
  const double sto = prr(runs.stochastic.records);
  const double ray = prr(runs.ray.records);
  report(7, "PRR ordering", off >= sto && ray < sto && ray < off,
         "no coexistence " + fmt(off) + ", stochastic " + fmt(sto) + ", ray " + fmt(ray));
}

void disagreement(const DemoRuns& runs) {
  using S = std::set<std::string>;
  const S ab{"a", "b"};
  bool ok = disagreement_ratio(ab, ab) == 0.0 && disagreement_ratio(ab, S{"c", "d"}) == 1.0 &&
            disagreement_ratio(ab, S{"a"}) == 0.5;
  std::mt19937_64 rng(8);
  for (int i = 0; i < 1000; ++i) {
    S x;
    S y;
    for (int k = 0; k < 6; ++k) {
      if (rng() % 2) x.insert(std::to_string(rng() % 9));
      if (rng() % 2) y.insert(std::to_string(rng() % 9));
    }
    ok = ok && disagreement_ratio(x, y) == disagreement_ratio(y, x) && disagreement_ratio(x, x) == 0.0;
    ok = ok && std::abs(disagreement_ratio(x, y) - oracle::jaccard(x, y)) < 1e-15;
  }
  const auto cmp = compare_report(runs.ray, runs.stochastic);
  const double dr = cmp["packet_dr"].get<double>();
  report(8, "disagreement ratio", ok && dr > 0.0 && dr <= 1.0, "suite " + std::string(ok ? "ok" : "broken") + ", demo packet DR " + fmt(dr));
}

void image_method() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> side(2.0, 40.0);
  std::uniform_real_distribution<double> h(1.0, 3.0);
  double worst_len = 0.0;
  double worst_angle = 0.0;
  int found = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double a = std::acos(-1.0) * (u(rng) + 1.0);
    const Vec3 c{50 * u(rng), 50 * u(rng), 0};
    const Vec3 along{std::cos(a), std::sin(a), 0};
    const Vec3 n{-along.y, along.x, 0};
    const Vec3 p0 = c - along * 300.0;
    const Vec3 p1 = c + along * 300.0;
    std::ostringstream text;
    text.precision(17);
    text << "[surfaces]\nwall material=metal vertices=" << p0.x << ',' << p0.y << ",0;" << p1.x << ',' << p1.y
         << ",0;" << p1.x << ',' << p1.y << ",60;" << p0.x << ',' << p0.y << ",60\n";
    const auto scene = parse_scene(text.str());
    const Vec3 tx = c + along * (80 * u(rng)) + n * side(rng) + Vec3{0, 0, h(rng)};
    const Vec3 rx = c + along * (80 * u(rng)) + n * side(rng) + Vec3{0, 0, h(rng)};
    const auto set = trace_paths(scene, {}, ep(tx), ep(rx), TracerConfig{});
    const auto m = oracle::reflect_once(tx, rx, c, n);
    for (const auto& p : set.paths) {
      if (p.kind != PathKind::reflection || p.order != 1) continue;
      ++found;
      const auto& q = p.interaction_points.at(0);
      worst_len = std::max(worst_len, std::abs(p.length() - m.length));
      worst_len = std::max(worst_len, std::abs(distance(tx, q) + distance(q, rx) - m.length));
      const auto [in, out] = oracle::bounce_angles(tx, q, rx, n);
      worst_angle = std::max(worst_angle, std::abs(in - out));
    }
  }
  report(9, "image-method reflections", found == 100 && worst_len < 1e-6 && worst_angle < 1e-9,
         std::to_string(found) + " reflections, length error " + fmt(worst_len, 3) + " m, angle error " +
             fmt(worst_angle, 3) + " rad");
}

void transport(const Demo& demo, const DemoRuns& runs) {
  const auto& sc = demo.scenario;
  auto engine = make_engine(sc, demo.trace);
  TwinServer server(engine, twin_digest(sc), [&](VehicleId id) { return sc.class_of(id); });
  server.bind(parse_address("127.0.0.1:0"));
  std::atomic<bool> stop{false};
  std::thread worker([&] { server.serve(stop); });
  SimulationResult remote_run;
  SimulationOptions opts;
  opts.channel = ChannelKind::ray;
  opts.coexistence = true;
  try {
    RemoteChannelService remote("127.0.0.1:" + std::to_string(server.port()), twin_digest(sc));
    remote_run = run_simulation(sc, demo.trace, opts, &remote);
  } catch (...) {
    stop = true;
    worker.join();
    throw;
  }
  stop = true;
  worker.join();
  const bool same_records = records_csv(remote_run.records) == records_csv(runs.ray.records);
  const bool same_summary = run_summary(sc, opts, remote_run).dump() == run_summary(sc, opts, runs.ray).dump();

  std::mt19937_64 rng(10);
  std::size_t rejected = 0;
  std::size_t mismatched = 0;
  constexpr int kFrames = 1000000;
  for (int i = 0; i < kFrames; ++i) {
    std::vector<std::uint8_t> bytes;
    if (i % 2 == 0) {
      Message m;
      m.sequence = static_cast<std::uint32_t>(rng());
      const std::uint64_t bits = rng();
      double x;
      std::memcpy(&x, &bits, sizeof x);
      switch (rng() % 4) {
        case 0: m.payload = InitPayload{rng()}; break;
        case 1: {
          LocUpdatePayload p;
          p.state.vehicle_id = VehicleId{static_cast<std::uint32_t>(rng())};
          p.state.t = x;
          p.state.position = {x, -x, 1.0};
          p.deactivate = rng() % 2 == 0;
          m.payload = p;
          break;
        }
        case 2: m.payload = ChanReqPayload{VehicleId{1}, VehicleId{2}, x}; break;
        default: m.payload = ChanRespPayload{VehicleId{3}, VehicleId{4}, x, x, true};
      }
      bytes = encode(m);
      if (encode(decode(bytes)) != bytes) ++mismatched;
      if (rng() % 2) bytes[rng() % bytes.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
      if (rng() % 4 == 0) bytes.resize(rng() % (bytes.size() + 1));
    } else {
      bytes.resize(rng() % 80);
      for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    }
    try {
      decode(bytes);
    } catch (const Error&) {
      ++rejected;
    }
  }
  report(10, "transport transparency", same_records && same_summary && mismatched == 0 && server.malformed() == 0,
         std::string("socket run ") + (same_records && same_summary ? "byte-identical" : "DIFFERS") + " (" +
             std::to_string(remote_run.records.size()) + " records); " + std::to_string(kFrames) +
             " fuzzed frames, " + std::to_string(rejected) + " rejected cleanly, " + std::to_string(mismatched) +
             " round-trip mismatches");
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  friis();
  los_probability();
  sinr_oracle();
  cache_transparency();
  hit_ratio_sweep();

  const auto demo = load_demo();
  DemoRuns runs;
  runs.ray = run_local(demo.scenario, demo.trace, ChannelKind::ray, true);
  runs.stochastic = run_local(demo.scenario, demo.trace, ChannelKind::stochastic, true);
  runs.stochastic_off = run_local(demo.scenario, demo.trace, ChannelKind::stochastic, false);
  bimodality(runs);
  coexistence_ordering(runs);
  disagreement(runs);
  image_method();
  transport(demo, runs);

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
            << fmt(seconds_since(t0), 4) << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
