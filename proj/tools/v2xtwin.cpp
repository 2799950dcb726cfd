#include <csignal>
#include <cstdlib>
#include <iostream>
#include <memory>

#include <spdlog/cfg/helpers.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "v2xtwin/report.hpp"
#include "v2xtwin/simulation.hpp"
#include "v2xtwin/stochastic.hpp"
#include "v2xtwin/synth.hpp"
#include "v2xtwin/twinlink.hpp"
#include "v2xtwin/udp.hpp"
#include "v2xtwin/units.hpp"

using namespace v2xtwin;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct RunArgs {
  std::string scenario;
  std::string trace;
  std::uint64_t seed = 1;
  std::string channel = "ray";
  std::string coexistence;
  std::string out = "out";
  std::string remote;
  unsigned workers = 1;
  bool no_cache = false;
};

void add_run_flags(CLI::App* cmd, RunArgs& a, bool with_channel) {
  cmd->add_option("--scenario", a.scenario, "scenario file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--trace", a.trace, "mobility trace CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", a.seed, "random seed");
  if (with_channel) {
    cmd->add_option("--channel", a.channel, "channel model")
        ->check(CLI::IsMember({"ray", "stochastic"}));
  }
  cmd->add_option("--coexistence", a.coexistence, "override the scenario setting")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--out", a.out, "output directory");
  cmd->add_option("--remote", a.remote, "channel server host:port");
  cmd->add_option("--workers", a.workers, "threads per all-pairs trace")->check(CLI::Range(1u, 256u));
}

/// Ray channel for a run: either a local engine or a remote server.
struct RayBackend {
  std::unique_ptr<ChannelEngine> engine;
  std::unique_ptr<ChannelService> service;
};

RayBackend make_backend(const Scenario& sc, const TraceStore& trace, const RunArgs& a) {
  RayBackend b;
  if (!a.remote.empty()) {
    b.service = std::make_unique<RemoteChannelService>(a.remote, twin_digest(sc));
  } else {
    b.engine = std::make_unique<ChannelEngine>(make_engine(sc, trace, !a.no_cache, a.workers));
    b.service = std::make_unique<LocalChannelService>(*b.engine);
  }
  return b;
}

SimulationOptions options_of(const RunArgs& a, ChannelKind channel) {
  SimulationOptions o;
  o.seed = a.seed;
  o.channel = channel;
  if (!a.coexistence.empty()) o.coexistence = a.coexistence == "on";
  return o;
}

int cmd_run(const RunArgs& a) {
  const auto sc = load_scenario(a.scenario);
  const auto trace = ingest_trace(a.trace);
  auto backend = make_backend(sc, trace, a);
  const auto opts = options_of(a, channel_from_string(a.channel));
  const auto result = run_simulation(sc, trace, opts, backend.service.get());
  std::optional<RunStats> stats;
  if (backend.engine) stats = run_stats(backend.engine->timing_log());
  write_run_outputs(a.out, sc, opts, result, stats);
  const auto summary = run_summary(sc, opts, result);
  std::cout << "prr " << summary["prr"].get<double>() << " over " << summary["expected"]
            << " expected receptions; outputs in " << a.out << "\n";
  return 0;
}

int cmd_compare(const RunArgs& a) {
  const auto sc = load_scenario(a.scenario);
  const auto trace = ingest_trace(a.trace);
  auto backend = make_backend(sc, trace, a);
  const auto ray_opts = options_of(a, ChannelKind::ray);
  const auto sto_opts = options_of(a, ChannelKind::stochastic);
  const auto ray = run_simulation(sc, trace, ray_opts, backend.service.get());
  const auto sto = run_simulation(sc, trace, sto_opts, backend.service.get());
  write_run_outputs(fs::path(a.out) / "ray", sc, ray_opts, ray, std::nullopt);
  write_run_outputs(fs::path(a.out) / "stochastic", sc, sto_opts, sto, std::nullopt);
  const auto report = compare_report(ray, sto);
  write_text(fs::path(a.out) / "compare.json", report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

struct BenchArgs {
  std::vector<int> fleets{5, 10, 20};
  double duration = 30.0;
  std::uint64_t seed = 1;
  std::string out = "out";
};

Scenario grid_scenario(const GridCity& city) {
  return parse_scenario(city.buildings + "\n[mobility]\nstep = 0.1\n");
}

int cmd_bench(const BenchArgs& a) {
  std::vector<std::pair<int, RunStats>> rows;
  for (int n : a.fleets) {
    GridCityConfig cfg;
    cfg.vehicles = n;
    cfg.duration = a.duration;
    cfg.seed = a.seed;
    const auto city = make_grid_city(cfg);
    const auto sc = grid_scenario(city);
    auto engine = make_engine(sc, city.trace);
    LocalChannelService service(engine);
    SimulationOptions opts;
    opts.seed = a.seed;
    run_simulation(sc, city.trace, opts, &service);
    const auto s = run_stats(engine.timing_log());
    spdlog::info("{} vehicles: {} queries, hit ratio {:.4f}, speedup {:.1f}", n, s.queries,
                 s.cache_hit_ratio, s.speedup_vs_no_cache);
    rows.emplace_back(n, s);
  }
  fs::create_directories(a.out);
  const auto csv = bench_csv(rows);
  write_text(fs::path(a.out) / "bench.csv", csv);
  std::cout << csv;
  return 0;
}

int cmd_serve(const std::string& scenario_path, const std::string& listen, unsigned workers) {
  const auto sc = load_scenario(scenario_path);
  EngineConfig cfg;
  cfg.tracer = sc.tracer;
  cfg.gating = sc.gating;
  cfg.workers = workers;
  ChannelEngine engine(sc.scene, cfg);
  TwinServer server(engine, twin_digest(sc), [&sc](VehicleId id) { return sc.class_of(id); });
  server.bind(parse_address(listen));
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("serving channel on port {} (digest {:016x})", server.port(), twin_digest(sc));
  std::cout << "listening " << server.port() << std::endl;
  server.serve(g_stop);
  spdlog::info("stopped after {} duplicates, {} malformed datagrams", server.duplicates(),
               server.malformed());
  return 0;
}

struct SynthArgs {
  GridCityConfig city;
  std::string out = "out";
};

int cmd_synth(const SynthArgs& a) {
  const auto city = make_grid_city(a.city);
  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "scenario.txt",
             "# generated grid city\n" + city.buildings + "\n[mobility]\nstep = 0.1\n");
  write_text(fs::path(a.out) / "trace.csv", write_trace(city.trace));
  std::cout << "wrote " << (fs::path(a.out) / "scenario.txt").string() << " and "
            << (fs::path(a.out) / "trace.csv").string() << "\n";
  return 0;
}

bool report_check(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
  return ok;
}

int cmd_validate(const std::string& scenario_path, const std::string& trace_path) {
  bool ok = true;

  const auto empty = parse_scene("");
  TracerConfig tc;
  const Endpoint tx{{0, 0, 1.8}, {}, std::nullopt};
  const Endpoint rx{{100, 0, 1.8}, {}, std::nullopt};
  const double g_db = linear_to_db(summarize(trace_paths(empty, {}, tx, rx, tc)).total_gain);
  ok &= report_check("free-space gain at 100 m", std::abs(g_db + 87.85) < 0.01,
                     std::to_string(g_db) + " dB");

  ok &= report_check("LoS probability", p_los(18.0) == 1.0 && std::abs(p_los(36.0) - 0.68394) < 1e-5,
                     "p_los(36) = " + std::to_string(p_los(36.0)));

  const std::set<std::string> ab{"a", "b"};
  const std::set<std::string> a{"a"};
  ok &= report_check("disagreement ratio", disagreement_ratio(ab, a) == 0.5 &&
                                               disagreement_ratio(ab, ab) == 0.0,
                     "{a,b} vs {a} = " + std::to_string(disagreement_ratio(ab, a)));

  const Message m{7, ChanRespPayload{VehicleId{1}, VehicleId{2}, 1.0, 0.0, true}};
  const auto frame = encode(m);
  ok &= report_check("codec round trip", frame.size() == 37 && decode(frame) == m,
                     std::to_string(frame.size()) + " byte response frame");

  if (!scenario_path.empty()) {
    const auto sc = load_scenario(scenario_path);
    ok &= report_check("scenario", true,
                       std::to_string(sc.scene.static_surfaces.size()) + " surfaces, digest " +
                           std::to_string(twin_digest(sc)));
  }
  if (!trace_path.empty()) {
    const auto trace = ingest_trace(trace_path);
    ok &= report_check("trace", true,
                       std::to_string(trace.size()) + " vehicles over [" +
                           std::to_string(trace.start_time()) + ", " +
                           std::to_string(trace.end_time()) + "] s");
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("VN3T_LOG")) spdlog::cfg::helpers::load_levels(level);

  CLI::App app{"Coexistence simulator for vehicular networks with a ray-traced channel twin"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "simulate one scenario and write records and metrics");
  add_run_flags(run, run_args, true);
  run->add_flag("--no-cache", run_args.no_cache, "retrace every query");

  RunArgs cmp_args;
  auto* compare = app.add_subcommand("compare", "ray against stochastic on one scenario");
  add_run_flags(compare, cmp_args, false);

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "cache statistics over a fleet-size sweep");
  bench->add_option("--fleets", bench_args.fleets, "fleet sizes")->delimiter(',');
  bench->add_option("--duration", bench_args.duration, "seconds per run");
  bench->add_option("--seed", bench_args.seed, "random seed");
  bench->add_option("--out", bench_args.out, "output directory");

  std::string serve_scenario;
  std::string listen = "127.0.0.1:47474";
  unsigned serve_workers = 1;
  auto* serve = app.add_subcommand("serve", "answer channel requests over UDP");
  serve->add_option("--scenario", serve_scenario, "scenario file")->required()->check(CLI::ExistingFile);
  serve->add_option("--listen", listen, "host:port to bind (port 0 picks one)");
  serve->add_option("--workers", serve_workers, "threads per all-pairs trace");

  std::string val_scenario;
  std::string val_trace;
  auto* validate = app.add_subcommand("validate", "built-in property checks and input validation");
  validate->add_option("--scenario", val_scenario, "scenario file")->check(CLI::ExistingFile);
  validate->add_option("--trace", val_trace, "mobility trace CSV")->check(CLI::ExistingFile);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a grid city scenario and trace");
  synth->add_option("--vehicles", synth_args.city.vehicles);
  synth->add_option("--duration", synth_args.city.duration);
  synth->add_option("--blocks", synth_args.city.blocks_x)->each([&](const std::string& v) {
    synth_args.city.blocks_y = std::stoi(v);
  });
  synth->add_option("--block-size", synth_args.city.block_size, "building footprint edge (m)");
  synth->add_option("--street-width", synth_args.city.street_width, "street width (m)");
  synth->add_option("--height", synth_args.city.building_height, "building height (m)");
  synth->add_option("--height-spread", synth_args.city.height_spread, "height jitter (m)");
  synth->add_option("--setback", synth_args.city.max_setback, "largest footprint inset (m)");
  synth->add_option("--seed", synth_args.city.seed);
  synth->add_option("--out", synth_args.out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_args);
    if (*compare) return cmd_compare(cmp_args);
    if (*bench) return cmd_bench(bench_args);
    if (*serve) return cmd_serve(serve_scenario, listen, serve_workers);
    if (*validate) return cmd_validate(val_scenario, val_trace);
    if (*synth) return cmd_synth(synth_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
