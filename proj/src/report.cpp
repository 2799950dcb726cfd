#include "v2xtwin/report.hpp"

#include <fstream>
#include <map>

#include "v2xtwin/errors.hpp"

namespace v2xtwin {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

nlohmann::json run_summary(const Scenario& scenario, const SimulationOptions& options,
                           const SimulationResult& result) {
  nlohmann::json j;
  j["channel"] = std::string(to_string(options.channel));
  j["seed"] = options.seed;
  j["coexistence"] = options.coexistence.value_or(scenario.sinr.coexistence);
  j["start_time"] = result.start_time;
  j["end_time"] = result.end_time;
  j["packets"] = result.packets.size();
  j["transmissions"] = result.transmissions;
  j["records"] = result.records.size();

  std::size_t expected = 0;
  std::size_t decoded = 0;
  std::size_t los = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> by_rat;
  std::map<std::string, std::size_t> drops;
  for (const auto& r : result.records) {
    if (!r.intended) continue;
    ++expected;
    decoded += r.decoded ? 1 : 0;
    los += r.los ? 1 : 0;
    auto& [d, e] = by_rat[std::string(to_string(r.rat))];
    ++e;
    d += r.decoded ? 1 : 0;
    ++drops[std::string(to_string(r.reason))];
  }
  j["expected"] = expected;
  j["decoded"] = decoded;
  j["prr"] = prr(decoded, expected);
  j["los_fraction"] = expected ? static_cast<double>(los) / static_cast<double>(expected) : 0.0;
  for (const auto& [rat, counts] : by_rat) {
    j["prr_by_rat"][rat] = {{"decoded", counts.first},
                            {"expected", counts.second},
                            {"prr", prr(counts.first, counts.second)}};
  }
  j["reasons"] = drops;

  const auto series = sinr_series(result.records);
  if (!series.empty()) {
    const auto h = histogram(series, kHistogramBinDb);
    std::vector<double> centers;
    for (auto b : h.mode_bins) centers.push_back(h.bin_center(b));
    j["sinr_histogram"] = {{"bin_width_db", h.bin_width},
                           {"samples", series.size()},
                           {"modes", h.modes()},
                           {"mode_centers_db", centers}};
  }
  return j;
}

void write_run_outputs(const std::filesystem::path& dir, const Scenario& scenario,
                       const SimulationOptions& options, const SimulationResult& result,
                       const std::optional<RunStats>& stats) {
  std::filesystem::create_directories(dir);
  write_text(dir / "records.csv", records_csv(result.records));
  const auto series = sinr_series(result.records);
  write_text(dir / "sinr_hist.csv",
             series.empty() ? std::string("bin_low_db,bin_high_db,count,mode\n")
                            : histogram_csv(histogram(series, kHistogramBinDb)));
  write_text(dir / "summary.json", run_summary(scenario, options, result).dump(2) + "\n");
  if (stats) write_text(dir / "run_stats.csv", run_stats_csv(*stats));
}

nlohmann::json compare_report(const SimulationResult& ray, const SimulationResult& stochastic) {
  const auto r = decoded_set("ray", ray.records);
  const auto s = decoded_set("stochastic", stochastic.records);
  const auto ri = interferer_set("ray", ray.records);
  const auto si = interferer_set("stochastic", stochastic.records);
  nlohmann::json j;
  j["packet_dr"] = disagreement_ratio(r, s);
  j["interferer_dr"] = disagreement_ratio(ri, si);
  j["prr_ray"] = prr(ray.records);
  j["prr_stochastic"] = prr(stochastic.records);
  j["decoded_ray"] = r.positives.size();
  j["decoded_stochastic"] = s.positives.size();
  return j;
}

std::string bench_csv(const std::vector<std::pair<int, RunStats>>& rows) {
  std::string out;
  for (const auto& [n, s] : rows) {
    const auto body = run_stats_csv(s);
    const auto nl = body.find('\n');
    if (out.empty()) out = "vehicles," + body.substr(0, nl + 1);
    out += std::to_string(n) + "," + body.substr(nl + 1);
  }
  return out;
}

}  // namespace v2xtwin
