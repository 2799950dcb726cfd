#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "v2xtwin/metrics.hpp"
#include "v2xtwin/simulation.hpp"

namespace v2xtwin {

inline constexpr double kHistogramBinDb = 1.0;

/// Deterministic run digest: counts, PRR per RAT, drop reasons, SINR modes. No wall-clock data.
nlohmann::json run_summary(const Scenario& scenario, const SimulationOptions& options,
                           const SimulationResult& result);

/// records.csv, sinr_hist.csv, summary.json and, when stats are given, run_stats.csv.
void write_run_outputs(const std::filesystem::path& dir, const Scenario& scenario,
                       const SimulationOptions& options, const SimulationResult& result,
                       const std::optional<RunStats>& stats);

/// Ray-vs-stochastic disagreement on one scenario and seed.
nlohmann::json compare_report(const SimulationResult& ray, const SimulationResult& stochastic);

/// One run_stats row per fleet size.
std::string bench_csv(const std::vector<std::pair<int, RunStats>>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace v2xtwin
