#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "v2xtwin/channel_engine.hpp"
#include "v2xtwin/linksim.hpp"

namespace v2xtwin {

/// Jaccard distance |R xor M| / |R u M|; 0 when both are empty.
template <typename T>
double disagreement_ratio(const std::set<T>& r, const std::set<T>& m) {
  std::size_t both = 0;
  for (const auto& x : r) both += m.contains(x) ? 1 : 0;
  const std::size_t uni = r.size() + m.size() - both;
  if (uni == 0) return 0.0;
  return static_cast<double>(uni - both) / static_cast<double>(uni);
}

/// Positively decided items, e.g. "packet:rx" for decoded receptions.
struct DecisionSet {
  std::string label;
  std::set<std::string> positives;
};

double disagreement_ratio(const DecisionSet& r, const DecisionSet& m);

DecisionSet decoded_set(const std::string& label, std::span<const ReceptionRecord> records);
/// Items "packet:rx:interferer" for every considered interferer of an intended reception.
DecisionSet interferer_set(const std::string& label, std::span<const ReceptionRecord> records);

/// Decoded over expected receptions, counting intended records only.
double prr(std::span<const ReceptionRecord> records, std::optional<RatId> rat = std::nullopt);
/// Decoded over expected when the counts are already known.
double prr(std::size_t decoded, std::size_t expected);

struct Histogram {
  double bin_width = 1.0;
  double origin = 0.0;  // left edge of bin 0
  std::vector<std::size_t> counts;
  std::vector<std::size_t> mode_bins;

  [[nodiscard]] std::size_t modes() const { return mode_bins.size(); }
  [[nodiscard]] double bin_center(std::size_t i) const {
    return origin + (static_cast<double>(i) + 0.5) * bin_width;
  }
};

/// Fixed-width bins aligned to multiples of bin_width. Modes are local maxima whose
/// prominence reaches prominence_fraction of the tallest bin. Throws EmptySeries.
Histogram histogram(std::span<const double> values, double bin_width,
                    double prominence_fraction = 0.05);

/// Peak indices of a count vector, zero assumed beyond both ends.
std::vector<std::size_t> find_modes(const std::vector<std::size_t>& counts,
                                    double prominence_fraction);

/// Finite SINR of intended receptions the receiver actually detected: above sensitivity,
/// not half duplex, source still present.
std::vector<double> sinr_series(std::span<const ReceptionRecord> records);

struct RunStats {
  std::size_t queries = 0;
  std::size_t hits = 0;
  std::size_t misses = 0;
  double cache_hit_ratio = 0.0;
  double trace_mean_cost_ms = 0.0;
  double trace_p95_ms = 0.0;
  double speedup_vs_no_cache = 0.0;
  double channel_seconds = 0.0;
};

/// Nearest-rank percentile (p in (0, 100]). Throws EmptySeries.
double percentile_nearest_rank(std::vector<double> values, double p);

RunStats run_stats(std::span<const QueryTiming> log);

std::string records_csv(std::span<const ReceptionRecord> records);
std::string histogram_csv(const Histogram& h);
std::string run_stats_csv(const RunStats& s);

}  // namespace v2xtwin
