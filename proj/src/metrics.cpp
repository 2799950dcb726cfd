#include "v2xtwin/metrics.hpp"

#include <cmath>
#include <sstream>

#include "v2xtwin/config_text.hpp"
#include "v2xtwin/errors.hpp"

namespace v2xtwin {

double disagreement_ratio(const DecisionSet& r, const DecisionSet& m) {
  return disagreement_ratio(r.positives, m.positives);
}

DecisionSet decoded_set(const std::string& label, std::span<const ReceptionRecord> records) {
  DecisionSet out{label, {}};
  for (const auto& r : records) {
    if (r.intended && r.decoded) out.positives.insert(std::to_string(r.packet_id) + ":" + r.rx.str());
  }
  return out;
}

DecisionSet interferer_set(const std::string& label, std::span<const ReceptionRecord> records) {
  DecisionSet out{label, {}};
  for (const auto& r : records) {
    if (!r.intended) continue;
    for (const auto& i : r.interferers) {
      out.positives.insert(std::to_string(r.packet_id) + ":" + r.rx.str() + ":" + i.str());
    }
  }
  return out;
}

double prr(std::size_t decoded, std::size_t expected) {
  return expected == 0 ? 0.0 : static_cast<double>(decoded) / static_cast<double>(expected);
}

double prr(std::span<const ReceptionRecord> records, std::optional<RatId> rat) {
  std::size_t expected = 0;
  std::size_t decoded = 0;
  for (const auto& r : records) {
    if (!r.intended || (rat && r.rat != *rat)) continue;
    ++expected;
    decoded += r.decoded ? 1 : 0;
  }
  return prr(decoded, expected);
}

std::vector<std::size_t> find_modes(const std::vector<std::size_t>& counts,
                                    double prominence_fraction) {
  std::vector<std::size_t> out;
  if (counts.empty()) return out;
  const double tallest = static_cast<double>(*std::max_element(counts.begin(), counts.end()));
  if (tallest <= 0.0) return out;
  const double floor = prominence_fraction * tallest;

  // plateaus of equal counts behave as one bin
  struct Run {
    std::size_t first;
    std::size_t value;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (runs.empty() || runs.back().value != counts[i]) runs.push_back({i, counts[i]});
  }
  const std::size_t n = runs.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t h = runs[k].value;
    const bool left_lower = k == 0 || runs[k - 1].value < h;
    const bool right_lower = k + 1 == n || runs[k + 1].value < h;
    if (!left_lower || !right_lower || h == 0) continue;

    std::size_t left_base = 0;
    {
      std::size_t lowest = h;
      bool higher = false;
      for (std::size_t j = k; j-- > 0;) {
        if (runs[j].value > h) {
          higher = true;
          break;
        }
        lowest = std::min(lowest, runs[j].value);
      }
      left_base = higher ? lowest : 0;
    }
    // an equal peak further right wins the tie
    std::size_t right_base = 0;
    {
      std::size_t lowest = h;
      bool higher = false;
      for (std::size_t j = k + 1; j < n; ++j) {
        if (runs[j].value >= h) {
          higher = true;
          break;
        }
        lowest = std::min(lowest, runs[j].value);
      }
      right_base = higher ? lowest : 0;
    }
    const double prominence = static_cast<double>(h - std::max(left_base, right_base));
    if (prominence >= floor) out.push_back(runs[k].first);
  }
  return out;
}

Histogram histogram(std::span<const double> values, double bin_width, double prominence_fraction) {
  if (!(bin_width > 0.0)) throw InvalidConfig("bin width must be positive");
  std::vector<double> finite;
  for (double v : values) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  if (finite.empty()) throw EmptySeries("histogram of an empty series");
  const auto [lo_it, hi_it] = std::minmax_element(finite.begin(), finite.end());
  Histogram h;
  h.bin_width = bin_width;
  const double first = std::floor(*lo_it / bin_width);
  const double last = std::floor(*hi_it / bin_width);
  h.origin = first * bin_width;
  h.counts.assign(static_cast<std::size_t>(last - first) + 1, 0);
  for (double v : finite) {
    const auto idx = static_cast<std::size_t>(std::floor(v / bin_width) - first);
    ++h.counts[std::min(idx, h.counts.size() - 1)];
  }
  h.mode_bins = find_modes(h.counts, prominence_fraction);
  return h;
}

std::vector<double> sinr_series(std::span<const ReceptionRecord> records) {
  std::vector<double> out;
  for (const auto& r : records) {
    if (!r.intended || r.reason == DropReason::half_duplex || r.reason == DropReason::source_left ||
        r.reason == DropReason::sensitivity) {
      continue;
    }
    if (std::isfinite(r.sinr_db)) out.push_back(r.sinr_db);
  }
  return out;
}

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw EmptySeries("percentile of an empty series");
  if (!(p > 0.0 && p <= 100.0)) throw InvalidConfig("percentile must lie in (0, 100]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::max<std::size_t>(rank, 1) - 1];
}

RunStats run_stats(std::span<const QueryTiming> log) {
  RunStats s;
  std::vector<double> miss_costs;
  for (const auto& q : log) {
    ++s.queries;
    s.channel_seconds += q.seconds;
    if (q.hit) {
      ++s.hits;
    } else {
      ++s.misses;
      miss_costs.push_back(q.seconds);
    }
  }
  if (s.queries > 0) s.cache_hit_ratio = static_cast<double>(s.hits) / static_cast<double>(s.queries);
  if (!miss_costs.empty()) {
    double sum = 0.0;
    for (double c : miss_costs) sum += c;
    const double mean = sum / static_cast<double>(miss_costs.size());
    s.trace_mean_cost_ms = mean * 1e3;
    s.trace_p95_ms = percentile_nearest_rank(miss_costs, 95.0) * 1e3;
    if (s.channel_seconds > 0.0) {
      s.speedup_vs_no_cache = static_cast<double>(s.queries) * mean / s.channel_seconds;
    }
  }
  return s;
}

std::string records_csv(std::span<const ReceptionRecord> records) {
  std::ostringstream out;
  out << "packet_id,tx,rx,rat,kind,t_start,t_end,distance_m,intended,rssi_dbm,sinr_db,decoded,"
         "reason,channel,los,interferers,discarded\n";
  for (const auto& r : records) {
    out << r.packet_id << ',' << r.tx.value << ',' << r.rx.value << ',' << to_string(r.rat) << ','
        << to_string(r.kind) << ',' << format_double(r.t_start) << ',' << format_double(r.t_end)
        << ',' << format_double(r.distance) << ',' << (r.intended ? 1 : 0) << ','
        << format_double(r.rssi_dbm) << ',' << format_double(r.sinr_db) << ','
        << (r.decoded ? 1 : 0) << ',' << to_string(r.reason) << ',' << to_string(r.channel) << ','
        << (r.los ? 1 : 0) << ',';
    for (std::size_t i = 0; i < r.interferers.size(); ++i) {
      out << (i ? ";" : "") << r.interferers[i].value;
    }
    out << ',' << r.discarded << '\n';
  }
  return out.str();
}

std::string histogram_csv(const Histogram& h) {
  std::ostringstream out;
  out << "bin_low_db,bin_high_db,count,mode\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    const double lo = h.origin + static_cast<double>(i) * h.bin_width;
    const bool mode = std::find(h.mode_bins.begin(), h.mode_bins.end(), i) != h.mode_bins.end();
    out << format_double(lo) << ',' << format_double(lo + h.bin_width) << ',' << h.counts[i] << ','
        << (mode ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string run_stats_csv(const RunStats& s) {
  std::ostringstream out;
  out << "queries,hits,misses,cache_hit_ratio,trace_mean_cost_ms,trace_p95_ms,"
         "speedup_vs_no_cache,channel_seconds\n";
  out << s.queries << ',' << s.hits << ',' << s.misses << ',' << format_double(s.cache_hit_ratio)
      << ',' << format_double(s.trace_mean_cost_ms) << ',' << format_double(s.trace_p95_ms) << ','
      << format_double(s.speedup_vs_no_cache) << ',' << format_double(s.channel_seconds) << '\n';
  return out.str();
}

}  // namespace v2xtwin
