#include "v2xtwin/coexistence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "v2xtwin/errors.hpp"

namespace v2xtwin {

namespace {

constexpr double kFreqTol = 1e-3;   // Hz
constexpr double kTimeTol = 1e-12;  // s

void push_unique_sorted(std::vector<double>& v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) {
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  }
  v = std::move(out);
}

std::size_t edge_index(const std::vector<double>& edges, double x) {
  const auto it = std::lower_bound(edges.begin(), edges.end(), x - kFreqTol);
  return static_cast<std::size_t>(it - edges.begin());
}

}  // namespace

std::string_view to_string(RatId rat) {
  switch (rat) {
    case RatId::dsrc:
      return "dsrc";
    case RatId::nr_v2x:
      return "nr_v2x";
    case RatId::lte_v2x:
      return "lte_v2x";
  }
  return "?";
}

RatId rat_from_string(std::string_view s) {
  if (s == "dsrc") return RatId::dsrc;
  if (s == "nr_v2x") return RatId::nr_v2x;
  if (s == "lte_v2x") return RatId::lte_v2x;
  throw InvalidSpec("unknown RAT '" + std::string(s) + "'");
}

std::size_t RatSpec::subcarriers() const {
  if (!(subcarrier_spacing > 0.0) || !(bandwidth > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(bandwidth / subcarrier_spacing + 1e-9));
}

RatSpec default_rat_spec(RatId rat) {
  switch (rat) {
    case RatId::dsrc:
      return {RatId::dsrc, 5.9e9, 10e6, 156.25e3, 8e-6};
    case RatId::nr_v2x:
      return {RatId::nr_v2x, 5.9e9, 10e6, 60e3, 0.25e-3};
    case RatId::lte_v2x:
      return {RatId::lte_v2x, 5.9e9, 10e6, 15e3, 1e-3};
  }
  throw InvalidSpec("unknown RAT");
}

void validate(const RatSpec& spec) {
  const std::string name(to_string(spec.rat_id));
  if (!(spec.bandwidth > 0.0)) throw InvalidSpec(name + ": bandwidth must be positive");
  if (!(spec.fc > spec.bandwidth / 2.0)) throw InvalidSpec(name + ": carrier below half the band");
  if (spec.subcarriers() < 1) throw InvalidSpec(name + ": fewer than one subcarrier fits the band");
  if (!(spec.slot_duration > 0.0)) throw InvalidSpec(name + ": slot duration must be positive");
}

ResourceGrid ResourceGrid::build(const std::vector<RatSpec>& rats, double horizon) {
  if (rats.empty()) throw InvalidSpec("at least one RAT is required");
  if (rats.size() > 32) throw InvalidSpec("at most 32 RATs are supported");
  ResourceGrid g;
  for (const auto& r : rats) {
    validate(r);
    for (const auto& other : g.rats_) {
      if (other.rat_id == r.rat_id) throw InvalidSpec("duplicate RAT " + std::string(to_string(r.rat_id)));
    }
    g.rats_.push_back(r);
  }

  for (const auto& r : g.rats_) {
    const std::size_t n = r.subcarriers();
    for (std::size_t l = 0; l <= n; ++l) {
      g.freq_edges_.push_back(r.low() + static_cast<double>(l) * r.subcarrier_spacing);
    }
    g.freq_edges_.push_back(r.high());
  }
  push_unique_sorted(g.freq_edges_, kFreqTol);

  for (const auto& r : g.rats_) {
    g.bands_.emplace_back(edge_index(g.freq_edges_, r.low()), edge_index(g.freq_edges_, r.high()));
  }
  g.cover_.assign(g.freq_blocks(), 0U);
  for (std::size_t k = 0; k < g.rats_.size(); ++k) {
    for (std::size_t i = g.bands_[k].first; i < g.bands_[k].second; ++i) g.cover_[i] |= 1U << k;
  }

  if (horizon > 0.0) g.slot_edges_ = g.slot_edges_between(0.0, horizon);
  return g;
}

const RatSpec& ResourceGrid::rat(RatId id) const { return rats_[rat_index(id)]; }

bool ResourceGrid::has_rat(RatId id) const {
  return std::any_of(rats_.begin(), rats_.end(), [&](const RatSpec& r) { return r.rat_id == id; });
}

std::size_t ResourceGrid::rat_index(RatId id) const {
  for (std::size_t k = 0; k < rats_.size(); ++k) {
    if (rats_[k].rat_id == id) return k;
  }
  throw InvalidSpec("RAT " + std::string(to_string(id)) + " is not part of the grid");
}

std::pair<std::size_t, std::size_t> ResourceGrid::band_blocks(RatId id) const {
  return bands_[rat_index(id)];
}

double ResourceGrid::mean_block_bandwidth() const {
  return (freq_edges_.back() - freq_edges_.front()) / static_cast<double>(freq_blocks());
}

std::vector<double> ResourceGrid::slot_edges_between(double t0, double t1) const {
  std::vector<double> edges{t0, t1};
  for (const auto& r : rats_) {
    const double first = std::ceil(t0 / r.slot_duration);
    const double last = std::floor(t1 / r.slot_duration);
    for (double k = first; k <= last; k += 1.0) {
      const double e = k * r.slot_duration;
      if (e > t0 + kTimeTol && e < t1 - kTimeTol) edges.push_back(e);
    }
  }
  push_unique_sorted(edges, kTimeTol);
  edges.back() = t1;
  return edges;
}

TransmissionTracker::TransmissionTracker(double propagation_bound, ActivityFn is_active)
    : propagation_bound_(propagation_bound), is_active_(std::move(is_active)) {}

const TrackingObject& TransmissionTracker::register_tx(VehicleId vehicle, const RatSpec& rat,
                                                       double start, double duration,
                                                       double tx_power_w) {
  if (!(duration > 0.0)) throw InvalidConfig("transmission duration must be positive");
  if (!(tx_power_w >= 0.0)) throw InvalidConfig("transmit power must be non-negative");
  if (is_active_ && !is_active_(vehicle)) {
    throw InactiveVehicle("vehicle " + vehicle.str() + " is not active");
  }
  if (transmitting(vehicle, start, start + duration)) {
    throw HalfDuplexViolation("vehicle " + vehicle.str() + " already transmits in that interval");
  }
  TrackingObject obj;
  obj.transmission_id = next_id_++;
  obj.vehicle_id = vehicle;
  obj.rat_id = rat.rat_id;
  obj.fc = rat.fc;
  obj.bandwidth = rat.bandwidth;
  obj.start = start;
  obj.duration = duration;
  obj.psd = tx_power_w / rat.bandwidth;
  return objects_.emplace(obj.transmission_id, obj).first->second;
}

void TransmissionTracker::expire(double now) {
  std::erase_if(objects_, [&](const auto& kv) { return kv.second.end() + propagation_bound_ < now; });
}

std::vector<const TrackingObject*> TransmissionTracker::overlapping(double t0, double t1) const {
  std::vector<const TrackingObject*> out;
  for (const auto& [_, o] : objects_) {
    if (o.start < t1 && o.end() > t0) out.push_back(&o);
  }
  return out;
}

const TrackingObject* TransmissionTracker::find(std::uint64_t transmission_id) const {
  const auto it = objects_.find(transmission_id);
  return it == objects_.end() ? nullptr : &it->second;
}

bool TransmissionTracker::transmitting(VehicleId vehicle, double t0, double t1) const {
  return std::any_of(objects_.begin(), objects_.end(), [&](const auto& kv) {
    const auto& o = kv.second;
    return o.vehicle_id == vehicle && o.start < t1 && o.end() > t0;
  });
}

std::map<BlockKey, double> SinrReport::per_block() const {
  std::map<BlockKey, double> out;
  for (const auto& g : groups) {
    for (std::size_t f = g.freq_first; f < g.freq_last; ++f) {
      for (std::size_t s = g.slot_first; s < g.slot_last; ++s) out[{f, s}] = g.sinr;
    }
  }
  return out;
}

SinrReport evaluate_sinr(VehicleId rx, const TrackingObject& desired, const ResourceGrid& grid,
                         const TransmissionTracker& tracker, const ChannelFn& channel,
                         const SinrConfig& cfg) {
  const auto& fe = grid.freq_edges();
  const std::size_t f0 = edge_index(fe, desired.low());
  const std::size_t f1 = std::min(edge_index(fe, desired.high()), grid.freq_blocks());
  if (f0 >= f1 || f1 > grid.freq_blocks() || std::abs(fe[f0] - desired.low()) > kFreqTol ||
      !(desired.duration > 0.0)) {
    throw NoDesiredOverlap("transmission " + std::to_string(desired.transmission_id) +
                           " occupies no resource block");
  }

  SinrReport report;
  report.slot_edges = grid.slot_edges_between(desired.start, desired.end());
  const auto& te = report.slot_edges;
  const std::size_t m = te.size() - 1;
  report.desired_gain = channel(desired.vehicle_id, rx);
  const double signal = desired.psd * report.desired_gain;

  struct Active {
    const TrackingObject* obj;
    double density;  // psd * G
  };
  std::vector<Active> active;
  for (const TrackingObject* o : tracker.overlapping(desired.start, desired.end())) {
    if (o->transmission_id == desired.transmission_id) continue;
    if (o->vehicle_id == rx || o->vehicle_id == desired.vehicle_id) continue;
    const bool cross = o->rat_id != desired.rat_id;
    if (cross && !cfg.coexistence) continue;
    if (std::min(o->high(), desired.high()) - std::max(o->low(), desired.low()) <= kFreqTol) continue;
    const double g = channel(o->vehicle_id, rx);
    Interferer entry{o->vehicle_id, o->rat_id, g, o->psd * g * o->bandwidth};
    if (g < cfg.g_thr) {
      report.discarded_interferers.push_back(entry);
    } else {
      report.considered_interferers.push_back(entry);
      active.push_back({o, o->psd * g});
    }
  }

  double weighted = 0.0;
  double total_bw = 0.0;
  std::vector<double> load(m);
  for (std::size_t run_start = f0; run_start < f1;) {
    std::size_t run_end = run_start + 1;
    while (run_end < f1 && grid.cover_mask(run_end) == grid.cover_mask(run_start)) ++run_end;
    const double lo = fe[run_start];
    const double hi = fe[run_end];

    std::fill(load.begin(), load.end(), 0.0);
    for (const auto& a : active) {
      if (a.obj->low() > lo + kFreqTol || a.obj->high() < hi - kFreqTol) continue;
      const auto first = std::upper_bound(te.begin(), te.end(), a.obj->start) - te.begin();
      const auto last = std::lower_bound(te.begin(), te.end(), a.obj->end()) - te.begin();
      for (auto j = std::max<std::ptrdiff_t>(first - 1, 0);
           j < std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(m)); ++j) {
        const double overlap =
            std::min(te[j + 1], a.obj->end()) - std::max(te[j], a.obj->start);
        if (overlap > 0.0) load[j] += a.density * overlap / (te[j + 1] - te[j]);
      }
    }

    const double run_bw = hi - lo;
    for (std::size_t j = 0; j < m;) {
      std::size_t k = j + 1;
      while (k < m && load[k] == load[j]) ++k;
      const double sinr = signal / (cfg.noise_density + load[j]);
      report.groups.push_back({run_start, run_end, j, k, sinr});
      weighted += run_bw * sinr * static_cast<double>(k - j);
      j = k;
    }
    total_bw += run_bw * static_cast<double>(m);
    run_start = run_end;
  }
  report.aggregate = weighted / total_bw;
  return report;
}

double aggregate_from_blocks(const SinrReport& report, const ResourceGrid& grid) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& [key, sinr] : report.per_block()) {
    const double w = grid.block_weight(key.freq);
    num += w * sinr;
    den += w;
  }
  return num / den;
}

}  // namespace v2xtwin
