#include "v2xtwin/channel_engine.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "v2xtwin/errors.hpp"

namespace v2xtwin {

ChannelEngine::ChannelEngine(const Scene& scene, EngineConfig cfg)
    : tracer_(scene, cfg.tracer), cfg_(cfg) {
  cfg_.gating.fc = cfg_.tracer.fc;
  if (cfg_.workers == 0) cfg_.workers = 1;
}

void ChannelEngine::register_vehicle(VehicleId id, VehicleClass vehicle_class) {
  registry_.register_vehicle(id, tracer_.scene().mesh_template(vehicle_class));
}

void ChannelEngine::register_vehicle(VehicleId id, const MeshTemplate& mesh_template) {
  registry_.register_vehicle(id, mesh_template);
}

void ChannelEngine::invalidate() {
  cache_.invalidate_all();
  degenerate_.clear();
}

bool ChannelEngine::apply_location_update(const VehicleState& state) {
  if (!registry_.contains(state.vehicle_id)) {
    if (!cfg_.default_class) throw UnknownVehicle("vehicle " + state.vehicle_id.str());
    register_vehicle(state.vehicle_id, *cfg_.default_class);
  }
  const auto it = active_.find(state.vehicle_id);
  std::optional<Vec3> last;
  if (it != active_.end()) last = it->second.synced.position;
  if (!gate_update(last, state, cfg_.gating)) {
    ++gated_out_;
    return false;
  }
  active_[state.vehicle_id] = {state, registry_.pose(state.vehicle_id, state)};
  ++mesh_updates_;
  invalidate();
  return true;
}

void ChannelEngine::deactivate(VehicleId id) {
  if (active_.erase(id) > 0) invalidate();
}

std::vector<VehicleId> ChannelEngine::active_vehicles() const {
  std::vector<VehicleId> out;
  for (const auto& [id, _] : active_) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<PlacedMesh> ChannelEngine::placed_meshes() const {
  std::vector<PlacedMesh> out;
  for (const auto id : active_vehicles()) out.push_back(active_.at(id).mesh);
  return out;
}

std::optional<Vec3> ChannelEngine::antenna_of(VehicleId id) const {
  const auto it = active_.find(id);
  if (it == active_.end()) return std::nullopt;
  return antenna_position(it->second.synced, it->second.mesh.mesh_template);
}

Endpoint ChannelEngine::endpoint(VehicleId id) const {
  const auto& v = active_.at(id);
  return {antenna_position(v.synced, v.mesh.mesh_template), v.synced.velocity, id};
}

void ChannelEngine::require_active(VehicleId id) const {
  if (!active_.contains(id)) throw InactiveVehicle("vehicle " + id.str() + " is not active");
}

PathSet ChannelEngine::trace_pair(VehicleId tx, VehicleId rx, double t) const {
  require_active(tx);
  require_active(rx);
  const auto meshes = placed_meshes();
  // canonical orientation keeps cached and fresh results bit-identical
  const VehiclePair key = VehiclePair::unordered(tx, rx);
  PathSet set = tracer_.trace(meshes, endpoint(key.first), endpoint(key.second));
  set.t = t;
  if (key.first == tx) return set;
  return reverse_path_set(set, endpoint(tx), endpoint(rx), cfg_.tracer.fc);
}

void ChannelEngine::snapshot(double t) {
  const auto ids = active_vehicles();
  const auto meshes = placed_meshes();
  std::vector<VehiclePair> pairs;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) pairs.push_back({ids[i], ids[j]});
  }
  std::vector<Endpoint> endpoints;
  std::unordered_map<VehicleId, std::size_t> slot;
  for (const auto id : ids) {
    slot[id] = endpoints.size();
    endpoints.push_back(endpoint(id));
  }

  std::vector<PathSet> results(pairs.size());
  std::vector<char> failed(pairs.size(), 0);
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t k = begin; k < pairs.size(); k += step) {
      try {
        results[k] = tracer_.trace(meshes, endpoints[slot.at(pairs[k].first)],
                                   endpoints[slot.at(pairs[k].second)]);
        results[k].t = t;
      } catch (const DegenerateGeometry&) {
        failed[k] = 1;
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(cfg_.workers, std::max<std::size_t>(1, pairs.size()));
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (failed[k]) {
      degenerate_.insert(pairs[k]);
    } else {
      cache_.store(pairs[k], std::move(results[k]));
    }
  }
}

const PathSet& ChannelEngine::lookup(VehicleId tx, VehicleId rx, double t, bool& hit) {
  require_active(tx);
  require_active(rx);
  if (tx == rx) throw DegenerateGeometry("transmitter and receiver are the same vehicle");
  const VehiclePair key = VehiclePair::unordered(tx, rx);
  const auto start = std::chrono::steady_clock::now();
  std::size_t traced = 0;
  const PathSet* found = nullptr;

  if (!cfg_.caching) {
    hit = false;
    cache_.record_miss();
    scratch_ = trace_pair(key.first, key.second, t);
    found = &scratch_;
    traced = 1;
  } else {
    found = cache_.find(key);
    hit = found != nullptr || degenerate_.contains(key);
    if (hit) {
      cache_.record_hit();
    } else {
      cache_.record_miss();
      snapshot(t);
      traced = cache_.size() + degenerate_.size();
      found = cache_.find(key);
    }
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  timings_.push_back({t, hit, seconds, traced});
  if (found == nullptr) {
    throw DegenerateGeometry("antenna of vehicle " + tx.str() + " or " + rx.str() +
                             " lies inside another vehicle");
  }
  return *found;
}

QueryResult ChannelEngine::query_channel(VehicleId tx, VehicleId rx, double t) {
  bool hit = false;
  const PathSet& set = lookup(tx, rx, t, hit);
  return {summarize(set), hit};
}

PathSet ChannelEngine::path_set(VehicleId tx, VehicleId rx, double t) {
  bool hit = false;
  PathSet set = lookup(tx, rx, t, hit);
  if (set.tx_id == tx) return set;
  return reverse_path_set(set, endpoint(tx), endpoint(rx), cfg_.tracer.fc);
}

PathSet reverse_path_set(const PathSet& set, const Endpoint& new_tx, const Endpoint& new_rx,
                         double fc) {
  PathSet out = set;
  std::swap(out.tx_id, out.rx_id);
  for (auto& p : out.paths) {
    const Vec3 dep = -p.arrival_dir;
    const Vec3 arr = -p.departure_dir;
    p.departure_dir = dep;
    p.arrival_dir = arr;
    std::reverse(p.interaction_points.begin(), p.interaction_points.end());
    std::reverse(p.reflector_indices.begin(), p.reflector_indices.end());
    p.doppler = (fc / kSpeedOfLight) * (dot(new_tx.velocity, dep) - dot(new_rx.velocity, arr));
  }
  return out;
}

}  // namespace v2xtwin
