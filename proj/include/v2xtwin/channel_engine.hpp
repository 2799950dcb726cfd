#pragma once

#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "v2xtwin/mobility.hpp"
#include "v2xtwin/raychannel.hpp"
#include "v2xtwin/scene.hpp"

namespace v2xtwin {

struct EngineConfig {
  TracerConfig tracer;
  GatingConfig gating;
  bool caching = true;
  unsigned workers = 1;  // threads used for an all-pairs snapshot
  // Class given to vehicles first seen through a location update; unset means UnknownVehicle.
  std::optional<VehicleClass> default_class;
};

struct QueryResult {
  ChannelSummary summary;
  bool hit = false;
};

struct QueryTiming {
  double t = 0.0;
  bool hit = false;
  double seconds = 0.0;
  std::size_t pairs_traced = 0;
};

/// Twin-side channel state: posed meshes, gating, the all-pairs cache and its timing log.
class ChannelEngine {
 public:
  ChannelEngine(const Scene& scene, EngineConfig cfg);

  void register_vehicle(VehicleId id, VehicleClass vehicle_class);
  void register_vehicle(VehicleId id, const MeshTemplate& mesh_template);

  /// Gates the update; when it passes the mesh is re-posed and the cache invalidated.
  /// Returns whether the mesh moved.
  bool apply_location_update(const VehicleState& state);
  /// Removes the vehicle from the active set (and its mesh from the scene).
  void deactivate(VehicleId id);

  [[nodiscard]] bool is_active(VehicleId id) const { return active_.contains(id); }
  [[nodiscard]] std::vector<VehicleId> active_vehicles() const;

  /// Errors: InactiveVehicle, DegenerateGeometry.
  QueryResult query_channel(VehicleId tx, VehicleId rx, double t);
  /// Full path set for the pair in tx->rx orientation, through the cache.
  PathSet path_set(VehicleId tx, VehicleId rx, double t);
  /// Fresh trace of the current poses, bypassing and not touching the cache.
  [[nodiscard]] PathSet trace_pair(VehicleId tx, VehicleId rx, double t) const;

  [[nodiscard]] std::vector<PlacedMesh> placed_meshes() const;
  [[nodiscard]] std::optional<Vec3> antenna_of(VehicleId id) const;
  [[nodiscard]] const PathCache& cache() const { return cache_; }
  [[nodiscard]] const std::vector<QueryTiming>& timing_log() const { return timings_; }
  [[nodiscard]] std::size_t mesh_updates() const { return mesh_updates_; }
  [[nodiscard]] std::size_t gated_out() const { return gated_out_; }
  [[nodiscard]] const RayTracer& tracer() const { return tracer_; }
  [[nodiscard]] const EngineConfig& config() const { return cfg_; }

 private:
  struct Vehicle {
    VehicleState synced;
    PlacedMesh mesh;
  };

  [[nodiscard]] Endpoint endpoint(VehicleId id) const;
  void require_active(VehicleId id) const;
  const PathSet& lookup(VehicleId tx, VehicleId rx, double t, bool& hit);
  void snapshot(double t);
  void invalidate();

  RayTracer tracer_;
  EngineConfig cfg_;
  MeshRegistry registry_;
  std::unordered_map<VehicleId, Vehicle> active_;
  PathCache cache_;
  std::set<VehiclePair> degenerate_;
  std::vector<QueryTiming> timings_;
  std::size_t mesh_updates_ = 0;
  std::size_t gated_out_ = 0;
  PathSet scratch_;
};

/// Same path set seen from the other end: directions swapped, Doppler recomputed.
PathSet reverse_path_set(const PathSet& set, const Endpoint& new_tx, const Endpoint& new_rx,
                         double fc);

}  // namespace v2xtwin
