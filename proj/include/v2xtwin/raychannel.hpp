#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "v2xtwin/scene.hpp"
#include "v2xtwin/types.hpp"
#include "v2xtwin/vec3.hpp"

namespace v2xtwin {

enum class PathKind { los, reflection, diffraction };

/// One ray between two antennas.
struct PropagationPath {
  std::complex<double> gain;  // linear amplitude, phase -2*pi*length/lambda
  double delay = 0.0;         // s
  Vec3 departure_dir;         // unit, leaving the transmitter
  Vec3 arrival_dir;           // unit, propagation direction on arrival at the receiver
  double doppler = 0.0;       // Hz
  PathKind kind = PathKind::los;
  int order = 0;  // number of specular bounces
  std::vector<Vec3> interaction_points;
  std::vector<std::size_t> reflector_indices;  // into RayTracer::reflectors()

  [[nodiscard]] double length() const { return delay * kSpeedOfLight; }
};

struct PathSet {
  VehicleId tx_id;
  VehicleId rx_id;
  double t = 0.0;
  std::vector<PropagationPath> paths;
};

/// {G, tau, lambda}: coherent total gain, earliest delay, line-of-sight flag.
struct ChannelSummary {
  double total_gain = 0.0;
  double delay = std::numeric_limits<double>::infinity();
  bool los = false;

  bool operator==(const ChannelSummary&) const = default;
};

struct TracerConfig {
  double fc = 5.89e9;
  int max_interactions = 3;
  bool enable_diffraction = true;
  double gain_floor_db = 40.0;  // paths weaker than strongest minus this are dropped
  bool ground_reflection = false;
};

/// Antenna endpoint. The owning vehicle's box never blocks its own rays.
struct Endpoint {
  Vec3 position;
  Vec3 velocity;
  std::optional<VehicleId> vehicle;
};

/// ITU single knife-edge loss J(nu) in dB (0 for nu <= -0.78).
double knife_edge_loss_db(double nu);

/// Fresnel-Kirchhoff parameter for an edge h above the direct line at distances d1, d2.
double fresnel_parameter(double h, double d1, double d2, double wavelength);

/// Deterministic specular + knife-edge tracer over a fixed static scene.
class RayTracer {
 public:
  struct Reflector {
    Surface surface;
    Aabb box;
    double amplitude_factor = 1.0;  // 10^(-loss_db/20)
    std::size_t scene_index = 0;    // static surface index, or npos for the ground plane
  };

  RayTracer(const Scene& scene, TracerConfig cfg);

  /// Errors: DegenerateGeometry when an antenna is inside another vehicle box, outside the
  /// scene bounds, or tx and rx coincide.
  [[nodiscard]] PathSet trace(std::span<const PlacedMesh> meshes, const Endpoint& tx,
                              const Endpoint& rx) const;

  /// No blocking surface or foreign vehicle box crosses the open segment a->b.
  [[nodiscard]] bool segment_clear(const Vec3& a, const Vec3& b, std::span<const PlacedMesh> meshes,
                                   std::optional<VehicleId> skip_a,
                                   std::optional<VehicleId> skip_b) const;

  [[nodiscard]] const std::vector<Reflector>& reflectors() const { return reflectors_; }
  [[nodiscard]] const TracerConfig& config() const { return cfg_; }
  [[nodiscard]] double wavelength() const { return kSpeedOfLight / cfg_.fc; }
  [[nodiscard]] const Scene& scene() const { return scene_; }

 private:
  struct Chain;
  void search(const Chain& chain, std::span<const PlacedMesh> meshes, const Endpoint& tx,
              const Endpoint& rx, std::vector<PropagationPath>& out) const;
  void complete(const Chain& chain, std::span<const PlacedMesh> meshes, const Endpoint& tx,
                const Endpoint& rx, std::vector<PropagationPath>& out) const;
  [[nodiscard]] std::optional<PropagationPath> diffraction_path(std::span<const PlacedMesh> meshes,
                                                                const Endpoint& tx,
                                                                const Endpoint& rx) const;
  [[nodiscard]] PropagationPath make_path(PathKind kind, const Endpoint& tx, const Endpoint& rx,
                                          std::vector<Vec3> points, double extra_amplitude) const;

  Scene scene_;
  TracerConfig cfg_;
  std::vector<Reflector> reflectors_;
  std::vector<std::vector<std::size_t>> facing_;  // reflector -> reflectors reachable next
  std::vector<std::size_t> blockers_;             // static surface indices that block rays
  std::vector<Aabb> blocker_boxes_;
};

PathSet trace_paths(const Scene& scene, std::span<const PlacedMesh> meshes, const Endpoint& tx,
                    const Endpoint& rx, const TracerConfig& cfg);

/// G = |sum alpha_k|^2, tau = min tau_k, lambda = any LoS path. Empty set: {0, +inf, 0}.
ChannelSummary summarize(const PathSet& path_set);

/// Tap-delay line sampled at sample_rate with a unit-energy sinc pulse, delays taken relative
/// to the earliest path. Throws InvalidConfig when n_taps cannot hold the delay spread.
std::vector<std::complex<double>> cir(const PathSet& path_set, double t, double sample_rate,
                                      std::size_t n_taps);

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t invalidations = 0;
};

/// All-pairs path store keyed by unordered vehicle pair.
class PathCache {
 public:
  [[nodiscard]] const PathSet* find(VehiclePair pair) const;
  void store(VehiclePair pair, PathSet paths);
  void invalidate_all();
  void record_hit() { ++stats_.hits; }
  void record_miss() { ++stats_.misses; }

  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] const CacheStats& stats() const { return stats_; }

 private:
  std::unordered_map<VehiclePair, PathSet> entries_;
  CacheStats stats_;
};

}  // namespace v2xtwin
