#include "v2xtwin/raychannel.hpp"

#include <algorithm>
#include <cmath>

#include "v2xtwin/errors.hpp"

namespace v2xtwin {

namespace {

constexpr double kSideEps = 1e-9;
constexpr std::size_t kGroundIndex = static_cast<std::size_t>(-1);

Aabb segment_box(const Vec3& a, const Vec3& b) {
  return {{std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)},
          {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)}};
}

Aabb inflate(Aabb box, double eps) {
  box.lo = box.lo - Vec3{eps, eps, eps};
  box.hi = box.hi + Vec3{eps, eps, eps};
  return box;
}

bool is_foreign(const PlacedMesh& m, std::optional<VehicleId> a, std::optional<VehicleId> b) {
  return !(a && m.vehicle_id == *a) && !(b && m.vehicle_id == *b);
}

// Highest point of a vertical polygon above the horizontal location of p.
double top_above(const Surface& s, const Vec3& p) {
  if (std::abs(s.unit_normal.z) > 1e-9) return p.z;
  const Vec3 u = cross(s.unit_normal, Vec3{0, 0, 1}).normalized();
  const double pu = dot(p, u);
  double top = p.z;
  const std::size_t n = s.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = s.vertices[i];
    const Vec3& b = s.vertices[(i + 1) % n];
    const double au = dot(a, u);
    const double bu = dot(b, u);
    if (std::abs(bu - au) < 1e-12) {
      if (std::abs(pu - au) < 1e-9) top = std::max({top, a.z, b.z});
      continue;
    }
    const double w = (pu - au) / (bu - au);
    if (w >= -1e-12 && w <= 1.0 + 1e-12) top = std::max(top, a.z + (b.z - a.z) * w);
  }
  return top;
}

}  // namespace

double knife_edge_loss_db(double nu) {
  if (nu <= -0.78) return 0.0;
  const double x = nu - 0.1;
  return 6.9 + 20.0 * std::log10(std::sqrt(x * x + 1.0) + x);
}

double fresnel_parameter(double h, double d1, double d2, double wavelength) {
  return h * std::sqrt(2.0 * (d1 + d2) / (wavelength * d1 * d2));
}

struct RayTracer::Chain {
  std::vector<std::size_t> reflectors;
  std::vector<Vec3> images;  // images[i]: tx mirrored through reflectors[0..i]
};

RayTracer::RayTracer(const Scene& scene, TracerConfig cfg) : scene_(scene), cfg_(cfg) {
  if (cfg_.max_interactions < 0) throw InvalidConfig("max_interactions must be >= 0");
  if (!(cfg_.fc > 0.0)) throw InvalidConfig("carrier frequency must be positive");

  for (std::size_t i = 0; i < scene_.static_surfaces.size(); ++i) {
    const auto& s = scene_.static_surfaces[i];
    const auto& mat = scene_.material(s.material);
    reflectors_.push_back(
        {s, s.bounding_box(), std::pow(10.0, -mat.reflection_loss_db / 20.0), i});
    if (mat.blocking) {
      blockers_.push_back(i);
      blocker_boxes_.push_back(inflate(s.bounding_box(), 1e-9));
    }
  }
  if (cfg_.ground_reflection) {
    const auto& mat = scene_.material(scene_.ground_plane.material);
    reflectors_.push_back({scene_.ground_plane, scene_.ground_plane.bounding_box(),
                           std::pow(10.0, -mat.reflection_loss_db / 20.0), kGroundIndex});
  }

  // b can follow a only if some part of b lies in front of a and vice versa
  auto in_front = [](const Reflector& from, const Reflector& to) {
    for (const auto& v : to.surface.vertices) {
      const double d = from.surface.signed_distance(v);
      if (d > kSideEps || (from.surface.two_sided && d < -kSideEps)) return true;
    }
    return false;
  };
  facing_.resize(reflectors_.size());
  for (std::size_t a = 0; a < reflectors_.size(); ++a) {
    for (std::size_t b = 0; b < reflectors_.size(); ++b) {
      if (a != b && in_front(reflectors_[a], reflectors_[b]) &&
          in_front(reflectors_[b], reflectors_[a])) {
        facing_[a].push_back(b);
      }
    }
  }
}

bool RayTracer::segment_clear(const Vec3& a, const Vec3& b, std::span<const PlacedMesh> meshes,
                              std::optional<VehicleId> skip_a,
                              std::optional<VehicleId> skip_b) const {
  const Aabb box = segment_box(a, b);
  for (std::size_t k = 0; k < blockers_.size(); ++k) {
    if (!blocker_boxes_[k].overlaps(box)) continue;
    if (scene_.static_surfaces[blockers_[k]].intersect_segment(a, b)) return false;
  }
  for (const auto& m : meshes) {
    if (!is_foreign(m, skip_a, skip_b)) continue;
    if (!m.bounding_box().overlaps(box)) continue;
    if (const auto clip = m.clip_segment(a, b); clip && clip->second - clip->first > 1e-12) {
      return false;
    }
  }
  return true;
}

PropagationPath RayTracer::make_path(PathKind kind, const Endpoint& tx, const Endpoint& rx,
                                     std::vector<Vec3> points, double extra_amplitude) const {
  const double lambda = wavelength();
  double length = 0.0;
  Vec3 prev = tx.position;
  for (const auto& p : points) {
    length += distance(prev, p);
    prev = p;
  }
  length += distance(prev, rx.position);

  PropagationPath path;
  path.kind = kind;
  path.delay = length / kSpeedOfLight;
  path.departure_dir = ((points.empty() ? rx.position : points.front()) - tx.position).normalized();
  path.arrival_dir = (rx.position - (points.empty() ? tx.position : points.back())).normalized();
  path.gain = std::polar(lambda / (4.0 * kPi * length) * extra_amplitude,
                         -2.0 * kPi * std::fmod(length, lambda) / lambda);
  path.doppler = (cfg_.fc / kSpeedOfLight) *
                 (dot(tx.velocity, path.departure_dir) - dot(rx.velocity, path.arrival_dir));
  path.interaction_points = std::move(points);
  return path;
}

void RayTracer::complete(const Chain& chain, std::span<const PlacedMesh> meshes, const Endpoint& tx,
                         const Endpoint& rx, std::vector<PropagationPath>& out) const {
  const std::size_t k = chain.reflectors.size();
  std::vector<Vec3> points(k);
  Vec3 next = rx.position;
  for (std::size_t i = k; i-- > 0;) {
    const Surface& s = reflectors_[chain.reflectors[i]].surface;
    const Vec3& image = chain.images[i];
    const double di = s.signed_distance(image);
    const double dn = s.signed_distance(next);
    if (di * dn >= 0.0) return;
    const double w = di / (di - dn);
    if (w <= kSideEps || w >= 1.0 - kSideEps) return;
    points[i] = image + (next - image) * w;
    if (!s.contains_projected(points[i])) return;
    next = points[i];
  }

  double amplitude = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    const Reflector& r = reflectors_[chain.reflectors[i]];
    const Vec3& prev = i == 0 ? tx.position : points[i - 1];
    const Vec3& after = i + 1 == k ? rx.position : points[i + 1];
    const double dp = r.surface.signed_distance(prev);
    const double da = r.surface.signed_distance(after);
    if (std::abs(dp) <= kSideEps || std::abs(da) <= kSideEps || dp * da <= 0.0) return;
    if (!r.surface.two_sided && dp < 0.0) return;
    amplitude *= r.amplitude_factor;
  }

  Vec3 from = tx.position;
  for (std::size_t i = 0; i <= k; ++i) {
    const Vec3& to = i == k ? rx.position : points[i];
    if (!segment_clear(from, to, meshes, tx.vehicle, rx.vehicle)) return;
    from = to;
  }

  auto path = make_path(PathKind::reflection, tx, rx, std::move(points), amplitude);
  path.order = static_cast<int>(k);
  path.reflector_indices = chain.reflectors;
  out.push_back(std::move(path));
}

void RayTracer::search(const Chain& chain, std::span<const PlacedMesh> meshes, const Endpoint& tx,
                       const Endpoint& rx, std::vector<PropagationPath>& out) const {
  const bool root = chain.reflectors.empty();
  const Vec3& source = root ? tx.position : chain.images.back();
  const std::size_t count = root ? reflectors_.size() : facing_[chain.reflectors.back()].size();
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t c = root ? n : facing_[chain.reflectors.back()][n];
    const Reflector& r = reflectors_[c];
    const double d = r.surface.signed_distance(source);
    if (r.surface.two_sided ? std::abs(d) <= kSideEps : d <= kSideEps) continue;
    Chain next = chain;
    next.reflectors.push_back(c);
    next.images.push_back(r.surface.mirror(source));
    complete(next, meshes, tx, rx, out);
    if (static_cast<int>(next.reflectors.size()) < cfg_.max_interactions) {
      search(next, meshes, tx, rx, out);
    }
  }
}

std::optional<PropagationPath> RayTracer::diffraction_path(std::span<const PlacedMesh> meshes,
                                                           const Endpoint& tx,
                                                           const Endpoint& rx) const {
  const Vec3 a = tx.position;
  const Vec3 b = rx.position;
  const double total = distance(a, b);
  const Aabb box = segment_box(a, b);

  std::optional<double> best_nu;
  Vec3 best_edge;
  auto consider = [&](double s, double top) {
    const double d1 = s * total;
    const double d2 = (1.0 - s) * total;
    if (d1 <= 0.0 || d2 <= 0.0) return;
    const double h = top - (a.z + (b.z - a.z) * s);
    const double nu = fresnel_parameter(h, d1, d2, wavelength());
    if (!best_nu || nu > *best_nu) {
      best_nu = nu;
      best_edge = a + (b - a) * s;
      best_edge.z = top;
    }
  };

  for (std::size_t k = 0; k < blockers_.size(); ++k) {
    if (!blocker_boxes_[k].overlaps(box)) continue;
    const Surface& s = scene_.static_surfaces[blockers_[k]];
    if (const auto hit = s.intersect_segment(a, b)) consider(*hit, top_above(s, a + (b - a) * *hit));
  }
  for (const auto& m : meshes) {
    if (!is_foreign(m, tx.vehicle, rx.vehicle) || !m.bounding_box().overlaps(box)) continue;
    if (const auto clip = m.clip_segment(a, b); clip && clip->second - clip->first > 1e-12) {
      consider(0.5 * (clip->first + clip->second), m.top_z());
    }
  }
  if (!best_nu) return std::nullopt;
  const double amplitude = std::pow(10.0, -knife_edge_loss_db(*best_nu) / 20.0);
  return make_path(PathKind::diffraction, tx, rx, {best_edge}, amplitude);
}

PathSet RayTracer::trace(std::span<const PlacedMesh> meshes, const Endpoint& tx,
                         const Endpoint& rx) const {
  if (distance(tx.position, rx.position) < 1e-9) {
    throw DegenerateGeometry("transmitter and receiver coincide");
  }
  for (const Endpoint* e : {&tx, &rx}) {
    if (!scene_.bounds.contains(e->position)) {
      throw DegenerateGeometry("antenna outside the scene bounds");
    }
    for (const auto& m : meshes) {
      if (e->vehicle && m.vehicle_id == *e->vehicle) continue;
      if (m.contains(e->position, -1e-9)) {
        throw DegenerateGeometry("antenna inside the mesh of vehicle " + m.vehicle_id.str());
      }
    }
  }

  PathSet set;
  if (tx.vehicle) set.tx_id = *tx.vehicle;
  if (rx.vehicle) set.rx_id = *rx.vehicle;

  const bool los = segment_clear(tx.position, rx.position, meshes, tx.vehicle, rx.vehicle);
  if (los) set.paths.push_back(make_path(PathKind::los, tx, rx, {}, 1.0));
  if (cfg_.max_interactions > 0) search(Chain{}, meshes, tx, rx, set.paths);
  if (!los && cfg_.enable_diffraction) {
    if (auto d = diffraction_path(meshes, tx, rx)) set.paths.push_back(std::move(*d));
  }

  if (!set.paths.empty()) {
    double strongest = 0.0;
    for (const auto& p : set.paths) strongest = std::max(strongest, std::norm(p.gain));
    const double floor = strongest * std::pow(10.0, -cfg_.gain_floor_db / 10.0);
    std::erase_if(set.paths, [&](const PropagationPath& p) { return std::norm(p.gain) < floor; });
  }
  return set;
}

PathSet trace_paths(const Scene& scene, std::span<const PlacedMesh> meshes, const Endpoint& tx,
                    const Endpoint& rx, const TracerConfig& cfg) {
  return RayTracer(scene, cfg).trace(meshes, tx, rx);
}

ChannelSummary summarize(const PathSet& path_set) {
  ChannelSummary out;
  std::complex<double> sum{0.0, 0.0};
  for (const auto& p : path_set.paths) {
    sum += p.gain;
    out.delay = std::min(out.delay, p.delay);
    if (p.kind == PathKind::los) out.los = true;
  }
  out.total_gain = std::norm(sum);
  return out;
}

std::vector<std::complex<double>> cir(const PathSet& path_set, double t, double sample_rate,
                                      std::size_t n_taps) {
  if (!(sample_rate > 0.0)) throw InvalidConfig("sample_rate must be positive");
  if (n_taps < 1) throw InvalidConfig("n_taps must be at least 1");
  std::vector<std::complex<double>> taps(n_taps);
  if (path_set.paths.empty()) return taps;

  double tau_min = path_set.paths.front().delay;
  double tau_max = tau_min;
  for (const auto& p : path_set.paths) {
    tau_min = std::min(tau_min, p.delay);
    tau_max = std::max(tau_max, p.delay);
  }
  const auto needed = static_cast<std::size_t>(std::ceil((tau_max - tau_min) * sample_rate - 1e-9)) + 1;
  if (n_taps < needed) {
    throw InvalidConfig("n_taps " + std::to_string(n_taps) + " shorter than the delay spread (" +
                        std::to_string(needed) + " taps needed)");
  }

  auto sinc = [](double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
  };
  for (const auto& p : path_set.paths) {
    const std::complex<double> rotated = p.gain * std::polar(1.0, 2.0 * kPi * p.doppler * t);
    const double offset = (p.delay - tau_min) * sample_rate;
    for (std::size_t m = 0; m < n_taps; ++m) {
      taps[m] += rotated * sinc(static_cast<double>(m) - offset);
    }
  }
  return taps;
}

const PathSet* PathCache::find(VehiclePair pair) const {
  const auto it = entries_.find(pair);
  return it == entries_.end() ? nullptr : &it->second;
}

void PathCache::store(VehiclePair pair, PathSet paths) { entries_[pair] = std::move(paths); }

void PathCache::invalidate_all() {
  entries_.clear();
  ++stats_.invalidations;
}

}  // namespace v2xtwin
