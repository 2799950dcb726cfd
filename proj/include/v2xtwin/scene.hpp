#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "v2xtwin/config_text.hpp"
#include "v2xtwin/types.hpp"
#include "v2xtwin/vec3.hpp"
#include "v2xtwin/vehicle_state.hpp"

namespace v2xtwin {

struct Material {
  std::string name;
  double reflection_loss_db = 0.0;  // per specular bounce
  bool blocking = true;

  bool operator==(const Material&) const = default;
};

/// Planar convex polygon. Vertices wind counter-clockwise about unit_normal.
struct Surface {
  std::vector<Vec3> vertices;
  Vec3 unit_normal;
  std::string material;
  // One-sided surfaces (closed building shells) reflect only on the normal side.
  bool two_sided = false;

  [[nodiscard]] double plane_offset() const { return dot(unit_normal, vertices.front()); }
  [[nodiscard]] double signed_distance(const Vec3& p) const {
    return dot(unit_normal, p) - plane_offset();
  }
  [[nodiscard]] Aabb bounding_box() const;
  /// Point on the plane inside (or on the border of) the polygon.
  [[nodiscard]] bool contains_projected(const Vec3& p, double eps = 1e-9) const;
  /// Mirror image of p across the surface plane.
  [[nodiscard]] Vec3 mirror(const Vec3& p) const {
    return p - unit_normal * (2.0 * signed_distance(p));
  }
  /// Parameter s in (0,1) where segment a->b crosses the polygon interior, if any.
  [[nodiscard]] std::optional<double> intersect_segment(const Vec3& a, const Vec3& b,
                                                        double eps = 1e-9) const;

  bool operator==(const Surface&) const = default;
};

enum class VehicleClass { passenger, truck, bus };

std::string_view to_string(VehicleClass c);
VehicleClass vehicle_class_from_string(std::string_view s);

/// One box per class in the body frame: x along heading, y to the left, z up from the
/// reference point. The box spans x in [-hx, hx], y in [-hy, hy], z in [0, 2*hz].
struct MeshTemplate {
  VehicleClass vehicle_class = VehicleClass::passenger;
  Vec3 half_extents{2.25, 0.9, 0.75};
  std::string material = "metal";
  Vec3 antenna_displacement{0.0, 0.0, 1.8};

  bool operator==(const MeshTemplate&) const = default;
};

/// A vehicle box posed in the world.
struct PlacedMesh {
  VehicleId vehicle_id;
  MeshTemplate mesh_template;
  Vec3 center;           // reference point (footprint center, ground contact)
  double heading = 0.0;  // rad, CCW from +x

  /// Footprint corners at the base height, counter-clockwise.
  [[nodiscard]] std::vector<Vec3> footprint_corners() const;
  [[nodiscard]] double top_z() const { return center.z + 2.0 * mesh_template.half_extents.z; }
  [[nodiscard]] Aabb bounding_box() const;
  [[nodiscard]] bool contains(const Vec3& p, double eps = 0.0) const;
  /// Parameter interval [s_in, s_out] of segment a->b inside the box, if the segment enters it.
  [[nodiscard]] std::optional<std::pair<double, double>> clip_segment(const Vec3& a,
                                                                      const Vec3& b) const;

  bool operator==(const PlacedMesh&) const = default;
};

/// Static digital-twin geometry and the per-class vehicle templates.
struct Scene {
  std::vector<Surface> static_surfaces;
  Surface ground_plane;
  double ground_z = 0.0;
  Aabb bounds;
  std::map<std::string, Material> materials;
  std::map<VehicleClass, MeshTemplate> vehicle_classes;

  [[nodiscard]] const Material& material(const std::string& id) const;
  [[nodiscard]] const MeshTemplate& mesh_template(VehicleClass c) const;

  bool operator==(const Scene&) const = default;
};

/// Validates and normalizes a polygon. Throws GeometryError tagged with index.
Surface make_surface(std::vector<Vec3> vertices, std::string material, bool two_sided,
                     std::size_t index);

/// Roof plus one wall per footprint edge for a convex footprint extruded from base_z.
std::vector<Surface> extrude_footprint(std::vector<Vec3> footprint, double base_z, double height,
                                       const std::string& material, std::size_t first_index);

Scene scene_from_document(const ConfigDocument& doc);
Scene parse_scene(std::string_view text);
Scene load_scene(const std::filesystem::path& scene_file);
/// Canonical text form; parse_scene(serialize_scene(s)) == s.
std::string serialize_scene(const Scene& scene);

/// p_ant = p_v + R(heading) p_dis, rotating only the horizontal part of the displacement.
Vec3 antenna_position(const VehicleState& state, const MeshTemplate& mesh_template);

PlacedMesh pose_mesh(VehicleId vehicle_id, const VehicleState& state,
                     const MeshTemplate& mesh_template);

/// The fixed vehicle -> mesh mapping.
class MeshRegistry {
 public:
  void register_vehicle(VehicleId id, const MeshTemplate& mesh_template);
  [[nodiscard]] bool contains(VehicleId id) const { return templates_.contains(id); }
  [[nodiscard]] const MeshTemplate& template_of(VehicleId id) const;
  [[nodiscard]] PlacedMesh pose(VehicleId id, const VehicleState& state) const;
  [[nodiscard]] std::size_t size() const { return templates_.size(); }

 private:
  std::unordered_map<VehicleId, MeshTemplate> templates_;
};

}  // namespace v2xtwin
