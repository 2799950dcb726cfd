#include "v2xtwin/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "v2xtwin/errors.hpp"

namespace v2xtwin {

namespace {

constexpr double kPlanarTolerance = 1e-6;

Vec3 newell_normal(const std::vector<Vec3>& v) {
  Vec3 n;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vec3& a = v[i];
    const Vec3& b = v[(i + 1) % v.size()];
    n.x += (a.y - b.y) * (a.z + b.z);
    n.y += (a.z - b.z) * (a.x + b.x);
    n.z += (a.x - b.x) * (a.y + b.y);
  }
  return n;
}

void add_default_materials(std::map<std::string, Material>& materials) {
  materials.try_emplace("concrete", Material{"concrete", 6.0, true});
  materials.try_emplace("metal", Material{"metal", 3.0, true});
  materials.try_emplace("wood", Material{"wood", 9.0, true});
}

void add_default_templates(std::map<VehicleClass, MeshTemplate>& classes) {
  classes.try_emplace(VehicleClass::passenger,
                      MeshTemplate{VehicleClass::passenger, {2.25, 0.9, 0.75}, "metal", {0, 0, 1.8}});
  classes.try_emplace(VehicleClass::truck,
                      MeshTemplate{VehicleClass::truck, {6.0, 1.25, 1.75}, "metal", {0, 0, 3.6}});
  classes.try_emplace(VehicleClass::bus,
                      MeshTemplate{VehicleClass::bus, {6.0, 1.25, 1.6}, "metal", {0, 0, 3.4}});
}

Surface ground_surface(const Aabb& bounds, double z, const std::string& material) {
  Surface g;
  g.vertices = {{bounds.lo.x, bounds.lo.y, z},
                {bounds.hi.x, bounds.lo.y, z},
                {bounds.hi.x, bounds.hi.y, z},
                {bounds.lo.x, bounds.hi.y, z}};
  g.unit_normal = {0.0, 0.0, 1.0};
  g.material = material;
  return g;
}

}  // namespace

std::string_view to_string(VehicleClass c) {
  switch (c) {
    case VehicleClass::passenger: return "passenger";
    case VehicleClass::truck: return "truck";
    case VehicleClass::bus: return "bus";
  }
  return "passenger";
}

VehicleClass vehicle_class_from_string(std::string_view s) {
  if (s == "passenger") return VehicleClass::passenger;
  if (s == "truck") return VehicleClass::truck;
  if (s == "bus") return VehicleClass::bus;
  throw ParseError("unknown vehicle class '" + std::string(s) + "'");
}

Aabb Surface::bounding_box() const {
  Aabb box{vertices.front(), vertices.front()};
  for (const auto& v : vertices) {
    box.lo = {std::min(box.lo.x, v.x), std::min(box.lo.y, v.y), std::min(box.lo.z, v.z)};
    box.hi = {std::max(box.hi.x, v.x), std::max(box.hi.y, v.y), std::max(box.hi.z, v.z)};
  }
  return box;
}

bool Surface::contains_projected(const Vec3& p, double eps) const {
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = vertices[i];
    const Vec3& b = vertices[(i + 1) % n];
    const Vec3 edge = b - a;
    const double side = dot(cross(edge, p - a), unit_normal);
    if (side < -eps * edge.norm()) return false;
  }
  return true;
}

std::optional<double> Surface::intersect_segment(const Vec3& a, const Vec3& b, double eps) const {
  const double da = signed_distance(a);
  const double db = signed_distance(b);
  if ((da > 0.0 && db > 0.0) || (da < 0.0 && db < 0.0)) return std::nullopt;
  const double denom = da - db;
  if (std::abs(denom) < 1e-15) return std::nullopt;  // segment within the plane
  const double s = da / denom;
  if (s <= eps || s >= 1.0 - eps) return std::nullopt;
  if (!contains_projected(a + (b - a) * s)) return std::nullopt;
  return s;
}

std::vector<Vec3> PlacedMesh::footprint_corners() const {
  const auto& h = mesh_template.half_extents;
  const std::vector<Vec3> local = {{-h.x, -h.y, 0}, {h.x, -h.y, 0}, {h.x, h.y, 0}, {-h.x, h.y, 0}};
  std::vector<Vec3> out;
  out.reserve(4);
  for (const auto& c : local) out.push_back(center + rotate_z(c, heading));
  return out;
}

Aabb PlacedMesh::bounding_box() const {
  const auto corners = footprint_corners();
  Aabb box{corners.front(), corners.front()};
  for (const auto& c : corners) {
    box.lo = {std::min(box.lo.x, c.x), std::min(box.lo.y, c.y), center.z};
    box.hi = {std::max(box.hi.x, c.x), std::max(box.hi.y, c.y), top_z()};
  }
  return box;
}

bool PlacedMesh::contains(const Vec3& p, double eps) const {
  const Vec3 local = rotate_z(p - center, -heading);
  const auto& h = mesh_template.half_extents;
  return std::abs(local.x) <= h.x + eps && std::abs(local.y) <= h.y + eps && local.z >= -eps &&
         local.z <= 2.0 * h.z + eps;
}

std::optional<std::pair<double, double>> PlacedMesh::clip_segment(const Vec3& a,
                                                                  const Vec3& b) const {
  const Vec3 la = rotate_z(a - center, -heading);
  const Vec3 lb = rotate_z(b - center, -heading);
  const Vec3 d = lb - la;
  const auto& h = mesh_template.half_extents;
  const double lo[3] = {-h.x, -h.y, 0.0};
  const double hi[3] = {h.x, h.y, 2.0 * h.z};
  const double origin[3] = {la.x, la.y, la.z};
  const double dir[3] = {d.x, d.y, d.z};
  double t0 = 0.0;
  double t1 = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(dir[axis]) < 1e-15) {
      if (origin[axis] < lo[axis] || origin[axis] > hi[axis]) return std::nullopt;
      continue;
    }
    double ta = (lo[axis] - origin[axis]) / dir[axis];
    double tb = (hi[axis] - origin[axis]) / dir[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return std::nullopt;
  }
  return std::pair{t0, t1};
}

const Material& Scene::material(const std::string& id) const {
  const auto it = materials.find(id);
  if (it == materials.end()) throw ParseError("unknown material '" + id + "'");
  return it->second;
}

const MeshTemplate& Scene::mesh_template(VehicleClass c) const {
  const auto it = vehicle_classes.find(c);
  if (it == vehicle_classes.end()) {
    throw UnknownVehicle("no template for class " + std::string(to_string(c)));
  }
  return it->second;
}

Surface make_surface(std::vector<Vec3> vertices, std::string material, bool two_sided,
                     std::size_t index) {
  if (vertices.size() < 3) throw GeometryError("polygon needs at least 3 vertices", index);
  for (const auto& v : vertices) {
    if (!v.finite()) throw GeometryError("non-finite vertex", index);
  }
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if ((vertices[(i + 1) % vertices.size()] - vertices[i]).norm() < 1e-9) {
      throw GeometryError("repeated vertex", index);
    }
  }
  const Vec3 raw = newell_normal(vertices);
  double scale = 0.0;
  for (const auto& v : vertices) scale = std::max(scale, (v - vertices.front()).norm());
  if (raw.norm() <= 1e-12 * std::max(1.0, scale * scale)) {
    throw GeometryError("collinear or zero-area polygon", index);
  }
  Surface s;
  s.unit_normal = raw.normalized();
  s.vertices = std::move(vertices);
  s.material = std::move(material);
  s.two_sided = two_sided;
  for (const auto& v : s.vertices) {
    if (std::abs(s.signed_distance(v)) > kPlanarTolerance) {
      throw GeometryError("vertices are not coplanar", index);
    }
  }
  const std::size_t n = s.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 e1 = s.vertices[(i + 1) % n] - s.vertices[i];
    const Vec3 e2 = s.vertices[(i + 2) % n] - s.vertices[(i + 1) % n];
    if (dot(cross(e1, e2), s.unit_normal) < -1e-9 * e1.norm() * e2.norm()) {
      throw GeometryError("polygon is not convex", index);
    }
  }
  return s;
}

std::vector<Surface> extrude_footprint(std::vector<Vec3> footprint, double base_z, double height,
                                       const std::string& material, std::size_t first_index) {
  if (footprint.size() < 3) throw GeometryError("footprint needs at least 3 vertices", first_index);
  if (!(height > 0.0)) throw GeometryError("building height must be positive", first_index);
  double area2 = 0.0;
  for (std::size_t i = 0; i < footprint.size(); ++i) {
    const auto& a = footprint[i];
    const auto& b = footprint[(i + 1) % footprint.size()];
    area2 += a.x * b.y - b.x * a.y;
  }
  if (area2 < 0.0) std::reverse(footprint.begin(), footprint.end());

  const double top = base_z + height;
  std::vector<Surface> out;
  std::vector<Vec3> roof;
  for (const auto& p : footprint) roof.push_back({p.x, p.y, top});
  out.push_back(make_surface(std::move(roof), material, false, first_index));
  for (std::size_t i = 0; i < footprint.size(); ++i) {
    const auto& a = footprint[i];
    const auto& b = footprint[(i + 1) % footprint.size()];
    // counter-clockwise seen from outside: outward normal
    out.push_back(make_surface(
        {{a.x, a.y, base_z}, {b.x, b.y, base_z}, {b.x, b.y, top}, {a.x, a.y, top}}, material,
        false, first_index + 1 + i));
  }
  return out;
}

Scene scene_from_document(const ConfigDocument& doc) {
  Scene scene;

  if (const auto* mats = doc.find("materials")) {
    for (const auto& r : mats->records) {
      Material m{r.name, r.number_or("loss_db", 0.0), r.flag_or("blocking", true)};
      if (m.reflection_loss_db < 0.0) throw ParseError("negative reflection loss", r.line);
      scene.materials[m.name] = m;
    }
  }
  add_default_materials(scene.materials);

  if (const auto* classes = doc.find("vehicle_classes")) {
    for (const auto& r : classes->records) {
      MeshTemplate t;
      try {
        t.vehicle_class = vehicle_class_from_string(r.name);
      } catch (const ParseError& e) {
        throw ParseError(e.what(), r.line);
      }
      t.half_extents = parse_vec3(r.at("half_extents"), r.line);
      t.material = r.text_or("material", "metal");
      t.antenna_displacement = parse_vec3(r.at("antenna"), r.line);
      if (t.half_extents.x <= 0 || t.half_extents.y <= 0 || t.half_extents.z <= 0) {
        throw ParseError("half extents must be positive", r.line);
      }
      if (t.antenna_displacement.z < 0) throw ParseError("antenna below reference point", r.line);
      if (!scene.materials.contains(t.material)) {
        throw ParseError("unknown material '" + t.material + "'", r.line);
      }
      scene.vehicle_classes[t.vehicle_class] = t;
    }
  }
  add_default_templates(scene.vehicle_classes);

  std::string ground_material = "concrete";
  std::optional<Aabb> explicit_bounds;
  if (const auto* ground = doc.find("ground")) {
    scene.ground_z = ground->number_or("z", 0.0);
    ground_material = ground->text_or("material", "concrete");
    if (ground->has("bounds")) {
      const auto& setting = ground->settings.at("bounds");
      const auto pts = parse_points(setting.value, setting.line);
      if (pts.size() != 2) throw ParseError("bounds needs two corner points", setting.line);
      explicit_bounds = Aabb{pts[0], pts[1]};
      if (!(pts[0].x < pts[1].x && pts[0].y < pts[1].y && pts[0].z < pts[1].z)) {
        throw ParseError("bounds corners must be ordered lo;hi", setting.line);
      }
    }
  }
  if (!scene.materials.contains(ground_material)) {
    throw ParseError("unknown ground material '" + ground_material + "'");
  }

  for (const auto& section : doc.sections()) {
    if (section.name == "buildings") {
      for (const auto& r : section.records) {
        const auto material = r.text_or("material", "concrete");
        if (!scene.materials.contains(material)) {
          throw ParseError("unknown material '" + material + "'", r.line);
        }
        auto walls = extrude_footprint(parse_points(r.at("footprint"), r.line),
                                       r.number_or("base", scene.ground_z), r.number("height"),
                                       material, scene.static_surfaces.size());
        for (auto& w : walls) scene.static_surfaces.push_back(std::move(w));
      }
    } else if (section.name == "surfaces") {
      for (const auto& r : section.records) {
        const auto material = r.text_or("material", "concrete");
        if (!scene.materials.contains(material)) {
          throw ParseError("unknown material '" + material + "'", r.line);
        }
        scene.static_surfaces.push_back(make_surface(parse_points(r.at("vertices"), r.line),
                                                     material, r.flag_or("two_sided", true),
                                                     scene.static_surfaces.size()));
      }
    }
  }

  if (explicit_bounds) {
    scene.bounds = *explicit_bounds;
    for (std::size_t i = 0; i < scene.static_surfaces.size(); ++i) {
      for (const auto& v : scene.static_surfaces[i].vertices) {
        if (!scene.bounds.contains(v, 1e-9)) throw GeometryError("vertex outside scene bounds", i);
      }
    }
  } else {
    constexpr double kMargin = 500.0;
    Aabb box{{-kMargin, -kMargin, scene.ground_z - 1.0}, {kMargin, kMargin, scene.ground_z + 100.0}};
    for (const auto& s : scene.static_surfaces) {
      const auto sb = s.bounding_box();
      box.lo = {std::min(box.lo.x, sb.lo.x - kMargin), std::min(box.lo.y, sb.lo.y - kMargin),
                std::min(box.lo.z, sb.lo.z - 1.0)};
      box.hi = {std::max(box.hi.x, sb.hi.x + kMargin), std::max(box.hi.y, sb.hi.y + kMargin),
                std::max(box.hi.z, sb.hi.z + 100.0)};
    }
    scene.bounds = box;
  }
  scene.ground_plane = ground_surface(scene.bounds, scene.ground_z, ground_material);
  return scene;
}

Scene parse_scene(std::string_view text) { return scene_from_document(ConfigDocument::parse(text)); }

Scene load_scene(const std::filesystem::path& scene_file) {
  return scene_from_document(ConfigDocument::load(scene_file.string()));
}

std::string serialize_scene(const Scene& scene) {
  std::ostringstream out;
  out << "[materials]\n";
  for (const auto& [id, m] : scene.materials) {
    out << id << " loss_db=" << format_double(m.reflection_loss_db)
        << " blocking=" << (m.blocking ? "true" : "false") << "\n";
  }
  out << "\n[ground]\n";
  out << "z = " << format_double(scene.ground_z) << "\n";
  out << "material = " << scene.ground_plane.material << "\n";
  out << "bounds = " << format_double(scene.bounds.lo.x) << "," << format_double(scene.bounds.lo.y)
      << "," << format_double(scene.bounds.lo.z) << ";" << format_double(scene.bounds.hi.x) << ","
      << format_double(scene.bounds.hi.y) << "," << format_double(scene.bounds.hi.z) << "\n";
  out << "\n[vehicle_classes]\n";
  for (const auto& [cls, t] : scene.vehicle_classes) {
    const auto& h = t.half_extents;
    const auto& a = t.antenna_displacement;
    out << to_string(cls) << " half_extents=" << format_double(h.x) << "," << format_double(h.y)
        << "," << format_double(h.z) << " material=" << t.material
        << " antenna=" << format_double(a.x) << "," << format_double(a.y) << ","
        << format_double(a.z) << "\n";
  }
  out << "\n[surfaces]\n";
  for (const auto& s : scene.static_surfaces) {
    out << "surface material=" << s.material << " two_sided=" << (s.two_sided ? "true" : "false")
        << " vertices=";
    for (std::size_t i = 0; i < s.vertices.size(); ++i) {
      const auto& v = s.vertices[i];
      out << (i ? ";" : "") << format_double(v.x) << "," << format_double(v.y) << ","
          << format_double(v.z);
    }
    out << "\n";
  }
  return out.str();
}

Vec3 antenna_position(const VehicleState& state, const MeshTemplate& mesh_template) {
  return state.position + rotate_z(mesh_template.antenna_displacement, state.heading);
}

PlacedMesh pose_mesh(VehicleId vehicle_id, const VehicleState& state,
                     const MeshTemplate& mesh_template) {
  return PlacedMesh{vehicle_id, mesh_template, state.position, state.heading};
}

void MeshRegistry::register_vehicle(VehicleId id, const MeshTemplate& mesh_template) {
  if (!templates_.emplace(id, mesh_template).second) {
    throw DuplicateVehicle("vehicle " + id.str() + " already registered");
  }
}

const MeshTemplate& MeshRegistry::template_of(VehicleId id) const {
  const auto it = templates_.find(id);
  if (it == templates_.end()) throw UnknownVehicle("vehicle " + id.str() + " was never registered");
  return it->second;
}

PlacedMesh MeshRegistry::pose(VehicleId id, const VehicleState& state) const {
  return pose_mesh(id, state, template_of(id));
}

}  // namespace v2xtwin
