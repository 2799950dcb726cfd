#include <cmath>
#include <random>

#include "doctest.h"

#include "v2xtwin/errors.hpp"
#include "v2xtwin/scene.hpp"

using namespace v2xtwin;

namespace {

VehicleState at(Vec3 p, double heading) {
  VehicleState s;
  s.position = p;
  s.heading = heading;
  return s;
}

MeshTemplate with_antenna(Vec3 dis) {
  MeshTemplate t;
  t.antenna_displacement = dis;
  return t;
}

}  // namespace

TEST_CASE("a single wall loads as one surface plus the ground") {
  const auto scene = parse_scene(
      "[materials]\nconcrete loss_db=6\n"
      "[surfaces]\nwall material=concrete vertices=0,5,0;10,5,0;10,5,10;0,5,10\n");
  REQUIRE(scene.static_surfaces.size() == 1);
  CHECK(scene.static_surfaces[0].material == "concrete");
  CHECK(std::abs(scene.static_surfaces[0].unit_normal.norm() - 1.0) < 1e-9);
  CHECK(scene.ground_plane.vertices.size() == 4);
  CHECK(scene.material("concrete").reflection_loss_db == 6.0);
}

TEST_CASE("an extruded n-gon has one roof and n walls") {
  const std::vector<Vec3> footprint{{0, 0, 0}, {20, 0, 0}, {25, 10, 0}, {10, 18, 0}, {-4, 9, 0}};
  const auto walls = extrude_footprint(footprint, 0.0, 12.0, "concrete", 0);

  // Walk the edge list by hand: each edge becomes a quad from its endpoints at base and top.
  REQUIRE(walls.size() == footprint.size() + 1);
  CHECK(walls[0].unit_normal.z == doctest::Approx(1.0));
  const Vec3 inside{10, 7, 6};
  for (std::size_t i = 0; i < footprint.size(); ++i) {
    const auto& a = footprint[i];
    const auto& b = footprint[(i + 1) % footprint.size()];
    const auto& w = walls[i + 1];
    bool has_a = false;
    bool has_b_top = false;
    for (const auto& v : w.vertices) {
      has_a = has_a || (v == Vec3{a.x, a.y, 0.0});
      has_b_top = has_b_top || (v == Vec3{b.x, b.y, 12.0});
    }
    CHECK(has_a);
    CHECK(has_b_top);
    CHECK(w.signed_distance(inside) < 0.0);
  }
}

TEST_CASE("clockwise footprints get outward walls too") {
  const std::vector<Vec3> cw{{0, 0, 0}, {0, 10, 0}, {10, 10, 0}, {10, 0, 0}};
  const auto walls = extrude_footprint(cw, 0.0, 5.0, "concrete", 0);
  for (std::size_t i = 1; i < walls.size(); ++i) CHECK(walls[i].signed_distance({5, 5, 2}) < 0.0);
}

TEST_CASE("degenerate polygons are rejected with their index") {
  CHECK_THROWS_AS(make_surface({{0, 0, 0}, {1, 0, 0}}, "concrete", true, 3), GeometryError);
  try {
    make_surface({{0, 0, 0}, {1, 0, 0}}, "concrete", true, 3);
  } catch (const GeometryError& e) {
    CHECK(e.surface_index() == 3);
  }
  CHECK_THROWS_AS(make_surface({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, "concrete", true, 0), GeometryError);
  CHECK_THROWS_AS(make_surface({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 1}}, "concrete", true, 0),
                  GeometryError);
  CHECK_THROWS_AS(parse_scene("[surfaces]\nwall vertices=0,0,0;1,0,0\n"), GeometryError);
}

TEST_CASE("non-convex polygons are rejected") {
  CHECK_THROWS_AS(
      make_surface({{0, 0, 0}, {4, 0, 0}, {1, 1, 0}, {0, 4, 0}}, "concrete", true, 0),
      GeometryError);
}

TEST_CASE("unknown materials are a parse error") {
  CHECK_THROWS_AS(parse_scene("[surfaces]\nwall material=glass vertices=0,0,0;1,0,0;1,0,1\n"),
                  ParseError);
}

TEST_CASE("antenna placement") {
  CHECK(antenna_position(at({0, 0, 0}, 2.7), with_antenna({0, 0, 1.8})) == Vec3{0, 0, 1.8});

  const auto p = antenna_position(at({10, 5, 0}, kPi / 2), with_antenna({1, 0, 1.5}));
  CHECK(p.x == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(p.y == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(p.z == 1.5);

  CHECK(antenna_position(at({3, 3, 0}, 1.2), with_antenna({0, 0, 0})) == Vec3{3, 3, 0});
}

TEST_CASE("antenna placement is rotation equivariant") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  const auto t = with_antenna({1.3, -0.4, 1.6});
  const Vec3 pv{4, -2, 0};
  for (int i = 0; i < 16; ++i) {
    const double heading = u(rng);
    const double theta = u(rng);
    const auto base = antenna_position(at(pv, heading), t);
    const auto turned = antenna_position(at(pv, heading + theta), t);
    // rotate the original antenna about p_v by hand
    const double dx = base.x - pv.x;
    const double dy = base.y - pv.y;
    const Vec3 expect{pv.x + std::cos(theta) * dx - std::sin(theta) * dy,
                      pv.y + std::sin(theta) * dx + std::cos(theta) * dy, base.z};
    CHECK((turned - expect).norm() < 1e-9);
  }
}

TEST_CASE("posing a mesh") {
  MeshTemplate t;
  const auto m = pose_mesh(VehicleId{1}, at({0, 0, 0}, 0.0), t);
  const auto box = m.bounding_box();
  CHECK(box.lo == Vec3{-2.25, -0.9, 0});
  CHECK(box.hi == Vec3{2.25, 0.9, 1.5});
  CHECK(pose_mesh(VehicleId{1}, at({0, 0, 0}, 0.0), t) == m);

  const auto r = pose_mesh(VehicleId{1}, at({5, 5, 0}, kPi / 4), t);
  const auto corners = r.footprint_corners();
  const double c = std::sqrt(0.5);
  const std::vector<std::pair<double, double>> local{{-2.25, -0.9}, {2.25, -0.9}, {2.25, 0.9}, {-2.25, 0.9}};
  REQUIRE(corners.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto [lx, ly] = local[i];
    CHECK(std::abs(corners[i].x - (5 + c * lx - c * ly)) < 1e-9);
    CHECK(std::abs(corners[i].y - (5 + c * lx + c * ly)) < 1e-9);
  }
}

TEST_CASE("mesh registry is one-to-one") {
  MeshRegistry reg;
  reg.register_vehicle(VehicleId{1}, MeshTemplate{});
  CHECK(reg.contains(VehicleId{1}));
  CHECK_THROWS_AS(reg.register_vehicle(VehicleId{1}, MeshTemplate{}), DuplicateVehicle);
  CHECK_THROWS_AS((void)reg.template_of(VehicleId{2}), UnknownVehicle);
  CHECK(reg.size() == 1);
}

TEST_CASE("scene text round-trips") {
  const auto scene = parse_scene(
      "[materials]\nconcrete loss_db=6\nwood loss_db=9.5\n"
      "[vehicle_classes]\ntruck half_extents=6,1.3,1.8 antenna=0.5,0,3.7\n"
      "[buildings]\nbuilding material=wood height=13.3 footprint=0,0;20,0;20,15;0,15\n"
      "[surfaces]\nsign vertices=30,0,0;31,0,0;31,0,3 two_sided=false\n");
  const auto again = parse_scene(serialize_scene(scene));
  CHECK(again == scene);
  CHECK(serialize_scene(again) == serialize_scene(scene));
  CHECK(scene.mesh_template(VehicleClass::truck).antenna_displacement == Vec3{0.5, 0, 3.7});
}

TEST_CASE("segment clipping against a posed box") {
  const auto m = pose_mesh(VehicleId{1}, at({0, 0, 0}, 0.3), MeshTemplate{});
  CHECK(m.clip_segment({-10, 0, 1}, {10, 0, 1}).has_value());
  CHECK_FALSE(m.clip_segment({-10, 0, 2}, {10, 0, 2}).has_value());
  CHECK_FALSE(m.clip_segment({-10, 5, 1}, {10, 5, 1}).has_value());
  CHECK(m.contains({0, 0, 1}));
  CHECK_FALSE(m.contains({0, 0, 1.6}));
}
