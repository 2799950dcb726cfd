#include "v2xtwin/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "v2xtwin/config_text.hpp"
#include "v2xtwin/errors.hpp"

namespace v2xtwin {

namespace {

double round_to(double v, double step) {
  const double scale = std::round(1.0 / step);
  return std::round(v * scale) / scale + 0.0;
}

Vec3 round_to(const Vec3& v, double step) {
  return {round_to(v.x, step), round_to(v.y, step), round_to(v.z, step)};
}

struct Loop {
  std::array<Vec3, 4> corners;  // in driving order
  double perimeter = 0.0;

  [[nodiscard]] std::pair<Vec3, Vec3> at(double s) const {
    s = std::fmod(s, perimeter);
    if (s < 0) s += perimeter;
    for (std::size_t i = 0; i < 4; ++i) {
      const Vec3 a = corners[i];
      const Vec3 b = corners[(i + 1) % 4];
      const double len = (b - a).norm();
      if (s <= len || i == 3) {
        const Vec3 dir = (b - a) / len;
        return {a + dir * std::min(s, len), dir};
      }
      s -= len;
    }
    return {corners[0], {1, 0, 0}};
  }
};

}  // namespace

GridCity make_grid_city(const GridCityConfig& cfg) {
  if (cfg.blocks_x < 1 || cfg.blocks_y < 1 || cfg.vehicles < 1 || !(cfg.duration > 0) ||
      !(cfg.sample_period > 0) || !(cfg.min_speed > 0) || cfg.max_speed < cfg.min_speed ||
      !(cfg.lane_offset < cfg.street_width / 2) || cfg.height_spread < 0 ||
      !(cfg.building_height - cfg.height_spread > 0) || cfg.max_setback < 0 ||
      !(2 * cfg.max_setback < cfg.block_size)) {
    throw InvalidConfig("grid city parameters out of range");
  }
  const double pitch = cfg.block_size + cfg.street_width;
  const double half_street = cfg.street_width / 2;

  GridCity city;
  std::mt19937_64 layout(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::uniform_real_distribution<double> inset(0.0, cfg.max_setback);
  std::ostringstream b;
  b << "[buildings]\n";
  for (int i = 0; i < cfg.blocks_x; ++i) {
    for (int j = 0; j < cfg.blocks_y; ++j) {
      const double x0 = round_to(i * pitch + half_street + inset(layout), 0.01);
      const double y0 = round_to(j * pitch + half_street + inset(layout), 0.01);
      const double x1 = round_to((i + 1) * pitch - half_street - inset(layout), 0.01);
      const double y1 = round_to((j + 1) * pitch - half_street - inset(layout), 0.01);
      const double height = round_to(cfg.building_height + cfg.height_spread * jitter(layout), 0.1);
      b << "building material=concrete height=" << format_double(height)
        << " footprint=" << format_double(x0) << ',' << format_double(y0) << ';'
        << format_double(x1) << ',' << format_double(y0) << ';' << format_double(x1) << ','
        << format_double(y1) << ';' << format_double(x0) << ',' << format_double(y1) << '\n';
    }
  }
  city.buildings = b.str();

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<int> pick_x(0, cfg.blocks_x);
  std::uniform_int_distribution<int> pick_y(0, cfg.blocks_y);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::map<VehicleId, std::vector<VehicleState>> samples;
  const auto rows = static_cast<int>(std::floor(cfg.duration / cfg.sample_period + 1e-9));
  for (int v = 0; v < cfg.vehicles; ++v) {
    int i0 = pick_x(rng);
    int i1 = pick_x(rng);
    while (i1 == i0) i1 = pick_x(rng);
    int j0 = pick_y(rng);
    int j1 = pick_y(rng);
    while (j1 == j0) j1 = pick_y(rng);
    if (i0 > i1) std::swap(i0, i1);
    if (j0 > j1) std::swap(j0, j1);
    const bool ccw = unit(rng) < 0.5;
    // keep to the right: outside of a counter-clockwise loop, inside of a clockwise one
    const double off = ccw ? cfg.lane_offset : -cfg.lane_offset;
    const double xa = i0 * pitch - off;
    const double xb = i1 * pitch + off;
    const double ya = j0 * pitch - off;
    const double yb = j1 * pitch + off;
    Loop loop;
    if (ccw) {
      loop.corners = {Vec3{xa, ya, 0}, Vec3{xb, ya, 0}, Vec3{xb, yb, 0}, Vec3{xa, yb, 0}};
    } else {
      loop.corners = {Vec3{xa, ya, 0}, Vec3{xa, yb, 0}, Vec3{xb, yb, 0}, Vec3{xb, ya, 0}};
    }
    loop.perimeter = 2 * ((xb - xa) + (yb - ya));
    const double speed = cfg.min_speed + (cfg.max_speed - cfg.min_speed) * unit(rng);
    const double s0 = loop.perimeter * unit(rng);

    const VehicleId id{static_cast<std::uint32_t>(v + 1)};
    auto& series = samples[id];
    for (int k = 0; k <= rows; ++k) {
      const double t = k * cfg.sample_period;
      const auto [pos, dir] = loop.at(s0 + speed * t);
      series.push_back({id, round_to(t, 1e-6), round_to(pos, 1e-3), round_to(dir * speed, 1e-3),
                        round_to(std::atan2(dir.y, dir.x), 1e-6)});
    }
  }
  city.trace = TraceStore::from_samples(std::move(samples));
  return city;
}

}  // namespace v2xtwin
