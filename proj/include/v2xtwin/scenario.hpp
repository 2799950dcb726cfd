#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "v2xtwin/coexistence.hpp"
#include "v2xtwin/linksim.hpp"
#include "v2xtwin/mobility.hpp"
#include "v2xtwin/raychannel.hpp"
#include "v2xtwin/scene.hpp"
#include "v2xtwin/stochastic.hpp"

namespace v2xtwin {

struct FleetAssignment {
  std::uint32_t first = 0;
  std::uint32_t last = 0;  // inclusive
  std::optional<RatId> rat;
  std::optional<VehicleClass> vehicle_class;
};

struct TrafficConfig {
  bool cam = true;
  bool cpm = true;
  std::size_t cam_size = 300;
  std::size_t cpm_size = 800;
  double cpm_period = 1.0;
  double intended_range = 300.0;
  double duration = 0.0;  // 0: until the trace ends
};

/// Everything a run needs besides the trace and the command line.
struct Scenario {
  Scene scene;
  std::vector<RatSpec> rats{default_rat_spec(RatId::dsrc), default_rat_spec(RatId::nr_v2x)};
  std::map<RatId, RadioProfile> radios;
  std::vector<FleetAssignment> fleet;
  std::vector<RatId> rat_cycle{RatId::dsrc, RatId::nr_v2x};
  std::vector<VehicleClass> class_cycle{VehicleClass::passenger};
  SinrConfig sinr;
  TracerConfig tracer;
  GatingConfig gating;
  double mobility_step = 0.1;
  StochasticParams stochastic;
  bool los_from_ray = true;  // stochastic runs take the LoS flag from the ray tracer
  TrafficConfig traffic;
  CsmaConfig csma;
  SidelinkConfig sidelink;
  CamRules cam;

  [[nodiscard]] RatId rat_of(VehicleId id) const;
  [[nodiscard]] VehicleClass class_of(VehicleId id) const;
  [[nodiscard]] const RadioProfile& radio(RatId rat) const;
};

Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace v2xtwin
