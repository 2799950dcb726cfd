#pragma once

#include <cstdint>
#include <string>

#include "v2xtwin/mobility.hpp"

namespace v2xtwin {

/// Manhattan grid of square blocks with vehicles circling rectangular street loops.
struct GridCityConfig {
  int blocks_x = 3;
  int blocks_y = 3;
  double block_size = 60.0;    // m, building footprint edge
  double street_width = 20.0;  // m
  double building_height = 15.0;
  double height_spread = 0.0;  // heights drawn from building_height +- spread
  double max_setback = 0.0;    // m, random inset of each footprint side
  int vehicles = 20;
  double duration = 30.0;      // s
  double sample_period = 0.1;  // s between trace rows
  double min_speed = 8.0;      // m/s
  double max_speed = 14.0;
  double lane_offset = 3.0;    // m from the street centerline
  std::uint64_t seed = 7;
};

struct GridCity {
  std::string buildings;  // a [buildings] section
  TraceStore trace;
};

GridCity make_grid_city(const GridCityConfig& cfg);

}  // namespace v2xtwin
