#pragma once

#include "v2xtwin/types.hpp"
#include "v2xtwin/vec3.hpp"

namespace v2xtwin {

/// Kinematic sample of one vehicle at one instant.
struct VehicleState {
  VehicleId vehicle_id;
  double t = 0.0;         // s
  Vec3 position;          // m, vehicle reference point (footprint center at ground contact)
  Vec3 velocity;          // m/s
  double heading = 0.0;   // rad, CCW from +x

  [[nodiscard]] double speed() const { return velocity.norm(); }
  bool operator==(const VehicleState&) const = default;
};

}  // namespace v2xtwin
