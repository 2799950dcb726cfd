#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace v2xtwin {

/// Identifier of one simulated vehicle (numeric, as carried on the wire).
struct VehicleId {
  std::uint32_t value = 0;

  auto operator<=>(const VehicleId&) const = default;
  [[nodiscard]] std::string str() const { return std::to_string(value); }
};

/// Unordered vehicle pair; (a, b) and (b, a) map to the same key.
struct VehiclePair {
  VehicleId first;
  VehicleId second;

  static VehiclePair unordered(VehicleId a, VehicleId b) {
    return a < b ? VehiclePair{a, b} : VehiclePair{b, a};
  }
  auto operator<=>(const VehiclePair&) const = default;
};

}  // namespace v2xtwin

template <>
struct std::hash<v2xtwin::VehicleId> {
  std::size_t operator()(const v2xtwin::VehicleId& id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};

template <>
struct std::hash<v2xtwin::VehiclePair> {
  std::size_t operator()(const v2xtwin::VehiclePair& p) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t{p.first.value} << 32) | p.second.value);
  }
};
