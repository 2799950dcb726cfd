#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "v2xtwin/types.hpp"
#include "v2xtwin/vec3.hpp"
#include "v2xtwin/vehicle_state.hpp"

namespace v2xtwin {

/// Movement threshold inputs for mesh synchronization.
struct GatingConfig {
  double delta_d0 = 1.0;  // m
  double fc = 5.89e9;     // Hz, carrier used to derive the coherence time
  // Replaces the derived coherence time when set (s).
  std::optional<double> coherence_time_override;
};

/// Clarke's rule of thumb 0.423 * lambda / v. Returns +inf for a stationary vehicle.
double coherence_time(double speed, double fc);

/// max(delta_d0, |v| * tau_coh) for the given state.
double movement_threshold(const VehicleState& state, const GatingConfig& cfg);

/// True when the mesh should be re-posed: never synced, or moved strictly beyond the threshold.
bool gate_update(const std::optional<Vec3>& last_synced_pos, const VehicleState& state,
                 const GatingConfig& cfg);

/// Time-ordered kinematic samples for every vehicle of a trace.
class TraceStore {
 public:
  TraceStore() = default;
  /// Takes per-vehicle samples in time order; fills missing velocity/heading.
  static TraceStore from_samples(std::map<VehicleId, std::vector<VehicleState>> samples);

  [[nodiscard]] const std::map<VehicleId, std::vector<VehicleState>>& series() const {
    return series_;
  }
  [[nodiscard]] std::vector<VehicleId> vehicles() const;
  [[nodiscard]] bool is_active(VehicleId id, double t) const;
  /// Vehicles whose first sample <= t <= last sample, ascending id.
  [[nodiscard]] std::vector<VehicleId> active_at(double t) const;
  /// Linear interpolation between samples; nullopt outside the vehicle's lifetime.
  [[nodiscard]] std::optional<VehicleState> state_at(VehicleId id, double t) const;
  [[nodiscard]] double start_time() const;
  [[nodiscard]] double end_time() const;
  [[nodiscard]] std::size_t size() const { return series_.size(); }

 private:
  std::map<VehicleId, std::vector<VehicleState>> series_;
};

/// CSV `t,vehicle_id,x,y,z[,vx,vy,vz,heading]`; velocity/heading columns or cells may be absent.
TraceStore parse_trace(std::string_view csv_text);
TraceStore ingest_trace(const std::filesystem::path& trace_file);
std::string write_trace(const TraceStore& trace);

/// Signed smallest difference a - b wrapped to (-pi, pi].
double angle_difference(double a, double b);

}  // namespace v2xtwin
