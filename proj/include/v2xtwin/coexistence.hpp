#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "v2xtwin/types.hpp"

namespace v2xtwin {

enum class RatId : std::uint8_t { dsrc, nr_v2x, lte_v2x };

std::string_view to_string(RatId rat);
RatId rat_from_string(std::string_view s);

/// Spectral descriptor of one radio access technology.
struct RatSpec {
  RatId rat_id = RatId::dsrc;
  double fc = 5.9e9;
  double bandwidth = 10e6;
  double subcarrier_spacing = 156.25e3;
  double slot_duration = 8e-6;

  [[nodiscard]] double low() const { return fc - bandwidth / 2.0; }
  [[nodiscard]] double high() const { return fc + bandwidth / 2.0; }
  [[nodiscard]] std::size_t subcarriers() const;

  bool operator==(const RatSpec&) const = default;
};

/// 802.11p-like 10 MHz channel or NR numerology 2 sidelink, both centred at 5.9 GHz.
RatSpec default_rat_spec(RatId rat);
/// Throws InvalidSpec.
void validate(const RatSpec& spec);

/// Union frequency/time grid over every configured RAT.
class ResourceGrid {
 public:
  /// horizon > 0 also materializes slot_edges() on [0, horizon].
  static ResourceGrid build(const std::vector<RatSpec>& rats, double horizon = 0.0);

  [[nodiscard]] const std::vector<RatSpec>& rats() const { return rats_; }
  [[nodiscard]] const RatSpec& rat(RatId id) const;
  [[nodiscard]] bool has_rat(RatId id) const;
  [[nodiscard]] std::size_t rat_index(RatId id) const;

  [[nodiscard]] const std::vector<double>& freq_edges() const { return freq_edges_; }
  [[nodiscard]] std::size_t freq_blocks() const { return freq_edges_.size() - 1; }
  [[nodiscard]] double block_bandwidth(std::size_t i) const {
    return freq_edges_[i + 1] - freq_edges_[i];
  }
  /// Bit k set when rats()[k] covers block i.
  [[nodiscard]] std::uint32_t cover_mask(std::size_t i) const { return cover_[i]; }
  [[nodiscard]] bool covers(std::size_t i, RatId id) const {
    return (cover_[i] >> rat_index(id)) & 1U;
  }
  /// Block index range [first, last) tiling the RAT's band.
  [[nodiscard]] std::pair<std::size_t, std::size_t> band_blocks(RatId id) const;
  /// Mean block bandwidth over the whole grid.
  [[nodiscard]] double mean_block_bandwidth() const;
  /// omega_z = B_z / mean block bandwidth.
  [[nodiscard]] double block_weight(std::size_t i) const {
    return block_bandwidth(i) / mean_block_bandwidth();
  }

  /// Slot boundaries of every RAT strictly inside (t0, t1), with t0 and t1 added.
  [[nodiscard]] std::vector<double> slot_edges_between(double t0, double t1) const;
  [[nodiscard]] const std::vector<double>& slot_edges() const { return slot_edges_; }

 private:
  std::vector<RatSpec> rats_;
  std::vector<double> freq_edges_;
  std::vector<std::uint32_t> cover_;
  std::vector<std::pair<std::size_t, std::size_t>> bands_;
  std::vector<double> slot_edges_;
};

/// Footprint of one in-flight transmission: flat PSD over the RAT band.
struct TrackingObject {
  std::uint64_t transmission_id = 0;
  VehicleId vehicle_id;
  RatId rat_id = RatId::dsrc;
  double fc = 0.0;
  double bandwidth = 0.0;
  double start = 0.0;
  double duration = 0.0;
  double psd = 0.0;  // W/Hz

  [[nodiscard]] double end() const { return start + duration; }
  [[nodiscard]] double power() const { return psd * bandwidth; }
  [[nodiscard]] double low() const { return fc - bandwidth / 2.0; }
  [[nodiscard]] double high() const { return fc + bandwidth / 2.0; }
};

/// Live transmissions, keyed by transmission id. Enforces half-duplex per vehicle.
class TransmissionTracker {
 public:
  using ActivityFn = std::function<bool(VehicleId)>;

  explicit TransmissionTracker(double propagation_bound = 10e-6, ActivityFn is_active = {});

  /// Errors: InactiveVehicle, HalfDuplexViolation, InvalidConfig (duration <= 0 or power < 0).
  const TrackingObject& register_tx(VehicleId vehicle, const RatSpec& rat, double start,
                                    double duration, double tx_power_w);
  /// Drops objects whose end plus the propagation bound lies before now.
  void expire(double now);
  [[nodiscard]] std::vector<const TrackingObject*> overlapping(double t0, double t1) const;
  [[nodiscard]] const TrackingObject* find(std::uint64_t transmission_id) const;
  [[nodiscard]] bool transmitting(VehicleId vehicle, double t0, double t1) const;
  [[nodiscard]] std::size_t size() const { return objects_.size(); }
  [[nodiscard]] const std::map<std::uint64_t, TrackingObject>& objects() const { return objects_; }

 private:
  double propagation_bound_;
  ActivityFn is_active_;
  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, TrackingObject> objects_;
};

/// Total path gain G(tx, rx), linear.
using ChannelFn = std::function<double(VehicleId tx, VehicleId rx)>;

struct SinrConfig {
  double g_thr = 1e-14;                 // linear path gain (-140 dB)
  double noise_density = 3.1622776601683794e-20;  // W/Hz, -174 dBm/Hz + 9 dB noise figure
  bool coexistence = true;
};

struct Interferer {
  VehicleId vehicle_id;
  RatId rat_id = RatId::dsrc;
  double gain = 0.0;            // linear path gain to the receiver
  double received_power = 0.0;  // W over the interferer's own band
};

/// Blocks [freq_first, freq_last) x [slot_first, slot_last) of the window grid sharing one SINR.
struct BlockGroup {
  std::size_t freq_first = 0;
  std::size_t freq_last = 0;
  std::size_t slot_first = 0;
  std::size_t slot_last = 0;
  double sinr = 0.0;
};

struct BlockKey {
  std::size_t freq = 0;
  std::size_t slot = 0;
  auto operator<=>(const BlockKey&) const = default;
};

struct SinrReport {
  std::vector<BlockGroup> groups;
  std::vector<double> slot_edges;  // time blocks of the desired window
  double aggregate = 0.0;
  double desired_gain = 0.0;
  std::vector<Interferer> considered_interferers;
  std::vector<Interferer> discarded_interferers;

  /// One entry per occupied block.
  [[nodiscard]] std::map<BlockKey, double> per_block() const;
};

/// Per-block SINR of `desired` at rx plus the bandwidth-weighted aggregate over occupied blocks.
/// Errors: NoDesiredOverlap.
SinrReport evaluate_sinr(VehicleId rx, const TrackingObject& desired, const ResourceGrid& grid,
                         const TransmissionTracker& tracker, const ChannelFn& channel,
                         const SinrConfig& cfg);

/// Recomputes the aggregate from the per-block values: sum(omega_z * sinr_z) / sum(omega_z).
double aggregate_from_blocks(const SinrReport& report, const ResourceGrid& grid);

}  // namespace v2xtwin
