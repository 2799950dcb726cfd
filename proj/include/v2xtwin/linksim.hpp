#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "v2xtwin/coexistence.hpp"
#include "v2xtwin/mobility.hpp"
#include "v2xtwin/types.hpp"

namespace v2xtwin {

enum class MacKind { csma_ca, sidelink_random };
enum class PacketKind { cam, cpm };
enum class ChannelKind { ray, stochastic };

std::string_view to_string(MacKind m);
std::string_view to_string(PacketKind k);
std::string_view to_string(ChannelKind k);
MacKind mac_from_string(std::string_view s);
ChannelKind channel_from_string(std::string_view s);

struct RadioProfile {
  RatId rat_id = RatId::dsrc;
  double tx_power_dbm = 30.0;
  double sensitivity_dbm = -93.0;
  double sinr_threshold_db = 10.0;
  double data_rate = 3e6;  // bit/s, CSMA airtime only
  MacKind mac = MacKind::csma_ca;
  int blind_transmissions = 1;  // sidelink copies per packet
};

/// 802.11p at 3 Mb/s for dsrc, random-selection sidelink otherwise.
RadioProfile default_radio(RatId rat);

struct Packet {
  std::uint64_t packet_id = 0;
  VehicleId src;
  PacketKind kind = PacketKind::cam;
  std::size_t size_bytes = 0;
  double created_at = 0.0;
};

struct CamRules {
  double distance = 4.0;      // m
  double heading_deg = 4.0;   // degrees
  double speed = 0.5;         // m/s
  double min_interval = 0.1;  // s
  double max_interval = 1.0;  // s
  double scan_step = 1e-3;
  double resolution = 1e-6;
};

bool cam_triggered(const VehicleState& last, const VehicleState& now, const CamRules& rules);

/// Next CAM instant after one sent at last.t, or nullopt when the vehicle leaves first.
std::optional<double> next_cam_time(const TraceStore& trace, const VehicleState& last,
                                    const CamRules& rules);

struct CsmaConfig {
  double slot = 13e-6;
  double sifs = 32e-6;
  int aifsn = 2;
  int cw = 15;
  double cs_threshold_dbm = -93.0;
  double preamble = 40e-6;
  std::size_t header_bytes = 36;

  [[nodiscard]] double aifs() const { return sifs + aifsn * slot; }
};

/// preamble + (headers + payload) * 8 / rate.
double csma_airtime(std::size_t payload_bytes, double data_rate, const CsmaConfig& cfg);

struct SidelinkConfig {
  double reservation_period = 20e-3;
  double slot = 0.25e-3;

  [[nodiscard]] std::size_t slots_per_period() const;
};

struct SidelinkChoice {
  double window_start = 0.0;
  double window_end = 0.0;
  std::vector<std::size_t> slots;  // ascending, distinct
  std::vector<double> starts;
};

/// Random slot(s) in the first reservation window starting on a slot boundary at or after
/// max(t_request, previous_window_end).
SidelinkChoice select_sidelink_resource(double t_request, double previous_window_end,
                                        const SidelinkConfig& cfg, int copies,
                                        std::mt19937_64& rng);

enum class DropReason { none, sensitivity, sinr, half_duplex, source_left };
std::string_view to_string(DropReason r);

struct ReceptionRecord {
  std::uint64_t packet_id = 0;
  VehicleId tx;
  VehicleId rx;
  RatId rat = RatId::dsrc;
  PacketKind kind = PacketKind::cam;
  double t_start = 0.0;
  double t_end = 0.0;
  double distance = 0.0;
  bool intended = false;
  double rssi_dbm = 0.0;
  double sinr_db = 0.0;
  bool decoded = false;
  DropReason reason = DropReason::none;
  ChannelKind channel = ChannelKind::ray;
  bool los = false;
  std::vector<VehicleId> interferers;  // considered, ascending
  std::size_t discarded = 0;

  bool operator==(const ReceptionRecord&) const = default;
};

/// rssi >= sensitivity and sinr >= threshold.
bool decodable(double rssi_dbm, double sinr_db, const RadioProfile& radio);

}  // namespace v2xtwin
