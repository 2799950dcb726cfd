#include "v2xtwin/linksim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "v2xtwin/errors.hpp"

namespace v2xtwin {

std::string_view to_string(MacKind m) {
  return m == MacKind::csma_ca ? "csma_ca" : "sidelink_random";
}

std::string_view to_string(PacketKind k) { return k == PacketKind::cam ? "cam" : "cpm"; }

std::string_view to_string(ChannelKind k) { return k == ChannelKind::ray ? "ray" : "stochastic"; }

MacKind mac_from_string(std::string_view s) {
  if (s == "csma_ca") return MacKind::csma_ca;
  if (s == "sidelink_random") return MacKind::sidelink_random;
  throw InvalidConfig("unknown MAC '" + std::string(s) + "'");
}

ChannelKind channel_from_string(std::string_view s) {
  if (s == "ray") return ChannelKind::ray;
  if (s == "stochastic") return ChannelKind::stochastic;
  throw InvalidConfig("unknown channel model '" + std::string(s) + "'");
}

std::string_view to_string(DropReason r) {
  switch (r) {
    case DropReason::none:
      return "none";
    case DropReason::sensitivity:
      return "sensitivity";
    case DropReason::sinr:
      return "sinr";
    case DropReason::half_duplex:
      return "half_duplex";
    case DropReason::source_left:
      return "source_left";
  }
  return "?";
}

RadioProfile default_radio(RatId rat) {
  RadioProfile p;
  p.rat_id = rat;
  p.mac = rat == RatId::dsrc ? MacKind::csma_ca : MacKind::sidelink_random;
  return p;
}

bool cam_triggered(const VehicleState& last, const VehicleState& now, const CamRules& rules) {
  if (distance(last.position, now.position) > rules.distance) return true;
  const double dh = std::abs(angle_difference(now.heading, last.heading)) * 180.0 / kPi;
  if (dh > rules.heading_deg) return true;
  return std::abs(now.speed() - last.speed()) > rules.speed;
}

std::optional<double> next_cam_time(const TraceStore& trace, const VehicleState& last,
                                    const CamRules& rules) {
  const VehicleId id = last.vehicle_id;
  auto fires = [&](double t) -> std::optional<bool> {
    const auto s = trace.state_at(id, t);
    if (!s) return std::nullopt;
    return cam_triggered(last, *s, rules);
  };
  const double lo = last.t + rules.min_interval;
  const double hi = last.t + rules.max_interval;
  const auto at_lo = fires(lo);
  if (!at_lo) return std::nullopt;
  if (*at_lo) return lo;

  double prev = lo;
  const auto steps = static_cast<long>(std::ceil((hi - lo) / rules.scan_step - 1e-9));
  for (long k = 1; k <= steps; ++k) {
    const double t = std::min(hi, lo + static_cast<double>(k) * rules.scan_step);
    const auto f = fires(t);
    if (!f) return std::nullopt;
    if (*f) {
      double a = prev;
      double b = t;
      while (b - a > rules.resolution) {
        const double mid = 0.5 * (a + b);
        if (fires(mid).value_or(true)) {
          b = mid;
        } else {
          a = mid;
        }
      }
      return b;
    }
    prev = t;
  }
  return hi;
}

double csma_airtime(std::size_t payload_bytes, double data_rate, const CsmaConfig& cfg) {
  return cfg.preamble + static_cast<double>(cfg.header_bytes + payload_bytes) * 8.0 / data_rate;
}

std::size_t SidelinkConfig::slots_per_period() const {
  return static_cast<std::size_t>(std::llround(reservation_period / slot));
}

SidelinkChoice select_sidelink_resource(double t_request, double previous_window_end,
                                        const SidelinkConfig& cfg, int copies,
                                        std::mt19937_64& rng) {
  const std::size_t n = cfg.slots_per_period();
  if (n == 0) throw InvalidConfig("reservation period shorter than one slot");
  copies = std::clamp<int>(copies, 1, static_cast<int>(n));
  const double earliest = std::max(t_request, previous_window_end);
  SidelinkChoice c;
  c.window_start = std::ceil(earliest / cfg.slot - 1e-9) * cfg.slot;
  c.window_end = c.window_start + static_cast<double>(n) * cfg.slot;

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  while (c.slots.size() < static_cast<std::size_t>(copies)) {
    const std::size_t s = pick(rng);
    if (std::find(c.slots.begin(), c.slots.end(), s) == c.slots.end()) c.slots.push_back(s);
  }
  std::sort(c.slots.begin(), c.slots.end());
  for (const auto s : c.slots) c.starts.push_back(c.window_start + static_cast<double>(s) * cfg.slot);
  return c;
}

bool decodable(double rssi_dbm, double sinr_db, const RadioProfile& radio) {
  return rssi_dbm >= radio.sensitivity_dbm && sinr_db >= radio.sinr_threshold_db;
}

}  // namespace v2xtwin
