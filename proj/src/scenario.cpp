#include "v2xtwin/scenario.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "v2xtwin/errors.hpp"
#include "v2xtwin/units.hpp"

namespace v2xtwin {

namespace {

std::pair<std::uint32_t, std::uint32_t> parse_id_range(const std::string& text, std::size_t line) {
  const auto dash = text.find('-');
  auto id = [&](std::string_view s) {
    const double v = parse_number(s, line);
    if (v < 0 || v != std::floor(v) || v > 4294967295.0) throw ParseError("bad vehicle id", line);
    return static_cast<std::uint32_t>(v);
  };
  if (dash == std::string::npos) {
    const auto v = id(text);
    return {v, v};
  }
  const auto lo = id(std::string_view(text).substr(0, dash));
  const auto hi = id(std::string_view(text).substr(dash + 1));
  if (hi < lo) throw ParseError("id range is reversed", line);
  return {lo, hi};
}

template <typename T, typename F>
std::vector<T> parse_cycle(const ConfigSetting& s, F convert) {
  std::vector<T> out;
  for (const auto& item : split(s.value, ',')) out.push_back(convert(item));
  if (out.empty()) throw ParseError("empty cycle", s.line);
  return out;
}

}  // namespace

RatId Scenario::rat_of(VehicleId id) const {
  for (auto it = fleet.rbegin(); it != fleet.rend(); ++it) {
    if (id.value >= it->first && id.value <= it->last && it->rat) return *it->rat;
  }
  return rat_cycle[id.value % rat_cycle.size()];
}

VehicleClass Scenario::class_of(VehicleId id) const {
  for (auto it = fleet.rbegin(); it != fleet.rend(); ++it) {
    if (id.value >= it->first && id.value <= it->last && it->vehicle_class) return *it->vehicle_class;
  }
  return class_cycle[id.value % class_cycle.size()];
}

const RadioProfile& Scenario::radio(RatId rat) const {
  const auto it = radios.find(rat);
  if (it == radios.end()) throw InvalidConfig("no radio profile for " + std::string(to_string(rat)));
  return it->second;
}

Scenario parse_scenario(std::string_view text) {
  const auto doc = ConfigDocument::parse(text);
  Scenario sc;
  sc.scene = scene_from_document(doc);

  if (const auto* s = doc.find("rats"); s && !s->records.empty()) {
    sc.rats.clear();
    for (const auto& r : s->records) {
      RatSpec spec = default_rat_spec(rat_from_string(r.name));
      spec.fc = r.number_or("fc", spec.fc);
      spec.bandwidth = r.number_or("bandwidth", spec.bandwidth);
      spec.subcarrier_spacing = r.number_or("scs", spec.subcarrier_spacing);
      spec.slot_duration = r.number_or("slot", spec.slot_duration);
      validate(spec);
      sc.rats.push_back(spec);
    }
  }
  for (const auto& r : sc.rats) sc.radios[r.rat_id] = default_radio(r.rat_id);

  if (const auto* s = doc.find("radios")) {
    for (const auto& r : s->records) {
      const RatId rat = rat_from_string(r.name);
      RadioProfile p = sc.radios.contains(rat) ? sc.radios[rat] : default_radio(rat);
      p.tx_power_dbm = r.number_or("tx_power_dbm", p.tx_power_dbm);
      p.sensitivity_dbm = r.number_or("sensitivity_dbm", p.sensitivity_dbm);
      p.sinr_threshold_db = r.number_or("sinr_threshold_db", p.sinr_threshold_db);
      p.data_rate = r.number_or("data_rate", p.data_rate);
      if (r.has("mac")) p.mac = mac_from_string(r.at("mac"));
      p.blind_transmissions = static_cast<int>(r.number_or("blind_transmissions", 1));
      if (p.blind_transmissions < 1) throw ParseError("blind_transmissions must be >= 1", r.line);
      if (r.has("rsrp_threshold")) {
        spdlog::warn("radio {}: rsrp_threshold is parsed but sensing-based selection is not modeled",
                     r.name);
      }
      if (!(p.sensitivity_dbm < p.tx_power_dbm)) {
        throw ParseError("sensitivity must be below the transmit power", r.line);
      }
      if (!(p.data_rate > 0.0)) throw ParseError("data_rate must be positive", r.line);
      sc.radios[rat] = p;
    }
  }

  if (const auto* s = doc.find("fleet")) {
    if (s->has("rat_cycle")) {
      sc.rat_cycle = parse_cycle<RatId>(s->settings.at("rat_cycle"),
                                        [](const std::string& v) { return rat_from_string(v); });
    }
    if (s->has("class_cycle")) {
      sc.class_cycle = parse_cycle<VehicleClass>(
          s->settings.at("class_cycle"),
          [](const std::string& v) { return vehicle_class_from_string(v); });
    }
    for (const auto& r : s->records) {
      if (r.name != "assign") throw ParseError("unknown fleet record '" + r.name + "'", r.line);
      FleetAssignment a;
      std::tie(a.first, a.last) = parse_id_range(r.at("ids"), r.line);
      if (r.has("rat")) a.rat = rat_from_string(r.at("rat"));
      if (r.has("class")) a.vehicle_class = vehicle_class_from_string(r.at("class"));
      sc.fleet.push_back(a);
    }
  }
  for (const auto rat : sc.rat_cycle) {
    if (!sc.radios.contains(rat)) {
      throw ParseError("fleet uses RAT " + std::string(to_string(rat)) + " which is not in [rats]");
    }
  }
  for (const auto& a : sc.fleet) {
    if (a.rat && !sc.radios.contains(*a.rat)) {
      throw ParseError("fleet uses RAT " + std::string(to_string(*a.rat)) + " which is not in [rats]");
    }
  }

  if (const auto* s = doc.find("coexistence")) {
    sc.sinr.coexistence = s->flag_or("enabled", true);
    sc.sinr.g_thr = db_to_linear(s->number_or("g_thr_db", -140.0));
    const double noise_dbm_hz = s->number_or("noise_dbm_hz", -174.0);
    const double nf = s->number_or("noise_figure_db", 9.0);
    sc.sinr.noise_density = dbm_to_watt(noise_dbm_hz + nf);
  }

  if (const auto* s = doc.find("tracer")) {
    sc.tracer.fc = s->number_or("fc", sc.tracer.fc);
    sc.tracer.max_interactions = static_cast<int>(s->number_or("max_interactions", 3));
    sc.tracer.enable_diffraction = s->flag_or("diffraction", true);
    sc.tracer.gain_floor_db = s->number_or("gain_floor_db", 40.0);
    sc.tracer.ground_reflection = s->flag_or("ground_reflection", false);
    if (sc.tracer.max_interactions < 0) throw ParseError("max_interactions must be >= 0", s->line);
  }

  if (const auto* s = doc.find("mobility")) {
    sc.gating.delta_d0 = s->number_or("delta_d0", 1.0);
    sc.mobility_step = s->number_or("step", 0.1);
    if (s->has("coherence_time")) sc.gating.coherence_time_override = s->number_or("coherence_time", 0);
    if (!(sc.mobility_step > 0.0)) throw ParseError("mobility step must be positive", s->line);
  }
  sc.gating.fc = sc.tracer.fc;

  if (const auto* s = doc.find("stochastic")) {
    sc.stochastic.fc = s->number_or("fc", sc.tracer.fc);
    sc.stochastic.los_exponent = s->number_or("los_exponent", 2.0);
    sc.stochastic.nlos_excess_db = s->number_or("nlos_excess_db", 15.0);
    sc.stochastic.shadow_sigma_los_db = s->number_or("shadow_sigma_los_db", 3.0);
    sc.stochastic.shadow_sigma_nlos_db = s->number_or("shadow_sigma_nlos_db", 4.0);
    const auto source = s->text_or("los_source", "ray");
    if (source != "ray" && source != "bernoulli") {
      throw ParseError("los_source must be ray or bernoulli", s->line);
    }
    sc.los_from_ray = source == "ray";
    if (sc.stochastic.shadow_sigma_los_db < 0 || sc.stochastic.shadow_sigma_nlos_db < 0) {
      throw ParseError("shadowing sigmas must be non-negative", s->line);
    }
  } else {
    sc.stochastic.fc = sc.tracer.fc;
  }

  if (const auto* s = doc.find("traffic")) {
    auto& t = sc.traffic;
    t.cam = s->flag_or("cam", true);
    t.cpm = s->flag_or("cpm", true);
    t.cam_size = static_cast<std::size_t>(s->number_or("cam_size", 300));
    t.cpm_size = static_cast<std::size_t>(s->number_or("cpm_size", 800));
    t.cpm_period = s->number_or("cpm_period", 1.0);
    t.intended_range = s->number_or("intended_range", 300.0);
    t.duration = s->number_or("duration", 0.0);
    if (t.cam_size == 0 || t.cpm_size == 0) throw ParseError("packet sizes must be positive", s->line);
    if (!(t.cpm_period > 0.0)) throw ParseError("cpm_period must be positive", s->line);
  }

  if (const auto* s = doc.find("csma")) {
    auto& c = sc.csma;
    c.slot = s->number_or("slot", c.slot);
    c.sifs = s->number_or("sifs", c.sifs);
    c.aifsn = static_cast<int>(s->number_or("aifsn", c.aifsn));
    c.cw = static_cast<int>(s->number_or("cw", c.cw));
    c.cs_threshold_dbm = s->number_or("cs_threshold_dbm", c.cs_threshold_dbm);
  }

  if (const auto* s = doc.find("sidelink")) {
    sc.sidelink.reservation_period = s->number_or("reservation_period", sc.sidelink.reservation_period);
    sc.sidelink.slot = s->number_or("slot", sc.sidelink.slot);
    if (sc.sidelink.slots_per_period() == 0) {
      throw ParseError("reservation period shorter than a slot", s->line);
    }
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace v2xtwin
