#include "v2xtwin/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>

#include "v2xtwin/coexistence.hpp"
#include "v2xtwin/errors.hpp"
#include "v2xtwin/event_queue.hpp"
#include "v2xtwin/stochastic.hpp"
#include "v2xtwin/units.hpp"

namespace v2xtwin {

void LocalChannelService::update(const VehicleState& state) { engine_.apply_location_update(state); }

void LocalChannelService::deactivate(VehicleId id) { engine_.deactivate(id); }

ChannelSummary LocalChannelService::query(VehicleId tx, VehicleId rx, double t) {
  try {
    return engine_.query_channel(tx, rx, t).summary;
  } catch (const InactiveVehicle&) {
    return {};
  } catch (const DegenerateGeometry&) {
    return {};
  }
}

ChannelEngine make_engine(const Scenario& scenario, const TraceStore& trace, bool caching,
                          unsigned workers) {
  EngineConfig cfg;
  cfg.tracer = scenario.tracer;
  cfg.gating = scenario.gating;
  cfg.caching = caching;
  cfg.workers = workers;
  ChannelEngine engine(scenario.scene, cfg);
  for (const auto id : trace.vehicles()) engine.register_vehicle(id, scenario.class_of(id));
  return engine;
}

namespace {

enum Priority : int { kMobility = 0, kTxEnd = 1, kTxStart = 2, kTraffic = 3, kAccess = 4 };

// Tracking objects stay queryable this long after they end, so a reception evaluated at the
// end of a long frame still sees every interferer that overlapped it.
constexpr double kExpiryLag = 0.1;
constexpr double kInf = std::numeric_limits<double>::infinity();

enum class MacState { idle, waiting, counting, transmitting };

struct Vehicle {
  VehicleId id;
  RatId rat = RatId::dsrc;
  RadioProfile radio;
  MeshTemplate mesh;
  std::mt19937_64 mac_rng;
  std::mt19937_64 traffic_rng;
  bool active = false;
  std::uint64_t epoch = 0;
  std::deque<Packet> queue;
  MacState state = MacState::idle;
  int backoff = 0;
  double count_from = 0.0;
  double access_at = 0.0;
  EventQueue::Handle access = 0;
  double window_end = -kInf;
};

struct Transmission {
  Packet packet;
  RatId rat = RatId::dsrc;
  double start = 0.0;
  double end = 0.0;
  int copy = 0;
  int copies = 1;
};

class Simulator {
 public:
  Simulator(const Scenario& sc, const TraceStore& trace, const SimulationOptions& opts,
            ChannelService* ray)
      : sc_(sc),
        trace_(trace),
        opts_(opts),
        ray_(ray),
        grid_(ResourceGrid::build(sc.rats)),
        tracker_(10e-6, [this](VehicleId id) { return is_active(id); }) {
    sinr_ = sc.sinr;
    if (opts.coexistence) sinr_.coexistence = *opts.coexistence;
    const bool needs_ray =
        opts.channel == ChannelKind::ray || (opts.channel == ChannelKind::stochastic && sc.los_from_ray);
    if (needs_ray && ray_ == nullptr) throw InvalidConfig("this run needs a ray channel service");
    for (const auto id : trace.vehicles()) {
      Vehicle v;
      v.id = id;
      v.rat = sc.rat_of(id);
      v.radio = sc.radio(v.rat);
      v.mesh = sc.scene.mesh_template(sc.class_of(id));
      v.mac_rng.seed(mix_seed(opts.seed, 0x6d6163, id.value));
      v.traffic_rng.seed(mix_seed(opts.seed, 0x747266, id.value));
      vehicles_.emplace(id, std::move(v));
    }
  }

  SimulationResult run() {
    const double step = sc_.mobility_step;
    result_.start_time = std::ceil(trace_.start_time() / step - 1e-9) * step + 0.0;
    const double duration = opts_.duration.value_or(sc_.traffic.duration);
    end_ = trace_.end_time();
    if (duration > 0.0) end_ = std::min(end_, result_.start_time + duration);
    result_.end_time = end_;
    if (trace_.size() == 0 || result_.start_time > end_) return std::move(result_);

    schedule_step(0);
    queue_.run_until(end_);
    for (auto& [_, best] : pending_) result_.records.push_back(best);
    std::stable_sort(result_.records.begin(), result_.records.end(),
                     [](const ReceptionRecord& a, const ReceptionRecord& b) {
                       if (a.t_end != b.t_end) return a.t_end < b.t_end;
                       if (a.packet_id != b.packet_id) return a.packet_id < b.packet_id;
                       return a.rx < b.rx;
                     });
    return std::move(result_);
  }

 private:
  bool is_active(VehicleId id) const {
    const auto it = vehicles_.find(id);
    return it != vehicles_.end() && it->second.active;
  }

  double now() const { return queue_.now(); }

  // ---- mobility ----------------------------------------------------------------------------

  void schedule_step(std::uint64_t k) {
    const double t = result_.start_time + static_cast<double>(k) * sc_.mobility_step;
    if (t > end_ + 1e-12) return;
    queue_.schedule(t, kMobility, [this, k] { mobility_step(k); });
  }

  void mobility_step(std::uint64_t k) {
    const double t = now();
    for (auto& [id, v] : vehicles_) {
      const auto state = trace_.state_at(id, t);
      if (state && !v.active) activate(v, t);
      if (!state && v.active) deactivate(v);
      if (state && ray_ != nullptr) ray_->update(*state);
    }
    tracker_.expire(t - kExpiryLag);
    std::erase_if(transmissions_, [&](const auto& kv) { return kv.second.end + kExpiryLag < t; });
    std::erase_if(draws_, [&](const auto& kv) { return !transmissions_.contains(kv.first); });
    schedule_step(k + 1);
  }

  void activate(Vehicle& v, double t) {
    v.active = true;
    v.state = MacState::idle;
    const auto& traffic = sc_.traffic;
    const std::uint64_t epoch = v.epoch;
    const VehicleId id = v.id;
    if (traffic.cam) {
      const double phase = std::uniform_real_distribution<double>(0.0, sc_.cam.min_interval)(v.traffic_rng);
      queue_.schedule(t + phase, kTraffic, [this, id, epoch] { on_cam(id, epoch); });
    }
    if (traffic.cpm) {
      const double phase = std::uniform_real_distribution<double>(0.0, traffic.cpm_period)(v.traffic_rng);
      queue_.schedule(t + phase, kTraffic, [this, id, epoch] { on_cpm(id, epoch); });
    }
  }

  void deactivate(Vehicle& v) {
    v.active = false;
    ++v.epoch;
    v.queue.clear();
    v.state = MacState::idle;
    if (ray_ != nullptr) ray_->deactivate(v.id);
  }

  // ---- traffic -----------------------------------------------------------------------------

  Vehicle* live(VehicleId id, std::uint64_t epoch) {
    auto& v = vehicles_.at(id);
    return v.active && v.epoch == epoch ? &v : nullptr;
  }

  Packet make_packet(const Vehicle& v, PacketKind kind) {
    Packet p;
    p.packet_id = result_.packets.size() + 1;
    p.src = v.id;
    p.kind = kind;
    p.size_bytes = kind == PacketKind::cam ? sc_.traffic.cam_size : sc_.traffic.cpm_size;
    p.created_at = now();
    result_.packets.push_back(p);
    return p;
  }

  void on_cam(VehicleId id, std::uint64_t epoch) {
    Vehicle* v = live(id, epoch);
    if (v == nullptr) return;
    const auto state = trace_.state_at(id, now());
    if (!state) return;
    enqueue(*v, make_packet(*v, PacketKind::cam));
    if (const auto next = next_cam_time(trace_, *state, sc_.cam); next && *next <= end_) {
      queue_.schedule(*next, kTraffic, [this, id, epoch] { on_cam(id, epoch); });
    }
  }

  void on_cpm(VehicleId id, std::uint64_t epoch) {
    Vehicle* v = live(id, epoch);
    if (v == nullptr) return;
    enqueue(*v, make_packet(*v, PacketKind::cpm));
    const double next = now() + sc_.traffic.cpm_period;
    if (next <= end_) queue_.schedule(next, kTraffic, [this, id, epoch] { on_cpm(id, epoch); });
  }

  // ---- MAC ---------------------------------------------------------------------------------

  void enqueue(Vehicle& v, const Packet& p) {
    if (v.radio.mac == MacKind::csma_ca) {
      v.queue.push_back(p);
      if (v.state == MacState::idle) start_access(v);
      return;
    }
    const auto choice = select_sidelink_resource(now(), v.window_end, sc_.sidelink,
                                                 v.radio.blind_transmissions, v.mac_rng);
    v.window_end = choice.window_end;
    const int copies = static_cast<int>(choice.starts.size());
    for (int c = 0; c < copies; ++c) {
      const VehicleId id = v.id;
      const std::uint64_t epoch = v.epoch;
      const double start = choice.starts[static_cast<std::size_t>(c)];
      queue_.schedule(start, kTxStart, [this, id, epoch, p, c, copies] {
        if (Vehicle* live_v = live(id, epoch)) {
          start_tx(*live_v, p, sc_.sidelink.slot, c, copies);
        }
      });
    }
  }

  void start_access(Vehicle& v) {
    v.backoff = std::uniform_int_distribution<int>(0, sc_.csma.cw)(v.mac_rng);
    resume(v);
  }

  void resume(Vehicle& v) {
    const double t = now();
    const double busy_until = sensed_busy_until(v, t);
    const VehicleId id = v.id;
    const std::uint64_t epoch = v.epoch;
    if (busy_until > t) {
      v.state = MacState::waiting;
      queue_.schedule(busy_until, kAccess, [this, id, epoch] {
        Vehicle* live_v = live(id, epoch);
        if (live_v != nullptr && live_v->state == MacState::waiting) resume(*live_v);
      });
      return;
    }
    v.state = MacState::counting;
    v.count_from = t + sc_.csma.aifs();
    v.access_at = v.count_from + v.backoff * sc_.csma.slot;
    v.access = queue_.schedule(v.access_at, kAccess, [this, id, epoch] {
      Vehicle* live_v = live(id, epoch);
      if (live_v != nullptr && live_v->state == MacState::counting) on_access(*live_v);
    });
  }

  void on_access(Vehicle& v) {
    v.state = MacState::transmitting;
    const Packet p = v.queue.front();
    v.queue.pop_front();
    start_tx(v, p, csma_airtime(p.size_bytes, v.radio.data_rate, sc_.csma), 0, 1);
  }

  double sensed_busy_until(const Vehicle& v, double t) {
    double until = t;
    for (const auto& [serial, o] : tracker_.objects()) {
      if (o.vehicle_id == v.id || o.rat_id != v.rat || !(o.start <= t && o.end() > t)) continue;
      if (sensed(serial, o.vehicle_id, v)) until = std::max(until, o.end());
    }
    return until;
  }

  bool sensed(std::uint64_t serial, VehicleId src, const Vehicle& listener) {
    const double g = link(serial, src, listener.id).total_gain;
    if (!(g > 0.0)) return false;
    return vehicles_.at(src).radio.tx_power_dbm + linear_to_db(g) >= sc_.csma.cs_threshold_dbm;
  }

  void start_tx(Vehicle& v, const Packet& p, double duration, int copy, int copies) {
    const double t = now();
    const auto& obj = tracker_.register_tx(v.id, grid_.rat(v.rat), t, duration,
                                           dbm_to_watt(v.radio.tx_power_dbm));
    const std::uint64_t serial = obj.transmission_id;
    transmissions_[serial] = {p, v.rat, t, t + duration, copy, copies};
    ++result_.transmissions;

    for (auto& [id, u] : vehicles_) {
      if (id == v.id || !u.active || u.rat != v.rat || u.state != MacState::counting) continue;
      if (u.access_at <= t + 1e-12) continue;  // already committed to transmit now
      if (!sensed(serial, v.id, u)) continue;
      if (t > u.count_from) {
        const auto elapsed = static_cast<int>(std::floor((t - u.count_from) / sc_.csma.slot + 1e-9));
        u.backoff = std::max(0, u.backoff - elapsed);
      }
      queue_.cancel(u.access);
      resume(u);
    }
    queue_.schedule(t + duration, kTxEnd, [this, serial] { end_tx(serial); });
  }

  // ---- channel -----------------------------------------------------------------------------

  std::optional<Vec3> antenna_at(const Vehicle& v, double t) const {
    auto s = trace_.state_at(v.id, t);
    if (!s) s = trace_.state_at(v.id, now());
    if (!s) return std::nullopt;
    return antenna_position(*s, v.mesh);
  }

  ChannelSummary link(std::uint64_t serial, VehicleId a, VehicleId b) {
    if (!is_active(a) || !is_active(b)) return {};
    if (opts_.channel == ChannelKind::ray) return ray_->query(a, b, now());

    auto& memo = draws_[serial];
    const auto key = VehiclePair::unordered(a, b);
    if (const auto it = memo.find(key); it != memo.end()) return it->second;
    const double start = transmissions_.contains(serial) ? transmissions_.at(serial).start : now();
    const auto pa = antenna_at(vehicles_.at(a), start);
    const auto pb = antenna_at(vehicles_.at(b), start);
    ChannelSummary s;
    if (pa && pb) {
      std::optional<bool> los;
      if (sc_.los_from_ray) los = ray_->query(a, b, now()).los;
      auto rng = link_stream(opts_.seed, a, b, serial);
      // below the 1 m reference the log-distance law is meaningless
      s = sample_channel(std::max(distance(*pa, *pb), 1.0), sc_.stochastic, rng, los);
    }
    memo.emplace(key, s);
    return s;
  }

  // ---- reception ---------------------------------------------------------------------------

  void end_tx(std::uint64_t serial) {
    const Transmission tx = transmissions_.at(serial);
    const TrackingObject* obj = tracker_.find(serial);
    const VehicleId src = tx.packet.src;
    Vehicle& sender = vehicles_.at(src);

    std::map<VehicleId, std::uint64_t> serial_of;
    for (const TrackingObject* o : tracker_.overlapping(tx.start, tx.end)) {
      serial_of[o->vehicle_id] = o->transmission_id;
    }
    const ChannelFn gain = [&](VehicleId a, VehicleId r) {
      const auto it = serial_of.find(a);
      if (it == serial_of.end()) return 0.0;
      return link(it->second, a, r).total_gain;
    };

    for (auto& [rx_id, rx] : vehicles_) {
      if (rx_id == src || !rx.active || rx.rat != tx.rat) continue;
      ReceptionRecord rec;
      rec.packet_id = tx.packet.packet_id;
      rec.tx = src;
      rec.rx = rx_id;
      rec.rat = tx.rat;
      rec.kind = tx.packet.kind;
      rec.t_start = tx.start;
      rec.t_end = tx.end;
      rec.channel = opts_.channel;
      const auto pa = antenna_at(sender, tx.start);
      const auto pb = antenna_at(rx, tx.start);
      rec.distance = pa && pb ? distance(*pa, *pb) : kInf;
      rec.intended = rec.distance <= sc_.traffic.intended_range;

      if (!sender.active || obj == nullptr) {
        rec.rssi_dbm = -kInf;
        rec.sinr_db = -kInf;
        rec.reason = DropReason::source_left;
        emit(rec, tx);
        continue;
      }
      const ChannelSummary summary = link(serial, src, rx_id);
      rec.los = summary.los;
      rec.rssi_dbm = summary.total_gain > 0.0
                         ? sender.radio.tx_power_dbm + linear_to_db(summary.total_gain)
                         : -kInf;
      const SinrReport report = evaluate_sinr(rx_id, *obj, grid_, tracker_, gain, sinr_);
      rec.sinr_db = report.aggregate > 0.0 ? linear_to_db(report.aggregate) : -kInf;
      for (const auto& i : report.considered_interferers) rec.interferers.push_back(i.vehicle_id);
      std::sort(rec.interferers.begin(), rec.interferers.end());
      rec.discarded = report.discarded_interferers.size();

      const bool half_duplex = tracker_.transmitting(rx_id, tx.start, tx.end);
      rec.decoded = !half_duplex && decodable(rec.rssi_dbm, rec.sinr_db, sender.radio);
      if (half_duplex) {
        rec.reason = DropReason::half_duplex;
      } else if (rec.rssi_dbm < sender.radio.sensitivity_dbm) {
        rec.reason = DropReason::sensitivity;
      } else if (rec.sinr_db < sender.radio.sinr_threshold_db) {
        rec.reason = DropReason::sinr;
      }
      emit(rec, tx);
    }

    if (sender.active && sender.radio.mac == MacKind::csma_ca && sender.state == MacState::transmitting) {
      sender.state = MacState::idle;
      if (!sender.queue.empty()) start_access(sender);
    }
  }

  void emit(const ReceptionRecord& rec, const Transmission& tx) {
    if (tx.copies == 1) {
      result_.records.push_back(rec);
      return;
    }
    const auto key = std::make_pair(rec.packet_id, rec.rx);
    auto it = pending_.find(key);
    if (it == pending_.end()) {
      pending_.emplace(key, rec);
    } else {
      auto& best = it->second;
      const bool better = (rec.decoded && !best.decoded) ||
                          (rec.decoded == best.decoded && rec.sinr_db > best.sinr_db);
      if (better) best = rec;
    }
    if (tx.copy + 1 == tx.copies) {
      const auto done = pending_.find(key);
      result_.records.push_back(done->second);
      pending_.erase(done);
    }
  }

  const Scenario& sc_;
  const TraceStore& trace_;
  SimulationOptions opts_;
  ChannelService* ray_;
  ResourceGrid grid_;
  TransmissionTracker tracker_;
  SinrConfig sinr_;
  EventQueue queue_;
  double end_ = 0.0;
  std::map<VehicleId, Vehicle> vehicles_;
  std::map<std::uint64_t, Transmission> transmissions_;
  std::map<std::uint64_t, std::map<VehiclePair, ChannelSummary>> draws_;
  std::map<std::pair<std::uint64_t, VehicleId>, ReceptionRecord> pending_;
  SimulationResult result_;
};

}  // namespace

SimulationResult run_simulation(const Scenario& scenario, const TraceStore& trace,
                                const SimulationOptions& options, ChannelService* ray) {
  Simulator sim(scenario, trace, options, ray);
  return sim.run();
}

}  // namespace v2xtwin
