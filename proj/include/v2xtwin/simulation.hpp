#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "v2xtwin/channel_engine.hpp"
#include "v2xtwin/linksim.hpp"
#include "v2xtwin/mobility.hpp"
#include "v2xtwin/raychannel.hpp"
#include "v2xtwin/scenario.hpp"

namespace v2xtwin {

/// Where the deterministic channel lives: linked in, or behind a socket.
class ChannelService {
 public:
  virtual ~ChannelService() = default;
  virtual void update(const VehicleState& state) = 0;
  virtual void deactivate(VehicleId id) = 0;
  /// {0, +inf, 0} when either vehicle is inactive or the geometry is degenerate.
  virtual ChannelSummary query(VehicleId tx, VehicleId rx, double t) = 0;
};

class LocalChannelService final : public ChannelService {
 public:
  explicit LocalChannelService(ChannelEngine& engine) : engine_(engine) {}
  void update(const VehicleState& state) override;
  void deactivate(VehicleId id) override;
  ChannelSummary query(VehicleId tx, VehicleId rx, double t) override;

 private:
  ChannelEngine& engine_;
};

/// Engine for a scenario with every fleet vehicle of the trace registered.
ChannelEngine make_engine(const Scenario& scenario, const TraceStore& trace, bool caching = true,
                          unsigned workers = 1);

struct SimulationOptions {
  std::uint64_t seed = 1;
  ChannelKind channel = ChannelKind::ray;
  std::optional<bool> coexistence;  // overrides the scenario setting
  std::optional<double> duration;   // overrides the scenario setting
};

struct SimulationResult {
  std::vector<ReceptionRecord> records;
  std::vector<Packet> packets;
  std::size_t transmissions = 0;
  double start_time = 0.0;
  double end_time = 0.0;
};

/// Runs the discrete-event simulation. `ray` is required for ray runs and for stochastic runs
/// that take their LoS flag from the tracer.
SimulationResult run_simulation(const Scenario& scenario, const TraceStore& trace,
                                const SimulationOptions& options, ChannelService* ray);

}  // namespace v2xtwin
