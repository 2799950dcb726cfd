#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "v2xtwin/raychannel.hpp"
#include "v2xtwin/types.hpp"

namespace v2xtwin {

/// Log-distance LoS/NLoS loss with lognormal shadowing. Constants are non-normative.
struct StochasticParams {
  double fc = 5.89e9;
  double los_exponent = 2.0;
  double nlos_excess_db = 15.0;
  double shadow_sigma_los_db = 3.0;
  double shadow_sigma_nlos_db = 4.0;
  std::uint64_t seed = 1;
};

/// min(18/d, 1) (1 - e^{-d/36}) + e^{-d/36}. Throws NonPositiveDistance.
double p_los(double d);

/// Free-space loss at 1 m, 20 log10(4 pi / lambda).
double fspl_1m_db(double fc);

/// Mean LoS path loss at distance d (positive dB).
double los_path_loss_db(double d, const StochasticParams& params);

/// Stateless 64-bit mixing of a seed with up to three labels.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// Independent stream per (seed, unordered pair, packet serial).
std::mt19937_64 link_stream(std::uint64_t seed, VehicleId a, VehicleId b, std::uint64_t serial);

/// One draw: LoS ~ Bernoulli(p_los(d)) unless injected, then loss and shadowing.
ChannelSummary sample_channel(double d, const StochasticParams& params, std::mt19937_64& rng,
                              std::optional<bool> injected_los = std::nullopt);

}  // namespace v2xtwin
