#include "v2xtwin/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "v2xtwin/errors.hpp"

namespace v2xtwin {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void require_positive(double d) {
  if (!(d > 0.0)) throw NonPositiveDistance("distance must be positive, got " + std::to_string(d));
}

}  // namespace

double p_los(double d) {
  require_positive(d);
  const double e = std::exp(-d / 36.0);
  const double p = std::min(18.0 / d, 1.0) * (1.0 - e) + e;
  return std::clamp(p, 0.0, 1.0);
}

double fspl_1m_db(double fc) { return 20.0 * std::log10(4.0 * kPi * fc / kSpeedOfLight); }

double los_path_loss_db(double d, const StochasticParams& params) {
  require_positive(d);
  return fspl_1m_db(params.fc) + 10.0 * params.los_exponent * std::log10(d);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ a);
  h = splitmix(h ^ (b << 1));
  return splitmix(h ^ c);
}

std::mt19937_64 link_stream(std::uint64_t seed, VehicleId a, VehicleId b, std::uint64_t serial) {
  const auto pair = VehiclePair::unordered(a, b);
  const std::uint64_t h = mix_seed(seed, pair.first.value, pair.second.value, serial);
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

ChannelSummary sample_channel(double d, const StochasticParams& params, std::mt19937_64& rng,
                              std::optional<bool> injected_los) {
  const double p = p_los(d);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const bool los = injected_los.value_or(u < p);
  const double sigma = los ? params.shadow_sigma_los_db : params.shadow_sigma_nlos_db;
  double shadow = 0.0;
  if (sigma > 0.0) shadow = std::normal_distribution<double>(0.0, sigma)(rng);
  const double gain_db =
      -los_path_loss_db(d, params) - (los ? 0.0 : params.nlos_excess_db) - shadow;
  return {std::pow(10.0, gain_db / 10.0), d / kSpeedOfLight, los};
}

}  // namespace v2xtwin
