#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "v2xtwin/types.hpp"
#include "v2xtwin/vehicle_state.hpp"

namespace v2xtwin {

struct Scenario;

enum class MessageType : std::uint8_t { init = 1, loc_update = 2, chan_req = 3, chan_resp = 4 };

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kHeaderSize = 12;
inline constexpr std::size_t kMaxFrameSize = 1400;

struct InitPayload {
  std::uint64_t digest = 0;
  bool operator==(const InitPayload&) const = default;
};

struct LocUpdatePayload {
  VehicleState state;
  bool deactivate = false;
  bool operator==(const LocUpdatePayload&) const = default;
};

struct ChanReqPayload {
  VehicleId tx;
  VehicleId rx;
  double t = 0.0;
  bool operator==(const ChanReqPayload&) const = default;
};

struct ChanRespPayload {
  VehicleId tx;
  VehicleId rx;
  double total_gain = 0.0;
  double delay = 0.0;
  bool los = false;
  bool operator==(const ChanRespPayload&) const = default;
};

using Payload = std::variant<InitPayload, LocUpdatePayload, ChanReqPayload, ChanRespPayload>;

struct Message {
  std::uint32_t sequence = 0;
  Payload payload;

  [[nodiscard]] MessageType type() const;
  bool operator==(const Message&) const = default;
};

/// Payload size fixed by the message type.
std::size_t payload_size(MessageType type);

/// Header plus raw payload. Throws PayloadTooLarge past kMaxFrameSize.
std::vector<std::uint8_t> encode_frame(MessageType type, std::uint32_t sequence,
                                       std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> encode(const Message& message);
/// Errors: FrameError (magic, version, type, length), TruncatedFrame.
Message decode(std::span<const std::uint8_t> frame);

std::uint64_t fnv1a64(std::string_view bytes);
/// Digest of everything both ends must agree on: scene geometry, tracer and gating settings.
std::uint64_t twin_digest(const Scenario& scenario);

}  // namespace v2xtwin
