#include "v2xtwin/twinlink.hpp"

#include <bit>
#include <cstring>
#include <sstream>
#include <string>

#include "v2xtwin/config_text.hpp"
#include "v2xtwin/errors.hpp"
#include "v2xtwin/scenario.hpp"

namespace v2xtwin {

namespace {

constexpr std::uint8_t kMagic[4] = {'V', 'N', '3', 'T'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void vec(const Vec3& v) {
    f64(v.x);
    f64(v.y);
    f64(v.z);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  Vec3 vec() {
    const double x = f64();
    const double y = f64();
    const double z = f64();
    return {x, y, z};
  }

 private:
  std::uint64_t get(int n) {
    if (pos_ + static_cast<std::size_t>(n) > b_.size()) throw TruncatedFrame("frame ends early");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{b_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

bool known_type(std::uint8_t t) { return t >= 1 && t <= 4; }

std::uint8_t flag_byte(std::uint8_t v, const char* field) {
  if (v > 1) throw FrameError(std::string(field) + " byte must be 0 or 1");
  return v;
}

}  // namespace

MessageType Message::type() const {
  return static_cast<MessageType>(payload.index() + 1);
}

std::size_t payload_size(MessageType type) {
  switch (type) {
    case MessageType::init:
      return 8;
    case MessageType::loc_update:
      return 4 + 1 + 8 + 24 + 24 + 8;
    case MessageType::chan_req:
      return 4 + 4 + 8;
    case MessageType::chan_resp:
      return 4 + 4 + 8 + 8 + 1;
  }
  throw FrameError("unknown message type");
}

std::vector<std::uint8_t> encode_frame(MessageType type, std::uint32_t sequence,
                                       std::span<const std::uint8_t> payload) {
  if (kHeaderSize + payload.size() > kMaxFrameSize) {
    throw PayloadTooLarge("frame of " + std::to_string(kHeaderSize + payload.size()) +
                          " bytes exceeds " + std::to_string(kMaxFrameSize));
  }
  Writer w;
  for (const auto m : kMagic) w.u8(m);
  w.u8(kProtocolVersion);
  w.u8(static_cast<std::uint8_t>(type));
  w.u32(sequence);
  w.u16(static_cast<std::uint16_t>(payload.size()));
  auto out = w.take();
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::vector<std::uint8_t> encode(const Message& message) {
  Writer w;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, InitPayload>) {
          w.u64(p.digest);
        } else if constexpr (std::is_same_v<T, LocUpdatePayload>) {
          w.u32(p.state.vehicle_id.value);
          w.u8(p.deactivate ? 1 : 0);
          w.f64(p.state.t);
          w.vec(p.state.position);
          w.vec(p.state.velocity);
          w.f64(p.state.heading);
        } else if constexpr (std::is_same_v<T, ChanReqPayload>) {
          w.u32(p.tx.value);
          w.u32(p.rx.value);
          w.f64(p.t);
        } else {
          w.u32(p.tx.value);
          w.u32(p.rx.value);
          w.f64(p.total_gain);
          w.f64(p.delay);
          w.u8(p.los ? 1 : 0);
        }
      },
      message.payload);
  const auto payload = w.take();
  return encode_frame(message.type(), message.sequence, payload);
}

Message decode(std::span<const std::uint8_t> frame) {
  if (frame.size() < 4) throw TruncatedFrame("frame shorter than the magic");
  if (std::memcmp(frame.data(), kMagic, 4) != 0) throw FrameError("bad magic");
  if (frame.size() < kHeaderSize) throw TruncatedFrame("frame shorter than the header");
  Reader h(frame.subspan(4, kHeaderSize - 4));
  const std::uint8_t version = h.u8();
  if (version != kProtocolVersion) {
    throw FrameError("unsupported protocol version " + std::to_string(version), version);
  }
  const std::uint8_t type_byte = h.u8();
  if (!known_type(type_byte)) throw FrameError("unknown message type " + std::to_string(type_byte));
  const auto type = static_cast<MessageType>(type_byte);
  Message m;
  m.sequence = h.u32();
  const std::uint16_t len = h.u16();
  if (len != payload_size(type)) {
    throw FrameError("payload length " + std::to_string(len) + " does not match the message type");
  }
  if (frame.size() < kHeaderSize + len) throw TruncatedFrame("payload shorter than announced");
  if (frame.size() > kHeaderSize + len) throw FrameError("trailing bytes after the payload");

  Reader r(frame.subspan(kHeaderSize, len));
  switch (type) {
    case MessageType::init:
      m.payload = InitPayload{r.u64()};
      break;
    case MessageType::loc_update: {
      LocUpdatePayload p;
      p.state.vehicle_id = VehicleId{r.u32()};
      p.deactivate = flag_byte(r.u8(), "flags") == 1;
      p.state.t = r.f64();
      p.state.position = r.vec();
      p.state.velocity = r.vec();
      p.state.heading = r.f64();
      m.payload = p;
      break;
    }
    case MessageType::chan_req: {
      ChanReqPayload p;
      p.tx = VehicleId{r.u32()};
      p.rx = VehicleId{r.u32()};
      p.t = r.f64();
      m.payload = p;
      break;
    }
    case MessageType::chan_resp: {
      ChanRespPayload p;
      p.tx = VehicleId{r.u32()};
      p.rx = VehicleId{r.u32()};
      p.total_gain = r.f64();
      p.delay = r.f64();
      p.los = flag_byte(r.u8(), "los") == 1;
      m.payload = p;
      break;
    }
  }
  return m;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t twin_digest(const Scenario& scenario) {
  std::ostringstream s;
  s << serialize_scene(scenario.scene);
  const auto& t = scenario.tracer;
  s << "\n[tracer]\nfc = " << format_double(t.fc) << "\nmax_interactions = " << t.max_interactions
    << "\ndiffraction = " << t.enable_diffraction << "\ngain_floor_db = "
    << format_double(t.gain_floor_db) << "\nground_reflection = " << t.ground_reflection << "\n";
  const auto& g = scenario.gating;
  s << "\n[mobility]\ndelta_d0 = " << format_double(g.delta_d0);
  if (g.coherence_time_override) s << "\ncoherence_time = " << format_double(*g.coherence_time_override);
  s << "\n";
  return fnv1a64(s.str());
}

}  // namespace v2xtwin
