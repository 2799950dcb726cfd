#include "v2xtwin/udp.hpp"

#include <arpa/inet.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include <cerrno>
#include <cstring>
#include <limits>

#include "v2xtwin/errors.hpp"

namespace v2xtwin {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace

sockaddr_in parse_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw InvalidConfig("address must be host:port, got '" + text + "'");
  std::string host = text.substr(0, colon);
  if (host.empty() || host == "localhost") host = "127.0.0.1";
  const long port = std::strtol(text.c_str() + colon + 1, nullptr, 10);
  if (port < 0 || port > 65535) throw InvalidConfig("bad port in '" + text + "'");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw InvalidConfig("bad IPv4 host in '" + text + "'");
  }
  return addr;
}

std::string Datagram::sender() const {
  char buf[INET_ADDRSTRLEN] = {};
  inet_ntop(AF_INET, &from.sin_addr, buf, sizeof buf);
  return std::string(buf) + ":" + std::to_string(ntohs(from.sin_port));
}

UdpSocket::UdpSocket() : fd_(::socket(AF_INET, SOCK_DGRAM, 0)) {
  if (fd_ < 0) throw Error(errno_text("socket"));
}

UdpSocket::~UdpSocket() {
  if (fd_ >= 0) ::close(fd_);
}

void UdpSocket::bind(const sockaddr_in& address) {
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&address), sizeof address) != 0) {
    throw Error(errno_text("bind"));
  }
}

std::uint16_t UdpSocket::local_port() const {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    throw Error(errno_text("getsockname"));
  }
  return ntohs(addr.sin_port);
}

void UdpSocket::send_to(std::span<const std::uint8_t> bytes, const sockaddr_in& to) {
  const auto n = ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&to),
                          sizeof to);
  if (n < 0 || static_cast<std::size_t>(n) != bytes.size()) throw Error(errno_text("sendto"));
}

std::optional<Datagram> UdpSocket::receive(std::chrono::milliseconds timeout) {
  pollfd p{fd_, POLLIN, 0};
  const int ready = ::poll(&p, 1, static_cast<int>(timeout.count()));
  if (ready < 0) {
    if (errno == EINTR) return std::nullopt;
    throw Error(errno_text("poll"));
  }
  if (ready == 0) return std::nullopt;
  Datagram d;
  d.bytes.resize(65536);
  socklen_t len = sizeof d.from;
  const auto n = ::recvfrom(fd_, d.bytes.data(), d.bytes.size(), 0,
                            reinterpret_cast<sockaddr*>(&d.from), &len);
  if (n < 0) throw Error(errno_text("recvfrom"));
  d.bytes.resize(static_cast<std::size_t>(n));
  return d;
}

TwinServer::TwinServer(ChannelEngine& engine, std::uint64_t digest, ClassResolver classes)
    : engine_(engine), digest_(digest), classes_(std::move(classes)) {}

std::vector<Message> TwinServer::handle(const Message& in, const std::string& sender) {
  auto& last = last_sequence_[sender];
  const bool duplicate = in.sequence != 0 && in.sequence <= last;
  if (duplicate) {
    ++duplicates_;
  } else {
    last = in.sequence;
  }

  std::vector<Message> out;
  switch (in.type()) {
    case MessageType::init: {
      const auto& p = std::get<InitPayload>(in.payload);
      if (p.digest != digest_) {
        spdlog::warn("{}: scene digest {:016x} differs from ours {:016x}", sender, p.digest, digest_);
      }
      out.push_back({in.sequence, InitPayload{digest_}});
      break;
    }
    case MessageType::loc_update: {
      const auto& p = std::get<LocUpdatePayload>(in.payload);
      if (!duplicate) {
        try {
          if (p.deactivate) {
            engine_.deactivate(p.state.vehicle_id);
          } else {
            try {
              engine_.apply_location_update(p.state);
            } catch (const UnknownVehicle&) {
              if (!classes_) throw;
              engine_.register_vehicle(p.state.vehicle_id, classes_(p.state.vehicle_id));
              engine_.apply_location_update(p.state);
            }
          }
        } catch (const Error& e) {
          spdlog::warn("{}: location update rejected: {}", sender, e.what());
        }
      }
      out.push_back(in);
      break;
    }
    case MessageType::chan_req: {
      const auto& p = std::get<ChanReqPayload>(in.payload);
      ChanRespPayload resp{p.tx, p.rx, 0.0, std::numeric_limits<double>::infinity(), false};
      try {
        const auto r = engine_.query_channel(p.tx, p.rx, p.t);
        resp.total_gain = r.summary.total_gain;
        resp.delay = r.summary.delay;
        resp.los = r.summary.los;
      } catch (const Error& e) {
        spdlog::debug("{}: channel request {}->{} answered empty: {}", sender, p.tx.value,
                      p.rx.value, e.what());
      }
      out.push_back({in.sequence, resp});
      break;
    }
    case MessageType::chan_resp:
      spdlog::warn("{}: unexpected channel response ignored", sender);
      break;
  }
  return out;
}

void TwinServer::serve(const std::atomic<bool>& stop) {
  while (!stop.load()) {
    const auto d = socket_.receive(std::chrono::milliseconds(100));
    if (!d) continue;
    Message in;
    try {
      in = decode(d->bytes);
    } catch (const Error& e) {
      ++malformed_;
      spdlog::warn("{}: dropped malformed datagram: {}", d->sender(), e.what());
      continue;
    }
    for (const auto& reply : handle(in, d->sender())) socket_.send_to(encode(reply), d->from);
  }
}

RemoteChannelService::RemoteChannelService(const std::string& address, std::uint64_t digest,
                                           std::chrono::milliseconds timeout, int attempts)
    : server_(parse_address(address)), timeout_(timeout), attempts_(attempts) {
  sockaddr_in any{};
  any.sin_family = AF_INET;
  any.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (server_.sin_addr.s_addr != htonl(INADDR_LOOPBACK)) any.sin_addr.s_addr = htonl(INADDR_ANY);
  socket_.bind(any);
  const auto reply = exchange(InitPayload{digest});
  const auto theirs = std::get<InitPayload>(reply.payload).digest;
  if (theirs != digest) {
    throw InvalidConfig("channel server runs a different scene (digest mismatch)");
  }
}

Message RemoteChannelService::exchange(const Payload& payload) {
  const Message request{++sequence_, payload};
  const auto frame = encode(request);
  const auto expected = request.type() == MessageType::chan_req ? MessageType::chan_resp : request.type();
  for (int attempt = 0; attempt < attempts_; ++attempt) {
    if (attempt > 0) ++retransmissions_;
    socket_.send_to(frame, server_);
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (true) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) break;
      const auto d = socket_.receive(left);
      if (!d) break;
      try {
        Message reply = decode(d->bytes);
        if (reply.sequence == request.sequence && reply.type() == expected) return reply;
      } catch (const Error& e) {
        spdlog::warn("dropped malformed reply: {}", e.what());
      }
    }
  }
  throw Error("channel server did not answer after " + std::to_string(attempts_) + " attempts");
}

void RemoteChannelService::update(const VehicleState& state) {
  exchange(LocUpdatePayload{state, false});
}

void RemoteChannelService::deactivate(VehicleId id) {
  VehicleState s;
  s.vehicle_id = id;
  exchange(LocUpdatePayload{s, true});
}

ChannelSummary RemoteChannelService::query(VehicleId tx, VehicleId rx, double t) {
  const auto reply = exchange(ChanReqPayload{tx, rx, t});
  const auto& p = std::get<ChanRespPayload>(reply.payload);
  return {p.total_gain, p.delay, p.los};
}

}  // namespace v2xtwin
