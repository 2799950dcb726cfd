#pragma once

#include <netinet/in.h>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "v2xtwin/channel_engine.hpp"
#include "v2xtwin/simulation.hpp"
#include "v2xtwin/twinlink.hpp"

namespace v2xtwin {

/// "host:port" with a dotted IPv4 host or "localhost".
sockaddr_in parse_address(const std::string& text);

struct Datagram {
  std::vector<std::uint8_t> bytes;
  sockaddr_in from{};
  [[nodiscard]] std::string sender() const;
};

/// Blocking IPv4 datagram socket with receive timeouts.
class UdpSocket {
 public:
  UdpSocket();
  ~UdpSocket();
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;

  void bind(const sockaddr_in& address);
  [[nodiscard]] std::uint16_t local_port() const;
  void send_to(std::span<const std::uint8_t> bytes, const sockaddr_in& to);
  std::optional<Datagram> receive(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
};

/// Channel responder: applies location updates and answers channel requests.
class TwinServer {
 public:
  using ClassResolver = std::function<VehicleClass(VehicleId)>;

  TwinServer(ChannelEngine& engine, std::uint64_t digest, ClassResolver classes = {});

  /// Replies for one decoded message from `sender`. Never throws on engine errors.
  std::vector<Message> handle(const Message& in, const std::string& sender);

  void bind(const sockaddr_in& address) { socket_.bind(address); }
  [[nodiscard]] std::uint16_t port() const { return socket_.local_port(); }
  /// Serves datagrams one at a time until stop becomes true.
  void serve(const std::atomic<bool>& stop);

  [[nodiscard]] std::size_t duplicates() const { return duplicates_; }
  [[nodiscard]] std::size_t malformed() const { return malformed_; }
  [[nodiscard]] ChannelEngine& engine() { return engine_; }

 private:
  ChannelEngine& engine_;
  std::uint64_t digest_;
  ClassResolver classes_;
  UdpSocket socket_;
  std::map<std::string, std::uint32_t> last_sequence_;
  std::size_t duplicates_ = 0;
  std::size_t malformed_ = 0;
};

/// ChannelService spoken to over the datagram protocol.
class RemoteChannelService final : public ChannelService {
 public:
  RemoteChannelService(const std::string& address, std::uint64_t digest,
                       std::chrono::milliseconds timeout = std::chrono::milliseconds(500),
                       int attempts = 6);

  void update(const VehicleState& state) override;
  void deactivate(VehicleId id) override;
  ChannelSummary query(VehicleId tx, VehicleId rx, double t) override;

  [[nodiscard]] std::size_t retransmissions() const { return retransmissions_; }

 private:
  Message exchange(const Payload& payload);

  UdpSocket socket_;
  sockaddr_in server_{};
  std::chrono::milliseconds timeout_;
  int attempts_;
  std::uint32_t sequence_ = 0;
  std::size_t retransmissions_ = 0;
};

}  // namespace v2xtwin
