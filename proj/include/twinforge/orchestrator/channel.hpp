#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "twinforge/orchestrator/message.hpp"

namespace twinforge::orchestrator {

// Point-to-point ordered message transport. Receivers enforce strictly
// increasing sequence numbers and throw ProtocolViolation on a regression.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void send(const TwinMessage& msg) = 0;
  // nullopt on timeout or orderly close.
  virtual std::optional<TwinMessage> recv(std::chrono::milliseconds timeout) = 0;

  TwinMessage make(MsgKind kind, std::int64_t episode, nlohmann::json payload = {});

 protected:
  void check_incoming(const TwinMessage& msg);

 private:
  std::uint64_t next_seq_ = 1;
  std::uint64_t last_recv_seq_ = 0;
};

struct ChannelPair {
  std::unique_ptr<Channel> a;
  std::unique_ptr<Channel> b;
};

// Two in-process endpoints backed by thread-safe queues.
ChannelPair make_in_process_pair();

// Blocking TCP server: binds, accepts exactly one peer. Throws
// std::runtime_error on bind failure.
std::unique_ptr<Channel> tcp_listen(const std::string& host, int port,
                                    std::chrono::milliseconds accept_timeout);

// TCP client with retry/backoff; throws PlantUnreachable when the endpoint
// never comes up.
std::unique_ptr<Channel> tcp_connect(const std::string& host, int port, int max_attempts = 20);

}  // namespace twinforge::orchestrator
