#include "twinforge/orchestrator/channel.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "twinforge/errors.hpp"

namespace twinforge::orchestrator {

TwinMessage Channel::make(MsgKind kind, std::int64_t episode, nlohmann::json payload) {
  TwinMessage m;
  m.seq = next_seq_++;
  m.kind = kind;
  m.episode = episode;
  m.payload = std::move(payload);
  return m;
}

void Channel::check_incoming(const TwinMessage& msg) {
  if (msg.seq <= last_recv_seq_)
    throw ProtocolViolation("sequence number regression: " + std::to_string(msg.seq) +
                            " after " + std::to_string(last_recv_seq_));
  last_recv_seq_ = msg.seq;
}

namespace {

struct SharedQueues {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<TwinMessage> to_a;
  std::deque<TwinMessage> to_b;
};

class InProcChannel final : public Channel {
 public:
  InProcChannel(std::shared_ptr<SharedQueues> q, bool is_a) : q_(std::move(q)), is_a_(is_a) {}

  void send(const TwinMessage& msg) override {
    {
      std::lock_guard lock(q_->mu);
      (is_a_ ? q_->to_b : q_->to_a).push_back(msg);
    }
    q_->cv.notify_all();
  }

  std::optional<TwinMessage> recv(std::chrono::milliseconds timeout) override {
    std::unique_lock lock(q_->mu);
    auto& queue = is_a_ ? q_->to_a : q_->to_b;
    if (!q_->cv.wait_for(lock, timeout, [&] { return !queue.empty(); })) return std::nullopt;
    TwinMessage msg = queue.front();
    queue.pop_front();
    lock.unlock();
    check_incoming(msg);
    return msg;
  }

 private:
  std::shared_ptr<SharedQueues> q_;
  bool is_a_;
};

class FdGuard {
 public:
  explicit FdGuard(int fd = -1) : fd_(fd) {}
  ~FdGuard() { reset(); }
  FdGuard(FdGuard&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  FdGuard& operator=(FdGuard&& o) noexcept {
    reset();
    fd_ = o.fd_;
    o.fd_ = -1;
    return *this;
  }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_;
};

class TcpChannel final : public Channel {
 public:
  explicit TcpChannel(FdGuard fd) : fd_(std::move(fd)) {}

  void send(const TwinMessage& msg) override {
    const auto bytes = msg.encode();
    size_t off = 0;
    while (off < bytes.size()) {
      const ssize_t n = ::send(fd_.get(), bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n <= 0) throw std::runtime_error("tcp send failed");
      off += static_cast<size_t>(n);
    }
  }

  std::optional<TwinMessage> recv(std::chrono::milliseconds timeout) override {
    std::uint8_t head[4];
    if (!read_exact(head, 4, timeout)) return std::nullopt;
    const std::uint32_t len = (static_cast<std::uint32_t>(head[0]) << 24) |
                              (static_cast<std::uint32_t>(head[1]) << 16) |
                              (static_cast<std::uint32_t>(head[2]) << 8) |
                              static_cast<std::uint32_t>(head[3]);
    if (len > (1u << 24)) throw ProtocolViolation("oversized frame");
    std::string body(len, '\0');
    if (!read_exact(reinterpret_cast<std::uint8_t*>(body.data()), len, timeout))
      throw std::runtime_error("tcp stream truncated mid-frame");
    TwinMessage msg = TwinMessage::decode_body(body);
    check_incoming(msg);
    return msg;
  }

 private:
  bool read_exact(std::uint8_t* dst, size_t n, std::chrono::milliseconds timeout) {
    size_t off = 0;
    while (off < n) {
      pollfd pfd{fd_.get(), POLLIN, 0};
      const int pr = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
      if (pr <= 0) return false;
      const ssize_t r = ::read(fd_.get(), dst + off, n - off);
      if (r <= 0) return false;  // peer closed
      off += static_cast<size_t>(r);
    }
    return true;
  }

  FdGuard fd_;
};

sockaddr_in make_addr(const std::string& host, int port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw std::runtime_error("bad host address: " + host);
  return addr;
}

}  // namespace

ChannelPair make_in_process_pair() {
  auto shared = std::make_shared<SharedQueues>();
  ChannelPair pair;
  pair.a = std::make_unique<InProcChannel>(shared, true);
  pair.b = std::make_unique<InProcChannel>(shared, false);
  return pair;
}

std::unique_ptr<Channel> tcp_listen(const std::string& host, int port,
                                    std::chrono::milliseconds accept_timeout) {
  FdGuard sock(::socket(AF_INET, SOCK_STREAM, 0));
  if (sock.get() < 0) throw std::runtime_error("socket() failed");
  const int one = 1;
  ::setsockopt(sock.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = make_addr(host, port);
  if (::bind(sock.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    throw std::runtime_error("bind failed on " + host + ":" + std::to_string(port));
  if (::listen(sock.get(), 1) != 0) throw std::runtime_error("listen failed");

  pollfd pfd{sock.get(), POLLIN, 0};
  if (::poll(&pfd, 1, static_cast<int>(accept_timeout.count())) <= 0)
    throw std::runtime_error("accept timed out");
  FdGuard conn(::accept(sock.get(), nullptr, nullptr));
  if (conn.get() < 0) throw std::runtime_error("accept failed");
  const int nd = 1;
  ::setsockopt(conn.get(), IPPROTO_TCP, TCP_NODELAY, &nd, sizeof(nd));
  return std::make_unique<TcpChannel>(std::move(conn));
}

std::unique_ptr<Channel> tcp_connect(const std::string& host, int port, int max_attempts) {
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    FdGuard sock(::socket(AF_INET, SOCK_STREAM, 0));
    if (sock.get() < 0) throw std::runtime_error("socket() failed");
    sockaddr_in addr = make_addr(host, port);
    if (::connect(sock.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
      const int nd = 1;
      ::setsockopt(sock.get(), IPPROTO_TCP, TCP_NODELAY, &nd, sizeof(nd));
      return std::make_unique<TcpChannel>(std::move(sock));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50 * (attempt + 1)));
  }
  throw PlantUnreachable("cannot connect to " + host + ":" + std::to_string(port));
}

}  // namespace twinforge::orchestrator
