#pragma once

// Blocking TCP transport (POSIX sockets, one thread per inbound connection).

#include "trr/node.hpp"

#include <atomic>
#include <list>
#include <string>
#include <thread>

namespace trr {

/// Frames larger than this are rejected before the payload is read.
inline constexpr std::uint32_t kMaxFramePayload = 1u << 20;

class TcpConnection : public Connection {
public:
    TcpConnection(int fd, Endpoint peer) : fd_(fd), peer_(peer) {}
    ~TcpConnection() override;
    TcpConnection(const TcpConnection&) = delete;
    TcpConnection& operator=(const TcpConnection&) = delete;

    /// Throws IoError when the peer has gone away.
    void send(const wire::Frame& frame) override;
    /// nullopt on timeout or orderly close. Throws the wire errors on garbage.
    std::optional<wire::Frame> receive(Millis timeout) override;
    void close() override;
    Endpoint peer() const override { return peer_; }

private:
    bool read_exact(std::uint8_t* out, std::size_t n, std::chrono::steady_clock::time_point deadline);

    int fd_;
    Endpoint peer_;
};

class TcpDialer : public Dialer {
public:
    std::unique_ptr<Connection> connect(const Endpoint& to, Millis timeout) override;
};

class TcpServer {
public:
    /// A node configured with DenyConnection never opens its listening socket,
    /// so peers see connection refused.
    TcpServer(NodeService& service, std::string bind_address, std::uint16_t port,
              Millis idle_timeout = kDefaultHopTimeout);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    void start();
    void stop();
    /// Actual bound port (useful with port 0).
    std::uint16_t port() const noexcept { return port_; }

private:
    void accept_loop();

    NodeService& service_;
    std::string bind_address_;
    std::uint16_t port_;
    Millis idle_timeout_;
    int listen_fd_ = -1;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex workers_mu_;
    struct Worker {
        std::shared_ptr<std::atomic<bool>> done;
        std::jthread thread;
    };
    std::list<Worker> workers_;
};

} // namespace trr
