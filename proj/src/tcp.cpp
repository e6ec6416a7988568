#include "trr/tcp.hpp"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace trr {

namespace {

using Clock = std::chrono::steady_clock;

sockaddr_in to_sockaddr(const Endpoint& e)
{
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(e.port);
    sa.sin_addr.s_addr = htonl(e.ip.value);
    return sa;
}

Endpoint from_sockaddr(const sockaddr_in& sa)
{
    return {wire::Ipv4{ntohl(sa.sin_addr.s_addr)}, ntohs(sa.sin_port)};
}

int remaining_ms(Clock::time_point deadline)
{
    auto left = std::chrono::duration_cast<Millis>(deadline - Clock::now()).count();
    return left < 0 ? 0 : static_cast<int>(left);
}

[[noreturn]] void fail(const std::string& what)
{
    throw Error(ErrorCode::IoError, what + ": " + std::strerror(errno));
}

} // namespace

TcpConnection::~TcpConnection()
{
    close();
}

void TcpConnection::close()
{
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

void TcpConnection::send(const wire::Frame& frame)
{
    if (fd_ < 0) throw Error(ErrorCode::IoError, "connection closed");
    Bytes raw = wire::frame_message(frame.command, frame.payload);
    std::size_t off = 0;
    while (off < raw.size()) {
        ssize_t n = ::send(fd_, raw.data() + off, raw.size() - off, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail("send to " + peer_.to_string());
        }
        off += static_cast<std::size_t>(n);
    }
}

bool TcpConnection::read_exact(std::uint8_t* out, std::size_t n, Clock::time_point deadline)
{
    std::size_t got = 0;
    while (got < n) {
        pollfd p{fd_, POLLIN, 0};
        int r = ::poll(&p, 1, remaining_ms(deadline));
        if (r < 0) {
            if (errno == EINTR) continue;
            fail("poll");
        }
        if (r == 0) return false;
        ssize_t k = ::recv(fd_, out + got, n - got, 0);
        if (k < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            return false;
        }
        if (k == 0) return false;
        got += static_cast<std::size_t>(k);
    }
    return true;
}

std::optional<wire::Frame> TcpConnection::receive(Millis timeout)
{
    if (fd_ < 0) return std::nullopt;
    auto deadline = Clock::now() + timeout;
    std::array<std::uint8_t, wire::kFrameHeaderSize> header{};
    if (!read_exact(header.data(), header.size(), deadline)) return std::nullopt;
    wire::FrameHeader h = wire::parse_frame_header(header);
    if (h.length > kMaxFramePayload) {
        throw Error(ErrorCode::PayloadTooLarge, "frame of " + std::to_string(h.length) + " bytes");
    }
    Bytes payload(h.length);
    if (!read_exact(payload.data(), payload.size(), deadline)) return std::nullopt;
    wire::verify_checksum(h, payload);
    return wire::Frame{h.command, std::move(payload)};
}

std::unique_ptr<Connection> TcpDialer::connect(const Endpoint& to, Millis timeout)
{
    int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) fail("socket");
    int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);

    sockaddr_in sa = to_sockaddr(to);
    int r = ::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa);
    if (r < 0 && errno != EINPROGRESS) {
        ::close(fd);
        return nullptr;
    }
    if (r < 0) {
        pollfd p{fd, POLLOUT, 0};
        int err = 0;
        socklen_t len = sizeof err;
        if (::poll(&p, 1, static_cast<int>(timeout.count())) <= 0 ||
            ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len) < 0 || err != 0) {
            ::close(fd);
            return nullptr;
        }
    }
    ::fcntl(fd, F_SETFL, flags);
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return std::make_unique<TcpConnection>(fd, to);
}

// ---------------------------------------------------------------------------

TcpServer::TcpServer(NodeService& service, std::string bind_address, std::uint16_t port,
                     Millis idle_timeout)
    : service_(service), bind_address_(std::move(bind_address)), port_(port), idle_timeout_(idle_timeout)
{
}

TcpServer::~TcpServer()
{
    stop();
}

void TcpServer::start()
{
    if (running_) return;
    running_ = true;
    if (!service_.accepts_connections()) return;

    listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) fail("socket");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in sa = to_sockaddr({wire::Ipv4::parse(bind_address_), port_});
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0) fail("bind");
    if (::listen(listen_fd_, 64) < 0) fail("listen");
    socklen_t len = sizeof sa;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&sa), &len);
    port_ = ntohs(sa.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpServer::accept_loop()
{
    while (running_) {
        pollfd p{listen_fd_, POLLIN, 0};
        if (::poll(&p, 1, 100) <= 0) continue;
        sockaddr_in peer{};
        socklen_t len = sizeof peer;
        int fd = ::accept4(listen_fd_, reinterpret_cast<sockaddr*>(&peer), &len, SOCK_CLOEXEC);
        if (fd < 0) continue;
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

        std::lock_guard lock(workers_mu_);
        std::erase_if(workers_, [](const Worker& w) { return w.done->load(); });
        auto done = std::make_shared<std::atomic<bool>>(false);
        workers_.push_back({done, std::jthread([this, fd, done, who = from_sockaddr(peer)] {
                                TcpConnection conn(fd, who);
                                serve_connection(service_, conn, idle_timeout_);
                                *done = true;
                            })});
    }
}

void TcpServer::stop()
{
    if (!running_.exchange(false)) return;
    if (acceptor_.joinable()) acceptor_.join();
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    std::lock_guard lock(workers_mu_);
    workers_.clear();
}

} // namespace trr
