#include "trr/memory_transport.hpp"

#include <condition_variable>
#include <deque>

namespace trr {

namespace {

struct PipeState {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Bytes> queue[2];
    bool closed = false;
};

class PipeEnd : public Connection {
public:
    PipeEnd(std::shared_ptr<PipeState> state, int side, Endpoint peer)
        : state_(std::move(state)), side_(side), peer_(peer)
    {
    }
    ~PipeEnd() override { close(); }

    void send(const wire::Frame& frame) override
    {
        Bytes raw = wire::frame_message(frame.command, frame.payload);
        std::lock_guard lock(state_->mu);
        if (state_->closed) throw Error(ErrorCode::IoError, "pipe closed");
        state_->queue[1 - side_].push_back(std::move(raw));
        state_->cv.notify_all();
    }

    std::optional<wire::Frame> receive(Millis timeout) override
    {
        std::unique_lock lock(state_->mu);
        auto& q = state_->queue[side_];
        state_->cv.wait_for(lock, timeout, [&] { return !q.empty() || state_->closed; });
        if (q.empty()) return std::nullopt;
        Bytes raw = std::move(q.front());
        q.pop_front();
        return wire::parse_frame(raw);
    }

    void close() override
    {
        std::lock_guard lock(state_->mu);
        state_->closed = true;
        state_->cv.notify_all();
    }

    Endpoint peer() const override { return peer_; }

private:
    std::shared_ptr<PipeState> state_;
    int side_;
    Endpoint peer_;
};

} // namespace

std::pair<std::unique_ptr<Connection>, std::unique_ptr<Connection>> make_pipe(Endpoint a, Endpoint b)
{
    auto state = std::make_shared<PipeState>();
    return {std::make_unique<PipeEnd>(state, 0, b), std::make_unique<PipeEnd>(state, 1, a)};
}

// ---------------------------------------------------------------------------

class LocalNetwork::LocalConnection : public Connection {
public:
    LocalConnection(LocalNetwork& net, NodeService& remote, Endpoint origin)
        : net_(net), remote_(remote), session_(remote, origin)
    {
    }

    void send(const wire::Frame& frame) override
    {
        if (closed_) throw Error(ErrorCode::IoError, "connection closed");
        Bytes raw = wire::frame_message(frame.command, frame.payload);
        net_.bytes_ += raw.size();
        wire::Frame delivered = wire::parse_frame(raw);

        bool is_request = delivered.command == wire::Command::Trr;
        if (is_request) ++net_.depth_;
        try {
            for (auto& reply : session_.on_frame(delivered)) {
                Bytes back = wire::frame_message(reply.command, reply.payload);
                net_.bytes_ += back.size();
                inbox_.push_back(wire::parse_frame(back));
            }
        } catch (const Error&) {
            closed_ = true;
        }
        if (is_request) --net_.depth_;
        if (session_.done()) closed_ = true;
    }

    std::optional<wire::Frame> receive(Millis) override
    {
        if (inbox_.empty()) return std::nullopt;
        wire::Frame f = std::move(inbox_.front());
        inbox_.pop_front();
        return f;
    }

    void close() override { closed_ = true; }
    Endpoint peer() const override { return remote_.endpoint(); }

private:
    LocalNetwork& net_;
    NodeService& remote_;
    ResponderSession session_;
    std::deque<wire::Frame> inbox_;
    bool closed_ = false;
};

class LocalNetwork::LocalDialer : public Dialer {
public:
    LocalDialer(LocalNetwork& net, Endpoint origin) : net_(net), origin_(origin) {}

    std::unique_ptr<Connection> connect(const Endpoint& to, Millis) override
    {
        auto it = net_.services_.find(to);
        if (it == net_.services_.end() || !it->second->accepts_connections()) return nullptr;
        ++net_.opened_;
        return std::make_unique<LocalConnection>(net_, *it->second, origin_);
    }

private:
    LocalNetwork& net_;
    Endpoint origin_;
};

LocalNetwork::LocalNetwork() = default;
LocalNetwork::~LocalNetwork() = default;

Dialer& LocalNetwork::dialer_for(Endpoint origin)
{
    auto& slot = dialers_[origin];
    if (!slot) slot = std::make_unique<LocalDialer>(*this, origin);
    return *slot;
}

void LocalNetwork::attach(NodeService& service)
{
    services_[service.endpoint()] = &service;
}

void LocalNetwork::detach(const Endpoint& endpoint)
{
    services_.erase(endpoint);
}

} // namespace trr
