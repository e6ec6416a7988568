#include "trr/node.hpp"

#include <algorithm>
#include <ctime>

namespace trr {

TxId txid_of(ByteView tx)
{
    return sha256d(tx);
}

// ---------------------------------------------------------------------------
// MemoryBroadcast

bool MemoryBroadcast::seen(const TxId& txid) const
{
    std::lock_guard lock(mu_);
    return seen_.contains(txid);
}

bool MemoryBroadcast::verify(ByteView tx) const
{
    if (tx.empty() || tx.size() > wire::kMaxTxSize) return false;
    std::lock_guard lock(mu_);
    return !invalid_.contains(txid_of(tx));
}

void MemoryBroadcast::broadcast(ByteView tx, wire::Ipv4 origin)
{
    TxId id = txid_of(tx);
    std::lock_guard lock(mu_);
    if (seen_.insert(id).second) {
        log_.push_back({id, origin});
    }
}

void MemoryBroadcast::mark_invalid(const TxId& txid)
{
    std::lock_guard lock(mu_);
    invalid_.insert(txid);
}

std::vector<MemoryBroadcast::Announcement> MemoryBroadcast::announcements() const
{
    std::lock_guard lock(mu_);
    return log_;
}

// ---------------------------------------------------------------------------
// Handshake

void handshake(Connection& conn, Role role, Millis timeout)
{
    auto expect_hello = [&] {
        auto frame = conn.receive(timeout);
        if (!frame) {
            throw Error(ErrorCode::IoError, "no vertrr from " + conn.peer().to_string());
        }
        if (frame->command != wire::Command::Vertrr) {
            throw Error(ErrorCode::NotTrr, "first frame was '" +
                                               std::string(wire::command_name(frame->command)) + "'");
        }
    };
    if (role == Role::Initiator) {
        conn.send({wire::Command::Vertrr, {}});
        expect_hello();
    } else {
        expect_hello();
        conn.send({wire::Command::Vertrr, {}});
    }
}

// ---------------------------------------------------------------------------
// TrrNode

TrrNode::TrrNode(ec::KeyPair keys, NodeDescriptor self, BroadcastView& network, std::uint64_t seed,
                 NodeOptions options)
    : keys_(std::move(keys)),
      self_(std::move(self)),
      network_(network),
      options_(options),
      rng_(seed),
      height_(options.initial_height)
{
}

void TrrNode::emit(std::string kind, nlohmann::json detail)
{
    if (sink_) sink_->emit(Event{std::move(kind), self_.node_id, std::move(detail)});
}

Bytes TrrNode::make_ack(const ec::CurvePoint& return_pubkey, wire::AckErrno error,
                        wire::Ipv4 failed, std::uint32_t now)
{
    wire::TrrAck ack;
    ack.time = now;
    ack.rpt_ip = self_.ip;
    ack.err_ip = failed;
    ack.error_number = static_cast<std::uint16_t>(error);
    if (error != wire::AckErrno::Ok) ack.message = std::string(wire::describe(error));
    return encrypt_ack(ack, return_pubkey, rng_);
}

std::optional<Bytes> TrrNode::error_ack(const std::optional<ec::CurvePoint>& return_pubkey,
                                        wire::AckErrno error, wire::Ipv4 failed, std::uint32_t now)
{
    if (!return_pubkey) return std::nullopt;
    emit("error", {{"errno", static_cast<int>(error)}, {"err_ip", failed.to_string()}});
    return make_ack(*return_pubkey, error, failed, now);
}

TrrNode::Outcome TrrNode::accept_request(ByteView packet, const Endpoint& previous,
                                         std::uint32_t now)
{
    emit("received", {{"from", previous.to_string()}, {"bytes", packet.size()}});
    if (options_.misbehavior == Misbehavior::DropData) {
        return NoReply{"dropping request"};
    }

    PeelResult peeled;
    try {
        peeled = peel_layer(packet, keys_.private_key);
    } catch (const Error& e) {
        emit("undecryptable", {{"error", e.what()}});
        return NoReply{e.what()};
    }

    if (auto* fwd = std::get_if<Forward>(&peeled)) {
        Endpoint next{fwd->next_ip, fwd->next_port};
        if (observer_) observer_(Observation{endpoint(), previous, next, std::nullopt});
        if (options_.misbehavior == Misbehavior::NoRelease) {
            if (!fwd->return_pubkey) return NoReply{"no return key"};
            return Respond{make_ack(*fwd->return_pubkey, wire::AckErrno::Ok, {}, now)};
        }
        emit("forwarded", {{"to", next.to_string()}, {"bytes", fwd->remaining.size()}});
        return ForwardTo{next, std::move(fwd->remaining), fwd->return_pubkey};
    }

    auto& rel = std::get<Release>(peeled);
    if (observer_) observer_(Observation{endpoint(), previous, std::nullopt, rel.data.tx});
    if (!rel.return_pubkey) return NoReply{"no return key"};
    const ec::CurvePoint& ret = *rel.return_pubkey;

    if (options_.misbehavior == Misbehavior::NoRelease) {
        return Respond{make_ack(ret, wire::AckErrno::Ok, {}, now)};
    }
    if (!network_.verify(rel.data.tx)) {
        return Respond{*error_ack(ret, wire::AckErrno::InvalidTransaction, self_.ip, now)};
    }
    if (pool_.size() >= options_.pool_capacity) {
        return Respond{*error_ack(ret, wire::AckErrno::PoolFull, self_.ip, now)};
    }

    PendingRelease entry;
    entry.txid = txid_of(rel.data.tx);
    entry.tx = std::move(rel.data.tx);
    entry.enqueue_height = height_;
    entry.release_height = height_ + rel.data.release_delay;
    entry.return_pubkey = ret;
    emit("enqueued", {{"txid", to_hex(entry.txid)},
                      {"height", height_},
                      {"release_height", entry.release_height}});
    pool_.push_back(std::move(entry));
    return Respond{make_ack(ret, wire::AckErrno::Ok, {}, now)};
}

std::vector<Bytes> TrrNode::on_new_block(std::uint64_t height)
{
    if (height <= height_) {
        throw Error(ErrorCode::InvalidArgument, "block height " + std::to_string(height) +
                                                    " does not advance past " +
                                                    std::to_string(height_));
    }
    height_ = height;

    auto due = std::stable_partition(pool_.begin(), pool_.end(), [&](const PendingRelease& p) {
        return p.release_height > height_;
    });
    std::vector<Bytes> released;
    for (auto it = due; it != pool_.end(); ++it) {
        nlohmann::json detail{{"txid", to_hex(it->txid)}, {"height", height_}};
        if (network_.seen(it->txid)) {
            emit("duplicate", std::move(detail));
        } else if (!network_.verify(it->tx)) {
            emit("invalid", std::move(detail));
        } else {
            network_.broadcast(it->tx, self_.ip);
            emit("released", std::move(detail));
            released.push_back(std::move(it->tx));
        }
    }
    pool_.erase(due, pool_.end());
    return released;
}

// ---------------------------------------------------------------------------
// NodeService

NodeService::NodeService(TrrNode& node, Dialer& dialer, UnixClock clock)
    : node_(node), dialer_(dialer), clock_(std::move(clock))
{
}

std::uint32_t NodeService::now() const
{
    if (clock_) return clock_();
    return static_cast<std::uint32_t>(std::time(nullptr));
}

bool NodeService::accepts_connections() const noexcept
{
    return node_.options().misbehavior != Misbehavior::DenyConnection;
}

std::optional<Bytes> NodeService::handle_trr(ByteView payload, const Endpoint& previous)
{
    TrrNode::Outcome outcome;
    {
        std::lock_guard lock(mu_);
        outcome = node_.accept_request(payload, previous, now());
    }
    std::optional<Bytes> ack;
    if (auto* r = std::get_if<TrrNode::Respond>(&outcome)) {
        ack = std::move(r->ack);
    } else if (auto* f = std::get_if<TrrNode::ForwardTo>(&outcome)) {
        ack = relay(*f);
    }
    if (ack) {
        std::lock_guard lock(mu_);
        node_.emit("acked", {{"to", previous.to_string()}});
    }
    return ack;
}

std::optional<Bytes> NodeService::relay(const TrrNode::ForwardTo& fwd)
{
    const Millis timeout = node_.options().hop_timeout;
    wire::AckErrno error = wire::AckErrno::Timeout;
    if (auto conn = dialer_.connect(fwd.next, timeout)) {
        try {
            handshake(*conn, Role::Initiator, timeout);
            conn->send({wire::Command::Trr, fwd.payload});
            auto reply = conn->receive(timeout);
            conn->close();
            if (reply && reply->command == wire::Command::Track) {
                return std::move(reply->payload);
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::NotTrr) error = wire::AckErrno::NotTrr;
        }
    } else {
        error = wire::AckErrno::ConnectionRefused;
    }
    std::lock_guard lock(mu_);
    return node_.error_ack(fwd.return_pubkey, error, fwd.next.ip, now());
}

std::vector<Bytes> NodeService::on_new_block(std::uint64_t height)
{
    std::lock_guard lock(mu_);
    return node_.on_new_block(height);
}

// ---------------------------------------------------------------------------
// ResponderSession

std::vector<wire::Frame> ResponderSession::on_frame(const wire::Frame& frame)
{
    switch (state_) {
    case State::AwaitHello:
        if (frame.command != wire::Command::Vertrr) {
            state_ = State::Done;
            throw Error(ErrorCode::NotTrr, "connection opened with '" +
                                               std::string(wire::command_name(frame.command)) + "'");
        }
        state_ = State::AwaitRequest;
        return {wire::Frame{wire::Command::Vertrr, {}}};
    case State::AwaitRequest: {
        state_ = State::Done;
        if (frame.command != wire::Command::Trr) {
            throw Error(ErrorCode::NotTrr, "expected a trr request");
        }
        auto ack = service_.handle_trr(frame.payload, peer_);
        if (!ack) return {};
        return {wire::Frame{wire::Command::Track, std::move(*ack)}};
    }
    case State::Done:
        break;
    }
    throw Error(ErrorCode::NotTrr, "session already finished");
}

void serve_connection(NodeService& service, Connection& conn, Millis idle_timeout)
{
    ResponderSession session(service, conn.peer());
    try {
        while (!session.done()) {
            auto frame = conn.receive(idle_timeout);
            if (!frame) break;
            for (const auto& reply : session.on_frame(*frame)) {
                conn.send(reply);
            }
        }
    } catch (const Error&) {
        // Non-TRR or malformed traffic: drop the connection.
    }
    conn.close();
}

// ---------------------------------------------------------------------------
// Client

namespace {

void validate(const SendPolicy& policy)
{
    if (policy.num_routes == 0 || policy.hops == 0 || policy.hops > kMaxHops ||
        policy.max_rounds < 1 || policy.delays.empty()) {
        throw Error(ErrorCode::InvalidArgument, "invalid send policy");
    }
    for (auto d : policy.delays) {
        if (d < wire::kMinReleaseDelay || d > wire::kMaxReleaseDelay) {
            throw Error(ErrorCode::DelayOutOfRange, "release delay must be in [1, 5]");
        }
    }
}

RouteAttempt dispatch(ByteView tx, const Route& route, std::uint64_t delay, int round,
                      const ec::KeyPair& ret, const SendPolicy& policy, Dialer& dialer,
                      AnyRng& rng, std::uint32_t now)
{
    RouteAttempt attempt{round, route.hops, delay, std::nullopt, {}};
    OnionPacket onion = build_onion(tx, route, delay, ret, now, rng);
    auto conn = dialer.connect(endpoint_of(route.starting_node()), policy.timeout);
    if (!conn) {
        attempt.error = "starting node " + route.starting_node().ip.to_string() + " refused connection";
        return attempt;
    }
    try {
        handshake(*conn, Role::Initiator, policy.timeout);
        conn->send({wire::Command::Trr, std::move(onion.ciphertext)});
        auto reply = conn->receive(policy.timeout);
        conn->close();
        if (!reply || reply->command != wire::Command::Track) {
            attempt.error = "no ack from starting node " + route.starting_node().ip.to_string();
        } else {
            attempt.ack = decrypt_ack(reply->payload, ret.private_key);
        }
    } catch (const Error& e) {
        attempt.error = e.what();
    }
    return attempt;
}

} // namespace

SendReport client_send(ByteView tx, std::span<const NodeDescriptor> directory,
                       const SendPolicy& policy, Dialer& dialer, BlockClock& clock,
                       const BroadcastView& network, AnyRng rng, std::uint32_t now,
                       std::string_view self_id)
{
    if (tx.size() > wire::kMaxTxSize) {
        throw Error(ErrorCode::TxTooLarge, "transaction of " + std::to_string(tx.size()) +
                                               " bytes exceeds 10240");
    }
    validate(policy);

    SendReport report;
    report.txid = txid_of(tx);
    for (int round = 1; round <= policy.max_rounds; ++round) {
        report.rounds = round;
        ec::KeyPair ret = ec::keygen_even(rng);
        auto routes = select_routes(directory, policy.num_routes, policy.hops, rng, self_id);

        std::uint64_t start = clock.height();
        if (round == 1) report.first_dispatch_height = start;
        std::uint64_t longest = 0;
        for (std::size_t i = 0; i < routes.size(); ++i) {
            std::uint64_t delay = policy.delays[i % policy.delays.size()];
            longest = std::max(longest, delay);
            report.attempts.push_back(dispatch(tx, routes[i], delay, round, ret, policy, dialer, rng, now));
        }

        clock.wait_until(start + longest);
        if (network.seen(report.txid)) {
            report.status = SendStatus::Released;
            return report;
        }
    }
    report.status = SendStatus::GaveUp;
    return report;
}

nlohmann::json to_json(const SendReport& report)
{
    nlohmann::json attempts = nlohmann::json::array();
    for (const auto& a : report.attempts) {
        nlohmann::json hops = nlohmann::json::array();
        for (const auto& h : a.hops) hops.push_back(h.node_id);
        nlohmann::json j{{"round", a.round}, {"hops", hops}, {"delay", a.delay}};
        if (a.ack) {
            j["ack"] = {{"errno", a.ack->error_number},
                        {"message", a.ack->message},
                        {"rpt_ip", a.ack->rpt_ip.to_string()},
                        {"err_ip", a.ack->err_ip.to_string()}};
        }
        if (!a.error.empty()) j["error"] = a.error;
        attempts.push_back(std::move(j));
    }
    return {{"txid", to_hex(report.txid)},
            {"status", report.released() ? "released" : "gave_up"},
            {"rounds", report.rounds},
            {"first_dispatch_height", report.first_dispatch_height},
            {"attempts", std::move(attempts)}};
}

} // namespace trr
