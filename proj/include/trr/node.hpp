#pragma once

// TRR node and client runtime.
//
// TrrNode is the single-threaded state machine (peel, enqueue, release).
// NodeService serializes access to it and performs the forward-and-relay
// step over a Dialer; ResponderSession drives the frame-level protocol of one
// inbound connection (vertrr handshake, one trr request, one track reply).
// The same classes run over TCP and over the synchronous in-process network.

#include "trr/event_log.hpp"
#include "trr/hash.hpp"
#include "trr/onion.hpp"
#include "trr/random.hpp"

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <variant>
#include <vector>

namespace trr {

using TxId = Hash256;
using Millis = std::chrono::milliseconds;

inline constexpr std::size_t kPoolCapacity = 1000;
inline constexpr Millis kDefaultHopTimeout{30000};

TxId txid_of(ByteView tx);

struct Endpoint {
    wire::Ipv4 ip;
    std::uint16_t port = 0;

    std::string to_string() const { return ip.to_string() + ":" + std::to_string(port); }
    friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

inline Endpoint endpoint_of(const NodeDescriptor& d) { return {d.ip, d.port}; }

/// What a node can see of, and do to, the broadcast (Bitcoin) network.
class BroadcastView {
public:
    virtual ~BroadcastView() = default;
    /// True when the transaction is already in the blockchain or a mempool.
    virtual bool seen(const TxId& txid) const = 0;
    virtual bool verify(ByteView tx) const = 0;
    /// Announces a transaction as a normal one. Idempotent per txid.
    virtual void broadcast(ByteView tx, wire::Ipv4 origin) = 0;
};

/// In-memory broadcast stub: accepts any non-empty transaction not explicitly
/// marked invalid, and remembers who announced what and in which order.
class MemoryBroadcast : public BroadcastView {
public:
    struct Announcement {
        TxId txid;
        wire::Ipv4 origin;
    };

    bool seen(const TxId& txid) const override;
    bool verify(ByteView tx) const override;
    void broadcast(ByteView tx, wire::Ipv4 origin) override;

    void mark_invalid(const TxId& txid);
    std::vector<Announcement> announcements() const;

private:
    mutable std::mutex mu_;
    std::set<TxId> seen_;
    std::set<TxId> invalid_;
    std::vector<Announcement> log_;
};

/// Frame-level, bidirectional connection.
class Connection {
public:
    virtual ~Connection() = default;
    virtual void send(const wire::Frame& frame) = 0;
    /// nullopt on timeout or when the peer closed the connection.
    virtual std::optional<wire::Frame> receive(Millis timeout) = 0;
    virtual void close() = 0;
    virtual Endpoint peer() const = 0;
};

class Dialer {
public:
    virtual ~Dialer() = default;
    /// nullptr when the remote end is unreachable or refuses the connection.
    virtual std::unique_ptr<Connection> connect(const Endpoint& to, Millis timeout) = 0;
};

enum class Role { Initiator, Responder };

/// Exchanges vertrr frames. Throws NotTrr when the peer opens with anything
/// else and IoError when it stays silent past the timeout.
void handshake(Connection& conn, Role role, Millis timeout);

/// Fault injection for dishonest behaviour. WrongPubkey needs no runtime
/// support: the node simply holds a key other than the one it advertised.
enum class Misbehavior { None, DenyConnection, DropData, NoRelease, WrongPubkey };

struct NodeOptions {
    std::size_t pool_capacity = kPoolCapacity;
    Misbehavior misbehavior = Misbehavior::None;
    Millis hop_timeout = kDefaultHopTimeout;
    std::uint64_t initial_height = 0;
};

struct PendingRelease {
    Bytes tx;
    TxId txid;
    std::uint64_t enqueue_height = 0;
    std::uint64_t release_height = 0;
    std::optional<ec::CurvePoint> return_pubkey;
};

/// What a node learns from one request; fake TRR nodes report these.
struct Observation {
    Endpoint self;
    Endpoint previous;
    std::optional<Endpoint> next;
    std::optional<Bytes> tx;
};

class TrrNode {
public:
    struct ForwardTo {
        Endpoint next;
        Bytes payload;
        std::optional<ec::CurvePoint> return_pubkey;
    };
    struct Respond {
        Bytes ack;
    };
    struct NoReply {
        std::string reason;
    };
    using Outcome = std::variant<ForwardTo, Respond, NoReply>;

    TrrNode(ec::KeyPair keys, NodeDescriptor self, BroadcastView& network, std::uint64_t seed,
            NodeOptions options = {});

    /// Peels one layer of an inbound request. Releases are verified and
    /// queued, and answered at once with an encrypted ack.
    Outcome accept_request(ByteView packet, const Endpoint& previous, std::uint32_t now);

    /// Encrypted ack reporting `failed` as the node in error. nullopt when the
    /// request carried no usable return key.
    std::optional<Bytes> error_ack(const std::optional<ec::CurvePoint>& return_pubkey,
                                   wire::AckErrno error, wire::Ipv4 failed, std::uint32_t now);

    /// Advances the block clock and broadcasts every due transaction that the
    /// network has not seen yet. Returns the transactions broadcast.
    std::vector<Bytes> on_new_block(std::uint64_t height);

    std::uint64_t height() const noexcept { return height_; }
    std::size_t pool_size() const noexcept { return pool_.size(); }
    const std::vector<PendingRelease>& pool() const noexcept { return pool_; }
    const NodeDescriptor& descriptor() const noexcept { return self_; }
    Endpoint endpoint() const noexcept { return endpoint_of(self_); }
    const NodeOptions& options() const noexcept { return options_; }

    void set_observer(std::function<void(const Observation&)> observer) { observer_ = std::move(observer); }
    void set_event_sink(EventSink* sink) noexcept { sink_ = sink; }
    void emit(std::string kind, nlohmann::json detail = nlohmann::json::object());

private:
    Bytes make_ack(const ec::CurvePoint& return_pubkey, wire::AckErrno error, wire::Ipv4 failed,
                   std::uint32_t now);

    ec::KeyPair keys_;
    NodeDescriptor self_;
    BroadcastView& network_;
    NodeOptions options_;
    Rng rng_;
    std::uint64_t height_;
    std::vector<PendingRelease> pool_;
    std::function<void(const Observation&)> observer_;
    EventSink* sink_ = nullptr;
};

/// Thread-safe front of a TrrNode: state changes happen under one lock, while
/// the outbound hop to the next node runs outside it.
class NodeService {
public:
    using UnixClock = std::function<std::uint32_t()>;

    NodeService(TrrNode& node, Dialer& dialer, UnixClock clock = {});

    bool accepts_connections() const noexcept;

    /// Handles one trr payload end to end: forwards and relays the downstream
    /// ack verbatim, or answers locally. nullopt means close without reply.
    std::optional<Bytes> handle_trr(ByteView payload, const Endpoint& previous);

    std::vector<Bytes> on_new_block(std::uint64_t height);

    template <class F>
    auto with_node(F&& f)
    {
        std::lock_guard lock(mu_);
        return f(node_);
    }

    Endpoint endpoint() const noexcept { return node_.endpoint(); }

private:
    std::uint32_t now() const;
    std::optional<Bytes> relay(const TrrNode::ForwardTo& fwd);

    TrrNode& node_;
    Dialer& dialer_;
    UnixClock clock_;
    std::mutex mu_;
};

/// Protocol state of one inbound connection.
class ResponderSession {
public:
    ResponderSession(NodeService& service, Endpoint peer) : service_(service), peer_(peer) {}

    /// Consumes one frame and returns the frames to send back.
    /// Throws NotTrr when the connection does not follow the TRR exchange.
    std::vector<wire::Frame> on_frame(const wire::Frame& frame);
    bool done() const noexcept { return state_ == State::Done; }

private:
    enum class State { AwaitHello, AwaitRequest, Done };

    NodeService& service_;
    Endpoint peer_;
    State state_ = State::AwaitHello;
};

/// Runs a ResponderSession over a blocking connection until it completes,
/// the peer idles past `idle_timeout`, or the peer breaks the protocol.
/// The connection is closed on return.
void serve_connection(NodeService& service, Connection& conn, Millis idle_timeout);

/// Source of block heights for the client's release check.
class BlockClock {
public:
    virtual ~BlockClock() = default;
    virtual std::uint64_t height() = 0;
    /// Blocks (or, in simulation, advances the chain) until height ≥ target.
    virtual void wait_until(std::uint64_t target) = 0;
};

struct SendPolicy {
    std::size_t num_routes = 3;
    std::size_t hops = 3;
    /// Release delay per route, cycled when there are more routes than entries.
    std::vector<std::uint64_t> delays{1, 3, 5};
    int max_rounds = 3;
    Millis timeout = kDefaultHopTimeout;
};

struct RouteAttempt {
    int round = 0;
    std::vector<NodeDescriptor> hops;
    std::uint64_t delay = 0;
    std::optional<wire::TrrAck> ack;
    std::string error;
};

enum class SendStatus { Released, GaveUp };

struct SendReport {
    TxId txid{};
    SendStatus status = SendStatus::GaveUp;
    int rounds = 0;
    std::uint64_t first_dispatch_height = 0;
    std::vector<RouteAttempt> attempts;

    bool released() const noexcept { return status == SendStatus::Released; }
};

/// The client procedure: pick independent routes, send one onion per route
/// sharing a single return key, wait out the longest delay, check whether the
/// network has the transaction, and start over if not. Gives up after
/// policy.max_rounds rounds. Throws TxTooLarge before any network traffic.
SendReport client_send(ByteView tx, std::span<const NodeDescriptor> directory,
                       const SendPolicy& policy, Dialer& dialer, BlockClock& clock,
                       const BroadcastView& network, AnyRng rng, std::uint32_t now,
                       std::string_view self_id = {});

nlohmann::json to_json(const SendReport& report);

} // namespace trr
