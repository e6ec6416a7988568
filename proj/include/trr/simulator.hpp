#pragma once

// Deterministic network simulation and the SRTR / SRD experiments.
//
// estimate_srtr and estimate_srd run at behaviour level: each trial samples
// routes over a population with exact honest/dishonest/fake quotas, and for
// SRD the fake nodes' observations go through the literal attacker
// reconstruction. SimNetwork runs real TrrNodes over the synchronous
// in-process transport for end-to-end traces and the Sybil experiments.

#include "trr/analytics.hpp"
#include "trr/memory_transport.hpp"
#include "trr/node.hpp"

#include <map>

namespace trr::sim {

enum class Behavior { Honest, Dishonest, FakeTrr };

struct SimConfig {
    std::size_t n_nodes = 6000;
    double dishonest_rate = 0.0;
    double fake_rate = 0.0;
    unsigned num_routes = 3;
    unsigned hops = 3;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 1;
    /// How dishonest nodes misbehave in SimNetwork. None cycles through all
    /// four modes by node index.
    Misbehavior dishonest_mode = Misbehavior::None;

    /// Throws InvalidConfig.
    void validate() const;
};

/// Exactly round(d·n) dishonest and round(f·n) fake nodes, shuffled.
std::vector<Behavior> assign_behaviors(std::size_t n, double d, double f, std::uint64_t seed);

analytics::Estimate estimate_srtr(const SimConfig& cfg);
analytics::Estimate estimate_srd(const SimConfig& cfg);

// ---------------------------------------------------------------------------
// Attacker

struct LedgerEntry {
    Endpoint observer;
    Endpoint previous;
    std::optional<Endpoint> next;
    std::uint64_t tick = 0;
    std::optional<Bytes> tx;
};

struct Reconstruction {
    Endpoint claimed_client;
    Bytes tx;
    std::vector<Endpoint> route;
};

/// Observations pooled by the fake TRR nodes, and the route recovery over them.
class AttackLedger {
public:
    void record(LedgerEntry entry);
    const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
    void clear() { entries_.clear(); }

    /// Walks back from every releasing entry. From entry E at tick t with
    /// previous hop P: if P is fake, continue at P's entry for t−1 that names
    /// E's observer as next; otherwise continue at a fake entry for t−2 whose
    /// next is P (P sits alone between two fake nodes). When neither exists,
    /// P is taken to be the client.
    std::vector<Reconstruction> reconstruct() const;

    /// True when some entry holds both the address and the transaction.
    bool links(const Endpoint& client, ByteView tx) const;

private:
    const LedgerEntry* find(const Endpoint& observer, std::uint64_t tick) const;
    const LedgerEntry* find_with_next(const Endpoint& next, std::uint64_t tick) const;

    std::vector<LedgerEntry> entries_;
};

// ---------------------------------------------------------------------------
// Sybil observer

struct SybilRecord {
    TxId txid;
    std::size_t node;
    std::uint64_t tick;
};

/// Passive observer connected to every node; logs who announced what, when.
class SybilObserver {
public:
    void observe(const TxId& txid, std::size_t node, std::uint64_t tick);
    const std::vector<SybilRecord>& log() const noexcept { return log_; }

private:
    std::vector<SybilRecord> log_;
};

/// Earliest announcer of txid; ties go to the lowest node id. Throws NotObserved.
std::size_t sybil_first_spreader(const std::vector<SybilRecord>& log, const TxId& txid);

// ---------------------------------------------------------------------------
// Full-fidelity network

struct TraceReport {
    std::size_t client = 0;
    SendReport send;
    std::vector<Event> events;
    std::optional<std::uint64_t> release_tick;
    std::vector<SybilRecord> sybil;
    /// Last hop of every dispatched route, by node index.
    std::vector<std::size_t> releasing_nodes;

    /// One JSON object per line: a header, each event, each Sybil record.
    std::string to_json_lines() const;
};

class SimNetwork {
public:
    static constexpr std::uint64_t kTicksPerBlock = 100;
    static constexpr std::size_t kGossipFanout = 8;

    explicit SimNetwork(const SimConfig& cfg);
    ~SimNetwork();

    std::size_t size() const noexcept { return nodes_.size(); }
    Behavior behavior(std::size_t i) const { return behaviors_.at(i); }
    const std::vector<NodeDescriptor>& directory() const noexcept { return directory_; }
    std::size_t index_of(wire::Ipv4 ip) const;
    std::uint64_t tick() const noexcept { return tick_; }
    std::uint64_t height() const noexcept { return tick_ / kTicksPerBlock; }

    /// client_send from node `client` over the simulated network, then lets
    /// every pending release drain so that duplicates are exercised.
    TraceReport run_end_to_end(ByteView tx, std::size_t client, const SendPolicy& policy = {});
    /// Picks an honest client with the network's RNG.
    TraceReport run_end_to_end(ByteView tx);

    /// Baseline without TRR: the client announces the transaction itself.
    void direct_broadcast(ByteView tx, std::size_t client);

    const SybilObserver& sybil() const noexcept { return sybil_; }
    const AttackLedger& ledger() const noexcept { return ledger_; }
    const MemorySink& events() const noexcept { return *sink_; }

    /// Throws std::logic_error describing the first violated invariant: a
    /// release before its release height, a transaction announced twice by
    /// TRR nodes, a forward without a matching receive, or transaction
    /// plaintext seen at a non-releasing hop.
    void check_invariants() const;

private:
    class Chain;
    class Clock;
    class TickSink;

    void advance_to_height(std::uint64_t h);

    SimConfig cfg_;
    std::vector<Behavior> behaviors_;
    std::vector<NodeDescriptor> directory_;
    std::map<std::uint32_t, std::size_t> by_ip_;
    std::unique_ptr<MemorySink> sink_;
    std::unique_ptr<TickSink> tick_sink_;
    std::unique_ptr<Chain> chain_;
    LocalNetwork net_;
    std::vector<std::unique_ptr<TrrNode>> nodes_;
    std::vector<std::unique_ptr<NodeService>> services_;
    std::unique_ptr<Clock> clock_;
    SybilObserver sybil_;
    AttackLedger ledger_;
    std::vector<Observation> plaintext_leaks_;
    SplitMix64 rng_;
    std::uint64_t tick_ = 0;
    std::uint64_t route_seq_ = 0;
    std::uint64_t sends_ = 0;
};

} // namespace trr::sim
