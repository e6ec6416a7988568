#include "trr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace trr::sim {

void SimConfig::validate() const
{
    auto bad = [](const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); };
    auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!unit(dishonest_rate) || !unit(fake_rate)) bad("rates must lie in [0, 1]");
    if (dishonest_rate + fake_rate > 1.0 + 1e-12) bad("dishonest + fake rate exceeds 1");
    if (num_routes < 1) bad("need at least one route");
    if (hops < 1 || hops > kMaxHops) bad("hops must be in 1..10");
    if (trials < 1) bad("trials must be >= 1");
    if (n_nodes < hops) bad("fewer nodes than hops per route");
}

std::vector<Behavior> assign_behaviors(std::size_t n, double d, double f, std::uint64_t seed)
{
    auto dishonest = static_cast<std::size_t>(std::llround(d * static_cast<double>(n)));
    auto fake = static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
    fake = std::min(fake, n - std::min(dishonest, n));
    std::vector<Behavior> out(n, Behavior::Honest);
    std::fill_n(out.begin(), std::min(dishonest, n), Behavior::Dishonest);
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(std::min(dishonest, n)), fake, Behavior::FakeTrr);
    SplitMix64 g(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(out[i - 1], out[pick(g)]);
    }
    return out;
}

namespace {

constexpr std::uint64_t kBehaviorStream = 0xbe4a;

// Behaviour assignment draws from its own domain so that it never shares a
// stream with trial t = kBehaviorStream.
std::uint64_t behavior_seed(std::uint64_t seed)
{
    return derive_seed(mix64(seed), kBehaviorStream);
}
constexpr std::uint64_t kTicksPerRoute = 16;

Endpoint fast_endpoint(std::size_t i)
{
    return {wire::Ipv4{0x0a000000u + static_cast<std::uint32_t>(i) + 1}, 8333};
}

} // namespace

analytics::Estimate estimate_srtr(const SimConfig& cfg)
{
    cfg.validate();
    auto behaviors = assign_behaviors(cfg.n_nodes, cfg.dishonest_rate, cfg.fake_rate,
                                      behavior_seed(cfg.seed));
    std::uint64_t successes = 0;
    for (std::uint64_t t = 0; t < cfg.trials; ++t) {
        SplitMix64 g(derive_seed(cfg.seed, t));
        bool released = false;
        for (unsigned j = 0; j < cfg.num_routes; ++j) {
            auto route = sample_route_indices(cfg.n_nodes, cfg.hops, g);
            bool clean = std::none_of(route.begin(), route.end(),
                                      [&](std::size_t i) { return behaviors[i] == Behavior::Dishonest; });
            released = released || clean;
        }
        successes += released;
    }
    return analytics::Estimate::from_counts(successes, cfg.trials);
}

analytics::Estimate estimate_srd(const SimConfig& cfg)
{
    cfg.validate();
    auto behaviors = assign_behaviors(cfg.n_nodes, cfg.dishonest_rate, cfg.fake_rate,
                                      behavior_seed(cfg.seed));
    // The client sits outside the sampled pool.
    const Endpoint client = fast_endpoint(cfg.n_nodes);
    AttackLedger ledger;
    std::uint64_t successes = 0;
    for (std::uint64_t t = 0; t < cfg.trials; ++t) {
        SplitMix64 g(derive_seed(cfg.seed, t));
        ledger.clear();
        Bytes tx(8);
        for (int k = 0; k < 8; ++k) tx[k] = static_cast<std::uint8_t>(t >> (8 * k));

        for (unsigned j = 0; j < cfg.num_routes; ++j) {
            auto route = sample_route_indices(cfg.n_nodes, cfg.hops, g);
            for (std::size_t k = 0; k < route.size(); ++k) {
                if (behaviors[route[k]] != Behavior::FakeTrr) continue;
                LedgerEntry e;
                e.observer = fast_endpoint(route[k]);
                e.previous = k == 0 ? client : fast_endpoint(route[k - 1]);
                if (k + 1 < route.size()) e.next = fast_endpoint(route[k + 1]);
                else e.tx = tx;
                e.tick = j * kTicksPerRoute + k + 1;
                ledger.record(std::move(e));
            }
        }
        bool hit = false;
        for (const auto& rec : ledger.reconstruct()) {
            hit = hit || (rec.claimed_client == client && rec.tx == tx);
        }
        successes += hit;
    }
    return analytics::Estimate::from_counts(successes, cfg.trials);
}

// ---------------------------------------------------------------------------
// AttackLedger

void AttackLedger::record(LedgerEntry entry)
{
    entries_.push_back(std::move(entry));
}

const LedgerEntry* AttackLedger::find(const Endpoint& observer, std::uint64_t tick) const
{
    for (const auto& e : entries_) {
        if (e.tick == tick && e.observer == observer) return &e;
    }
    return nullptr;
}

const LedgerEntry* AttackLedger::find_with_next(const Endpoint& next, std::uint64_t tick) const
{
    for (const auto& e : entries_) {
        if (e.tick == tick && e.next == next) return &e;
    }
    return nullptr;
}

std::vector<Reconstruction> AttackLedger::reconstruct() const
{
    std::vector<Reconstruction> out;
    for (const auto& release : entries_) {
        if (!release.tx) continue;
        Reconstruction rec;
        rec.tx = *release.tx;
        rec.route.push_back(release.observer);
        const LedgerEntry* cur = &release;
        while (true) {
            const Endpoint& prev = cur->previous;
            const LedgerEntry* up = cur->tick >= 1 ? find(prev, cur->tick - 1) : nullptr;
            if (up && up->next == cur->observer) {
                rec.route.push_back(prev);
                cur = up;
                continue;
            }
            const LedgerEntry* skip = cur->tick >= 2 ? find_with_next(prev, cur->tick - 2) : nullptr;
            if (skip) {
                rec.route.push_back(prev);
                rec.route.push_back(skip->observer);
                cur = skip;
                continue;
            }
            rec.claimed_client = prev;
            break;
        }
        std::reverse(rec.route.begin(), rec.route.end());
        out.push_back(std::move(rec));
    }
    return out;
}

bool AttackLedger::links(const Endpoint& client, ByteView tx) const
{
    return std::any_of(entries_.begin(), entries_.end(), [&](const LedgerEntry& e) {
        return e.previous == client && e.tx && std::ranges::equal(*e.tx, tx);
    });
}

// ---------------------------------------------------------------------------
// Sybil

void SybilObserver::observe(const TxId& txid, std::size_t node, std::uint64_t tick)
{
    log_.push_back({txid, node, tick});
}

std::size_t sybil_first_spreader(const std::vector<SybilRecord>& log, const TxId& txid)
{
    const SybilRecord* best = nullptr;
    for (const auto& r : log) {
        if (r.txid != txid) continue;
        if (!best || r.tick < best->tick || (r.tick == best->tick && r.node < best->node)) best = &r;
    }
    if (!best) throw Error(ErrorCode::NotObserved, "transaction " + to_hex(txid) + " never announced");
    return best->node;
}

// ---------------------------------------------------------------------------
// SimNetwork

class SimNetwork::Chain : public BroadcastView {
public:
    explicit Chain(SimNetwork& sim) : sim_(sim) {}

    bool seen(const TxId& txid) const override { return seen_.contains(txid); }
    bool verify(ByteView tx) const override { return !tx.empty() && tx.size() <= wire::kMaxTxSize; }

    void broadcast(ByteView tx, wire::Ipv4 origin) override
    {
        TxId id = txid_of(tx);
        if (!seen_.insert(id).second) return;
        std::size_t from = sim_.index_of(origin);
        sim_.sybil_.observe(id, from, sim_.tick_);
        // Gossip reaches a few peers one tick later.
        for (std::size_t k = 0; k < kGossipFanout && sim_.size() > 1; ++k) {
            std::uniform_int_distribution<std::size_t> pick(0, sim_.size() - 1);
            std::size_t peer = pick(sim_.rng_);
            if (peer != from) sim_.sybil_.observe(id, peer, sim_.tick_ + 1);
        }
    }

private:
    SimNetwork& sim_;
    std::set<TxId> seen_;
};

class SimNetwork::Clock : public BlockClock {
public:
    explicit Clock(SimNetwork& sim) : sim_(sim) {}
    std::uint64_t height() override { return sim_.height(); }
    void wait_until(std::uint64_t target) override { sim_.advance_to_height(target); }

private:
    SimNetwork& sim_;
};

class SimNetwork::TickSink : public EventSink {
public:
    explicit TickSink(SimNetwork& sim) : sim_(sim) {}
    void emit(const Event& event) override
    {
        Event e = event;
        e.detail["tick"] = sim_.tick_ + sim_.net_.depth();
        sim_.sink_->emit(e);
    }

private:
    SimNetwork& sim_;
};

SimNetwork::SimNetwork(const SimConfig& cfg)
    : cfg_(cfg),
      sink_(std::make_unique<MemorySink>()),
      tick_sink_(std::make_unique<TickSink>(*this)),
      chain_(std::make_unique<Chain>(*this)),
      clock_(std::make_unique<Clock>(*this)),
      rng_(derive_seed(cfg.seed, 0x5e7))
{
    cfg_.validate();
    behaviors_ = assign_behaviors(cfg_.n_nodes, cfg_.dishonest_rate, cfg_.fake_rate,
                                  behavior_seed(cfg_.seed));
    static constexpr Misbehavior kModes[] = {Misbehavior::DenyConnection, Misbehavior::DropData,
                                             Misbehavior::NoRelease, Misbehavior::WrongPubkey};

    for (std::size_t i = 0; i < cfg_.n_nodes; ++i) {
        SplitMix64 kg(derive_seed(cfg_.seed, 0x10000000 + i));
        ec::KeyPair keys = ec::keygen(kg);
        Endpoint ep = fast_endpoint(i);
        NodeDescriptor d{"n" + std::to_string(i), ep.ip, ep.port, keys.public_key};
        by_ip_[ep.ip.value] = i;

        NodeOptions opts;
        if (behaviors_[i] == Behavior::Dishonest) {
            opts.misbehavior = cfg_.dishonest_mode == Misbehavior::None ? kModes[i % 4] : cfg_.dishonest_mode;
        }
        auto node = std::make_unique<TrrNode>(keys, d, *chain_, derive_seed(cfg_.seed, 0x20000000 + i), opts);
        if (opts.misbehavior == Misbehavior::WrongPubkey) {
            d.pubkey = ec::keygen(kg).public_key;
        }
        directory_.push_back(d);

        node->set_event_sink(tick_sink_.get());
        const bool fake = behaviors_[i] == Behavior::FakeTrr;
        node->set_observer([this, fake](const Observation& o) {
            std::size_t depth = net_.depth();
            if (depth == 1) ++route_seq_;
            if (o.next && o.tx) plaintext_leaks_.push_back(o);
            if (fake) ledger_.record({o.self, o.previous, o.next, route_seq_ * kTicksPerRoute + depth, o.tx});
        });

        auto svc = std::make_unique<NodeService>(*node, net_.dialer_for(ep),
                                                 [this] { return 1500000000u + static_cast<std::uint32_t>(tick_); });
        net_.attach(*svc);
        nodes_.push_back(std::move(node));
        services_.push_back(std::move(svc));
    }
}

SimNetwork::~SimNetwork() = default;

std::size_t SimNetwork::index_of(wire::Ipv4 ip) const
{
    auto it = by_ip_.find(ip.value);
    if (it == by_ip_.end()) throw Error(ErrorCode::InvalidArgument, "unknown address " + ip.to_string());
    return it->second;
}

void SimNetwork::advance_to_height(std::uint64_t h)
{
    while (height() < h) {
        tick_ = (height() + 1) * kTicksPerBlock;
        for (auto& s : services_) s->on_new_block(height());
    }
}

TraceReport SimNetwork::run_end_to_end(ByteView tx)
{
    std::vector<std::size_t> honest;
    for (std::size_t i = 0; i < behaviors_.size(); ++i) {
        if (behaviors_[i] == Behavior::Honest) honest.push_back(i);
    }
    std::size_t client = 0;
    if (!honest.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, honest.size() - 1);
        client = honest[pick(rng_)];
    }
    SendPolicy policy;
    policy.num_routes = cfg_.num_routes;
    policy.hops = cfg_.hops;
    return run_end_to_end(tx, client, policy);
}

TraceReport SimNetwork::run_end_to_end(ByteView tx, std::size_t client, const SendPolicy& policy)
{
    const std::size_t first_event = sink_->events().size();
    const std::size_t first_sybil = sybil_.log().size();

    SplitMix64 client_rng(derive_seed(cfg_.seed, 0x30000000 + sends_++));
    TraceReport report;
    report.client = client;
    report.send = client_send(tx, directory_, policy, net_.dialer_for(endpoint_of(directory_[client])),
                              *clock_, *chain_, client_rng,
                              1500000000u + static_cast<std::uint32_t>(tick_), directory_[client].node_id);
    advance_to_height(height() + wire::kMaxReleaseDelay);

    for (const auto& a : report.send.attempts) {
        report.releasing_nodes.push_back(index_of(a.hops.back().ip));
    }
    auto events = sink_->events();
    report.events.assign(events.begin() + static_cast<std::ptrdiff_t>(first_event), events.end());
    report.sybil.assign(sybil_.log().begin() + static_cast<std::ptrdiff_t>(first_sybil), sybil_.log().end());
    for (const auto& r : report.sybil) {
        if (r.txid != report.send.txid) continue;
        if (!report.release_tick || r.tick < *report.release_tick) report.release_tick = r.tick;
    }
    return report;
}

void SimNetwork::direct_broadcast(ByteView tx, std::size_t client)
{
    chain_->broadcast(tx, directory_.at(client).ip);
}

void SimNetwork::check_invariants() const
{
    if (!plaintext_leaks_.empty()) {
        throw std::logic_error("transaction plaintext observed at forwarding hop " +
                               plaintext_leaks_.front().self.to_string());
    }
    // A node may hold several copies of one transaction (one per route that
    // reached it), each with its own release height.
    std::map<std::pair<std::string, std::string>, std::multiset<std::uint64_t>> pending;
    std::map<std::string, int> released;
    std::map<std::string, long> received, forwarded;
    for (const auto& e : sink_->events()) {
        if (e.kind == "enqueued") {
            pending[{e.node, e.detail["txid"]}].insert(e.detail["release_height"].get<std::uint64_t>());
        } else if (e.kind == "released" || e.kind == "duplicate" || e.kind == "invalid") {
            std::string txid = e.detail["txid"];
            std::uint64_t h = e.detail["height"];
            auto& heights = pending[{e.node, txid}];
            if (heights.empty() || h < *heights.begin()) {
                throw std::logic_error(e.node + " released " + txid + " early at height " + std::to_string(h));
            }
            heights.erase(heights.begin());
            if (e.kind == "released" && ++released[txid] > 1) {
                throw std::logic_error("transaction " + txid + " released twice");
            }
        } else if (e.kind == "received") {
            ++received[e.node];
        } else if (e.kind == "forwarded") {
            if (++forwarded[e.node] > received[e.node]) {
                throw std::logic_error(e.node + " forwarded more requests than it received");
            }
        }
    }
}

std::string TraceReport::to_json_lines() const
{
    std::string out;
    nlohmann::json head = to_json(send);
    head["type"] = "send";
    head["client"] = client;
    head["releasing_nodes"] = releasing_nodes;
    head["release_tick"] = release_tick ? nlohmann::json(*release_tick) : nlohmann::json(nullptr);
    out += head.dump() + '\n';
    for (const auto& e : events) {
        nlohmann::json j = to_json(e);
        j["type"] = "event";
        out += j.dump() + '\n';
    }
    for (const auto& r : sybil) {
        out += nlohmann::json{{"type", "sybil"}, {"txid", to_hex(r.txid)}, {"node", r.node}, {"tick", r.tick}}.dump() + '\n';
    }
    return out;
}

} // namespace trr::sim
