#include "trr/simulator.hpp"

#include <gtest/gtest.h>

using namespace trr;
using namespace trr::sim;

namespace {

SimConfig config(double d, double f, unsigned r, unsigned h, std::uint64_t trials, std::uint64_t seed = 7)
{
    SimConfig c;
    c.dishonest_rate = d;
    c.fake_rate = f;
    c.num_routes = r;
    c.hops = h;
    c.trials = trials;
    c.seed = seed;
    return c;
}

Endpoint ep(std::uint32_t i) { return {wire::Ipv4{i}, 1}; }

// One route of hops 1..h (client is 1000); mask bit k set means hop k is fake.
AttackLedger ledger_for(unsigned h, std::uint32_t mask, const Bytes& tx)
{
    AttackLedger l;
    for (unsigned k = 0; k < h; ++k) {
        if (!((mask >> k) & 1)) continue;
        LedgerEntry e{ep(k + 1), k == 0 ? ep(1000) : ep(k), std::nullopt, k + 1, std::nullopt};
        if (k + 1 < h) e.next = ep(k + 2);
        else e.tx = tx;
        l.record(e);
    }
    return l;
}

bool predicate(unsigned h, std::uint32_t mask)
{
    auto fake = [&](unsigned k) { return (mask >> k) & 1; };
    if (!fake(0) || !fake(h - 1)) return false;
    for (unsigned k = 0; k + 1 < h; ++k) {
        if (!fake(k) && !fake(k + 1)) return false;
    }
    return true;
}

} // namespace

TEST(SimConfig, Validation)
{
    auto expect_invalid = [](SimConfig c) {
        try {
            c.validate();
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
        }
    };
    expect_invalid(config(0.1, 0, 3, 3, 0));
    expect_invalid(config(0.6, 0.5, 3, 3, 10));
    expect_invalid(config(-0.1, 0, 3, 3, 10));
    expect_invalid(config(0.1, 0, 0, 3, 10));
    expect_invalid(config(0.1, 0, 3, 11, 10));
    SimConfig tiny = config(0, 0, 1, 5, 10);
    tiny.n_nodes = 4;
    expect_invalid(tiny);
    EXPECT_THROW(estimate_srtr(config(0, 0, 1, 1, 0)), Error);
}

TEST(Behaviors, ExactQuotas)
{
    auto b = assign_behaviors(6000, 0.1, 0.2, 3);
    EXPECT_EQ(std::count(b.begin(), b.end(), Behavior::Dishonest), 600);
    EXPECT_EQ(std::count(b.begin(), b.end(), Behavior::FakeTrr), 1200);
    EXPECT_EQ(b, assign_behaviors(6000, 0.1, 0.2, 3));
    EXPECT_NE(b, assign_behaviors(6000, 0.1, 0.2, 4));
}

TEST(Ledger, ReconstructionMatchesPredicate)
{
    const Bytes tx{7, 7, 7};
    for (unsigned h = 1; h <= 10; ++h) {
        for (std::uint32_t mask = 0; mask < (1u << h); ++mask) {
            auto ledger = ledger_for(h, mask, tx);
            bool hit = false;
            for (const auto& rec : ledger.reconstruct()) {
                hit = hit || (rec.claimed_client == ep(1000) && rec.tx == tx);
                if (rec.claimed_client == ep(1000)) {
                    ASSERT_EQ(rec.route.size(), h);
                    for (unsigned k = 0; k < h; ++k) EXPECT_EQ(rec.route[k], ep(k + 1));
                }
            }
            ASSERT_EQ(hit, predicate(h, mask)) << "h=" << h << " mask=" << mask;
            if (!hit) {
                EXPECT_FALSE(ledger.links(ep(1000), tx));
            }
        }
    }
}

TEST(Ledger, HonestStartIsMistakenForClient)
{
    auto ledger = ledger_for(3, 0b110, Bytes{1});
    auto recs = ledger.reconstruct();
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].claimed_client, ep(1));
}

TEST(Estimate, SrtrTrivialAndDeterministic)
{
    auto all_honest = estimate_srtr(config(0, 0, 2, 4, 2000));
    EXPECT_EQ(all_honest.rate, 1.0);
    auto a = estimate_srtr(config(0.2, 0, 2, 3, 5000, 11));
    auto b = estimate_srtr(config(0.2, 0, 2, 3, 5000, 11));
    EXPECT_EQ(a.successes, b.successes);
    auto c = estimate_srtr(config(0.2, 0, 2, 3, 5000, 12));
    EXPECT_NE(a.successes, c.successes);
}

TEST(Estimate, SrtrPaperExamples)
{
    auto e = estimate_srtr(config(0.1, 0, 2, 2, 100000));
    EXPECT_NEAR(e.rate, 0.9636, 0.005);
    auto f = estimate_srtr(config(0.3, 0, 3, 5, 100000));
    EXPECT_NEAR(f.rate, 0.424, 0.005);
}

TEST(Estimate, SrdExamples)
{
    EXPECT_EQ(estimate_srd(config(0, 1.0, 2, 4, 500)).rate, 1.0);
    EXPECT_EQ(estimate_srd(config(0, 0.0, 2, 4, 500)).rate, 0.0);
    EXPECT_NEAR(estimate_srd(config(0, 0.1, 3, 2, 100000)).rate, 0.0297, 0.003);
    EXPECT_NEAR(estimate_srd(config(0, 0.3, 3, 4, 100000)).rate, 0.131, 0.005);
}

TEST(Estimate, AgreesWithClosedFormSpotCheck)
{
    for (unsigned h : {2u, 5u}) {
        auto s = estimate_srtr(config(0.2, 0, 2, h, 40000, h));
        EXPECT_LT(s.z_score(analytics::srtr_closed_form(0.2, h, 2)), 3.0);
        auto d = estimate_srd(config(0, 0.2, 2, h, 40000, h));
        EXPECT_LT(d.z_score(analytics::srd_closed_form(0.2, h, 2)), 3.0);
    }
}

TEST(Network, HonestSendReleasesAfterOneBlock)
{
    SimConfig c = config(0, 0, 3, 3, 1);
    c.n_nodes = 40;
    SimNetwork net(c);
    SendPolicy policy;
    policy.delays = {1, 1, 1};
    Bytes tx{0xde, 0xad};
    auto trace = net.run_end_to_end(tx, 5, policy);
    ASSERT_TRUE(trace.send.released());
    EXPECT_EQ(trace.send.rounds, 1);
    ASSERT_TRUE(trace.release_tick);
    EXPECT_EQ(*trace.release_tick, (trace.send.first_dispatch_height + 1) * SimNetwork::kTicksPerBlock);

    std::size_t first = sybil_first_spreader(trace.sybil, trace.send.txid);
    EXPECT_NE(first, 5u);
    EXPECT_NE(std::find(trace.releasing_nodes.begin(), trace.releasing_nodes.end(), first),
              trace.releasing_nodes.end());

    long released = 0, dup = 0;
    for (const auto& e : trace.events) {
        released += e.kind == "released";
        dup += e.kind == "duplicate";
    }
    EXPECT_EQ(released, 1);
    EXPECT_EQ(dup, 2);
    net.check_invariants();

    std::string lines = trace.to_json_lines();
    EXPECT_EQ(nlohmann::json::parse(lines.substr(0, lines.find('\n')))["status"], "released");
}

TEST(Network, LongestDelayGovernsRelease)
{
    SimConfig c = config(0, 0, 3, 2, 1);
    c.n_nodes = 30;
    SimNetwork net(c);
    auto trace = net.run_end_to_end(Bytes{1, 2, 3}, 0);
    ASSERT_TRUE(trace.send.released());
    // Delays 1, 3, 5: the first route releases after one block.
    EXPECT_EQ(*trace.release_tick, (trace.send.first_dispatch_height + 1) * SimNetwork::kTicksPerBlock);
    net.check_invariants();
}

TEST(Network, AllDishonestGivesUp)
{
    SimConfig c = config(1.0, 0, 3, 3, 1);
    c.n_nodes = 20;
    SimNetwork net(c);
    auto trace = net.run_end_to_end(Bytes{9, 9}, 0);
    EXPECT_EQ(trace.send.status, SendStatus::GaveUp);
    EXPECT_EQ(trace.send.rounds, 3);
    EXPECT_THROW(sybil_first_spreader(trace.sybil, trace.send.txid), Error);
    net.check_invariants();
}

TEST(Network, EveryDishonestModeBreaksItsRoute)
{
    for (auto mode : {Misbehavior::DenyConnection, Misbehavior::DropData, Misbehavior::NoRelease,
                      Misbehavior::WrongPubkey}) {
        SimConfig c = config(0.4, 0, 1, 3, 1, 21);
        c.n_nodes = 20;
        c.dishonest_mode = mode;
        SimNetwork net(c);
        SendPolicy policy;
        policy.num_routes = 1;
        policy.max_rounds = 1;
        int clean_routes = 0, dirty_routes = 0;
        for (std::uint8_t i = 0; i < 30; ++i) {
            std::size_t client = 0;
            while (net.behavior(client) != Behavior::Honest) ++client;
            auto trace = net.run_end_to_end(Bytes{i, 0x55}, client, policy);
            ASSERT_EQ(trace.send.attempts.size(), 1u);
            bool clean = true;
            for (const auto& hop : trace.send.attempts[0].hops) {
                clean = clean && net.behavior(net.index_of(hop.ip)) != Behavior::Dishonest;
            }
            (clean ? clean_routes : dirty_routes)++;
            EXPECT_EQ(trace.send.released(), clean) << "mode " << static_cast<int>(mode);
            if (!clean && mode == Misbehavior::WrongPubkey) {
                bool undecryptable = false;
                for (const auto& e : trace.events) undecryptable = undecryptable || e.kind == "undecryptable";
                EXPECT_TRUE(undecryptable);
            }
        }
        EXPECT_GT(clean_routes, 0);
        EXPECT_GT(dirty_routes, 0);
        net.check_invariants();
    }
}

TEST(Network, FakeNodesDeanonymizeOnlyFullChains)
{
    SimConfig c = config(0, 0.5, 1, 3, 1, 5);
    c.n_nodes = 16;
    SimNetwork net(c);
    SendPolicy policy;
    policy.num_routes = 1;
    policy.delays = {1};
    int hits = 0;
    for (std::uint8_t i = 0; i < 40; ++i) {
        std::size_t client = 0;
        while (net.behavior(client) == Behavior::FakeTrr) ++client;
        Bytes tx{i, 0x77};
        auto before = net.ledger().entries().size();
        auto trace = net.run_end_to_end(tx, client, policy);
        ASSERT_TRUE(trace.send.released());

        AttackLedger mine;
        for (std::size_t k = before; k < net.ledger().entries().size(); ++k) mine.record(net.ledger().entries()[k]);
        Endpoint who = endpoint_of(net.directory()[client]);
        bool hit = false;
        for (const auto& rec : mine.reconstruct()) hit = hit || (rec.claimed_client == who && rec.tx == tx);

        std::uint32_t mask = 0;
        const auto& hops = trace.send.attempts[0].hops;
        for (unsigned k = 0; k < hops.size(); ++k) {
            if (net.behavior(net.index_of(hops[k].ip)) == Behavior::FakeTrr) mask |= 1u << k;
        }
        EXPECT_EQ(hit, predicate(3, mask));
        if (!hit) EXPECT_FALSE(mine.links(who, tx));
        hits += hit;
    }
    EXPECT_GT(hits, 0);
    net.check_invariants();
}

TEST(Sybil, DirectBroadcastExposesSender)
{
    SimConfig c = config(0, 0, 1, 1, 1);
    c.n_nodes = 50;
    SimNetwork net(c);
    for (std::size_t i = 0; i < 50; i += 7) {
        Bytes tx{static_cast<std::uint8_t>(i), 1};
        net.direct_broadcast(tx, i);
        EXPECT_EQ(sybil_first_spreader(net.sybil().log(), txid_of(tx)), i);
    }
}

TEST(Sybil, TieGoesToLowestNode)
{
    TxId id{};
    std::vector<SybilRecord> log{{id, 9, 5}, {id, 4, 5}, {id, 2, 6}};
    EXPECT_EQ(sybil_first_spreader(log, id), 4u);
    id[0] = 1;
    try {
        sybil_first_spreader(log, id);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotObserved);
    }
}

TEST(Network, DeterministicTraces)
{
    SimConfig c = config(0.2, 0.2, 3, 3, 1, 99);
    c.n_nodes = 30;
    std::string a, b;
    {
        SimNetwork net(c);
        for (std::uint8_t i = 0; i < 5; ++i) a += net.run_end_to_end(Bytes{i}).to_json_lines();
    }
    {
        SimNetwork net(c);
        for (std::uint8_t i = 0; i < 5; ++i) b += net.run_end_to_end(Bytes{i}).to_json_lines();
    }
    EXPECT_EQ(a, b);
}
