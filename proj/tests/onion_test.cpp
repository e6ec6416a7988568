#include "trr/onion.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

namespace trr {
namespace {

using testing::make_nodes;
using testing::random_bytes;

Route route_of(const std::vector<testing::TestNode>& nodes, std::initializer_list<std::size_t> idx)
{
    Route r;
    for (std::size_t i : idx) r.hops.push_back(nodes[i].descriptor);
    return r;
}

const ec::Scalar& key_of(const std::vector<testing::TestNode>& nodes, const NodeDescriptor& d)
{
    for (const auto& n : nodes) {
        if (n.descriptor.node_id == d.node_id) return n.keys.private_key;
    }
    throw std::logic_error("unknown node");
}

TEST(SelectRoutes, SingleThreeHopRouteIsUniformOverOrderings)
{
    std::mt19937_64 gen(51);
    auto nodes = make_nodes(3, gen);
    auto dir = testing::directory_of(nodes);
    std::map<std::string, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        auto routes = select_routes(dir, 1, 3, gen);
        std::string key;
        for (const auto& h : routes[0].hops) key += h.node_id;
        ++counts[key];
    }
    ASSERT_EQ(counts.size(), 6u);
    double chi2 = 0;
    const double expected = draws / 6.0;
    for (const auto& [k, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    // 5 degrees of freedom, 99.9th percentile.
    EXPECT_LT(chi2, 20.515);
}

TEST(SelectRoutes, InsufficientNodes)
{
    std::mt19937_64 gen(52);
    auto dir = testing::directory_of(make_nodes(3, gen));
    try {
        select_routes(dir, 1, 4, gen);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientNodes);
    }
    // Excluding the client shrinks the pool.
    EXPECT_THROW(select_routes(dir, 1, 3, gen, "n2"), Error);
}

TEST(SelectRoutes, RoutesAreIndependentDraws)
{
    std::mt19937_64 gen(53);
    auto dir = testing::directory_of(make_nodes(4, gen));
    // 4P3 = 24 ordered routes; two independent draws coincide with probability 1/24.
    const int trials = 24000;
    int identical = 0;
    for (int i = 0; i < trials; ++i) {
        auto routes = select_routes(dir, 3, 3, gen);
        ASSERT_EQ(routes.size(), 3u);
        for (const auto& r : routes) {
            std::set<std::string> ids;
            for (const auto& h : r.hops) ids.insert(h.node_id);
            ASSERT_EQ(ids.size(), 3u);
        }
        if (routes[0].hops == routes[1].hops) ++identical;
    }
    double p = 1.0 / 24.0;
    double se = std::sqrt(p * (1 - p) / trials);
    EXPECT_NEAR(static_cast<double>(identical) / trials, p, 4 * se);
}

TEST(SelectRoutes, ExcludesClient)
{
    std::mt19937_64 gen(54);
    auto dir = testing::directory_of(make_nodes(6, gen));
    for (int i = 0; i < 200; ++i) {
        for (const auto& r : select_routes(dir, 3, 5, gen, "n4")) {
            for (const auto& h : r.hops) ASSERT_NE(h.node_id, "n4");
        }
    }
}

class OnionTest : public ::testing::Test {
protected:
    std::mt19937_64 gen{55};
    std::vector<testing::TestNode> nodes = make_nodes(12, gen);
    ec::KeyPair ret = ec::keygen_even(gen);
};

TEST_F(OnionTest, SingleHopReleasesImmediately)
{
    Bytes tx = random_bytes(gen, 200);
    OnionPacket p = build_onion(tx, route_of(nodes, {0}), 2, ret, 1234, gen);
    PeelResult r = peel_layer(p.ciphertext, nodes[0].keys.private_key);
    ASSERT_TRUE(std::holds_alternative<Release>(r));
    const auto& rel = std::get<Release>(r);
    EXPECT_EQ(rel.data.tx, tx);
    EXPECT_EQ(rel.data.release_delay, 2u);
    EXPECT_EQ(rel.data.time, 1234u);
    ASSERT_TRUE(rel.return_pubkey.has_value());
    EXPECT_EQ(*rel.return_pubkey, ret.public_key);
}

TEST_F(OnionTest, ThreeHopRoutePeelsInOrder)
{
    // S → A → B → C
    Bytes tx = random_bytes(gen, 300);
    Route route = route_of(nodes, {0, 1, 2});
    OnionPacket p = build_onion(tx, route, 1, ret, 0, gen);

    PeelResult at_a = peel_layer(p.ciphertext, nodes[0].keys.private_key);
    ASSERT_TRUE(std::holds_alternative<Forward>(at_a));
    const auto& fa = std::get<Forward>(at_a);
    EXPECT_EQ(fa.next_ip, nodes[1].descriptor.ip);
    EXPECT_EQ(fa.next_port, nodes[1].descriptor.port);

    PeelResult at_b = peel_layer(fa.remaining, nodes[1].keys.private_key);
    ASSERT_TRUE(std::holds_alternative<Forward>(at_b));
    const auto& fb = std::get<Forward>(at_b);
    EXPECT_EQ(fb.next_ip, nodes[2].descriptor.ip);

    PeelResult at_c = peel_layer(fb.remaining, nodes[2].keys.private_key);
    ASSERT_TRUE(std::holds_alternative<Release>(at_c));
    EXPECT_EQ(std::get<Release>(at_c).data.tx, tx);
}

TEST_F(OnionTest, FiveHopMaxSizeTransactionStaysUnderBound)
{
    Bytes tx = random_bytes(gen, wire::kMaxTxSize);
    OnionPacket p = build_onion(tx, route_of(nodes, {0, 1, 2, 3, 4}), 5, ret, 0, gen);
    EXPECT_LE(static_cast<double>(p.ciphertext.size()), 1.5 * 10240);
    EXPECT_EQ(p.ciphertext.size(), 14623u);
}

TEST_F(OnionTest, WrongKeyYieldsMalformedRouting)
{
    OnionPacket p = build_onion(random_bytes(gen, 100), route_of(nodes, {0, 1}), 1, ret, 0, gen);
    int malformed = 0;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        try {
            peel_layer(p.ciphertext, nodes[i].keys.private_key);
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::MalformedRouting);
            ++malformed;
        }
    }
    EXPECT_EQ(malformed, static_cast<int>(nodes.size() - 1));
}

TEST_F(OnionTest, GarbageIsMalformedCipher)
{
    try {
        peel_layer(random_bytes(gen, 90), nodes[0].keys.private_key);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedCipher);
    }
}

TEST_F(OnionTest, RoundTripOverRandomRoutes)
{
    auto dir = testing::directory_of(nodes);
    std::uniform_int_distribution<std::size_t> hops(1, 10);
    std::uniform_int_distribution<std::size_t> len(0, 600);
    for (int i = 0; i < 1000; ++i) {
        Bytes tx = random_bytes(gen, len(gen));
        Route route = select_routes(dir, 1, hops(gen), gen).front();
        Bytes packet = build_onion(tx, route, 1 + i % 5, ret, 7, gen).ciphertext;
        for (std::size_t h = 0; h < route.hops.size(); ++h) {
            PeelResult r = peel_layer(packet, key_of(nodes, route.hops[h]));
            if (h + 1 < route.hops.size()) {
                ASSERT_TRUE(std::holds_alternative<Forward>(r));
                auto& f = std::get<Forward>(r);
                ASSERT_EQ(f.next_ip, route.hops[h + 1].ip);
                packet = std::move(f.remaining);
            } else {
                ASSERT_TRUE(std::holds_alternative<Release>(r));
                ASSERT_EQ(std::get<Release>(r).data.tx, tx);
            }
        }
    }
}

TEST_F(OnionTest, OnionSizeDependsOnlyOnLengths)
{
    Route a = route_of(nodes, {0, 1, 2});
    Route b = route_of(nodes, {5, 7, 9});
    Bytes zeros(333, 0);
    Bytes noise = random_bytes(gen, 333);
    EXPECT_EQ(build_onion(zeros, a, 1, ret, 0, gen).ciphertext.size(),
              build_onion(noise, b, 4, ret, 99, gen).ciphertext.size());
}

TEST_F(OnionTest, ForwardedBytesShareNoLongSubstringWithReceivedBytes)
{
    Bytes tx = random_bytes(gen, 256);
    Route route = route_of(nodes, {0, 1, 2, 3});
    Bytes received = build_onion(tx, route, 1, ret, 0, gen).ciphertext;
    for (std::size_t h = 0; h + 1 < route.hops.size(); ++h) {
        Bytes forwarded = std::get<Forward>(peel_layer(received, nodes[h].keys.private_key)).remaining;
        std::set<Bytes> windows;
        for (std::size_t i = 0; i + 8 <= received.size(); ++i) {
            windows.emplace(received.begin() + i, received.begin() + i + 8);
        }
        for (std::size_t i = 0; i + 8 <= forwarded.size(); ++i) {
            ASSERT_FALSE(windows.contains(Bytes(forwarded.begin() + i, forwarded.begin() + i + 8)))
                << "hop " << h << " offset " << i;
        }
        received = std::move(forwarded);
    }
}

TEST_F(OnionTest, AckRoundTripAndConstantLength)
{
    wire::TrrAck ack;
    ack.rpt_ip = nodes[2].descriptor.ip;
    std::set<std::size_t> sizes;
    for (int i = 0; i < 10; ++i) {
        ack.time = static_cast<std::uint32_t>(i * 1000);
        Bytes c = encrypt_ack(ack, ret.public_key, gen);
        sizes.insert(c.size());
        EXPECT_EQ(decrypt_ack(c, ret.private_key), ack);
    }
    EXPECT_EQ(sizes.size(), 1u);
    // 45-byte ack + 4-byte prefix = 49 bytes → 2 blocks → 37 + 66.
    EXPECT_EQ(*sizes.begin(), 103u);

    ec::KeyPair other = ec::keygen(gen);
    Bytes c = encrypt_ack(ack, ret.public_key, gen);
    try {
        decrypt_ack(c, other.private_key);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedCipher);
    }
}

TEST(ReturnKey, OddParityRejectedEvenRoundTrips)
{
    std::mt19937_64 gen(56);
    for (int i = 0; i < 100; ++i) {
        ec::KeyPair kp = ec::keygen_even(gen);
        ASSERT_FALSE(mpz_odd_p(kp.public_key.y.get_mpz_t()));
        EXPECT_EQ(parse_return_key(return_key_bytes(kp.public_key)), kp.public_key);
        EXPECT_THROW(return_key_bytes(ec::negate(kp.public_key)), Error);
    }
}

} // namespace
} // namespace trr
