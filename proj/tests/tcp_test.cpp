#include "test_util.hpp"
#include "trr/tcp.hpp"

#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

using namespace trr;

namespace {

const wire::Ipv4 kLoopback{0x7f000001};

struct TcpCluster {
    std::mt19937_64 gen{21};
    MemoryBroadcast chain;
    TcpDialer dialer;
    std::vector<trr::testing::TestNode> keys;
    std::vector<std::unique_ptr<TrrNode>> nodes;
    std::vector<std::unique_ptr<NodeService>> services;
    std::vector<std::unique_ptr<TcpServer>> servers;

    TcpCluster(std::size_t n, std::vector<Misbehavior> faults = {})
    {
        keys = trr::testing::make_nodes(n, gen);
        for (std::size_t i = 0; i < n; ++i) {
            NodeOptions o;
            o.hop_timeout = Millis{2000};
            if (i < faults.size()) o.misbehavior = faults[i];
            auto& d = keys[i].descriptor;
            d.ip = kLoopback;
            d.port = free_port();
            nodes.push_back(std::make_unique<TrrNode>(keys[i].keys, d, chain, i, o));
            services.push_back(std::make_unique<NodeService>(*nodes.back(), dialer));
            servers.push_back(std::make_unique<TcpServer>(*services.back(), "127.0.0.1", d.port, Millis{2000}));
            servers.back()->start();
        }
    }

    // Asks the kernel for an unused port.
    static std::uint16_t free_port()
    {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        sockaddr_in sa{};
        sa.sin_family = AF_INET;
        sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        ::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa);
        socklen_t len = sizeof sa;
        ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
        ::close(fd);
        return ntohs(sa.sin_port);
    }
};

} // namespace

TEST(Tcp, RoundTripOverLoopback)
{
    TcpCluster c(3);
    auto dir = trr::testing::directory_of(c.keys);
    ec::KeyPair ret = ec::keygen_even(c.gen);
    Route r{{dir[0], dir[1], dir[2]}};
    Bytes tx{1, 2, 3, 4, 5};
    auto onion = build_onion(tx, r, 2, ret, 0, c.gen);

    auto conn = c.dialer.connect(endpoint_of(dir[0]), Millis{2000});
    ASSERT_TRUE(conn);
    handshake(*conn, Role::Initiator, Millis{2000});
    conn->send({wire::Command::Trr, onion.ciphertext});
    auto reply = conn->receive(Millis{5000});
    ASSERT_TRUE(reply);
    auto ack = decrypt_ack(reply->payload, ret.private_key);
    EXPECT_EQ(ack.error_number, 0);
    EXPECT_EQ(ack.rpt_ip, kLoopback);
    EXPECT_EQ(c.nodes[2]->pool_size(), 1u);
    c.services[2]->on_new_block(1);
    c.services[2]->on_new_block(2);
    EXPECT_TRUE(c.chain.seen(txid_of(tx)));
}

TEST(Tcp, DenyingNodeRefusesConnections)
{
    TcpCluster c(2, {Misbehavior::None, Misbehavior::DenyConnection});
    auto dir = trr::testing::directory_of(c.keys);
    EXPECT_EQ(c.dialer.connect(endpoint_of(dir[1]), Millis{500}), nullptr);

    ec::KeyPair ret = ec::keygen_even(c.gen);
    auto onion = build_onion(Bytes{9}, Route{{dir[0], dir[1]}}, 1, ret, 0, c.gen);
    auto conn = c.dialer.connect(endpoint_of(dir[0]), Millis{2000});
    ASSERT_TRUE(conn);
    handshake(*conn, Role::Initiator, Millis{2000});
    conn->send({wire::Command::Trr, onion.ciphertext});
    auto reply = conn->receive(Millis{5000});
    ASSERT_TRUE(reply);
    auto ack = decrypt_ack(reply->payload, ret.private_key);
    EXPECT_EQ(ack.error_number, static_cast<int>(wire::AckErrno::ConnectionRefused));
    EXPECT_EQ(ack.err_ip, kLoopback);
}

TEST(Tcp, GarbageIsDropped)
{
    TcpCluster c(1);
    auto dir = trr::testing::directory_of(c.keys);
    auto conn = c.dialer.connect(endpoint_of(dir[0]), Millis{2000});
    ASSERT_TRUE(conn);
    conn->send({wire::Command::Track, {1, 2}});
    EXPECT_FALSE(conn->receive(Millis{2000}));
}
