#pragma once

#include "trr/elgamal.hpp"
#include "trr/wire.hpp"

#include <algorithm>
#include <concepts>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace trr {

inline constexpr std::size_t kMaxHops = 10;
inline constexpr std::size_t kMaxRoutes = 3;

struct NodeDescriptor {
    std::string node_id;
    wire::Ipv4 ip;
    std::uint16_t port = 0;
    ec::CurvePoint pubkey;

    friend bool operator==(const NodeDescriptor&, const NodeDescriptor&) = default;
};

struct Route {
    std::vector<NodeDescriptor> hops;

    const NodeDescriptor& starting_node() const { return hops.front(); }
    const NodeDescriptor& releasing_node() const { return hops.back(); }
};

struct OnionPacket {
    Bytes ciphertext;
};

/// Draws `hops` distinct indices from [0, pool) in uniformly random order.
/// Throws InsufficientNodes when pool < hops.
template <std::uniform_random_bit_generator G>
std::vector<std::size_t> sample_route_indices(std::size_t pool, std::size_t hops, G& gen)
{
    if (pool < hops) {
        throw Error(ErrorCode::InsufficientNodes, "directory has " + std::to_string(pool) +
                                                      " nodes, route needs " +
                                                      std::to_string(hops));
    }
    std::vector<std::size_t> out;
    out.reserve(hops);
    if (hops * 4 <= pool) {
        // Sparse draw: rejection on duplicates.
        std::uniform_int_distribution<std::size_t> pick(0, pool - 1);
        while (out.size() < hops) {
            std::size_t i = pick(gen);
            if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
        }
        return out;
    }
    // Dense draw: partial Fisher-Yates.
    std::vector<std::size_t> all(pool);
    for (std::size_t i = 0; i < pool; ++i) all[i] = i;
    for (std::size_t i = 0; i < hops; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool - 1);
        std::swap(all[i], all[pick(gen)]);
        out.push_back(all[i]);
    }
    return out;
}

/// Independent random routes over the directory, skipping `exclude_id` (the client).
/// Hops within a route are distinct; different routes may overlap.
template <std::uniform_random_bit_generator G>
std::vector<Route> select_routes(std::span<const NodeDescriptor> directory, std::size_t num_routes,
                                 std::size_t hops_per_route, G& gen,
                                 std::string_view exclude_id = {})
{
    if (num_routes == 0 || hops_per_route == 0 || hops_per_route > kMaxHops) {
        throw Error(ErrorCode::InvalidArgument, "routes must be >= 1 and hops in [1, 10]");
    }
    std::vector<const NodeDescriptor*> candidates;
    candidates.reserve(directory.size());
    for (const auto& d : directory) {
        if (exclude_id.empty() || d.node_id != exclude_id) candidates.push_back(&d);
    }
    std::vector<Route> routes(num_routes);
    for (auto& route : routes) {
        for (std::size_t idx : sample_route_indices(candidates.size(), hops_per_route, gen)) {
            route.hops.push_back(*candidates[idx]);
        }
    }
    return routes;
}

/// 32-byte form of an even-y return key as carried in trr_routing.
std::array<std::uint8_t, 32> return_key_bytes(const ec::CurvePoint& even_pubkey);
/// Inverse of return_key_bytes; nullopt if the bytes are not a valid abscissa.
std::optional<ec::CurvePoint> parse_return_key(const std::array<std::uint8_t, 32>& bytes);

/// Deterministic core of build_onion: layer i is encrypted with ephemerals[i],
/// where layer 0 is the outermost (starting node).
OnionPacket build_onion_with_ephemerals(ByteView tx, const Route& route, std::uint64_t release_delay,
                                        const ec::CurvePoint& return_pubkey, std::uint32_t now,
                                        std::span<const ec::Scalar> ephemerals);

/// Wraps the transaction for the releasing node, then each earlier hop's
/// routing header around the previous ciphertext, encrypting to each hop in
/// reverse route order. The return key must have even y.
template <std::uniform_random_bit_generator G>
OnionPacket build_onion(ByteView tx, const Route& route, std::uint64_t release_delay,
                        const ec::KeyPair& return_keypair, std::uint32_t now, G& gen)
{
    std::vector<ec::Scalar> ephemerals;
    ephemerals.reserve(route.hops.size());
    for (std::size_t i = 0; i < route.hops.size(); ++i) {
        ephemerals.push_back(ec::random_scalar(gen));
    }
    return build_onion_with_ephemerals(tx, route, release_delay, return_keypair.public_key, now,
                                       ephemerals);
}

struct Forward {
    wire::Ipv4 next_ip;
    std::uint16_t next_port = 0;
    Bytes remaining;
    std::optional<ec::CurvePoint> return_pubkey;
};

struct Release {
    wire::TrrData data;
    std::optional<ec::CurvePoint> return_pubkey;
};

using PeelResult = std::variant<Forward, Release>;

/// Removes one layer. Throws MalformedCipher when the packet is not a cipher
/// stream and MalformedRouting when the decrypted layer does not decode (wrong
/// key or corruption).
PeelResult peel_layer(ByteView packet, const ec::Scalar& node_private);

template <std::uniform_random_bit_generator G>
Bytes encrypt_ack(const wire::TrrAck& ack, const ec::CurvePoint& return_pubkey, G& gen)
{
    return ec::seal(wire::encode(ack), return_pubkey, gen);
}

/// Throws MalformedCipher when the bytes do not decrypt to a 45-byte ack.
wire::TrrAck decrypt_ack(ByteView ciphertext, const ec::Scalar& return_private);

} // namespace trr
