#include "trr/onion.hpp"

namespace trr {

std::array<std::uint8_t, 32> return_key_bytes(const ec::CurvePoint& even_pubkey)
{
    if (even_pubkey.infinity || mpz_odd_p(even_pubkey.y.get_mpz_t())) {
        throw Error(ErrorCode::InvalidKey, "return key must be a finite point with even y");
    }
    return ec::to_big_endian(even_pubkey.x);
}

std::optional<ec::CurvePoint> parse_return_key(const std::array<std::uint8_t, 32>& bytes)
{
    return ec::lift_x(ec::from_big_endian(bytes), false);
}

OnionPacket build_onion_with_ephemerals(ByteView tx, const Route& route, std::uint64_t release_delay,
                                        const ec::CurvePoint& return_pubkey, std::uint32_t now,
                                        std::span<const ec::Scalar> ephemerals)
{
    if (route.hops.empty() || route.hops.size() > kMaxHops) {
        throw Error(ErrorCode::InvalidArgument, "route must have 1 to 10 hops");
    }
    if (ephemerals.size() != route.hops.size()) {
        throw Error(ErrorCode::InvalidArgument, "one ephemeral scalar per hop is required");
    }

    wire::TrrData data;
    data.time = now;
    data.release_delay = release_delay;
    data.tx.assign(tx.begin(), tx.end());

    wire::TrrRouting layer;
    layer.return_pubkey = return_key_bytes(return_pubkey);
    layer.payload = wire::encode(data);

    Bytes cipher;
    for (std::size_t i = route.hops.size(); i-- > 0;) {
        if (i + 1 < route.hops.size()) {
            layer.dst_ip = route.hops[i + 1].ip;
            layer.port = route.hops[i + 1].port;
            layer.payload = std::move(cipher);
        }
        cipher = ec::serialize(
            ec::encrypt_with_ephemeral(wire::encode(layer), route.hops[i].pubkey, ephemerals[i]));
    }
    return OnionPacket{std::move(cipher)};
}

PeelResult peel_layer(ByteView packet, const ec::Scalar& node_private)
{
    ec::CipherStream stream = ec::deserialize(packet);

    wire::TrrRouting routing;
    try {
        routing = wire::decode_trr_routing(ec::decrypt(stream, node_private));
    } catch (const Error& e) {
        throw Error(ErrorCode::MalformedRouting, std::string("layer does not decode: ") + e.what());
    }

    auto return_pubkey = parse_return_key(routing.return_pubkey);
    if (!routing.is_release()) {
        return Forward{routing.dst_ip, routing.port, std::move(routing.payload), return_pubkey};
    }
    try {
        return Release{wire::decode_trr_data(routing.payload), return_pubkey};
    } catch (const Error& e) {
        throw Error(ErrorCode::MalformedRouting, std::string("trr_data does not decode: ") + e.what());
    }
}

wire::TrrAck decrypt_ack(ByteView ciphertext, const ec::Scalar& return_private)
{
    try {
        return wire::decode_trr_ack(ec::open(ciphertext, return_private));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedCipher) throw;
        throw Error(ErrorCode::MalformedCipher, std::string("ack does not decrypt: ") + e.what());
    }
}

} // namespace trr
