#include "trr/wire.hpp"

#include "trr/hash.hpp"

#include <algorithm>
#include <charconv>

namespace trr::wire {
namespace {

void check_delay(std::uint64_t delay)
{
    if (delay < kMinReleaseDelay || delay > kMaxReleaseDelay) {
        throw Error(ErrorCode::DelayOutOfRange,
                    "release delay " + std::to_string(delay) + " not in [1, 5]");
    }
}

void check_consumed(const ByteReader& r, const char* what)
{
    if (r.remaining() != 0) {
        throw Error(ErrorCode::SizeMismatch, std::string(what) + ": " +
                                                 std::to_string(r.remaining()) +
                                                 " trailing bytes");
    }
}

constexpr std::array<std::string_view, 3> kCommandNames{"vertrr", "trr", "track"};

std::array<std::uint8_t, 4> checksum_of(ByteView payload)
{
    Hash256 h = sha256d(payload);
    return {h[0], h[1], h[2], h[3]};
}

} // namespace

std::string Ipv4::to_string() const
{
    return std::to_string(value >> 24) + "." + std::to_string((value >> 16) & 0xff) + "." +
           std::to_string((value >> 8) & 0xff) + "." + std::to_string(value & 0xff);
}

Ipv4 Ipv4::parse(std::string_view dotted)
{
    std::uint32_t out = 0;
    const char* p = dotted.data();
    const char* end = dotted.data() + dotted.size();
    for (int i = 0; i < 4; ++i) {
        unsigned octet = 0;
        auto [next, ec] = std::from_chars(p, end, octet);
        if (ec != std::errc{} || next == p || octet > 255) {
            throw Error(ErrorCode::InvalidArgument, "bad IPv4 address: " + std::string(dotted));
        }
        out = (out << 8) | octet;
        p = next;
        if (i < 3) {
            if (p == end || *p != '.') {
                throw Error(ErrorCode::InvalidArgument, "bad IPv4 address: " + std::string(dotted));
            }
            ++p;
        }
    }
    if (p != end) {
        throw Error(ErrorCode::InvalidArgument, "bad IPv4 address: " + std::string(dotted));
    }
    return Ipv4{out};
}

std::string_view describe(AckErrno e) noexcept
{
    switch (e) {
    case AckErrno::Ok: return "ok";
    case AckErrno::Timeout: return "timeout";
    case AckErrno::ConnectionRefused: return "connection refused";
    case AckErrno::PoolFull: return "pool full";
    case AckErrno::InvalidTransaction: return "invalid transaction";
    case AckErrno::MalformedRequest: return "malformed request";
    case AckErrno::NotTrr: return "not a trr connection";
    }
    return "unknown";
}

std::string_view command_name(Command c) noexcept
{
    return kCommandNames[static_cast<std::size_t>(c)];
}

Bytes encode(const TrrData& data)
{
    check_delay(data.release_delay);
    if (data.tx.size() > kMaxTxSize) {
        throw Error(ErrorCode::TxTooLarge,
                    "transaction of " + std::to_string(data.tx.size()) + " bytes exceeds 10240");
    }
    ByteWriter w(kTrrDataHeaderSize + data.tx.size());
    w.u8(data.version);
    w.u32(data.time);
    w.u64(data.release_delay);
    w.u16(static_cast<std::uint16_t>(data.tx.size()));
    w.bytes(data.tx);
    return std::move(w).take();
}

TrrData decode_trr_data(ByteView bytes)
{
    ByteReader r(bytes);
    TrrData d;
    d.version = r.u8();
    d.time = r.u32();
    d.release_delay = r.u64();
    std::uint16_t size = r.u16();
    check_delay(d.release_delay);
    if (size > kMaxTxSize) {
        throw Error(ErrorCode::TxTooLarge, "declared tx_size exceeds 10240");
    }
    ByteView tx = r.bytes(size);
    d.tx.assign(tx.begin(), tx.end());
    check_consumed(r, "trr_data");
    return d;
}

Bytes encode(const TrrRouting& routing)
{
    if (routing.payload.size() > kMaxPayloadSize) {
        throw Error(ErrorCode::PayloadTooLarge,
                    "routing payload of " + std::to_string(routing.payload.size()) +
                        " bytes exceeds 65535");
    }
    ByteWriter w(kTrrRoutingHeaderSize + routing.payload.size());
    w.u8(routing.version);
    w.bytes(routing.return_pubkey);
    w.u32(routing.dst_ip.value);
    w.u16(routing.port);
    w.u16(static_cast<std::uint16_t>(routing.payload.size()));
    w.bytes(routing.payload);
    return std::move(w).take();
}

TrrRouting decode_trr_routing(ByteView bytes)
{
    ByteReader r(bytes);
    TrrRouting out;
    out.version = r.u8();
    out.return_pubkey = r.array<32>();
    out.dst_ip = Ipv4{r.u32()};
    out.port = r.u16();
    std::uint16_t size = r.u16();
    ByteView payload = r.bytes(size);
    out.payload.assign(payload.begin(), payload.end());
    check_consumed(r, "trr_routing");
    return out;
}

Bytes encode(const TrrAck& ack)
{
    if (ack.message.size() > kAckMessageSize) {
        throw Error(ErrorCode::MessageTooLong,
                    "errmsg of " + std::to_string(ack.message.size()) + " bytes exceeds 30");
    }
    ByteWriter w(kTrrAckSize);
    w.u8(ack.version);
    w.u32(ack.time);
    w.u32(ack.rpt_ip.value);
    w.u32(ack.err_ip.value);
    w.u16(ack.error_number);
    w.bytes(as_bytes(ack.message));
    w.zeros(kAckMessageSize - ack.message.size());
    return std::move(w).take();
}

TrrAck decode_trr_ack(ByteView bytes)
{
    ByteReader r(bytes);
    TrrAck a;
    a.version = r.u8();
    a.time = r.u32();
    a.rpt_ip = Ipv4{r.u32()};
    a.err_ip = Ipv4{r.u32()};
    a.error_number = r.u16();
    ByteView msg = r.bytes(kAckMessageSize);
    check_consumed(r, "trr_ack");
    auto last = std::find_if(msg.rbegin(), msg.rend(), [](std::uint8_t b) { return b != 0; });
    a.message.assign(msg.begin(), last.base());
    return a;
}

Bytes frame_message(Command command, ByteView payload)
{
    if (payload.size() > 0xffffffffULL) {
        throw Error(ErrorCode::PayloadTooLarge, "frame payload exceeds 4 GiB");
    }
    std::string_view name = command_name(command);
    ByteWriter w(kFrameHeaderSize + payload.size());
    w.bytes(kMagic);
    w.bytes(as_bytes(name));
    w.zeros(12 - name.size());
    w.u32(static_cast<std::uint32_t>(payload.size()));
    w.bytes(checksum_of(payload));
    w.bytes(payload);
    return std::move(w).take();
}

FrameHeader parse_frame_header(ByteView header)
{
    ByteReader r(header);
    auto magic = r.array<4>();
    if (magic != kMagic) {
        throw Error(ErrorCode::BadMagic, "frame magic mismatch");
    }
    auto raw = r.array<12>();
    std::uint32_t length = r.u32();
    auto checksum = r.array<4>();

    auto end = std::find(raw.begin(), raw.end(), std::uint8_t{0});
    if (std::any_of(end, raw.end(), [](std::uint8_t b) { return b != 0; })) {
        throw Error(ErrorCode::UnknownCommand, "command field is not zero-padded ASCII");
    }
    std::string_view name(reinterpret_cast<const char*>(raw.data()),
                          static_cast<std::size_t>(end - raw.begin()));
    for (std::size_t i = 0; i < kCommandNames.size(); ++i) {
        if (name == kCommandNames[i]) {
            return FrameHeader{static_cast<Command>(i), length, checksum};
        }
    }
    throw Error(ErrorCode::UnknownCommand, "unknown command '" + std::string(name) + "'");
}

void verify_checksum(const FrameHeader& header, ByteView payload)
{
    if (payload.size() != header.length || checksum_of(payload) != header.checksum) {
        throw Error(ErrorCode::BadChecksum, "payload checksum mismatch");
    }
}

Frame parse_frame(ByteView bytes)
{
    ByteReader r(bytes);
    FrameHeader header = parse_frame_header(r.bytes(kFrameHeaderSize));
    ByteView payload = r.bytes(header.length);
    check_consumed(r, "frame");
    verify_checksum(header, payload);
    return Frame{header.command, Bytes(payload.begin(), payload.end())};
}

} // namespace trr::wire
