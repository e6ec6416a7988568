#pragma once

// Byte layouts of the TRR request, routing header, ack and message frame.
// All integers are little-endian.
//
//   trr_data     version u8 | time u32 | release_delay u64 | tx_size u16 | tx
//   trr_routing  version u8 | return_pubkey [32] | dst_ip u32 | port u16 |
//                payload_size u16 | payload
//   trr_ack      version u8 | time u32 | rpt_ip u32 | err_ip u32 | errno u16 |
//                errmsg [30]                                     (45 bytes)
//   frame        magic "TRR1" | command [12] | length u32 | checksum [4] | payload

#include "trr/bytes.hpp"

#include <array>
#include <optional>
#include <string>

namespace trr::wire {

inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::uint64_t kMinReleaseDelay = 1;
inline constexpr std::uint64_t kMaxReleaseDelay = 5;
inline constexpr std::size_t kMaxTxSize = 10240;
inline constexpr std::size_t kMaxPayloadSize = 0xffff;

inline constexpr std::size_t kTrrDataHeaderSize = 15;
inline constexpr std::size_t kTrrRoutingHeaderSize = 41;
inline constexpr std::size_t kTrrAckSize = 45;
inline constexpr std::size_t kAckMessageSize = 30;
inline constexpr std::size_t kFrameHeaderSize = 24;
inline constexpr std::array<std::uint8_t, 4> kMagic{'T', 'R', 'R', '1'};

/// IPv4 address as a host-order integer: a.b.c.d = a<<24 | b<<16 | c<<8 | d.
struct Ipv4 {
    std::uint32_t value = 0;

    constexpr bool is_zero() const noexcept { return value == 0; }
    std::string to_string() const;
    /// Dotted quad; throws Error(InvalidArgument).
    static Ipv4 parse(std::string_view dotted);

    friend constexpr auto operator<=>(const Ipv4&, const Ipv4&) = default;
};

struct TrrData {
    std::uint8_t version = kVersion;
    std::uint32_t time = 0;
    std::uint64_t release_delay = kMinReleaseDelay;
    Bytes tx;

    friend bool operator==(const TrrData&, const TrrData&) = default;
};

struct TrrRouting {
    std::uint8_t version = kVersion;
    std::array<std::uint8_t, 32> return_pubkey{};
    Ipv4 dst_ip;
    std::uint16_t port = 0;
    Bytes payload;

    /// A zero destination marks the releasing node.
    bool is_release() const noexcept { return dst_ip.is_zero(); }

    friend bool operator==(const TrrRouting&, const TrrRouting&) = default;
};

/// Error numbers carried in trr_ack.
enum class AckErrno : std::uint16_t {
    Ok = 0,
    Timeout = 1,
    ConnectionRefused = 2,
    PoolFull = 3,
    InvalidTransaction = 4,
    MalformedRequest = 5,
    NotTrr = 6,
};

std::string_view describe(AckErrno e) noexcept;

struct TrrAck {
    std::uint8_t version = kVersion;
    std::uint32_t time = 0;
    Ipv4 rpt_ip;
    Ipv4 err_ip;
    std::uint16_t error_number = 0;
    std::string message;

    bool ok() const noexcept { return error_number == 0; }

    friend bool operator==(const TrrAck&, const TrrAck&) = default;
};

enum class Command { Vertrr, Trr, Track };

std::string_view command_name(Command c) noexcept;

struct Frame {
    Command command = Command::Vertrr;
    Bytes payload;

    friend bool operator==(const Frame&, const Frame&) = default;
};

/// Throws DelayOutOfRange, TxTooLarge.
Bytes encode(const TrrData& data);
/// Throws Truncated, SizeMismatch (trailing bytes), DelayOutOfRange, TxTooLarge.
TrrData decode_trr_data(ByteView bytes);

/// Throws PayloadTooLarge.
Bytes encode(const TrrRouting& routing);
/// Throws Truncated, SizeMismatch (trailing bytes).
TrrRouting decode_trr_routing(ByteView bytes);

/// Throws MessageTooLong.
Bytes encode(const TrrAck& ack);
/// Throws Truncated, SizeMismatch. The message is right-stripped of zero bytes.
TrrAck decode_trr_ack(ByteView bytes);

/// Throws PayloadTooLarge when the payload does not fit the u32 length field.
Bytes frame_message(Command command, ByteView payload);

struct FrameHeader {
    Command command;
    std::uint32_t length;
    std::array<std::uint8_t, 4> checksum;
};

/// Validates magic and command of the fixed 24-byte header.
/// Throws Truncated, BadMagic, UnknownCommand.
FrameHeader parse_frame_header(ByteView header);
/// Throws BadChecksum when the payload does not match the header.
void verify_checksum(const FrameHeader& header, ByteView payload);
/// Parses exactly one frame occupying the whole buffer.
/// Throws Truncated, SizeMismatch, BadMagic, UnknownCommand, BadChecksum.
Frame parse_frame(ByteView bytes);

} // namespace trr::wire
