#pragma once

#include "trr/error.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trr {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) noexcept
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::string to_hex(ByteView bytes);
/// Throws Error(InvalidArgument) on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

/// Little-endian appender used by every codec.
class ByteWriter {
public:
    explicit ByteWriter(std::size_t reserve = 0) { out_.reserve(reserve); }

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put_le(v, 2); }
    void u32(std::uint32_t v) { put_le(v, 4); }
    void u64(std::uint64_t v) { put_le(v, 8); }
    void bytes(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void zeros(std::size_t n) { out_.insert(out_.end(), n, 0); }

    Bytes take() && { return std::move(out_); }
    std::size_t size() const noexcept { return out_.size(); }

private:
    void put_le(std::uint64_t v, int width)
    {
        for (int i = 0; i < width; ++i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    Bytes out_;
};

/// Bounds-checked little-endian reader. Any read past the end throws
/// Error(Truncated); nothing is ever read beyond the view.
class ByteReader {
public:
    explicit ByteReader(ByteView in) noexcept : in_(in) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
    std::uint64_t u64() { return get_le(8); }

    ByteView bytes(std::size_t n)
    {
        require(n);
        ByteView out = in_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    template <std::size_t N>
    std::array<std::uint8_t, N> array()
    {
        std::array<std::uint8_t, N> out{};
        ByteView b = bytes(N);
        std::copy(b.begin(), b.end(), out.begin());
        return out;
    }

    std::size_t remaining() const noexcept { return in_.size() - pos_; }
    std::size_t position() const noexcept { return pos_; }

private:
    void require(std::size_t n) const
    {
        if (n > remaining()) {
            throw Error(ErrorCode::Truncated, "need " + std::to_string(n) + " bytes, have " +
                                                  std::to_string(remaining()));
        }
    }

    std::uint64_t get_le(int width)
    {
        require(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) {
            v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
        }
        pos_ += static_cast<std::size_t>(width);
        return v;
    }

    ByteView in_;
    std::size_t pos_ = 0;
};

inline std::string to_hex(ByteView bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

inline Bytes from_hex(std::string_view hex)
{
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    if (hex.size() % 2 != 0) {
        throw Error(ErrorCode::InvalidArgument, "odd-length hex string");
    }
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = nibble(hex[2 * i]);
        int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw Error(ErrorCode::InvalidArgument, "invalid hex digit");
        }
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

} // namespace trr
