#include "trr/elgamal.hpp"

#include <algorithm>

namespace trr::ec {

KeyPair keypair_from_private(const Scalar& private_key)
{
    if (private_key.value == 0) {
        throw Error(ErrorCode::InvalidKey, "private scalar must be in [1, n)");
    }
    return {private_key, multiply_generator(private_key)};
}

CurvePoint embed_chunk(ByteView chunk)
{
    if (chunk.size() > kChunkSize) {
        throw Error(ErrorCode::InvalidArgument, "chunk longer than 31 bytes");
    }
    Bytes32 candidate{};
    std::copy(chunk.begin(), chunk.end(),
              candidate.begin() + static_cast<std::ptrdiff_t>(kChunkSize - chunk.size()));
    for (unsigned counter = 0; counter < 256; ++counter) {
        candidate[kChunkSize] = static_cast<std::uint8_t>(counter);
        if (auto point = lift_x(from_big_endian(candidate), false)) {
            return *point;
        }
    }
    throw Error(ErrorCode::EmbeddingFailure, "no counter byte yields a curve point");
}

Bytes decode_chunk(const CurvePoint& point, std::size_t length)
{
    if (point.infinity) {
        throw Error(ErrorCode::MalformedCipher, "decoded block is the point at infinity");
    }
    if (length > kChunkSize) {
        throw Error(ErrorCode::InvalidArgument, "chunk longer than 31 bytes");
    }
    Bytes32 x = to_big_endian(point.x);
    return Bytes(x.begin() + static_cast<std::ptrdiff_t>(kChunkSize - length),
                 x.begin() + static_cast<std::ptrdiff_t>(kChunkSize));
}

CipherStream encrypt_with_ephemeral(ByteView plaintext, const CurvePoint& recipient,
                                    const Scalar& ephemeral)
{
    if (recipient.infinity || !is_on_curve(recipient)) {
        throw Error(ErrorCode::InvalidKey, "recipient public key is not a curve point");
    }
    if (plaintext.size() > 0xffffffffULL) {
        throw Error(ErrorCode::PayloadTooLarge, "plaintext exceeds the 4-byte length prefix");
    }

    ByteWriter padded(block_count(plaintext.size()) * kChunkSize);
    padded.u32(static_cast<std::uint32_t>(plaintext.size()));
    padded.bytes(plaintext);
    padded.zeros(block_count(plaintext.size()) * kChunkSize - padded.size());
    Bytes buffer = std::move(padded).take();

    CurvePoint shared = multiply(ephemeral, recipient);
    CipherStream out;
    out.c2 = multiply_generator(ephemeral);
    out.blocks.reserve(buffer.size() / kChunkSize);
    for (std::size_t off = 0; off < buffer.size(); off += kChunkSize) {
        CurvePoint m = embed_chunk(ByteView(buffer).subspan(off, kChunkSize));
        out.blocks.push_back(add(m, shared));
    }
    return out;
}

Bytes decrypt(const CipherStream& cipher, const Scalar& private_key)
{
    if (cipher.blocks.empty()) {
        throw Error(ErrorCode::MalformedCipher, "cipher stream has no blocks");
    }
    if (cipher.c2.infinity || !is_on_curve(cipher.c2)) {
        throw Error(ErrorCode::MalformedCipher, "C2 is not a curve point");
    }
    CurvePoint shared = multiply(private_key, cipher.c2);

    Bytes buffer;
    buffer.reserve(cipher.blocks.size() * kChunkSize);
    for (const CurvePoint& block : cipher.blocks) {
        if (!is_on_curve(block)) {
            throw Error(ErrorCode::MalformedCipher, "block is not a curve point");
        }
        Bytes chunk = decode_chunk(subtract(block, shared));
        buffer.insert(buffer.end(), chunk.begin(), chunk.end());
    }

    ByteReader reader(buffer);
    std::uint32_t length = reader.u32();
    if (length > cipher.capacity()) {
        throw Error(ErrorCode::LengthMismatch, "declared length " + std::to_string(length) +
                                                   " exceeds capacity " +
                                                   std::to_string(cipher.capacity()));
    }
    ByteView body = reader.bytes(length);
    return Bytes(body.begin(), body.end());
}

Bytes serialize(const CipherStream& cipher)
{
    ByteWriter w(kPointSize + 4 + kPointSize * cipher.blocks.size());
    w.bytes(compress(cipher.c2));
    w.u32(static_cast<std::uint32_t>(cipher.blocks.size()));
    for (const CurvePoint& block : cipher.blocks) {
        w.bytes(compress(block));
    }
    return std::move(w).take();
}

CipherStream deserialize(ByteView bytes)
{
    auto point = [](ByteView encoded) {
        auto p = decompress(encoded);
        if (!p) throw Error(ErrorCode::MalformedCipher, "invalid compressed point");
        return std::move(*p);
    };
    try {
        ByteReader r(bytes);
        CipherStream out;
        out.c2 = point(r.bytes(kPointSize));
        std::uint32_t count = r.u32();
        if (count == 0 || static_cast<std::uint64_t>(count) * kPointSize != r.remaining()) {
            throw Error(ErrorCode::MalformedCipher, "block count does not match buffer length");
        }
        out.blocks.reserve(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            out.blocks.push_back(point(r.bytes(kPointSize)));
        }
        return out;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Truncated) {
            throw Error(ErrorCode::MalformedCipher, "truncated cipher stream");
        }
        throw;
    }
}

} // namespace trr::ec
