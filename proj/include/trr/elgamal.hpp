#pragma once

// Block-wise EC-ElGamal over secp256k1.
//
// A plaintext is prefixed with its 4-byte little-endian length, split into
// 31-byte chunks (the last one zero-padded) and each chunk is embedded into
// the x coordinate of a curve point M_i. One ephemeral scalar r is drawn per
// call: every block is C1_i = M_i + r·P and the stream carries a single
// C2 = r·G. Decryption recovers M_i = C1_i − k·C2.

#include "trr/bytes.hpp"
#include "trr/secp256k1.hpp"

#include <concepts>
#include <vector>

namespace trr::ec {

inline constexpr std::size_t kChunkSize = 31;
inline constexpr std::size_t kPointSize = 33;
inline constexpr std::size_t kLengthPrefixSize = 4;

struct KeyPair {
    Scalar private_key;
    CurvePoint public_key;
};

KeyPair keypair_from_private(const Scalar& private_key);

template <std::uniform_random_bit_generator G>
KeyPair keygen(G& gen)
{
    return keypair_from_private(random_scalar(gen));
}

/// Key pair whose public point has an even y, so the 32-byte x coordinate
/// alone identifies it. Clients use these as return keys.
template <std::uniform_random_bit_generator G>
KeyPair keygen_even(G& gen)
{
    for (;;) {
        KeyPair kp = keygen(gen);
        if (!mpz_odd_p(kp.public_key.y.get_mpz_t())) return kp;
    }
}

/// Embeds up to 31 bytes. x = (chunk left-padded to 31 bytes ‖ counter) for the
/// smallest counter that lands on the curve; y is taken even.
/// Throws Error(EmbeddingFailure) when no counter works.
CurvePoint embed_chunk(ByteView chunk);

/// Inverse of embed_chunk: the trailing `length` bytes of the 31-byte payload.
Bytes decode_chunk(const CurvePoint& point, std::size_t length = kChunkSize);

struct CipherStream {
    CurvePoint c2;
    std::vector<CurvePoint> blocks;

    /// Largest plaintext the blocks can hold.
    std::size_t capacity() const noexcept
    {
        return blocks.size() * kChunkSize - kLengthPrefixSize;
    }

    friend bool operator==(const CipherStream&, const CipherStream&) = default;
};

/// Number of 31-byte blocks produced for a plaintext of the given size.
constexpr std::size_t block_count(std::size_t plaintext_size) noexcept
{
    return (plaintext_size + kLengthPrefixSize + kChunkSize - 1) / kChunkSize;
}

/// Serialized ciphertext size; depends on the plaintext length only.
constexpr std::size_t serialized_size(std::size_t plaintext_size) noexcept
{
    return kPointSize + 4 + kPointSize * block_count(plaintext_size);
}

/// Deterministic core: encrypts with the supplied ephemeral scalar.
CipherStream encrypt_with_ephemeral(ByteView plaintext, const CurvePoint& recipient,
                                    const Scalar& ephemeral);

template <std::uniform_random_bit_generator G>
CipherStream encrypt(ByteView plaintext, const CurvePoint& recipient, G& gen)
{
    return encrypt_with_ephemeral(plaintext, recipient, random_scalar(gen));
}

/// Throws MalformedCipher for structural problems and LengthMismatch when the
/// recovered length prefix exceeds the stream's capacity (typical of a wrong key).
Bytes decrypt(const CipherStream& cipher, const Scalar& private_key);

/// c2 ‖ block_count (u32 LE) ‖ blocks, points in compressed form.
Bytes serialize(const CipherStream& cipher);
/// Throws MalformedCipher on truncation, trailing bytes, bad prefixes or off-curve x.
CipherStream deserialize(ByteView bytes);

template <std::uniform_random_bit_generator G>
Bytes seal(ByteView plaintext, const CurvePoint& recipient, G& gen)
{
    return serialize(encrypt(plaintext, recipient, gen));
}

inline Bytes open(ByteView ciphertext, const Scalar& private_key)
{
    return decrypt(deserialize(ciphertext), private_key);
}

} // namespace trr::ec
