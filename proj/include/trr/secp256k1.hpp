#pragma once

// secp256k1 group arithmetic over GMP integers. Not constant time.

#include "trr/bytes.hpp"

#include <gmpxx.h>

#include <array>
#include <concepts>
#include <optional>
#include <random>

namespace trr::ec {

using Bytes32 = std::array<std::uint8_t, 32>;
using Compressed = std::array<std::uint8_t, 33>;

const mpz_class& field_prime();
const mpz_class& group_order();

/// Integer modulo the group order n, held in [0, n).
struct Scalar {
    mpz_class value;

    Scalar() = default;
    explicit Scalar(mpz_class v);
    explicit Scalar(unsigned long v) : Scalar(mpz_class(v)) {}

    friend bool operator==(const Scalar& a, const Scalar& b) { return a.value == b.value; }
};

/// Affine point; `infinity` marks the group identity and x, y are then ignored.
struct CurvePoint {
    mpz_class x;
    mpz_class y;
    bool infinity = true;

    static CurvePoint at_infinity() { return {}; }
    static CurvePoint from_affine(mpz_class x, mpz_class y) { return {std::move(x), std::move(y), false}; }

    friend bool operator==(const CurvePoint& a, const CurvePoint& b)
    {
        if (a.infinity || b.infinity) return a.infinity == b.infinity;
        return a.x == b.x && a.y == b.y;
    }
};

const CurvePoint& generator();

bool is_on_curve(const CurvePoint& p);

CurvePoint add(const CurvePoint& a, const CurvePoint& b);
CurvePoint negate(const CurvePoint& p);
CurvePoint subtract(const CurvePoint& a, const CurvePoint& b);
CurvePoint double_point(const CurvePoint& p);

/// k·P with a 4-bit window over Jacobian coordinates.
CurvePoint multiply(const Scalar& k, const CurvePoint& p);
/// k·G from a precomputed byte-wise comb table.
CurvePoint multiply_generator(const Scalar& k);

/// Square root modulo p (p ≡ 3 mod 4). nullopt when `a` is a non-residue.
std::optional<mpz_class> sqrt_mod_p(const mpz_class& a);
/// The on-curve point with the given x and y parity, if x is a valid abscissa.
std::optional<CurvePoint> lift_x(const mpz_class& x, bool odd_y);

mpz_class from_big_endian(ByteView bytes);
Bytes32 to_big_endian(const mpz_class& v);

/// 0x02/0x03 parity prefix followed by the 32-byte x coordinate.
Compressed compress(const CurvePoint& p);
/// nullopt for a bad prefix, x ≥ p, or an x with no curve point.
std::optional<CurvePoint> decompress(ByteView encoded);

/// Uniform scalar in [1, n) by rejection sampling 32-byte candidates.
template <std::uniform_random_bit_generator G>
Scalar random_scalar(G& gen)
{
    std::uniform_int_distribution<unsigned> byte(0, 255);
    for (;;) {
        Bytes32 buf{};
        for (auto& b : buf) {
            b = static_cast<std::uint8_t>(byte(gen));
        }
        mpz_class v = from_big_endian(buf);
        if (v != 0 && v < group_order()) {
            return Scalar(std::move(v));
        }
    }
}

} // namespace trr::ec
