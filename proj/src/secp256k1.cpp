#include "trr/secp256k1.hpp"

#include <vector>

namespace trr::ec {
namespace {

struct Constants {
    mpz_class p{"FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEFFFFFC2F", 16};
    mpz_class n{"FFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141", 16};
    mpz_class gx{"79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798", 16};
    mpz_class gy{"483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8", 16};
    mpz_class sqrt_exponent = (p + 1) / 4;
};

const Constants& k()
{
    static const Constants c;
    return c;
}

void reduce(mpz_class& a)
{
    mpz_mod(a.get_mpz_t(), a.get_mpz_t(), k().p.get_mpz_t());
}

mpz_class mulmod(const mpz_class& a, const mpz_class& b)
{
    mpz_class r = a * b;
    reduce(r);
    return r;
}

mpz_class submod(const mpz_class& a, const mpz_class& b)
{
    mpz_class r = a - b;
    reduce(r);
    return r;
}

mpz_class invmod(const mpz_class& a)
{
    mpz_class r;
    mpz_invert(r.get_mpz_t(), a.get_mpz_t(), k().p.get_mpz_t());
    return r;
}

// Jacobian (X, Y, Z) ↦ affine (X/Z², Y/Z³); Z = 0 is infinity.
struct Jacobian {
    mpz_class x, y, z;

    bool infinity() const { return z == 0; }

    static Jacobian from(const CurvePoint& p)
    {
        if (p.infinity) return {0, 1, 0};
        return {p.x, p.y, 1};
    }
};

Jacobian jacobian_double(const Jacobian& p)
{
    if (p.infinity() || p.y == 0) return {0, 1, 0};
    mpz_class yy = mulmod(p.y, p.y);
    mpz_class s = mulmod(4 * p.x, yy);
    mpz_class m = mulmod(3 * p.x, p.x);
    mpz_class x3 = submod(m * m, 2 * s);
    mpz_class y3 = submod(m * submod(s, x3), 8 * mulmod(yy, yy));
    mpz_class z3 = mulmod(2 * p.y, p.z);
    return {std::move(x3), std::move(y3), std::move(z3)};
}

// p + q where q is affine.
Jacobian jacobian_add_mixed(const Jacobian& p, const CurvePoint& q)
{
    if (q.infinity) return p;
    if (p.infinity()) return Jacobian::from(q);
    mpz_class z1z1 = mulmod(p.z, p.z);
    mpz_class u2 = mulmod(q.x, z1z1);
    mpz_class s2 = mulmod(q.y, mulmod(p.z, z1z1));
    mpz_class h = submod(u2, p.x);
    mpz_class r = submod(s2, p.y);
    if (h == 0) {
        if (r == 0) return jacobian_double(p);
        return {0, 1, 0};
    }
    mpz_class hh = mulmod(h, h);
    mpz_class hhh = mulmod(h, hh);
    mpz_class v = mulmod(p.x, hh);
    mpz_class x3 = submod(r * r - hhh, 2 * v);
    mpz_class y3 = submod(r * submod(v, x3), p.y * hhh);
    mpz_class z3 = mulmod(p.z, h);
    return {std::move(x3), std::move(y3), std::move(z3)};
}

CurvePoint to_affine(const Jacobian& p)
{
    if (p.infinity()) return CurvePoint::at_infinity();
    mpz_class zinv = invmod(p.z);
    mpz_class zinv2 = mulmod(zinv, zinv);
    return CurvePoint::from_affine(mulmod(p.x, zinv2), mulmod(p.y, mulmod(zinv2, zinv)));
}

// table[i * 256 + j] = j · 256^i · G
const std::vector<CurvePoint>& generator_table()
{
    static const std::vector<CurvePoint> table = [] {
        std::vector<CurvePoint> t(32 * 256);
        CurvePoint base = generator();
        for (int i = 0; i < 32; ++i) {
            t[i * 256] = CurvePoint::at_infinity();
            t[i * 256 + 1] = base;
            for (int j = 2; j < 256; ++j) {
                t[i * 256 + j] = add(t[i * 256 + j - 1], base);
            }
            base = add(t[i * 256 + 255], base);
        }
        return t;
    }();
    return table;
}

} // namespace

const mpz_class& field_prime() { return k().p; }
const mpz_class& group_order() { return k().n; }

Scalar::Scalar(mpz_class v) : value(std::move(v))
{
    mpz_mod(value.get_mpz_t(), value.get_mpz_t(), group_order().get_mpz_t());
}

const CurvePoint& generator()
{
    static const CurvePoint g = CurvePoint::from_affine(k().gx, k().gy);
    return g;
}

bool is_on_curve(const CurvePoint& p)
{
    if (p.infinity) return true;
    const mpz_class& prime = field_prime();
    if (p.x < 0 || p.x >= prime || p.y < 0 || p.y >= prime) return false;
    mpz_class lhs = mulmod(p.y, p.y);
    mpz_class rhs = mulmod(mulmod(p.x, p.x), p.x) + 7;
    reduce(rhs);
    return lhs == rhs;
}

CurvePoint add(const CurvePoint& a, const CurvePoint& b)
{
    if (a.infinity) return b;
    if (b.infinity) return a;
    if (a.x == b.x) {
        if (a.y == b.y) return double_point(a);
        return CurvePoint::at_infinity();
    }
    mpz_class slope = mulmod(submod(b.y, a.y), invmod(submod(b.x, a.x)));
    mpz_class x3 = submod(slope * slope - a.x, b.x);
    mpz_class y3 = submod(slope * submod(a.x, x3), a.y);
    return CurvePoint::from_affine(std::move(x3), std::move(y3));
}

CurvePoint negate(const CurvePoint& p)
{
    if (p.infinity) return p;
    return CurvePoint::from_affine(p.x, p.y == 0 ? mpz_class(0) : field_prime() - p.y);
}

CurvePoint subtract(const CurvePoint& a, const CurvePoint& b)
{
    return add(a, negate(b));
}

CurvePoint double_point(const CurvePoint& p)
{
    if (p.infinity || p.y == 0) return CurvePoint::at_infinity();
    mpz_class slope = mulmod(3 * mulmod(p.x, p.x), invmod(2 * p.y));
    mpz_class x3 = submod(slope * slope, 2 * p.x);
    mpz_class y3 = submod(slope * submod(p.x, x3), p.y);
    return CurvePoint::from_affine(std::move(x3), std::move(y3));
}

CurvePoint multiply(const Scalar& scalar, const CurvePoint& p)
{
    if (p.infinity || scalar.value == 0) return CurvePoint::at_infinity();

    std::array<CurvePoint, 16> window;
    window[0] = CurvePoint::at_infinity();
    window[1] = p;
    for (std::size_t i = 2; i < window.size(); ++i) {
        window[i] = add(window[i - 1], p);
    }

    Bytes32 bytes = to_big_endian(scalar.value);
    Jacobian acc{0, 1, 0};
    for (std::uint8_t b : bytes) {
        for (int half = 0; half < 2; ++half) {
            for (int d = 0; d < 4; ++d) {
                acc = jacobian_double(acc);
            }
            unsigned nibble = half == 0 ? (b >> 4) : (b & 0xf);
            if (nibble != 0) {
                acc = jacobian_add_mixed(acc, window[nibble]);
            }
        }
    }
    return to_affine(acc);
}

CurvePoint multiply_generator(const Scalar& scalar)
{
    const auto& table = generator_table();
    Bytes32 bytes = to_big_endian(scalar.value);
    Jacobian acc{0, 1, 0};
    for (int i = 0; i < 32; ++i) {
        std::uint8_t b = bytes[31 - i];
        if (b != 0) {
            acc = jacobian_add_mixed(acc, table[static_cast<std::size_t>(i) * 256 + b]);
        }
    }
    return to_affine(acc);
}

std::optional<mpz_class> sqrt_mod_p(const mpz_class& a)
{
    mpz_class root;
    mpz_powm(root.get_mpz_t(), a.get_mpz_t(), k().sqrt_exponent.get_mpz_t(), k().p.get_mpz_t());
    mpz_class check = mulmod(root, root);
    mpz_class target = a;
    reduce(target);
    if (check != target) return std::nullopt;
    return root;
}

std::optional<CurvePoint> lift_x(const mpz_class& x, bool odd_y)
{
    if (x < 0 || x >= field_prime()) return std::nullopt;
    mpz_class rhs = mulmod(mulmod(x, x), x) + 7;
    auto y = sqrt_mod_p(rhs);
    if (!y) return std::nullopt;
    if (mpz_odd_p(y->get_mpz_t()) != static_cast<int>(odd_y)) {
        *y = field_prime() - *y;
    }
    return CurvePoint::from_affine(x, std::move(*y));
}

mpz_class from_big_endian(ByteView bytes)
{
    mpz_class v;
    if (!bytes.empty()) {
        mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
    }
    return v;
}

Bytes32 to_big_endian(const mpz_class& v)
{
    Bytes32 out{};
    if (v < 0 || mpz_sizeinbase(v.get_mpz_t(), 256) > out.size()) {
        throw Error(ErrorCode::InvalidArgument, "integer does not fit in 32 bytes");
    }
    std::size_t count = 0;
    std::uint8_t tmp[32];
    mpz_export(tmp, &count, 1, 1, 1, 0, v.get_mpz_t());
    std::copy(tmp, tmp + count, out.begin() + static_cast<std::ptrdiff_t>(out.size() - count));
    return out;
}

Compressed compress(const CurvePoint& p)
{
    if (p.infinity) {
        throw Error(ErrorCode::InvalidKey, "the point at infinity has no compressed form");
    }
    Compressed out{};
    out[0] = mpz_odd_p(p.y.get_mpz_t()) ? 0x03 : 0x02;
    Bytes32 x = to_big_endian(p.x);
    std::copy(x.begin(), x.end(), out.begin() + 1);
    return out;
}

std::optional<CurvePoint> decompress(ByteView encoded)
{
    if (encoded.size() != 33 || (encoded[0] != 0x02 && encoded[0] != 0x03)) {
        return std::nullopt;
    }
    return lift_x(from_big_endian(encoded.subspan(1)), encoded[0] == 0x03);
}

} // namespace trr::ec
