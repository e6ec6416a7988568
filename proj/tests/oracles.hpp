#pragma once

// Independent reference computations. Nothing here shares code with the
// library's closed forms.

#include <gmpxx.h>

#include <cstdint>

namespace trr::oracle {

inline mpq_class pow_q(const mpq_class& b, unsigned e)
{
    mpq_class out = 1;
    for (unsigned i = 0; i < e; ++i) out *= b;
    return out;
}

/// Sums the probability of every fake/non-fake pattern of an h-hop route
/// that satisfies the reconstruction conditions, then aggregates over r routes.
inline mpq_class srd_by_enumeration(const mpq_class& f, unsigned h, unsigned r)
{
    mpq_class q = 0;
    for (std::uint32_t mask = 0; mask < (1u << h); ++mask) {
        auto fake = [&](unsigned i) { return (mask >> i) & 1u; };
        bool ok = fake(0) && fake(h - 1);
        for (unsigned i = 0; ok && i + 1 < h; ++i) {
            if (!fake(i) && !fake(i + 1)) ok = false;
        }
        if (!ok) continue;
        unsigned k = static_cast<unsigned>(__builtin_popcount(mask));
        q += pow_q(f, k) * pow_q(1 - f, h - k);
    }
    return 1 - pow_q(1 - q, r);
}

} // namespace trr::oracle
