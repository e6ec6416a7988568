#pragma once

// Closed-form route statistics, parameter sweeps and mixing arithmetic.
//
// The closed forms are templates so that they evaluate both in double and in
// exact rationals (mpq_class); the latter is what the enumeration tests use.

#include "trr/error.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace trr::analytics {

struct RouteParams {
    double d = 0.0;
    double f = 0.0;
    unsigned h = 1;
    unsigned r = 1;

    /// Throws InvalidArgument unless d, f ∈ [0,1], d + f ≤ 1, h ≥ 1, r ≥ 1.
    void validate() const;
};

namespace detail {
template <class T>
T power(T base, unsigned exp)
{
    T out = 1;
    while (exp--) out *= base;
    return out;
}
} // namespace detail

/// Probability that at least one of r independent h-hop routes is all honest.
template <class T>
T srtr_closed_form(const T& d, unsigned h, unsigned r)
{
    T route_ok = detail::power<T>(T(1) - d, h);
    return T(1) - detail::power<T>(T(1) - route_ok, r);
}

/// A(f, m): probability that m independent hops, each fake with probability
/// f, never contain two consecutive non-fake hops.
template <class T>
T no_adjacent_honest(const T& f, unsigned m)
{
    T prev2 = 1, prev1 = 1;
    for (unsigned i = 2; i <= m; ++i) {
        T next = f * prev1 + (T(1) - f) * f * prev2;
        prev2 = prev1;
        prev1 = next;
    }
    return prev1;
}

/// Probability that one route can be stitched back together by the fake
/// nodes: fake first and last hop, no two adjacent non-fake hops between.
template <class T>
T srd_route_probability(const T& f, unsigned h)
{
    if (h == 1) return f;
    return f * f * no_adjacent_honest(f, h - 2);
}

template <class T>
T srd_closed_form(const T& f, unsigned h, unsigned r)
{
    return T(1) - detail::power<T>(T(1) - srd_route_probability(f, h), r);
}

double srtr_closed_form(const RouteParams& p);
double srd_closed_form(const RouteParams& p);

/// SRTR when the h hops of a route are drawn without replacement from a pool
/// of n nodes of which `dishonest` are dishonest; routes are independent.
double srtr_finite_population(std::uint64_t n, std::uint64_t dishonest, unsigned h, unsigned r);

/// A Monte Carlo rate with its binomial standard error.
struct Estimate {
    double rate = 0.0;
    double se = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;

    static Estimate from_counts(std::uint64_t successes, std::uint64_t trials);
    /// |rate − expected| in units of the standard error (0/0 counts as 0).
    double z_score(double expected) const;
};

struct Grid {
    std::vector<double> d;
    std::vector<double> f;
    std::vector<unsigned> h;
    std::vector<unsigned> r;
};

struct SweepRow {
    RouteParams params;
    double srtr_cf = 0.0;
    double srd_cf = 0.0;
    std::optional<Estimate> srtr_mc;
    std::optional<Estimate> srd_mc;
};

/// One row per point of the cartesian product, in d, f, h, r order (r fastest).
/// Combinations with d + f > 1 are skipped. Any empty axis yields no rows.
std::vector<SweepRow> sweep(const Grid& grid);

/// Header `d,f,h,r,srtr_cf,srd_cf` plus `srtr_mc,srtr_se,srd_mc,srd_se` when
/// with_mc is set. Numbers are printed with 6 significant digits; missing
/// estimates leave their cells empty.
std::string to_csv(const std::vector<SweepRow>& rows, bool with_mc);

inline constexpr std::uint64_t kTransactionsPerBlock = 945;

/// Expected number of transactions a release hides among: delay × per block.
/// Throws DelayOutOfRange unless delay ∈ [1, 5].
std::uint64_t mixing_stats(std::uint64_t delay_blocks, std::uint64_t tx_per_block);

} // namespace trr::analytics
