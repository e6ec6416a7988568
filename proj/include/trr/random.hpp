#pragma once

#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <type_traits>

namespace trr {

/// Default generator for everything that is seeded for reproducibility.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; maps a (seed, counter) pair to a well-mixed 64-bit value.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Per-trial seed derived from the master seed by a counter, so trials can run
/// in any order or on any thread and still reproduce bit-for-bit.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return mix64(master ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Cheap counter-based generator for Monte Carlo inner loops.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Generator backed by the operating system's entropy pool. Used for key
/// material outside of tests and simulations.
class OsEntropy {
public:
    using result_type = std::uint64_t;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()()
    {
        return (static_cast<std::uint64_t>(device_()) << 32) | device_();
    }

private:
    std::random_device device_;
};

} // namespace trr

namespace trr {

/// Type-erased generator so non-template APIs can accept any URBG (seeded
/// Rng in tests and simulations, OsEntropy in the CLI). Holds a reference.
class AnyRng {
public:
    using result_type = std::uint64_t;

    template <std::uniform_random_bit_generator G>
        requires(!std::same_as<std::remove_cvref_t<G>, AnyRng>)
    AnyRng(G& gen) // NOLINT(google-explicit-constructor)
        : draw_([&gen] {
              std::uniform_int_distribution<std::uint64_t> all;
              return all(gen);
          })
    {
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return draw_(); }

private:
    std::function<std::uint64_t()> draw_;
};

} // namespace trr
