#pragma once

#include <cstdint>
#include <stdexcept>

namespace nsga3lab {

/// Deterministic 64-bit random source with bit-for-bit reproducibility.
///
/// The generator is SplitMix64 (Steele & Vigna) written in counter form:
/// draw number c (1-based) returns finalize(seed + c * 0x9E3779B97F4A7C15).
/// The full state is therefore the pair (seed, counter), which is what the
/// engine snapshot format serializes. Identical seed + identical call
/// sequence gives identical draws on every platform.
///
/// Each RandomSource is owned by exactly one run; never share across threads.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed, std::uint64_t counter = 0)
        : seed_(seed), counter_(counter) {}

    std::uint64_t next_u64() {
        ++counter_;
        return finalize(seed_ + counter_ * GOLDEN);
    }

    /// Uniform draw in [0, bound) via the multiply-shift reduction
    /// (Lemire). One draw consumed per call, bound >= 1.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("RandomSource::next_below: bound must be >= 1");
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
    }

    /// Bernoulli event with probability 1/n (exactly one draw consumed).
    bool next_one_in(std::uint64_t n) { return next_below(n) == 0; }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    /// Child-seed derivation for run r of a sweep:
    ///   child = finalize(master ^ (finalize(r) + GOLDEN))
    static std::uint64_t mix(std::uint64_t master_seed, std::uint64_t run_index) {
        return finalize(master_seed ^ (finalize(run_index) + GOLDEN));
    }

    static std::uint64_t finalize(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    static constexpr std::uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL;

    std::uint64_t seed_;
    std::uint64_t counter_;
};

} // namespace nsga3lab
