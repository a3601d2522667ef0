#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nsga3lab/rng.hpp"

namespace nsga3lab {

/// Fixed-length bit string over {0,1}^n. Positions are 1-based in all prose
/// and doc comments (matching the usual pseudo-Boolean convention); the C++
/// API is 0-based. Length is immutable after construction.
class BitString {
public:
    explicit BitString(std::uint32_t n) : n_(n), words_((n + 63) / 64, 0) {}

    /// Uniform random string; consumes exactly n draws, one per position,
    /// in position order (bit = lowest bit of the draw).
    static BitString random(std::uint32_t n, RandomSource& rng) {
        BitString x(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            if (rng.next_u64() & 1u) x.set(i, true);
        }
        return x;
    }

    std::uint32_t size() const { return n_; }

    bool test(std::uint32_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }

    void set(std::uint32_t i, bool v) {
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (v) words_[i >> 6] |= mask;
        else words_[i >> 6] &= ~mask;
    }

    void flip(std::uint32_t i) { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

    std::uint32_t count_ones() const {
        std::uint32_t c = 0;
        for (std::uint64_t w : words_) c += static_cast<std::uint32_t>(std::popcount(w));
        return c;
    }

    bool operator==(const BitString& o) const { return n_ == o.n_ && words_ == o.words_; }
    bool operator!=(const BitString& o) const { return !(*this == o); }

    /// Hex encoding used by the engine snapshot format: bits in position
    /// order, four per digit, position 1 as the most significant bit of the
    /// first digit; the last digit is zero-padded.
    std::string to_hex() const {
        static const char digits[] = "0123456789abcdef";
        std::string out;
        out.reserve((n_ + 3) / 4);
        for (std::uint32_t i = 0; i < n_; i += 4) {
            unsigned nibble = 0;
            for (std::uint32_t j = 0; j < 4 && i + j < n_; ++j) {
                if (test(i + j)) nibble |= 8u >> j;
            }
            out.push_back(digits[nibble]);
        }
        return out;
    }

    static BitString from_hex(std::string_view hex, std::uint32_t n) {
        if (hex.size() != (n + 3) / 4)
            throw std::invalid_argument("BitString::from_hex: length mismatch");
        BitString x(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            const char c = hex[i / 4];
            unsigned nibble;
            if (c >= '0' && c <= '9') nibble = static_cast<unsigned>(c - '0');
            else if (c >= 'a' && c <= 'f') nibble = static_cast<unsigned>(c - 'a') + 10;
            else if (c >= 'A' && c <= 'F') nibble = static_cast<unsigned>(c - 'A') + 10;
            else throw std::invalid_argument("BitString::from_hex: invalid digit");
            if (nibble & (8u >> (i & 3))) x.set(i, true);
        }
        return x;
    }

private:
    std::uint32_t n_;
    std::vector<std::uint64_t> words_;
};

/// Per-block scan counts. LO/TO are the longest all-ones prefix/suffix,
/// LZ/TZ the longest all-zeros prefix/suffix of the block.
struct BlockStats {
    std::uint32_t ones = 0;
    std::uint32_t zeros = 0;
    std::uint32_t leading_ones = 0;
    std::uint32_t trailing_zeros = 0;
    std::uint32_t leading_zeros = 0;
    std::uint32_t trailing_ones = 0;
};

/// Stats of block `block` (0-based) when x is split into n/block_len blocks
/// of equal length. Requires n divisible by block_len.
inline BlockStats block_stats(const BitString& x, std::uint32_t block, std::uint32_t block_len) {
    if (block_len == 0 || x.size() % block_len != 0)
        throw std::invalid_argument("block_stats: n not divisible into blocks of given length");
    const std::uint32_t nblocks = x.size() / block_len;
    if (block >= nblocks) throw std::out_of_range("block_stats: block index out of range");

    const std::uint32_t lo = block * block_len;
    BlockStats s;
    for (std::uint32_t i = 0; i < block_len; ++i) {
        if (x.test(lo + i)) ++s.ones;
    }
    s.zeros = block_len - s.ones;
    while (s.leading_ones < block_len && x.test(lo + s.leading_ones)) ++s.leading_ones;
    while (s.trailing_zeros < block_len && !x.test(lo + block_len - 1 - s.trailing_zeros)) ++s.trailing_zeros;
    while (s.leading_zeros < block_len && !x.test(lo + s.leading_zeros)) ++s.leading_zeros;
    while (s.trailing_ones < block_len && x.test(lo + block_len - 1 - s.trailing_ones)) ++s.trailing_ones;
    return s;
}

} // namespace nsga3lab
