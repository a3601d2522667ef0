#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsga3lab/bits.hpp"
#include "nsga3lab/core.hpp"

namespace nsga3lab {

enum class Family { LOTZ, OMM, COCZ, OJZJ, RRMO };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::LOTZ: return "LOTZ";
        case Family::OMM: return "OMM";
        case Family::COCZ: return "COCZ";
        case Family::OJZJ: return "OJZJ";
        case Family::RRMO: return "RRMO";
    }
    return "?";
}

inline Family family_from_name(const std::string& s) {
    if (s == "LOTZ") return Family::LOTZ;
    if (s == "OMM") return Family::OMM;
    if (s == "COCZ") return Family::COCZ;
    if (s == "OJZJ") return Family::OJZJ;
    if (s == "RRMO") return Family::RRMO;
    throw std::invalid_argument("unknown problem family: " + s);
}

/// Constraint violation in a problem specification (names the violated
/// divisibility or parameter range).
struct SpecError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EnumerationTooLarge : std::runtime_error {
    std::uint64_t closed_form_size;
    explicit EnumerationTooLarge(std::uint64_t size)
        : std::runtime_error("front enumeration exceeds cap; closed-form size = " +
                             std::to_string(size)),
          closed_form_size(size) {}
};

/// Paper bounds on the maximum number of mutually incomparable solutions.
struct IncomparableBound {
    std::optional<std::uint64_t> lower; // absent where the source states none
    std::uint64_t upper = 0;
    bool exact = false; // true iff lower == upper == |S_d|
};

enum class BlockSymbol : std::uint8_t { Zero, One, Interior };

/// Per-block classification of a Pareto-optimal OJZJ fitness vector.
struct BlockLabel {
    std::vector<BlockSymbol> labels; // d/2 entries
};

enum class RrmoTag : std::uint8_t { L, M, N, Dead };

struct RrmoRegion {
    RrmoTag tag = RrmoTag::Dead;
    std::vector<std::uint32_t> blocks_in_a; // K(x), filled for N only
};

/// One of the five benchmark families with exact integer fitness.
/// All evaluation is pure; values are freely shareable across threads.
struct ProblemSpec {
    Family family = Family::OMM;
    std::uint32_t n = 0;
    std::uint32_t d = 2;
    std::uint32_t k = 0; // OJZJ gap size, unused elsewhere

    void validate() const {
        if (d < 2 || d % 2 != 0) throw SpecError("d must be even and >= 2");
        if (n == 0) throw SpecError("n must be positive");
        switch (family) {
            case Family::LOTZ:
            case Family::OMM:
                if (n % (d / 2) != 0)
                    throw SpecError(std::string(family_name(family)) + ": n must be divisible by d/2");
                break;
            case Family::COCZ:
                if (n % d != 0) throw SpecError("COCZ: n must be divisible by d");
                break;
            case Family::OJZJ:
                if (n % (d / 2) != 0) throw SpecError("OJZJ: n must be divisible by d/2");
                if (k < 2 || k > 2 * n / d)
                    throw SpecError("OJZJ: gap size k must satisfy 2 <= k <= 2n/d");
                break;
            case Family::RRMO:
                if (n % (5 * d / 2) != 0) throw SpecError("RRMO: n must be divisible by 5d/2");
                break;
        }
    }

    std::uint32_t block_len() const { return family == Family::COCZ ? n / d : 2 * n / d; }
    std::uint32_t block_count() const { return d / 2; }

    std::int32_t f_max() const {
        switch (family) {
            case Family::LOTZ:
            case Family::OMM: return static_cast<std::int32_t>(2 * n / d);
            case Family::COCZ: return static_cast<std::int32_t>(n / 2 + n / d);
            case Family::OJZJ: return static_cast<std::int32_t>(k + 2 * n / d);
            case Family::RRMO: return static_cast<std::int32_t>(2 * n / 5 + 2 * n / d);
        }
        return 0;
    }

    ObjectiveVector evaluate(const BitString& x) const {
        validate();
        ObjectiveVector out;
        evaluate_into(x, out);
        return out;
    }

    /// Allocation-free evaluation into an existing vector; assumes the spec
    /// has been validated once up front.
    void evaluate_into(const BitString& x, ObjectiveVector& out) const {
        if (x.size() != n) throw SpecError("evaluate: bit string length differs from spec n");
        out.resize(d);
        switch (family) {
            case Family::LOTZ: eval_lotz(x, out); break;
            case Family::OMM: eval_omm(x, out); break;
            case Family::COCZ: eval_cocz(x, out); break;
            case Family::OJZJ: eval_ojzj(x, out); break;
            case Family::RRMO: eval_rrmo(x, out); break;
        }
    }

    bool is_pareto_optimal(const BitString& x) const {
        validate();
        const std::uint32_t len = block_len();
        switch (family) {
            case Family::OMM:
                return true;
            case Family::LOTZ:
                for (std::uint32_t b = 0; b < block_count(); ++b) {
                    const BlockStats s = block_stats(x, b, len);
                    if (s.leading_ones + s.trailing_zeros != len) return false;
                }
                return true;
            case Family::COCZ: {
                std::uint32_t fh = 0;
                for (std::uint32_t i = 0; i < n / 2; ++i) fh += x.test(i);
                return fh == n / 2;
            }
            case Family::OJZJ:
                for (std::uint32_t b = 0; b < block_count(); ++b) {
                    const std::uint32_t o = block_stats(x, b, len).ones;
                    const bool ok = o == 0 || o == len || (o >= k && o <= len - k);
                    if (!ok) return false;
                }
                return true;
            case Family::RRMO: {
                const RrmoRegion r = rrmo_region(x);
                return r.tag == RrmoTag::N && r.blocks_in_a.size() == block_count();
            }
        }
        return false;
    }

    /// Number of Pareto-front fitness vectors, closed form.
    std::uint64_t front_size() const {
        validate();
        const std::uint64_t len = block_len();
        std::uint64_t per_block = 0;
        switch (family) {
            case Family::LOTZ:
            case Family::OMM: per_block = 2 * n / d + 1; break;
            case Family::COCZ: per_block = n / d + 1; break;
            case Family::OJZJ: per_block = len - 2 * k + 3; break;
            case Family::RRMO: per_block = 2 * n / (5 * d) + 1; break;
        }
        std::uint64_t total = 1;
        for (std::uint32_t b = 0; b < block_count(); ++b) total *= per_block;
        return total;
    }

    /// Exact set of Pareto-optimal fitness vectors, in lexicographic order of
    /// the per-block choices. Throws EnumerationTooLarge above the cap.
    std::vector<ObjectiveVector> enumerate_front(std::uint64_t cap = 1000000) const {
        const std::uint64_t size = front_size();
        if (size > cap) throw EnumerationTooLarge(size);
        std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> choices = front_block_choices();
        std::vector<ObjectiveVector> out;
        out.reserve(size);
        ObjectiveVector v(d, 0);
        enumerate_rec(choices, 0, v, out);
        return out;
    }

    /// One canonical genotype per front vector: 1^i 0^j blocks (LOTZ/OMM),
    /// all-ones first half plus 1^a 0^b blocks (COCZ), all-ones/all-zeros or
    /// interior blocks (OJZJ), 0^lz 1^(8n/5d) 0^tz blocks (RRMO).
    BitString canonical_preimage(const ObjectiveVector& v) const {
        validate();
        if (v.size() != d) throw SpecError("canonical_preimage: wrong dimension");
        BitString x(n);
        const std::uint32_t len = block_len();
        for (std::uint32_t b = 0; b < block_count(); ++b) {
            const std::int32_t a = v[2 * b];
            std::uint32_t start = (family == Family::COCZ ? n / 2 : 0) + b * len;
            std::uint32_t ones_prefix = 0, zeros_prefix = 0;
            switch (family) {
                case Family::LOTZ:
                case Family::OMM:
                    ones_prefix = require_range(a, 0, static_cast<std::int32_t>(len));
                    break;
                case Family::COCZ:
                    ones_prefix = require_range(a - static_cast<std::int32_t>(n / 2), 0,
                                                static_cast<std::int32_t>(len));
                    break;
                case Family::OJZJ: {
                    const std::int32_t ik = static_cast<std::int32_t>(k);
                    const std::int32_t il = static_cast<std::int32_t>(len);
                    if (a == ik) ones_prefix = 0;
                    else if (a == il + ik) ones_prefix = len;
                    else ones_prefix = require_range(a - ik, static_cast<std::int32_t>(k),
                                                     static_cast<std::int32_t>(len - k));
                    break;
                }
                case Family::RRMO: {
                    const std::int32_t base = static_cast<std::int32_t>(2 * n / 5 + 8 * n / (5 * d));
                    zeros_prefix = require_range(a - base, 0, static_cast<std::int32_t>(2 * n / (5 * d)));
                    ones_prefix = 8 * n / (5 * d);
                    break;
                }
            }
            for (std::uint32_t i = 0; i < ones_prefix; ++i) x.set(start + zeros_prefix + i, true);
        }
        if (family == Family::COCZ) {
            for (std::uint32_t i = 0; i < n / 2; ++i) x.set(i, true);
        }
        return x;
    }

    IncomparableBound incomparable_set_bound() const {
        validate();
        IncomparableBound b;
        const std::uint64_t len = 2 * n / d;
        switch (family) {
            case Family::LOTZ:
                if (d == 2) {
                    b.upper = n + 1;
                    b.lower = b.upper;
                    b.exact = true;
                } else {
                    b.upper = ipow(len + 1, d - 1);
                    b.lower = static_cast<std::uint64_t>(
                        static_cast<long double>(b.upper) /
                        (4.0L * static_cast<long double>(ipow(d - 2, d / 2 - 1))));
                    b.exact = false;
                }
                break;
            case Family::OMM:
                b.upper = ipow(len + 1, d / 2);
                b.lower = b.upper;
                b.exact = true;
                break;
            case Family::COCZ:
                b.upper = ipow(n / d + 1, d / 2);
                b.lower = b.upper;
                b.exact = true;
                break;
            case Family::OJZJ:
                b.upper = ipow(len + 1, d / 2);
                b.lower = front_size();
                b.exact = false;
                break;
            case Family::RRMO:
                b.upper = ipow(4 * n / (5 * d) + 1, d - 1);
                b.lower = std::nullopt;
                b.exact = false;
                break;
        }
        return b;
    }

    /// OJZJ only: per-block symbol string L(v) of a Pareto-optimal fitness
    /// vector. ONE if v_{2j-1} = 2n/d + k, ZERO if v_{2j-1} = k, interior if
    /// 2k <= v_{2j-1} <= 2n/d.
    BlockLabel block_label(const ObjectiveVector& v) const {
        validate();
        if (family != Family::OJZJ) throw SpecError("block_label: OJZJ only");
        if (v.size() != d) throw SpecError("block_label: wrong dimension");
        const std::int32_t len = static_cast<std::int32_t>(2 * n / d);
        const std::int32_t ik = static_cast<std::int32_t>(k);
        BlockLabel out;
        out.labels.reserve(block_count());
        for (std::uint32_t b = 0; b < block_count(); ++b) {
            const std::int32_t a = v[2 * b];
            if (a == len + ik) out.labels.push_back(BlockSymbol::One);
            else if (a == ik) out.labels.push_back(BlockSymbol::Zero);
            else if (a >= 2 * ik && a <= len) out.labels.push_back(BlockSymbol::Interior);
            else throw std::domain_error("block_label: vector is not Pareto optimal");
        }
        return out;
    }

    /// RRMO only: classifies x into L / M / N / DEAD; K(x) returned for N.
    RrmoRegion rrmo_region(const BitString& x) const {
        if (family != Family::RRMO) throw SpecError("rrmo_region: RRMO only");
        validate();
        const std::uint32_t len = block_len();
        const std::uint32_t q_b = 6 * n / (5 * d); // ones of a B block
        const std::uint32_t q_a = 8 * n / (5 * d); // ones of an A block

        bool all_le_quota = true, any_lt_quota = false, all_eq_quota = true;
        bool all_in_ab = true, any_not_b = false;
        std::vector<std::uint32_t> in_a;
        for (std::uint32_t b = 0; b < block_count(); ++b) {
            const BlockStats s = block_stats(x, b, len);
            const std::uint32_t pad = s.leading_zeros + s.trailing_zeros;
            const bool is_b = s.ones == q_b && pad == len - q_b;
            const bool is_a = s.ones == q_a && pad == len - q_a;
            if (s.ones > q_b) all_le_quota = false;
            if (s.ones < q_b) { any_lt_quota = true; all_eq_quota = false; }
            if (s.ones != q_b) all_eq_quota = false;
            if (!is_a && !is_b) all_in_ab = false;
            if (!is_b) any_not_b = true;
            if (is_a) in_a.push_back(b);
        }

        RrmoRegion r;
        if (all_le_quota && any_lt_quota) {
            r.tag = RrmoTag::L;
        } else if (all_eq_quota && any_not_b) {
            r.tag = RrmoTag::M;
        } else if (all_in_ab) {
            r.tag = RrmoTag::N;
            r.blocks_in_a = std::move(in_a);
        } else {
            r.tag = RrmoTag::Dead;
        }
        return r;
    }

private:
    static std::uint64_t ipow(std::uint64_t base, std::uint64_t e) {
        std::uint64_t r = 1;
        for (std::uint64_t i = 0; i < e; ++i) r *= base;
        return r;
    }

    static std::uint32_t require_range(std::int32_t v, std::int32_t lo, std::int32_t hi) {
        if (v < lo || v > hi)
            throw std::domain_error("canonical_preimage: vector is not on the Pareto front");
        return static_cast<std::uint32_t>(v);
    }

    void eval_lotz(const BitString& x, ObjectiveVector& f) const {
        const std::uint32_t len = block_len();
        for (std::uint32_t b = 0; b < block_count(); ++b) {
            const BlockStats s = block_stats(x, b, len);
            f[2 * b] = static_cast<std::int32_t>(s.leading_ones);
            f[2 * b + 1] = static_cast<std::int32_t>(s.trailing_zeros);
        }
    }

    void eval_omm(const BitString& x, ObjectiveVector& f) const {
        const std::uint32_t len = block_len();
        for (std::uint32_t b = 0; b < block_count(); ++b) {
            const BlockStats s = block_stats(x, b, len);
            f[2 * b] = static_cast<std::int32_t>(s.ones);
            f[2 * b + 1] = static_cast<std::int32_t>(s.zeros);
        }
    }

    void eval_cocz(const BitString& x, ObjectiveVector& f) const {
        std::int32_t fh = 0;
        for (std::uint32_t i = 0; i < n / 2; ++i) fh += x.test(i);
        const std::uint32_t len = block_len(); // n/d, second half only
        for (std::uint32_t b = 0; b < block_count(); ++b) {
            std::int32_t ones = 0;
            const std::uint32_t start = n / 2 + b * len;
            for (std::uint32_t i = 0; i < len; ++i) ones += x.test(start + i);
            f[2 * b] = fh + ones;
            f[2 * b + 1] = fh + static_cast<std::int32_t>(len) - ones;
        }
    }

    void eval_ojzj(const BitString& x, ObjectiveVector& f) const {
        const std::uint32_t len = block_len();
        const std::int32_t il = static_cast<std::int32_t>(len);
        const std::int32_t ik = static_cast<std::int32_t>(k);
        for (std::uint32_t b = 0; b < block_count(); ++b) {
            const std::int32_t o = static_cast<std::int32_t>(block_stats(x, b, len).ones);
            const std::int32_t z = il - o;
            f[2 * b] = (o <= il - ik || o == il) ? ik + o : il - o;
            f[2 * b + 1] = (z <= il - ik || z == il) ? ik + z : il - z;
        }
    }

    void eval_rrmo(const BitString& x, ObjectiveVector& f) const {
        const RrmoRegion r = rrmo_region(x);
        const std::uint32_t len = block_len();
        std::fill(f.begin(), f.end(), 0);
        if (r.tag == RrmoTag::Dead) return;
        const std::int32_t bonus =
            r.tag == RrmoTag::N
                ? static_cast<std::int32_t>(4 * n / (5 * d) * r.blocks_in_a.size())
                : 0;
        for (std::uint32_t b = 0; b < block_count(); ++b) {
            const BlockStats s = block_stats(x, b, len);
            const std::int32_t ones = static_cast<std::int32_t>(s.ones);
            if (r.tag == RrmoTag::L) {
                f[2 * b] = ones;
                f[2 * b + 1] = ones;
            } else {
                f[2 * b] = bonus + ones + static_cast<std::int32_t>(s.leading_zeros);
                f[2 * b + 1] = bonus + ones + static_cast<std::int32_t>(s.trailing_zeros);
            }
        }
    }

    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> front_block_choices() const {
        const std::int32_t len = static_cast<std::int32_t>(block_len());
        std::vector<std::pair<std::int32_t, std::int32_t>> per_block;
        switch (family) {
            case Family::LOTZ:
            case Family::OMM:
                for (std::int32_t i = 0; i <= len; ++i) per_block.emplace_back(i, len - i);
                break;
            case Family::COCZ: {
                const std::int32_t fh = static_cast<std::int32_t>(n / 2);
                for (std::int32_t a = 0; a <= len; ++a) per_block.emplace_back(fh + a, fh + len - a);
                break;
            }
            case Family::OJZJ: {
                const std::int32_t ik = static_cast<std::int32_t>(k);
                per_block.emplace_back(ik, ik + len);
                for (std::int32_t a = 2 * ik; a <= len; ++a)
                    per_block.emplace_back(a, 2 * ik + len - a);
                per_block.emplace_back(ik + len, ik);
                break;
            }
            case Family::RRMO: {
                const std::int32_t base = static_cast<std::int32_t>(2 * n / 5 + 8 * n / (5 * d));
                const std::int32_t z = static_cast<std::int32_t>(2 * n / (5 * d));
                for (std::int32_t lz = 0; lz <= z; ++lz)
                    per_block.emplace_back(base + lz, base + z - lz);
                break;
            }
        }
        return std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>>(block_count(),
                                                                               per_block);
    }

    void enumerate_rec(
        const std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>>& choices,
        std::uint32_t b, ObjectiveVector& v, std::vector<ObjectiveVector>& out) const {
        if (b == block_count()) {
            out.push_back(v);
            return;
        }
        for (const auto& [odd, even] : choices[b]) {
            v[2 * b] = odd;
            v[2 * b + 1] = even;
            enumerate_rec(choices, b + 1, v, out);
        }
    }
};

} // namespace nsga3lab
