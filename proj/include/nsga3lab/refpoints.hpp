#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsga3lab/problems.hpp"

namespace nsga3lab {

struct TooManyPoints : std::runtime_error {
    std::uint64_t closed_form_count;
    TooManyPoints(std::uint64_t count, std::uint64_t cap)
        : std::runtime_error("reference set would hold " + std::to_string(count) +
                             " points, above the cap of " + std::to_string(cap)),
          closed_form_count(count) {}
};

/// Result of associating a normalized fitness vector with its nearest
/// reference direction: canonical index of the point and the perpendicular
/// distance from the vector to the ray through the origin and that point.
struct Association {
    std::uint64_t ref_index = 0;
    double perp_distance = 0.0;
};

/// Squared distance from v to the line through the origin and the integer
/// direction r (the ray of r/p is the same ray). Both association paths and
/// the oracle score through this one routine so their floating-point results
/// are bit-identical; comparisons downstream use exact double ordering.
inline double perp_distance_sq(std::span<const double> v, std::span<const std::int32_t> r) {
    double dot = 0.0, v2 = 0.0, r2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double ri = static_cast<double>(r[i]);
        dot += v[i] * ri;
        v2 += v[i] * v[i];
        r2 += ri * ri;
    }
    const double q = v2 - dot * dot / r2;
    return q > 0.0 ? q : 0.0;
}

/// Euclidean norm of v minus its projection onto the ray of r.
inline double perp_distance(std::span<const double> v, std::span<const double> r) {
    if (v.size() != r.size()) throw std::invalid_argument("perp_distance: dimension mismatch");
    double dot = 0.0, v2 = 0.0, r2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        dot += v[i] * r[i];
        v2 += v[i] * v[i];
        r2 += r[i] * r[i];
    }
    if (r2 == 0.0) throw std::domain_error("perp_distance: zero reference direction");
    const double q = v2 - dot * dot / r2;
    return std::sqrt(q > 0.0 ? q : 0.0);
}

/// The simplex lattice R_p: all integer tuples (a_1..a_d) with sum p, each
/// standing for the direction (a_1/p, ..., a_d/p). Tuples are ordered
/// lexicographically; that order defines the canonical index used for
/// deterministic tie-breaking everywhere.
///
/// The set is numeric rather than materialized: it stores only (p, d) and
/// ranks/unranks tuples on demand. required_p at d = 4 already yields
/// millions of points, and the engine only needs index arithmetic plus a
/// local search around a query direction. materialize() exists for the CSV
/// dump and for tests.
class ReferencePointSet {
public:
    static constexpr std::uint64_t DEFAULT_CAP = 10000000;

    ReferencePointSet(std::uint32_t p, std::uint32_t d, std::uint64_t cap = DEFAULT_CAP)
        : p_(p), d_(d) {
        if (p < 1 || d < 2) throw std::invalid_argument("ReferencePointSet: need p >= 1, d >= 2");
        const std::uint64_t count = count_saturating(p, d);
        if (count > cap) throw TooManyPoints(count, cap);
        count_ = count;
    }

    std::uint32_t divisions() const { return p_; }
    std::uint32_t dimension() const { return d_; }
    std::uint64_t size() const { return count_; }

    /// Canonical (lexicographic) index of a lattice tuple.
    std::uint64_t index_of(std::span<const std::int32_t> a) const {
        std::uint64_t idx = 0;
        std::uint32_t remaining = p_;
        for (std::uint32_t i = 0; i + 1 < d_; ++i) {
            const std::uint32_t m = d_ - i; // coordinates still open
            idx += solutions(remaining, m) -
                   solutions(remaining - static_cast<std::uint32_t>(a[i]), m);
            remaining -= static_cast<std::uint32_t>(a[i]);
        }
        return idx;
    }

    std::vector<std::int32_t> tuple_at(std::uint64_t index) const {
        if (index >= count_) throw std::out_of_range("ReferencePointSet::tuple_at");
        std::vector<std::int32_t> a(d_, 0);
        std::uint32_t remaining = p_;
        for (std::uint32_t i = 0; i + 1 < d_; ++i) {
            const std::uint32_t m = d_ - i;
            const std::uint64_t total = solutions(remaining, m);
            // largest t with total - solutions(remaining - t, m) <= index
            std::uint32_t lo = 0, hi = remaining;
            while (lo < hi) {
                const std::uint32_t mid = (lo + hi + 1) / 2;
                if (total - solutions(remaining - mid, m) <= index) lo = mid;
                else hi = mid - 1;
            }
            a[i] = static_cast<std::int32_t>(lo);
            index -= total - solutions(remaining - lo, m);
            remaining -= lo;
        }
        a[d_ - 1] = static_cast<std::int32_t>(remaining);
        return a;
    }

    /// Visits every tuple in canonical order; O(1) amortized per tuple, no
    /// storage. Used by the association oracle and the CSV dump.
    template <typename Fn>
    void for_each(Fn&& fn) const {
        std::vector<std::int32_t> a(d_, 0);
        a[d_ - 1] = static_cast<std::int32_t>(p_);
        std::uint64_t idx = 0;
        for (;;) {
            fn(std::span<const std::int32_t>(a), idx);
            ++idx;
            std::int32_t i = static_cast<std::int32_t>(d_) - 2;
            std::int32_t slack = a[d_ - 1]; // p - sum of a[0..d-2]
            while (i >= 0 && slack == 0) {
                slack += a[static_cast<std::uint32_t>(i)];
                --i;
            }
            if (i < 0) return;
            ++a[static_cast<std::uint32_t>(i)];
            for (std::uint32_t j = static_cast<std::uint32_t>(i) + 1; j + 1 < d_; ++j) a[j] = 0;
            a[d_ - 1] = slack - 1;
        }
    }

    std::vector<std::vector<std::int32_t>> materialize() const {
        std::vector<std::vector<std::int32_t>> out;
        out.reserve(count_);
        for_each([&](std::span<const std::int32_t> a, std::uint64_t) {
            out.emplace_back(a.begin(), a.end());
        });
        return out;
    }

private:
    std::uint32_t p_, d_;
    std::uint64_t count_ = 0;

    /// C(p+d-1, d-1) with saturation at UINT64_MAX.
    static std::uint64_t count_saturating(std::uint64_t p, std::uint32_t d) {
        unsigned __int128 res = 1;
        for (std::uint32_t i = 1; i <= d - 1; ++i) {
            res = res * (p + i) / i; // exact: prefix products are binomials
            if (res > std::numeric_limits<std::uint64_t>::max())
                return std::numeric_limits<std::uint64_t>::max();
        }
        return static_cast<std::uint64_t>(res);
    }

    /// Number of non-negative integer m-tuples with sum s: C(s+m-1, m-1).
    /// Every value arising here is bounded by size(), so plain u64 is exact.
    std::uint64_t solutions(std::uint32_t s, std::uint32_t m) const {
        std::uint64_t res = 1;
        for (std::uint32_t i = 1; i <= m - 1; ++i) res = res * (s + i) / i;
        return res;
    }
};

inline ReferencePointSet generate(std::uint32_t p, std::uint32_t d,
                                  std::uint64_t cap = ReferencePointSet::DEFAULT_CAP) {
    return ReferencePointSet(p, d, cap);
}

/// Smallest p satisfying the same-reference lemma precondition
/// p >= 2 d^(3/2) f_max for the given problem.
inline std::uint64_t required_p(const ProblemSpec& spec) {
    spec.validate();
    const double v = 2.0 * std::pow(static_cast<double>(spec.d), 1.5) *
                     static_cast<double>(spec.f_max());
    return static_cast<std::uint64_t>(std::ceil(v));
}

/// Division count used by the runtime theorems: 4 n sqrt(d) for the families
/// whose f_max is 2n/d, the lemma value elsewhere.
inline std::uint64_t theorem_p(const ProblemSpec& spec) {
    spec.validate();
    switch (spec.family) {
        case Family::LOTZ:
        case Family::OMM:
        case Family::OJZJ:
            return static_cast<std::uint64_t>(
                std::ceil(4.0 * spec.n * std::sqrt(static_cast<double>(spec.d))));
        default:
            return required_p(spec);
    }
}

namespace detail {

/// State for the boxed association search.
struct AssocSearch {
    const ReferencePointSet* set;
    std::span<const double> v;
    const std::int32_t* center;
    std::int32_t radius;
    double prune_scale; // d p^2 / |v|^2
    std::uint32_t d;
    std::vector<std::int32_t> a;
    double best_sq = std::numeric_limits<double>::infinity();
    bool have_best = false;
    std::uint64_t best_index = 0;

    bool prunable(std::int32_t m) const {
        return have_best && m > 2 &&
               static_cast<double>(m - 2) * static_cast<double>(m - 2) > prune_scale * best_sq;
    }

    void walk(std::uint32_t i, std::int32_t remaining, std::int32_t m_so_far) {
        if (i + 1 == d) {
            const std::int32_t dev = std::abs(remaining - center[i]);
            if (remaining < 0 || dev > radius) return;
            const std::int32_t m = std::max(m_so_far, dev);
            if (prunable(m)) return;
            a[i] = remaining;
            const double q = perp_distance_sq(v, a);
            if (!have_best || q < best_sq) {
                have_best = true;
                best_sq = q;
                best_index = set->index_of(a);
            }
            return;
        }
        const std::int32_t lo = std::max(0, center[i] - radius);
        const std::int32_t hi = std::min(remaining, center[i] + radius);
        for (std::int32_t t = lo; t <= hi; ++t) {
            const std::int32_t m = std::max(m_so_far, std::abs(t - center[i]));
            if (prunable(m)) continue;
            a[i] = t;
            walk(i + 1, remaining - t, m);
        }
    }
};

} // namespace detail

/// Exact argmin of perpendicular distance over all lattice points by linear
/// scan in canonical order; ties resolve to the lowest index. The all-zeros
/// vector associates with index 0 (every ray passes through the origin, so
/// all distances are 0). Reference semantics for associate().
inline Association associate_oracle(const ReferencePointSet& set, std::span<const double> v) {
    if (v.size() != set.dimension()) throw std::invalid_argument("associate: dimension mismatch");
    bool all_zero = true;
    for (double x : v) {
        if (x < 0.0 || !std::isfinite(x))
            throw std::domain_error("associate: components must be finite and non-negative");
        if (x != 0.0) all_zero = false;
    }
    if (all_zero) return Association{0, 0.0};

    std::uint64_t best_index = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    set.for_each([&](std::span<const std::int32_t> a, std::uint64_t idx) {
        const double q = perp_distance_sq(v, a);
        if (q < best_sq) {
            best_sq = q;
            best_index = idx;
        }
    });
    return Association{best_index, std::sqrt(best_sq)};
}

/// Accelerated association, contract-identical to associate_oracle on every
/// input. Scales v onto the sum-p lattice plane, rounds to a center tuple by
/// floor-then-distribute, then scores all lattice tuples within an L-inf box
/// around the center, pruned by the angle bound sin(theta) >= (m-2)/(p sqrt d)
/// for tuples m steps out. Radius ceil(d^(3/2)) + 2 covers every tuple that
/// can still attain the optimum angle arcsin(d/p); enumeration is in
/// canonical order so distance ties resolve to the lowest index, exactly as
/// the oracle does.
inline Association associate(const ReferencePointSet& set, std::span<const double> v) {
    const std::uint32_t d = set.dimension();
    const std::uint32_t p = set.divisions();
    if (v.size() != d) throw std::invalid_argument("associate: dimension mismatch");

    bool all_zero = true;
    double vmax = 0.0, v2 = 0.0;
    for (double x : v) {
        if (x < 0.0 || !std::isfinite(x))
            throw std::domain_error("associate: components must be finite and non-negative");
        if (x != 0.0) all_zero = false;
        if (x > vmax) vmax = x;
        v2 += x * x;
    }
    if (all_zero) return Association{0, 0.0};

    // Center tuple: floor of v scaled to the sum-p plane, remainder spread to
    // the largest fractional parts. Work on v / vmax so the scale factor
    // stays finite for near-zero inputs; the center is only a search origin.
    std::vector<double> b(d);
    double sum = 0.0;
    for (std::uint32_t i = 0; i < d; ++i) sum += v[i] / vmax;
    std::vector<std::int32_t> center(d);
    std::int64_t deficit = p;
    for (std::uint32_t i = 0; i < d; ++i) {
        b[i] = (v[i] / vmax) * (static_cast<double>(p) / sum);
        double f = std::floor(b[i]);
        if (f < 0.0) f = 0.0;
        if (f > static_cast<double>(p)) f = static_cast<double>(p);
        center[i] = static_cast<std::int32_t>(f);
        deficit -= center[i];
    }
    while (deficit > 0) {
        std::uint32_t arg = d;
        double frac = -std::numeric_limits<double>::infinity();
        for (std::uint32_t i = 0; i < d; ++i) {
            const double fr = b[i] - static_cast<double>(center[i]);
            if (center[i] < static_cast<std::int32_t>(p) && fr > frac) {
                frac = fr;
                arg = i;
            }
        }
        ++center[arg];
        --deficit;
    }
    while (deficit < 0) {
        std::uint32_t arg = d;
        double frac = std::numeric_limits<double>::infinity();
        for (std::uint32_t i = 0; i < d; ++i) {
            const double fr = b[i] - static_cast<double>(center[i]);
            if (center[i] > 0 && fr < frac) {
                frac = fr;
                arg = i;
            }
        }
        --center[arg];
        ++deficit;
    }

    detail::AssocSearch search{
        &set,
        v,
        center.data(),
        static_cast<std::int32_t>(std::ceil(std::pow(static_cast<double>(d), 1.5))) + 2,
        static_cast<double>(d) * static_cast<double>(p) * static_cast<double>(p) / v2,
        d,
        std::vector<std::int32_t>(d, 0),
    };
    search.walk(0, static_cast<std::int32_t>(p), 0);
    return Association{search.best_index, std::sqrt(search.best_sq)};
}

} // namespace nsga3lab
