#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "nsga3lab/bits.hpp"
#include "nsga3lab/rng.hpp"

namespace nsga3lab {

/// Fitness image f(x); all entries are non-negative and bounded by f_max of
/// the owning problem. Maximization semantics throughout.
using ObjectiveVector = std::vector<std::int32_t>;

struct ObjectiveVectorHash {
    std::size_t operator()(const ObjectiveVector& v) const {
        std::uint64_t h = 0x9E3779B97F4A7C15ULL ^ (v.size() * 0xBF58476D1CE4E5B9ULL);
        for (std::int32_t x : v) {
            h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) + 0x9E3779B97F4A7C15ULL +
                 (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(RandomSource::finalize(h));
    }
};

enum class Dominance {
    StrictlyDominates, // u >= v componentwise with one strict inequality
    DominatedBy,
    Equal,
    Incomparable,
};

inline Dominance dominance(const ObjectiveVector& u, const ObjectiveVector& v) {
    if (u.size() != v.size())
        throw std::invalid_argument("dominance: mismatched objective dimensions");
    bool u_above = false, v_above = false;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (u[i] > v[i]) u_above = true;
        else if (u[i] < v[i]) v_above = true;
    }
    if (u_above && v_above) return Dominance::Incomparable;
    if (u_above) return Dominance::StrictlyDominates;
    if (v_above) return Dominance::DominatedBy;
    return Dominance::Equal;
}

inline bool strictly_dominates(const ObjectiveVector& u, const ObjectiveVector& v) {
    return dominance(u, v) == Dominance::StrictlyDominates;
}

struct Individual {
    BitString genotype;
    ObjectiveVector fitness; // cached at creation, equals problem evaluation
};

/// Ordered multiset of individuals; the engine keeps |population| == mu at
/// every generation boundary.
using Population = std::vector<Individual>;

/// Reusable buffers for non_dominated_sort; a caller that sorts every
/// generation keeps one of these to avoid per-call allocation.
struct NdsScratch {
    std::vector<std::int32_t> flat;
    std::vector<std::uint32_t> dominated_by_count;
    std::vector<std::uint8_t> dominates; // n x n matrix, [i*n+j] = i strictly dominates j
    std::vector<std::vector<std::uint32_t>> layers;
    std::size_t layer_count = 0;
};

/// Non-dominated sorting by dominance-count peeling, O(N^2 d). Fills
/// scratch.layers[0..layer_count): F^1 first, layers partition the input,
/// duplicates (by fitness) share a layer. One pass fills a relation matrix
/// over a flattened fitness copy; peeling walks matrix rows.
inline void non_dominated_sort(std::span<const ObjectiveVector> fitness, NdsScratch& s) {
    const std::uint32_t n = static_cast<std::uint32_t>(fitness.size());
    if (n == 0) throw std::invalid_argument("non_dominated_sort: empty input");
    const std::uint32_t d = static_cast<std::uint32_t>(fitness[0].size());
    for (const auto& f : fitness) {
        if (f.size() != d) throw std::invalid_argument("non_dominated_sort: mixed dimensions");
    }

    s.flat.resize(std::size_t(n) * d);
    for (std::uint32_t i = 0; i < n; ++i) {
        std::copy(fitness[i].begin(), fitness[i].end(), s.flat.begin() + std::size_t(i) * d);
    }
    s.dominated_by_count.assign(n, 0);
    s.dominates.assign(std::size_t(n) * n, 0);
    auto record = [&](std::uint32_t i, std::uint32_t j, bool a_above, bool b_above) {
        if (a_above && !b_above) {
            s.dominates[std::size_t(i) * n + j] = 1;
            ++s.dominated_by_count[j];
        } else if (b_above && !a_above) {
            s.dominates[std::size_t(j) * n + i] = 1;
            ++s.dominated_by_count[i];
        }
    };
    if (d == 2) {
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::int32_t a0 = s.flat[2 * i], a1 = s.flat[2 * i + 1];
            for (std::uint32_t j = i + 1; j < n; ++j) {
                const std::int32_t b0 = s.flat[2 * j], b1 = s.flat[2 * j + 1];
                record(i, j, a0 > b0 || a1 > b1, a0 < b0 || a1 < b1);
            }
        }
    } else {
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::int32_t* a = s.flat.data() + std::size_t(i) * d;
            for (std::uint32_t j = i + 1; j < n; ++j) {
                const std::int32_t* b = s.flat.data() + std::size_t(j) * d;
                bool a_above = false, b_above = false;
                for (std::uint32_t c = 0; c < d; ++c) {
                    a_above |= a[c] > b[c];
                    b_above |= a[c] < b[c];
                }
                record(i, j, a_above, b_above);
            }
        }
    }

    s.layer_count = 0;
    auto next_layer = [&]() -> std::vector<std::uint32_t>& {
        if (s.layers.size() == s.layer_count) s.layers.emplace_back();
        auto& layer = s.layers[s.layer_count++];
        layer.clear();
        return layer;
    };
    auto& first = next_layer();
    for (std::uint32_t i = 0; i < n; ++i) {
        if (s.dominated_by_count[i] == 0) first.push_back(i);
    }
    while (true) {
        const std::size_t current_index = s.layer_count - 1;
        std::vector<std::uint32_t>& next = next_layer(); // may grow s.layers
        const std::vector<std::uint32_t>& current = s.layers[current_index];
        for (std::uint32_t i : current) {
            const std::uint8_t* row = s.dominates.data() + std::size_t(i) * n;
            for (std::uint32_t j = 0; j < n; ++j) {
                if (row[j] && --s.dominated_by_count[j] == 0) next.push_back(j);
            }
        }
        if (next.empty()) {
            --s.layer_count;
            break;
        }
    }
}

inline std::vector<std::vector<std::uint32_t>> non_dominated_sort(
    std::span<const ObjectiveVector> fitness) {
    NdsScratch s;
    non_dominated_sort(fitness, s);
    s.layers.resize(s.layer_count);
    return std::move(s.layers);
}

inline std::vector<std::vector<std::uint32_t>> non_dominated_sort(
    const std::vector<ObjectiveVector>& fitness) {
    return non_dominated_sort(std::span<const ObjectiveVector>(fitness));
}

/// Standard bit mutation: each bit flips independently with probability 1/n.
/// Consumes exactly n Bernoulli draws in position order regardless of the
/// number of flips; this fixed draw schedule is part of the reproducibility
/// contract.
inline void standard_bit_mutation_in_place(BitString& x, RandomSource& rng) {
    const std::uint32_t n = x.size();
    for (std::uint32_t i = 0; i < n; ++i) {
        if (rng.next_one_in(n)) x.flip(i);
    }
}

inline BitString standard_bit_mutation(const BitString& x, RandomSource& rng) {
    BitString y = x;
    standard_bit_mutation_in_place(y, rng);
    return y;
}

} // namespace nsga3lab
