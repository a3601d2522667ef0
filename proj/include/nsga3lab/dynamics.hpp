#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nsga3lab/core.hpp"
#include "nsga3lab/normalization.hpp"
#include "nsga3lab/refpoints.hpp"

namespace nsga3lab {

/// Fitness vector -> number of carriers in a population snapshot.
using CoverMap = std::unordered_map<ObjectiveVector, std::uint32_t, ObjectiveVectorHash>;

inline CoverMap cover_numbers(const Population& pop) {
    CoverMap m;
    for (const Individual& ind : pop) ++m[ind.fitness];
    return m;
}

inline CoverMap cover_numbers(const std::vector<ObjectiveVector>& fitness) {
    CoverMap m;
    for (const auto& f : fitness) ++m[f];
    return m;
}

enum class LemmaId : std::uint8_t { L1, L5, L6, L7_1, L7_3, L9_2 };

inline const char* lemma_name(LemmaId id) {
    switch (id) {
        case LemmaId::L1: return "L1";
        case LemmaId::L5: return "L5";
        case LemmaId::L6: return "L6";
        case LemmaId::L7_1: return "L7-1";
        case LemmaId::L7_3: return "L7-3";
        case LemmaId::L9_2: return "L9-2";
    }
    return "?";
}

struct Violation {
    std::uint64_t generation = 0;
    LemmaId lemma = LemmaId::L1;
    ObjectiveVector witness;
    std::string detail;
};

/// Append-only within a run; serialized as CSV rows
/// generation,lemma_id,witness,detail.
struct ViolationLog {
    std::vector<Violation> entries;

    void append(Violation v) { entries.push_back(std::move(v)); }
    bool empty() const { return entries.empty(); }
    std::size_t size() const { return entries.size(); }

    void to_csv(std::ostream& os) const {
        os << "generation,lemma_id,witness,detail\n";
        for (const auto& e : entries) {
            os << e.generation << ',' << lemma_name(e.lemma) << ',';
            for (std::size_t i = 0; i < e.witness.size(); ++i) {
                if (i) os << ' ';
                os << e.witness[i];
            }
            os << ',' << e.detail << '\n';
        }
    }
};

/// Data captured per generation for the cross-generation lemma checks.
/// `merged_first_layer` holds the distinct fitness vectors of the first
/// non-dominated layer of the full merge P_t u Q_t (before any stochastic
/// subsample), sorted lexicographically. `vector_is_pareto` flags front
/// membership of each distinct vector in P_t (fitness determines Pareto
/// status for all five families).
struct PopulationSnapshot {
    std::uint64_t generation = 0;
    CoverMap cover;                                // of P_t
    std::vector<ObjectiveVector> merged_first_layer;
    std::unordered_map<ObjectiveVector, bool, ObjectiveVectorHash> vector_is_pareto;
    bool all_pareto = false;
};

struct TransitionConfig {
    std::uint32_t mu = 0;
    int a = 0;
    std::uint64_t s_upper = 1; // upper bound on |S_d| (exact where available)
};

namespace detail {
inline std::string vec_to_string(const ObjectiveVector& v) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ' ';
        os << v[i];
    }
    os << ')';
    return os.str();
}
} // namespace detail

/// Checks one generation transition (prev = snapshot after creating P_t,
/// next = snapshot after creating P_{t+1}) against the protection and
/// cover-monotonicity lemmas. Empty result iff all applicable conditions
/// hold. Preconditions of the lemmas (p >= required_p, mu >= (1+a)|S_d|,
/// eps_nad >= f_max) are the caller's responsibility.
inline std::vector<Violation> check_transition(const PopulationSnapshot& prev,
                                               const PopulationSnapshot& next,
                                               const TransitionConfig& cfg) {
    std::vector<Violation> out;

    // L6: every fitness vector in the first layer of P_t u Q_t keeps a
    // carrier in P_{t+1}.
    for (const auto& v : prev.merged_first_layer) {
        const auto it = next.cover.find(v);
        if (it == next.cover.end() || it->second == 0) {
            out.push_back({next.generation, LemmaId::L6, v,
                           "first-layer vector lost (cover " +
                               std::to_string(prev.cover.count(v) ? prev.cover.at(v) : 0) +
                               " -> 0)"});
        }
    }

    // L7(1): vectors non-dominated in the merged pools of both generations
    // keep cover >= min(c_t, floor(mu / ((1+a)|S_d|))). The opportunistic
    // L7(2) consequence is reported inside the violation detail: any decrease
    // of an at-threshold cover bounds every next-generation cover by c_t(v).
    const std::uint64_t threshold =
        cfg.mu / (static_cast<std::uint64_t>(1 + cfg.a) * cfg.s_upper);
    for (const auto& v : prev.merged_first_layer) {
        if (!std::binary_search(next.merged_first_layer.begin(), next.merged_first_layer.end(), v))
            continue;
        const auto pit = prev.cover.find(v);
        const std::uint64_t c_prev = pit == prev.cover.end() ? 0 : pit->second;
        const std::uint64_t b = std::min(c_prev, threshold);
        const auto nit = next.cover.find(v);
        const std::uint64_t c_next = nit == next.cover.end() ? 0 : nit->second;
        if (c_next < b) {
            std::uint32_t max_next = 0;
            for (const auto& [w, c] : next.cover) max_next = std::max(max_next, c);
            out.push_back({next.generation, LemmaId::L7_1, v,
                           "protected cover dropped " + std::to_string(c_prev) + " -> " +
                               std::to_string(c_next) + " (threshold " + std::to_string(threshold) +
                               ", max next cover " + std::to_string(max_next) + ")"});
        }
    }

    // L7(3), a = 0 only: with P_t fully Pareto-optimal, the maximum cover of
    // front vectors does not increase.
    if (cfg.a == 0 && prev.all_pareto) {
        std::uint32_t m_prev = 0;
        for (const auto& [v, c] : prev.cover) m_prev = std::max(m_prev, c);
        std::uint32_t m_next = 0;
        ObjectiveVector arg_next;
        for (const auto& [v, c] : next.cover) {
            const auto it = next.vector_is_pareto.find(v);
            if (it != next.vector_is_pareto.end() && it->second && c > m_next) {
                m_next = c;
                arg_next = v;
            }
        }
        if (m_next > m_prev) {
            out.push_back({next.generation, LemmaId::L7_3, arg_next,
                           "max front cover increased " + std::to_string(m_prev) + " -> " +
                               std::to_string(m_next)});
        }
    }

    std::sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
        if (a.lemma != b.lemma) return a.lemma < b.lemma;
        return a.witness < b.witness;
    });
    return out;
}

/// Lemma 1 online check: every normalized component of every member of R_t
/// in [0,1] and y_nad - y_min <= f_max per objective. Zero tolerance.
inline std::vector<Violation> check_lemma1(const NormalizedMap& map,
                                           const std::vector<ObjectiveVector>& r_t,
                                           double f_max, std::uint64_t generation) {
    std::vector<Violation> out;
    for (std::size_t j = 0; j < map.y_nad.size(); ++j) {
        if (map.y_nad[j] - map.y_min[j] > f_max) {
            out.push_back({generation, LemmaId::L1, ObjectiveVector{},
                           "y_nad - y_min = " + std::to_string(map.y_nad[j] - map.y_min[j]) +
                               " > f_max in objective " + std::to_string(j + 1)});
        }
    }
    std::vector<double> fn;
    for (const auto& f : r_t) {
        map.apply(f, fn);
        for (std::size_t j = 0; j < fn.size(); ++j) {
            if (!(fn[j] >= 0.0 && fn[j] <= 1.0)) {
                out.push_back({generation, LemmaId::L1, f,
                               "normalized component " + std::to_string(fn[j]) +
                                   " outside [0,1] in objective " + std::to_string(j + 1)});
                break;
            }
        }
    }
    return out;
}

/// Lemma 5 online check over one first layer: members with equal fitness
/// must share a reference point, members with distinct fitness must not.
/// Group-based, so it covers all C(layer,2) pairs; `pairs_checked` reports
/// that count.
inline std::vector<Violation> check_lemma5(const std::vector<ObjectiveVector>& layer_fitness,
                                           const std::vector<std::uint64_t>& layer_refs,
                                           std::uint64_t generation,
                                           std::uint64_t* pairs_checked = nullptr) {
    std::vector<Violation> out;
    const std::size_t m = layer_fitness.size();
    if (pairs_checked) *pairs_checked += static_cast<std::uint64_t>(m) * (m - 1) / 2;
    if (m < 2) return out;

    // group by sorting an index array: within a fitness group all refs must
    // match, within a ref group all fitness vectors must match
    std::vector<std::uint32_t> order(m);
    for (std::uint32_t i = 0; i < m; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return layer_fitness[a] < layer_fitness[b];
    });
    for (std::size_t i = 1; i < m; ++i) {
        const std::uint32_t a = order[i - 1], b = order[i];
        if (layer_fitness[a] == layer_fitness[b] && layer_refs[a] != layer_refs[b]) {
            out.push_back({generation, LemmaId::L5, layer_fitness[a],
                           "equal fitness mapped to reference points " +
                               std::to_string(layer_refs[a]) + " and " +
                               std::to_string(layer_refs[b])});
        }
    }
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return layer_refs[a] < layer_refs[b];
    });
    for (std::size_t i = 1; i < m; ++i) {
        const std::uint32_t a = order[i - 1], b = order[i];
        if (layer_refs[a] == layer_refs[b] && layer_fitness[a] != layer_fitness[b]) {
            out.push_back({generation, LemmaId::L5, layer_fitness[b],
                           "reference point " + std::to_string(layer_refs[b]) +
                               " shared with fitness " + detail::vec_to_string(layer_fitness[a])});
        }
    }
    return out;
}

/// Lemma 9(2) predicate: every v in V has cover <= ceil(mu / |V|). Advisory;
/// the harness records the first generation where it holds rather than
/// treating early falsehood as a violation.
inline bool sparsity_check(const CoverMap& cover, std::uint32_t mu,
                           const std::vector<ObjectiveVector>& v_set) {
    if (v_set.empty()) throw std::invalid_argument("sparsity_check: empty V");
    const std::uint64_t bound = (mu + v_set.size() - 1) / v_set.size();
    for (const auto& v : v_set) {
        const auto it = cover.find(v);
        if (it != cover.end() && it->second > bound) return false;
    }
    return true;
}

/// Exact maximum antichain size in the dominance order over distinct
/// vectors, via Dilworth: minimum chain cover = |V| - maximum bipartite
/// matching on the strict-dominance DAG (already transitively closed).
/// Matching by Hopcroft-Karp.
inline std::uint32_t max_antichain_oracle(const std::vector<ObjectiveVector>& vectors,
                                          std::size_t cap = 5000) {
    std::vector<ObjectiveVector> nodes = vectors;
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    const std::uint32_t n = static_cast<std::uint32_t>(nodes.size());
    if (n > cap) throw std::invalid_argument("max_antichain_oracle: input above oracle scale cap");
    if (n == 0) return 0;

    std::vector<std::vector<std::uint32_t>> adj(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < n; ++j) {
            if (i != j && strictly_dominates(nodes[i], nodes[j])) adj[i].push_back(j);
        }
    }

    constexpr std::uint32_t NIL = 0xFFFFFFFF;
    std::vector<std::uint32_t> match_left(n, NIL), match_right(n, NIL), dist(n);
    auto bfs = [&]() {
        std::queue<std::uint32_t> q;
        bool found = false;
        for (std::uint32_t u = 0; u < n; ++u) {
            dist[u] = match_left[u] == NIL ? 0 : NIL;
            if (match_left[u] == NIL) q.push(u);
        }
        while (!q.empty()) {
            const std::uint32_t u = q.front();
            q.pop();
            for (std::uint32_t v : adj[u]) {
                const std::uint32_t w = match_right[v];
                if (w == NIL) {
                    found = true;
                } else if (dist[w] == NIL) {
                    dist[w] = dist[u] + 1;
                    q.push(w);
                }
            }
        }
        return found;
    };
    std::function<bool(std::uint32_t)> dfs = [&](std::uint32_t u) {
        for (std::uint32_t v : adj[u]) {
            const std::uint32_t w = match_right[v];
            if (w == NIL || (dist[w] == dist[u] + 1 && dfs(w))) {
                match_left[u] = v;
                match_right[v] = u;
                return true;
            }
        }
        dist[u] = NIL;
        return false;
    };

    std::uint32_t matching = 0;
    while (bfs()) {
        for (std::uint32_t u = 0; u < n; ++u) {
            if (match_left[u] == NIL && dfs(u)) ++matching;
        }
    }
    return n - matching;
}

} // namespace nsga3lab
