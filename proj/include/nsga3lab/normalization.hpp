#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "nsga3lab/core.hpp"

namespace nsga3lab {

/// Cross-generation normalization state: historical per-objective minimum
/// over all merged populations, historical maximum over first layers, the
/// persisted extreme-point archive E_t, and the validity threshold eps_nad.
/// Owned by a single engine run; part of the serialized engine state.
struct NormalizerState {
    std::vector<double> y_min; // empty until the first generation
    std::vector<double> y_max;
    std::vector<ObjectiveVector> extreme_archive; // winners of the previous generation, <= d entries
    double eps_nad = 0.0;
};

/// The affine map emitted for one generation. Degenerate objectives
/// (denominator <= 0 after every fallback) map to 0.
struct NormalizedMap {
    std::vector<double> y_min;
    std::vector<double> y_nad;
    std::vector<std::uint8_t> degenerate;

    void apply(const ObjectiveVector& f, std::vector<double>& out) const {
        out.resize(f.size());
        for (std::size_t j = 0; j < f.size(); ++j) {
            out[j] = degenerate[j]
                         ? 0.0
                         : (static_cast<double>(f[j]) - y_min[j]) / (y_nad[j] - y_min[j]);
        }
    }

    std::vector<double> apply(const ObjectiveVector& f) const {
        std::vector<double> out;
        apply(f, out);
        return out;
    }
};

/// Extreme point in objective j under the maximization-adapted achievement
/// scalarization: argmin over candidates of max_i (y_max_i - v_i) / w_i with
/// w_j = 1 and w_i = 10^6 for i != j, so deviation from y_max in objective j
/// dominates the score and the winner is the candidate extended farthest
/// along axis j. Ties break to the lexicographically largest vector.
inline ObjectiveVector asf_extreme(const std::vector<ObjectiveVector>& candidates,
                                   std::uint32_t j, std::span<const double> y_max) {
    if (candidates.empty()) throw std::invalid_argument("asf_extreme: no candidates");
    const std::size_t d = y_max.size();
    auto score = [&](const ObjectiveVector& v) {
        double s = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < d; ++i) {
            const double dev = (y_max[i] - static_cast<double>(v[i])) / (i == j ? 1.0 : 1e6);
            if (dev > s) s = dev;
        }
        return s;
    };
    const ObjectiveVector* best = &candidates[0];
    double best_score = score(candidates[0]);
    for (std::size_t c = 1; c < candidates.size(); ++c) {
        const double s = score(candidates[c]);
        if (s < best_score || (s == best_score && candidates[c] > *best)) {
            best_score = s;
            best = &candidates[c];
        }
    }
    return *best;
}

/// Axis intercepts of the hyperplane through the d extreme points, i.e. the
/// I_j with sum_i v_i / I_i = 1 on the plane. Returns nullopt (SINGULAR) when
/// the points are linearly dependent under a relative pivot tolerance of
/// 1e-9, or when an intercept is non-finite (plane parallel to an axis).
/// Negative finite intercepts are returned as-is; the validity cascade
/// rejects them. Intercepts are computed on raw (untranslated) extreme
/// points because the validity tests compare against eps_nad and y_max in
/// original units.
inline std::optional<std::vector<double>> hyperplane_intercepts(
    const std::vector<ObjectiveVector>& extremes) {
    const std::size_t d = extremes.size();
    if (d == 0) throw std::invalid_argument("hyperplane_intercepts: empty input");
    for (const auto& e : extremes) {
        if (e.size() != d) throw std::invalid_argument("hyperplane_intercepts: need d vectors of dim d");
    }

    // solve M beta = 1 with rows = extreme points
    std::vector<std::vector<double>> m(d, std::vector<double>(d + 1, 1.0));
    double max_norm = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
        double norm = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            m[r][c] = static_cast<double>(extremes[r][c]);
            norm += m[r][c] * m[r][c];
        }
        max_norm = std::max(max_norm, std::sqrt(norm));
    }
    const double tol = 1e-9 * std::max(max_norm, 1.0);

    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r) {
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        }
        if (std::abs(m[pivot][col]) <= tol) return std::nullopt;
        std::swap(m[col], m[pivot]);
        for (std::size_t r = 0; r < d; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (std::size_t c = col; c <= d; ++c) m[r][c] -= f * m[col][c];
        }
    }
    std::vector<double> intercepts(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double beta = m[j][d] / m[j][j];
        const double i_j = 1.0 / beta;
        if (!std::isfinite(i_j)) return std::nullopt;
        intercepts[j] = i_j;
    }
    return intercepts;
}

/// One full pass of the normalization procedure: update the historical
/// ideal/max trackers from R_t and its first layer, refresh the extreme-point
/// archive from f(selection pool) U E_{t-1}, run the intercept validity
/// cascade, and emit the affine map. r_t is the (post-update) merged set;
/// first_layer and selection_pool index into it.
inline NormalizedMap normalize_generation(NormalizerState& state,
                                          const std::vector<ObjectiveVector>& r_t,
                                          const std::vector<std::uint32_t>& first_layer,
                                          const std::vector<std::uint32_t>& selection_pool) {
    if (r_t.empty() || first_layer.empty() || selection_pool.empty())
        throw std::invalid_argument("normalize_generation: empty inputs");
    const std::size_t d = r_t[0].size();
    if (state.y_min.empty()) {
        state.y_min.assign(d, std::numeric_limits<double>::infinity());
        state.y_max.assign(d, -std::numeric_limits<double>::infinity());
    }

    std::vector<double> first_layer_max(d, -std::numeric_limits<double>::infinity());
    std::vector<double> all_max(d, -std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < d; ++j) {
        for (const auto& f : r_t) {
            const double v = static_cast<double>(f[j]);
            state.y_min[j] = std::min(state.y_min[j], v);
            all_max[j] = std::max(all_max[j], v);
        }
        for (std::uint32_t i : first_layer) {
            first_layer_max[j] = std::max(first_layer_max[j], static_cast<double>(r_t[i][j]));
        }
        state.y_max[j] = std::max(state.y_max[j], first_layer_max[j]);
    }

    std::vector<ObjectiveVector> candidates;
    candidates.reserve(selection_pool.size() + state.extreme_archive.size());
    for (std::uint32_t i : selection_pool) candidates.push_back(r_t[i]);
    for (const auto& e : state.extreme_archive) candidates.push_back(e);

    std::vector<ObjectiveVector> extremes(d);
    for (std::uint32_t j = 0; j < d; ++j) {
        extremes[j] = asf_extreme(candidates, j, state.y_max);
    }
    state.extreme_archive = extremes;

    std::vector<double> y_nad(d, 0.0);
    bool valid = false;
    if (auto intercepts = hyperplane_intercepts(extremes)) {
        valid = true;
        for (std::size_t j = 0; j < d; ++j) {
            const double i_j = (*intercepts)[j];
            if (i_j >= state.eps_nad && i_j <= state.y_max[j]) {
                y_nad[j] = i_j;
            } else {
                valid = false;
                break;
            }
        }
    }
    if (!valid) {
        for (std::size_t j = 0; j < d; ++j) y_nad[j] = first_layer_max[j];
    }
    for (std::size_t j = 0; j < d; ++j) {
        if (y_nad[j] < state.y_min[j] + state.eps_nad) y_nad[j] = all_max[j];
    }

    NormalizedMap map;
    map.y_min = state.y_min;
    map.y_nad = y_nad;
    map.degenerate.resize(d);
    for (std::size_t j = 0; j < d; ++j) map.degenerate[j] = y_nad[j] > state.y_min[j] ? 0 : 1;
    return map;
}

} // namespace nsga3lab
