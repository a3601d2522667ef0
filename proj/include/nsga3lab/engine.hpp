#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nsga3lab/core.hpp"
#include "nsga3lab/dynamics.hpp"
#include "nsga3lab/normalization.hpp"
#include "nsga3lab/problems.hpp"
#include "nsga3lab/refpoints.hpp"
#include "nsga3lab/rng.hpp"

namespace nsga3lab {

struct InstrumentationToggles {
    bool hard_lemmas = true; // L1, L5, L6, L7-1, L7-3 online, zero tolerance
    bool sparsity = true;    // L9-2 first-satisfied monitor (advisory)
    bool mechanics = true;   // a=1 bypass sampling + dominated-survivor counting
    bool keep_reports = false;
};

struct EngineConfig {
    ProblemSpec problem;
    std::uint32_t mu = 0;
    int update_a = 0; // stochastic population update on (1) or off (0)
    std::uint32_t p = 0;
    double eps_nad = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t max_generations = 0;
    InstrumentationToggles instr;
    bool allow_small_p = false; // accept p < required_p (logged as a warning)
};

struct GenerationReport {
    std::uint64_t generation = 0;   // index of the completed generation
    std::uint32_t first_layer_size = 0; // |F^1| of the (post-update) R_t
    std::uint32_t distinct_fitness = 0; // in P_{t+1}
    double front_coverage = 0.0;        // fraction of front vectors covered by P_{t+1}
    std::uint32_t max_cover = 0;        // in P_{t+1}
    std::uint32_t violations = 0;       // hard-lemma violations found this step
    std::uint8_t lemma_flags = 0;       // bit per LemmaId
};

enum class StopRule { FrontCovered, Budget };

struct RunResult {
    std::uint64_t generations = 0;
    std::uint64_t evaluations = 0;
    bool covered = false;
    std::uint64_t total_violations = 0;
    std::uint64_t pairs_checked_l5 = 0;
    std::uint64_t bypass_samples = 0;
    std::uint64_t bypass_hits = 0;
    std::uint64_t dominated_survivor_generations = 0;
    std::uint64_t instrumented_generations = 0;
    std::optional<std::uint64_t> sparsity_first_satisfied;
    std::vector<GenerationReport> reports; // populated only with keep_reports
};

/// Critical rank: smallest i* whose layer prefix reaches `target`, plus the
/// union Y of all layers strictly below it. Layer indices stay valid for the
/// caller's fitness list.
struct CriticalRank {
    std::uint32_t i_star = 0; // 1-based
    std::vector<std::uint32_t> y;
};

inline CriticalRank critical_rank(std::span<const std::vector<std::uint32_t>> layers,
                                  std::uint32_t target) {
    CriticalRank out;
    std::uint32_t acc = 0;
    for (std::uint32_t i = 0; i < layers.size(); ++i) {
        if (acc + layers[i].size() >= target) {
            out.i_star = i + 1;
            return out;
        }
        acc += static_cast<std::uint32_t>(layers[i].size());
        out.y.insert(out.y.end(), layers[i].begin(), layers[i].end());
    }
    throw std::logic_error("critical_rank: layers hold fewer individuals than the target");
}

/// Uniform subsample without replacement for the stochastic population
/// update: keeps ceil(3 mu / 2) of the 2 mu merged indices, the floor(mu/2)
/// leftover bypass selection entirely. Consumes exactly ceil(3 mu / 2)
/// bounded draws (partial Fisher-Yates); both halves are returned sorted.
struct SubsampleSplit {
    std::vector<std::uint32_t> kept;
    std::vector<std::uint32_t> leftover;
};

inline SubsampleSplit stochastic_subsample(std::uint32_t merged_size, std::uint32_t mu,
                                           bool update_enabled, RandomSource& rng) {
    if (!update_enabled)
        throw std::logic_error("stochastic_subsample: called with stochastic update disabled");
    if (merged_size != 2 * mu)
        throw std::invalid_argument("stochastic_subsample: merged size must be exactly 2 mu");
    const std::uint32_t keep = (3 * mu + 1) / 2;
    std::vector<std::uint32_t> idx(merged_size);
    for (std::uint32_t i = 0; i < merged_size; ++i) idx[i] = i;
    for (std::uint32_t i = 0; i < keep; ++i) {
        const std::uint32_t j =
            i + static_cast<std::uint32_t>(rng.next_below(merged_size - i));
        std::swap(idx[i], idx[j]);
    }
    SubsampleSplit split;
    split.kept.assign(idx.begin(), idx.begin() + keep);
    split.leftover.assign(idx.begin() + keep, idx.end());
    std::sort(split.kept.begin(), split.kept.end());
    std::sort(split.leftover.begin(), split.leftover.end());
    return split;
}

namespace detail {

/// Niching loop over populated niches only. Reference points with no
/// associated member cannot influence the outcome (drawing one merely
/// removes it from R'), so they are skipped; conditioned on drawing a
/// populated point the literal Algorithm 3 choice is uniform over min-rho
/// populated points, which is exactly what this loop does. Tie draws are
/// consumed only when two or more options tie: first the niche tie, then the
/// candidate tie, per loop iteration.
inline std::vector<std::uint32_t> niching_core(const std::vector<std::uint64_t>& y_refs,
                                               const std::vector<std::uint64_t>& crit_refs,
                                               const std::vector<double>& crit_dist,
                                               std::uint32_t need, RandomSource& rng) {
    if (need > crit_refs.size())
        throw std::invalid_argument("niching_core: need exceeds candidate count");

    struct Niche {
        std::uint64_t ref;
        std::uint32_t rho = 0;
        std::vector<std::uint32_t> cands;
    };
    std::vector<Niche> niches;
    auto find_or_add = [&](std::uint64_t ref) -> Niche& {
        auto it = std::lower_bound(niches.begin(), niches.end(), ref,
                                   [](const Niche& n, std::uint64_t r) { return n.ref < r; });
        if (it == niches.end() || it->ref != ref) it = niches.insert(it, Niche{ref, 0, {}});
        return *it;
    };
    for (std::uint64_t r : y_refs) ++find_or_add(r).rho;
    for (std::uint32_t i = 0; i < crit_refs.size(); ++i)
        find_or_add(crit_refs[i]).cands.push_back(i);

    std::vector<Niche*> active;
    for (Niche& n : niches) {
        if (!n.cands.empty()) active.push_back(&n);
    }

    std::vector<std::uint32_t> selected;
    selected.reserve(need);
    std::vector<std::uint8_t> taken(crit_refs.size(), 0);
    std::vector<Niche*> niche_ties;
    std::vector<std::uint32_t> cand_ties;
    while (selected.size() < need) {
        std::uint32_t min_rho = std::numeric_limits<std::uint32_t>::max();
        for (const Niche* n : active) min_rho = std::min(min_rho, n->rho);
        niche_ties.clear();
        for (Niche* n : active) {
            if (n->rho == min_rho) niche_ties.push_back(n);
        }
        Niche* pick = niche_ties.size() > 1
                          ? niche_ties[rng.next_below(niche_ties.size())]
                          : niche_ties.front();

        double best = std::numeric_limits<double>::infinity();
        for (std::uint32_t c : pick->cands) {
            if (!taken[c] && crit_dist[c] < best) best = crit_dist[c];
        }
        cand_ties.clear();
        for (std::uint32_t c : pick->cands) {
            if (!taken[c] && crit_dist[c] == best) cand_ties.push_back(c);
        }
        const std::uint32_t chosen = cand_ties.size() > 1
                                         ? cand_ties[rng.next_below(cand_ties.size())]
                                         : cand_ties.front();
        taken[chosen] = 1;
        selected.push_back(chosen);
        ++pick->rho;
        pick->cands.erase(std::find(pick->cands.begin(), pick->cands.end(), chosen));
        if (pick->cands.empty()) active.erase(std::find(active.begin(), active.end(), pick));
    }
    return selected;
}

} // namespace detail

/// Algorithm 3 survival selection. Associates every member of Y_t and the
/// critical layer under the normalized map (perpendicular-to-ray metric),
/// then fills the remaining target - |Y_t| slots: repeatedly pick the
/// min-count reference point (random tie), then the unselected associated
/// candidate minimizing the point-to-point distance |f^n(x) - r| (random
/// tie). Returns indices into crit_fitness.
inline std::vector<std::uint32_t> niching_select(const std::vector<ObjectiveVector>& y_fitness,
                                                 const std::vector<ObjectiveVector>& crit_fitness,
                                                 std::uint32_t target, const NormalizedMap& map,
                                                 const ReferencePointSet& refs,
                                                 RandomSource& rng) {
    if (y_fitness.size() >= target || target > y_fitness.size() + crit_fitness.size())
        throw std::invalid_argument("niching_select: need |Y| < target <= |Y| + |critical|");
    const std::uint32_t need = target - static_cast<std::uint32_t>(y_fitness.size());
    if (need == crit_fitness.size()) {
        // everything must be taken; equal to running the loop to exhaustion
        std::vector<std::uint32_t> all(crit_fitness.size());
        for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
        return all;
    }

    const double p = static_cast<double>(refs.divisions());
    std::vector<double> fn;
    std::vector<std::uint64_t> y_refs(y_fitness.size());
    for (std::size_t i = 0; i < y_fitness.size(); ++i) {
        map.apply(y_fitness[i], fn);
        y_refs[i] = associate(refs, fn).ref_index;
    }
    std::vector<std::uint64_t> crit_refs(crit_fitness.size());
    std::vector<double> crit_dist(crit_fitness.size());
    for (std::size_t i = 0; i < crit_fitness.size(); ++i) {
        map.apply(crit_fitness[i], fn);
        const Association assoc = associate(refs, fn);
        crit_refs[i] = assoc.ref_index;
        const std::vector<std::int32_t> tuple = refs.tuple_at(assoc.ref_index);
        double d2 = 0.0;
        for (std::size_t j = 0; j < fn.size(); ++j) {
            const double diff = fn[j] - static_cast<double>(tuple[j]) / p;
            d2 += diff * diff;
        }
        crit_dist[i] = d2;
    }
    return detail::niching_core(y_refs, crit_refs, crit_dist, need, rng);
}

/// One NSGA-III run: Algorithm 1's generation loop with optional stochastic
/// population update, cross-generation normalization state, and online lemma
/// instrumentation. Single-threaded; share nothing but the reference set.
class Engine {
public:
    Engine(EngineConfig cfg, std::shared_ptr<const ReferencePointSet> refs = nullptr)
        : cfg_(std::move(cfg)), rng_(cfg_.seed),
          instr_rng_(RandomSource::mix(cfg_.seed, 0x696E7374u)) {
        cfg_.problem.validate();
        if (cfg_.mu == 0) throw std::invalid_argument("Engine: mu must be positive");
        if (cfg_.update_a != 0 && cfg_.update_a != 1)
            throw std::invalid_argument("Engine: a must be 0 or 1");
        if (refs) {
            if (refs->divisions() != cfg_.p || refs->dimension() != cfg_.problem.d)
                throw std::invalid_argument("Engine: reference set does not match config");
            refs_ = std::move(refs);
        } else {
            refs_ = std::make_shared<const ReferencePointSet>(cfg_.p, cfg_.problem.d);
        }

        const IncomparableBound bound = cfg_.problem.incomparable_set_bound();
        s_upper_ = bound.upper;
        const std::uint64_t mu_floor = (1 + cfg_.update_a) * bound.upper;
        if (cfg_.mu < mu_floor) {
            warnings_.push_back("mu = " + std::to_string(cfg_.mu) +
                                " is below the protection-lemma floor (1+a)*|S_d| = " +
                                std::to_string(mu_floor));
        }
        const std::uint64_t p_floor = required_p(cfg_.problem);
        if (cfg_.p < p_floor) {
            warnings_.push_back(std::string("p = ") + std::to_string(cfg_.p) +
                                " is below required_p = " + std::to_string(p_floor) +
                                (cfg_.allow_small_p ? " (override requested)" : ""));
        }

        normalizer_.eps_nad = cfg_.eps_nad;
        population_.reserve(cfg_.mu);
        for (std::uint32_t i = 0; i < cfg_.mu; ++i) {
            BitString g = BitString::random(cfg_.problem.n, rng_);
            ObjectiveVector f = cfg_.problem.evaluate(g);
            population_.push_back({std::move(g), std::move(f)});
        }
        evaluations_ = cfg_.mu;
    }

    const EngineConfig& config() const { return cfg_; }
    const Population& population() const { return population_; }
    std::uint64_t generation() const { return generation_; }
    std::uint64_t evaluations() const { return evaluations_; }
    const ViolationLog& violations() const { return violation_log_; }
    const std::vector<std::string>& warnings() const { return warnings_; }
    const RandomSource& rng() const { return rng_; }

    /// Pareto-front fitness vectors, enumerated on first use.
    const std::vector<ObjectiveVector>& front() {
        if (!front_) {
            front_ = cfg_.problem.enumerate_front();
            front_set_ = std::unordered_set<ObjectiveVector, ObjectiveVectorHash>(
                front_->begin(), front_->end());
        }
        return *front_;
    }

    bool population_covers_front() {
        front();
        std::unordered_set<ObjectiveVector, ObjectiveVectorHash> seen;
        for (const Individual& ind : population_) {
            if (front_set_.count(ind.fitness)) seen.insert(ind.fitness);
        }
        return seen.size() == front_set_.size();
    }

    /// Replaces the population; used by tests and warm-started experiments.
    void seed_population(std::vector<BitString> genotypes) {
        if (genotypes.size() != cfg_.mu)
            throw std::invalid_argument("seed_population: need exactly mu genotypes");
        population_.clear();
        for (auto& g : genotypes) {
            ObjectiveVector f = cfg_.problem.evaluate(g);
            population_.push_back({std::move(g), std::move(f)});
        }
        prev_snapshot_.reset();
    }

    /// One batch of mu offspring: per trial one uniform parent draw followed
    /// by standard bit mutation (n bit draws), trial by trial. Advances the
    /// run's RNG and evaluation counter; step() calls this.
    const Population& make_offspring() {
        const std::uint32_t mu = cfg_.mu;
        offspring_.resize(mu, Individual{BitString(cfg_.problem.n), {}});
        for (std::uint32_t t = 0; t < mu; ++t) {
            const std::uint32_t parent = static_cast<std::uint32_t>(rng_.next_below(mu));
            Individual& o = offspring_[t];
            o.genotype = population_[parent].genotype;
            standard_bit_mutation_in_place(o.genotype, rng_);
            cfg_.problem.evaluate_into(o.genotype, o.fitness);
        }
        evaluations_ += mu;
        return offspring_;
    }

    GenerationReport step() {
        const std::uint32_t mu = cfg_.mu;
        const bool update = cfg_.update_a == 1;
        const bool instrument = cfg_.instr.hard_lemmas || cfg_.instr.mechanics;

        // 1. offspring
        make_offspring();

        // 2. merged pool P_t u Q_t, parents first
        merged_fitness_.resize(2 * mu);
        for (std::uint32_t i = 0; i < mu; ++i) merged_fitness_[i] = population_[i].fitness;
        for (std::uint32_t i = 0; i < mu; ++i) merged_fitness_[mu + i] = offspring_[i].fitness;

        // 3. stochastic population update
        std::vector<std::uint32_t> pool; // indices into the merge
        std::vector<std::uint32_t> leftover;
        if (update) {
            SubsampleSplit split = stochastic_subsample(2 * mu, mu, true, rng_);
            pool = std::move(split.kept);
            leftover = std::move(split.leftover);
        } else {
            pool.resize(2 * mu);
            for (std::uint32_t i = 0; i < 2 * mu; ++i) pool[i] = i;
        }

        // 4. sort R_t
        rt_fitness_.resize(pool.size());
        for (std::size_t j = 0; j < pool.size(); ++j) rt_fitness_[j] = merged_fitness_[pool[j]];
        non_dominated_sort(rt_fitness_, nds_scratch_);
        const std::span<const std::vector<std::uint32_t>> layers(nds_scratch_.layers.data(),
                                                                 nds_scratch_.layer_count);

        // 5. first layer of the full merge (pre-subsample), for the
        // protection-lemma checks and the mechanics counters. Without the
        // update R_t is the merge, so the sort already has it.
        std::vector<std::uint8_t> merged_l1;
        if (instrument) {
            if (update) {
                merged_l1 = first_layer_flags(merged_fitness_);
            } else {
                merged_l1.assign(2 * mu, 0);
                for (std::uint32_t i : layers[0]) merged_l1[i] = 1;
            }
        }

        // 6. critical rank
        const std::uint32_t target = update ? (mu + 1) / 2 : mu;
        CriticalRank cr = critical_rank(layers, target);
        const std::vector<std::uint32_t>& critical = layers[cr.i_star - 1];

        // 7. normalization (Algorithm 2) over R_t
        std::vector<std::uint32_t> selection_pool = cr.y;
        selection_pool.insert(selection_pool.end(), critical.begin(), critical.end());
        const NormalizedMap map =
            normalize_generation(normalizer_, rt_fitness_, layers[0], selection_pool);

        // 8. associations, memoized per distinct fitness vector (stamped by
        // generation: the normalized map changes every step)
        auto assoc_of = [&](const ObjectiveVector& f) -> const CachedAssoc& {
            CachedAssoc& c = assoc_by_id_[intern(f)];
            if (c.stamp == generation_) return c;
            map.apply(f, fn_scratch_);
            const Association a = associate(*refs_, fn_scratch_);
            c.ref_index = a.ref_index;
            const std::vector<std::int32_t> tuple = refs_->tuple_at(a.ref_index);
            const double p = static_cast<double>(refs_->divisions());
            double d2 = 0.0;
            for (std::size_t j = 0; j < fn_scratch_.size(); ++j) {
                const double diff = fn_scratch_[j] - static_cast<double>(tuple[j]) / p;
                d2 += diff * diff;
            }
            c.point_dist = d2;
            c.stamp = generation_;
            return c;
        };

        // 9. survival selection
        const std::uint32_t need = target - static_cast<std::uint32_t>(cr.y.size());
        std::vector<std::uint32_t> chosen; // indices into `critical`
        if (need == critical.size()) {
            chosen.resize(critical.size());
            for (std::uint32_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
        } else {
            std::vector<std::uint64_t> y_refs(cr.y.size());
            for (std::size_t i = 0; i < cr.y.size(); ++i)
                y_refs[i] = assoc_of(rt_fitness_[cr.y[i]]).ref_index;
            std::vector<std::uint64_t> crit_refs(critical.size());
            std::vector<double> crit_dist(critical.size());
            for (std::size_t i = 0; i < critical.size(); ++i) {
                const CachedAssoc& a = assoc_of(rt_fitness_[critical[i]]);
                crit_refs[i] = a.ref_index;
                crit_dist[i] = a.point_dist;
            }
            chosen = detail::niching_core(y_refs, crit_refs, crit_dist, need, rng_);
            std::sort(chosen.begin(), chosen.end());
        }

        // 10. instrumentation on this transition, before P_t is replaced
        GenerationReport report;
        report.generation = generation_;
        report.first_layer_size = static_cast<std::uint32_t>(layers[0].size());
        std::vector<Violation> step_violations;
        if (cfg_.instr.hard_lemmas) {
            auto l1 = check_lemma1(map, rt_fitness_, static_cast<double>(cfg_.problem.f_max()),
                                   generation_);
            for (auto& v : l1) step_violations.push_back(std::move(v));

            layer_fitness_.clear();
            layer_refs_.clear();
            layer_fitness_.reserve(layers[0].size());
            for (std::uint32_t i : layers[0]) {
                layer_fitness_.push_back(rt_fitness_[i]);
                layer_refs_.push_back(assoc_of(rt_fitness_[i]).ref_index);
            }
            auto l5 = check_lemma5(layer_fitness_, layer_refs_, generation_, &pairs_checked_l5_);
            for (auto& v : l5) step_violations.push_back(std::move(v));

            // scratch snapshot reuses buckets across generations
            PopulationSnapshot& snap = scratch_snapshot_;
            snap.generation = generation_;
            snap.cover.clear();
            snap.vector_is_pareto.clear();
            snap.all_pareto = true;
            for (const Individual& ind : population_) {
                ++snap.cover[ind.fitness];
                auto [it, fresh] = snap.vector_is_pareto.try_emplace(ind.fitness, false);
                if (fresh) it->second = pareto_flag_of(ind);
                if (!it->second) snap.all_pareto = false;
            }
            distinct_scratch_.clear();
            for (std::uint32_t i = 0; i < merged_fitness_.size(); ++i) {
                if (merged_l1[i]) distinct_scratch_.insert(merged_fitness_[i]);
            }
            snap.merged_first_layer.assign(distinct_scratch_.begin(), distinct_scratch_.end());
            std::sort(snap.merged_first_layer.begin(), snap.merged_first_layer.end());

            if (prev_snapshot_) {
                TransitionConfig tc{mu, cfg_.update_a, s_upper_};
                auto tv = check_transition(*prev_snapshot_, snap, tc);
                for (auto& v : tv) step_violations.push_back(std::move(v));
            }
            if (!prev_snapshot_) prev_snapshot_.emplace();
            std::swap(*prev_snapshot_, scratch_snapshot_);
            ++instrumented_generations_;
        }

        // 11. assemble P_{t+1}: Y in pool order, selected critical members in
        // ascending order, then (a=1) the untouched leftover
        auto merged_individual = [&](std::uint32_t merged_index) -> const Individual& {
            return merged_index < mu ? population_[merged_index]
                                     : offspring_[merged_index - mu];
        };
        survivor_indices_.clear();
        for (std::uint32_t i : cr.y) survivor_indices_.push_back(pool[i]);
        for (std::uint32_t c : chosen) survivor_indices_.push_back(pool[critical[c]]);
        for (std::uint32_t i : leftover) survivor_indices_.push_back(i);
        if (survivor_indices_.size() != mu)
            throw std::logic_error("engine: population size invariant broken");
        next_population_.resize(mu, Individual{BitString(cfg_.problem.n), {}});
        for (std::uint32_t idx = 0; idx < mu; ++idx) {
            const Individual& src = merged_individual(survivor_indices_[idx]);
            next_population_[idx].genotype = src.genotype;
            next_population_[idx].fitness = src.fitness;
        }

        // 12. mechanics counters (a=1): bypass frequency of one uniformly
        // sampled merged-pool member, and survival of strictly dominated
        // individuals. The sample comes from a separate instrumentation
        // stream so toggling it cannot perturb the run.
        if (cfg_.instr.mechanics && update) {
            const std::uint32_t probe = static_cast<std::uint32_t>(instr_rng_.next_below(2 * mu));
            ++bypass_samples_;
            if (std::binary_search(leftover.begin(), leftover.end(), probe)) ++bypass_hits_;
            bool dominated_survivor = false;
            for (std::uint32_t mi : survivor_indices_) {
                if (!merged_l1[mi]) {
                    dominated_survivor = true;
                    break;
                }
            }
            if (dominated_survivor) ++dominated_survivor_generations_;
        }

        population_.swap(next_population_);
        ++generation_;

        // 13. population-level report fields and the sparsity monitor
        next_cover_.clear();
        for (const Individual& ind : population_) ++next_cover_[ind.fitness];
        report.distinct_fitness = static_cast<std::uint32_t>(next_cover_.size());
        for (const auto& [v, c] : next_cover_) report.max_cover = std::max(report.max_cover, c);
        if (can_enumerate_front()) {
            front();
            std::uint64_t covered = 0;
            for (const auto& v : *front_) covered += next_cover_.count(v) ? 1 : 0;
            report.front_coverage =
                static_cast<double>(covered) / static_cast<double>(front_->size());
            if (cfg_.instr.sparsity && cfg_.update_a == 0 && !sparsity_first_satisfied_ &&
                covered == front_->size()) {
                bool all_pareto = true;
                for (const Individual& ind : population_) {
                    if (!pareto_flag_of(ind)) {
                        all_pareto = false;
                        break;
                    }
                }
                if (all_pareto && sparsity_check(next_cover_, mu, *front_))
                    sparsity_first_satisfied_ = generation_;
            }
        }

        for (auto& v : step_violations) {
            report.lemma_flags |= static_cast<std::uint8_t>(1u << static_cast<int>(v.lemma));
            violation_log_.append(std::move(v));
        }
        report.violations = static_cast<std::uint32_t>(step_violations.size());
        return report;
    }

    RunResult run_until(StopRule rule, std::uint64_t budget) {
        RunResult res;
        if (rule == StopRule::FrontCovered) {
            front(); // throws EnumerationTooLarge if infeasible, per contract
            res.covered = population_covers_front();
        }
        while (!(rule == StopRule::FrontCovered && res.covered) && res.generations < budget) {
            GenerationReport rep = step();
            ++res.generations;
            if (cfg_.instr.keep_reports) res.reports.push_back(rep);
            if (rule == StopRule::FrontCovered && rep.front_coverage == 1.0) res.covered = true;
            if (rule == StopRule::Budget && can_enumerate_front() && rep.front_coverage == 1.0)
                res.covered = true;
        }
        res.evaluations = evaluations_;
        res.total_violations = violation_log_.size();
        res.pairs_checked_l5 = pairs_checked_l5_;
        res.bypass_samples = bypass_samples_;
        res.bypass_hits = bypass_hits_;
        res.dominated_survivor_generations = dominated_survivor_generations_;
        res.instrumented_generations = instrumented_generations_;
        res.sparsity_first_satisfied = sparsity_first_satisfied_;
        return res;
    }

    std::uint64_t instrumented_generations() const { return instrumented_generations_; }
    std::uint64_t pairs_checked_l5() const { return pairs_checked_l5_; }

    /// Plain-text state snapshot: run parameters, RNG counters, normalizer
    /// state (including the extreme-point archive) and the population as
    /// hex-encoded bit rows. Fitness is recomputed on load.
    void serialize(std::ostream& os) const {
        os << "nsga3lab-engine-state v1\n";
        os << "problem " << family_name(cfg_.problem.family) << " n " << cfg_.problem.n << " d "
           << cfg_.problem.d << " k " << cfg_.problem.k << "\n";
        os << "mu " << cfg_.mu << "\n";
        os << "a " << cfg_.update_a << "\n";
        os << "p " << cfg_.p << "\n";
        os << "eps_nad " << fmt_double(cfg_.eps_nad) << "\n";
        os << "seed " << cfg_.seed << "\n";
        os << "rng_counter " << rng_.counter() << "\n";
        os << "instr_rng_counter " << instr_rng_.counter() << "\n";
        os << "generation " << generation_ << "\n";
        os << "evaluations " << evaluations_ << "\n";
        os << "normalizer " << (normalizer_.y_min.empty() ? 0 : 1) << "\n";
        if (!normalizer_.y_min.empty()) {
            os << "ymin";
            for (double v : normalizer_.y_min) os << ' ' << fmt_double(v);
            os << "\nymax";
            for (double v : normalizer_.y_max) os << ' ' << fmt_double(v);
            os << "\n";
        }
        os << "archive " << normalizer_.extreme_archive.size() << "\n";
        for (const auto& e : normalizer_.extreme_archive) {
            for (std::size_t i = 0; i < e.size(); ++i) os << (i ? " " : "") << e[i];
            os << "\n";
        }
        os << "population " << population_.size() << "\n";
        for (const Individual& ind : population_) os << ind.genotype.to_hex() << "\n";
        os << "end\n";
    }

    static Engine deserialize(std::istream& is, InstrumentationToggles instr = {}) {
        auto expect = [&](const std::string& tag) {
            std::string tok;
            if (!(is >> tok) || tok != tag)
                throw std::runtime_error("engine snapshot: expected '" + tag + "'");
        };
        std::string line, tok;
        if (!std::getline(is, line) || line != "nsga3lab-engine-state v1")
            throw std::runtime_error("engine snapshot: bad header");

        EngineConfig cfg;
        cfg.instr = instr;
        expect("problem");
        is >> tok;
        cfg.problem.family = family_from_name(tok);
        expect("n"); is >> cfg.problem.n;
        expect("d"); is >> cfg.problem.d;
        expect("k"); is >> cfg.problem.k;
        expect("mu"); is >> cfg.mu;
        expect("a"); is >> cfg.update_a;
        expect("p"); is >> cfg.p;
        expect("eps_nad"); is >> cfg.eps_nad;
        expect("seed"); is >> cfg.seed;
        std::uint64_t rng_counter, instr_counter, generation, evaluations;
        expect("rng_counter"); is >> rng_counter;
        expect("instr_rng_counter"); is >> instr_counter;
        expect("generation"); is >> generation;
        expect("evaluations"); is >> evaluations;
        cfg.allow_small_p = true; // whatever ran before is what resumes

        Engine eng(cfg);
        expect("normalizer");
        int has_norm = 0;
        is >> has_norm;
        const std::uint32_t d = cfg.problem.d;
        eng.normalizer_ = NormalizerState{};
        eng.normalizer_.eps_nad = cfg.eps_nad;
        if (has_norm) {
            expect("ymin");
            eng.normalizer_.y_min.resize(d);
            for (auto& v : eng.normalizer_.y_min) is >> v;
            expect("ymax");
            eng.normalizer_.y_max.resize(d);
            for (auto& v : eng.normalizer_.y_max) is >> v;
        }
        expect("archive");
        std::size_t archive_count = 0;
        is >> archive_count;
        eng.normalizer_.extreme_archive.assign(archive_count, ObjectiveVector(d));
        for (auto& e : eng.normalizer_.extreme_archive) {
            for (auto& x : e) is >> x;
        }
        expect("population");
        std::size_t count = 0;
        is >> count;
        if (count != cfg.mu) throw std::runtime_error("engine snapshot: population size mismatch");
        std::vector<BitString> genos;
        genos.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            is >> tok;
            genos.push_back(BitString::from_hex(tok, cfg.problem.n));
        }
        expect("end");
        eng.seed_population(std::move(genos));
        eng.rng_ = RandomSource(cfg.seed, rng_counter);
        eng.instr_rng_ = RandomSource(RandomSource::mix(cfg.seed, 0x696E7374u), instr_counter);
        eng.generation_ = generation;
        eng.evaluations_ = evaluations;
        return eng;
    }

private:
    struct CachedAssoc {
        std::uint64_t ref_index = 0;
        double point_dist = 0.0;
        std::uint64_t stamp = std::numeric_limits<std::uint64_t>::max();
    };

    /// Dense id per distinct fitness vector ever seen in this run; backs the
    /// association cache and the front-membership memo.
    std::uint32_t intern(const ObjectiveVector& f) {
        const auto [it, fresh] =
            intern_ids_.try_emplace(f, static_cast<std::uint32_t>(intern_ids_.size()));
        if (fresh) {
            assoc_by_id_.emplace_back();
            pareto_by_id_.push_back(0);
        }
        return it->second;
    }

    /// Front membership, memoized (fitness determines Pareto status in all
    /// five families).
    bool pareto_flag_of(const Individual& ind) {
        const std::uint32_t id = intern(ind.fitness);
        if (pareto_by_id_[id] == 0)
            pareto_by_id_[id] = cfg_.problem.is_pareto_optimal(ind.genotype) ? 2 : 1;
        return pareto_by_id_[id] == 2;
    }

    bool can_enumerate_front() {
        if (front_) return true;
        return cfg_.problem.front_size() <= 1000000;
    }

    static std::string fmt_double(double v) {
        std::ostringstream os;
        os << std::setprecision(17) << v;
        return os.str();
    }

    /// flags[i] = 1 iff no merged member strictly dominates member i.
    static std::vector<std::uint8_t> first_layer_flags(
        const std::vector<ObjectiveVector>& fitness) {
        const std::size_t n = fitness.size();
        std::vector<std::uint8_t> flags(n, 1);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i && strictly_dominates(fitness[j], fitness[i])) {
                    flags[i] = 0;
                    break;
                }
            }
        }
        return flags;
    }

    EngineConfig cfg_;
    std::shared_ptr<const ReferencePointSet> refs_;
    RandomSource rng_;
    RandomSource instr_rng_;
    NormalizerState normalizer_;
    Population population_;
    std::uint64_t generation_ = 0;
    std::uint64_t evaluations_ = 0;
    std::uint64_t s_upper_ = 1;
    std::vector<std::string> warnings_;

    std::optional<std::vector<ObjectiveVector>> front_;
    std::unordered_set<ObjectiveVector, ObjectiveVectorHash> front_set_;

    ViolationLog violation_log_;
    std::optional<PopulationSnapshot> prev_snapshot_;
    std::uint64_t instrumented_generations_ = 0;
    std::uint64_t pairs_checked_l5_ = 0;
    std::uint64_t bypass_samples_ = 0;
    std::uint64_t bypass_hits_ = 0;
    std::uint64_t dominated_survivor_generations_ = 0;
    std::optional<std::uint64_t> sparsity_first_satisfied_;

    // per-step scratch, reused across generations
    Population offspring_;
    Population next_population_;
    std::vector<ObjectiveVector> merged_fitness_;
    std::vector<ObjectiveVector> rt_fitness_;
    std::vector<double> fn_scratch_;
    std::unordered_map<ObjectiveVector, std::uint32_t, ObjectiveVectorHash> intern_ids_;
    std::vector<CachedAssoc> assoc_by_id_;
    std::vector<std::uint8_t> pareto_by_id_; // 0 unknown, 1 off-front, 2 on-front
    std::vector<ObjectiveVector> layer_fitness_;
    std::vector<std::uint64_t> layer_refs_;
    PopulationSnapshot scratch_snapshot_;
    std::unordered_set<ObjectiveVector, ObjectiveVectorHash> distinct_scratch_;
    CoverMap next_cover_;
    NdsScratch nds_scratch_;
    std::vector<std::uint32_t> survivor_indices_;
};

} // namespace nsga3lab
