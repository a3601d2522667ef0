#include <catch_amalgamated.hpp>

#include <map>
#include <set>
#include <sstream>

#include "nsga3lab/engine.hpp"

using namespace nsga3lab;

namespace {

std::multiset<ObjectiveVector> fitness_multiset(const Population& pop) {
    std::multiset<ObjectiveVector> out;
    for (const Individual& ind : pop) out.insert(ind.fitness);
    return out;
}

std::multiset<std::string> genotype_multiset(const Population& pop) {
    std::multiset<std::string> out;
    for (const Individual& ind : pop) out.insert(ind.genotype.to_hex());
    return out;
}

EngineConfig omm_config(std::uint32_t n, std::uint32_t mu, std::uint64_t seed, int a = 0) {
    EngineConfig cfg;
    cfg.problem = {Family::OMM, n, 2, 0};
    cfg.mu = mu;
    cfg.update_a = a;
    cfg.p = static_cast<std::uint32_t>(required_p(cfg.problem));
    cfg.eps_nad = cfg.problem.f_max();
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("critical rank") {
    // layers sized exactly mu: target met within F^1
    const std::vector<std::vector<std::uint32_t>> exact{{0, 1, 2, 3}};
    CHECK(critical_rank(exact, 4).i_star == 1);
    CHECK(critical_rank(exact, 4).y.empty());

    const std::vector<std::vector<std::uint32_t>> two{{0, 1, 2}, {3, 4, 5}};
    const CriticalRank cr = critical_rank(two, 4);
    CHECK(cr.i_star == 2);
    CHECK(cr.y.size() == 3);

    const std::vector<std::vector<std::uint32_t>> more{{0, 1, 2, 3}, {4}};
    CHECK(critical_rank(more, 4).i_star == 1);

    CHECK_THROWS_AS(critical_rank(two, 7), std::logic_error);
}

TEST_CASE("stochastic subsample sizes and misuse") {
    RandomSource rng(3);
    const SubsampleSplit s4 = stochastic_subsample(8, 4, true, rng);
    CHECK(s4.kept.size() == 6);
    CHECK(s4.leftover.size() == 2);
    const SubsampleSplit s5 = stochastic_subsample(10, 5, true, rng);
    CHECK(s5.kept.size() == 8);
    CHECK(s5.leftover.size() == 2);
    CHECK_THROWS_AS(stochastic_subsample(8, 4, false, rng), std::logic_error);
    CHECK_THROWS_AS(stochastic_subsample(7, 4, true, rng), std::invalid_argument);
}

TEST_CASE("subsample leftover frequency matches floor(mu/2)/(2mu)") {
    RandomSource rng(17);
    const std::uint32_t mu = 11;
    const int trials = 20000;
    int hits = 0; // index 0 landing in the leftover
    for (int t = 0; t < trials; ++t) {
        const SubsampleSplit s = stochastic_subsample(2 * mu, mu, true, rng);
        if (std::binary_search(s.leftover.begin(), s.leftover.end(), 0u)) ++hits;
    }
    const double expected = static_cast<double>(mu / 2) / (2.0 * mu);
    CHECK(static_cast<double>(hits) / trials == Catch::Approx(expected).margin(0.02));
}

TEST_CASE("offspring: mu=1 mutant, no-flip fraction, determinism") {
    SECTION("mu = 1: the offspring is a mutant of the single member") {
        EngineConfig cfg = omm_config(8, 1, 5);
        Engine eng(cfg);
        const BitString parent = eng.population()[0].genotype;
        const Population& q = eng.make_offspring();
        REQUIRE(q.size() == 1);
        CHECK(q[0].genotype.size() == parent.size());
    }
    SECTION("fraction identical to the parent is about (1-1/n)^n at n=50") {
        EngineConfig cfg = omm_config(50, 1, 6);
        Engine eng(cfg);
        const std::string parent = eng.population()[0].genotype.to_hex();
        int same = 0;
        const int trials = 100000;
        for (int t = 0; t < trials; ++t) {
            if (eng.make_offspring()[0].genotype.to_hex() == parent) ++same;
        }
        const double expected = std::pow(1.0 - 1.0 / 50.0, 50);
        CHECK(static_cast<double>(same) / trials == Catch::Approx(expected).margin(0.02));
    }
    SECTION("seeded determinism: identical offspring multisets") {
        Engine a(omm_config(10, 7, 99));
        Engine b(omm_config(10, 7, 99));
        for (int i = 0; i < 5; ++i) {
            CHECK(genotype_multiset(a.make_offspring()) == genotype_multiset(b.make_offspring()));
        }
    }
}

TEST_CASE("step keeps |P| = mu and stays inside R_t when a = 0") {
    // Shadow-reconstruct P_t u Q_t from the documented draw schedule and
    // check multiset inclusion of the survivors.
    const std::uint32_t n = 10, mu = 11;
    EngineConfig cfg = omm_config(n, mu, 42);
    Engine eng(cfg);
    RandomSource shadow(42);
    std::vector<BitString> current;
    for (std::uint32_t i = 0; i < mu; ++i) current.push_back(BitString::random(n, shadow));

    for (int gen = 0; gen < 10; ++gen) {
        std::multiset<std::string> merged;
        for (const auto& g : current) merged.insert(g.to_hex());
        for (std::uint32_t t = 0; t < mu; ++t) {
            const std::uint32_t pi = static_cast<std::uint32_t>(shadow.next_below(mu));
            merged.insert(standard_bit_mutation(current[pi], shadow).to_hex());
        }
        eng.step();
        REQUIRE(eng.population().size() == mu);
        for (const Individual& ind : eng.population()) {
            auto it = merged.find(ind.genotype.to_hex());
            REQUIRE(it != merged.end());
            merged.erase(it);
        }
        // the niching loop's tie draws advance the same stream; resync the
        // shadow to the engine before reconstructing the next generation
        shadow = RandomSource(42, eng.rng().counter());
        current.clear();
        for (const Individual& ind : eng.population()) current.push_back(ind.genotype);
    }
}

TEST_CASE("full draw schedule reconstruction (a = 1): leftover bypasses selection") {
    // Re-derive generation 0 of an a=1 engine purely from the documented
    // draw order: mu*n init bit draws, then per trial one parent draw plus n
    // mutation draws, then ceil(3mu/2) partial Fisher-Yates draws.
    const std::uint32_t n = 8, mu = 5;
    EngineConfig cfg;
    cfg.problem = {Family::OMM, n, 2, 0};
    cfg.mu = mu;
    cfg.update_a = 1;
    cfg.p = static_cast<std::uint32_t>(required_p(cfg.problem));
    cfg.eps_nad = cfg.problem.f_max();
    cfg.seed = 1234;

    RandomSource shadow(1234);
    std::vector<BitString> parents;
    for (std::uint32_t i = 0; i < mu; ++i) parents.push_back(BitString::random(n, shadow));
    std::vector<BitString> merged = parents;
    for (std::uint32_t t = 0; t < mu; ++t) {
        const std::uint32_t pi = static_cast<std::uint32_t>(shadow.next_below(mu));
        merged.push_back(standard_bit_mutation(parents[pi], shadow));
    }
    const SubsampleSplit split = stochastic_subsample(2 * mu, mu, true, shadow);

    Engine eng(cfg);
    // engine parents match the shadow reconstruction
    for (std::uint32_t i = 0; i < mu; ++i) CHECK(eng.population()[i].genotype == parents[i]);
    eng.step();
    REQUIRE(eng.population().size() == mu);
    CHECK(split.leftover.size() == mu / 2);

    const auto survivors = genotype_multiset(eng.population());
    for (std::uint32_t li : split.leftover) {
        CHECK(survivors.count(merged[li].to_hex()) >= 1);
    }
}

TEST_CASE("seeded runs reproduce generation by generation") {
    for (int a = 0; a <= 1; ++a) {
        EngineConfig cfg = omm_config(10, a ? 22 : 11, 2718, a);
        Engine x(cfg), y(cfg);
        for (int gen = 0; gen < 15; ++gen) {
            x.step();
            y.step();
            REQUIRE(fitness_multiset(x.population()) == fitness_multiset(y.population()));
            REQUIRE(x.rng().counter() == y.rng().counter());
        }
    }
}

TEST_CASE("run_until: pre-covered population stops immediately, zero budget reports uncovered") {
    EngineConfig cfg = omm_config(10, 11, 7);
    Engine eng(cfg);
    const auto front = ProblemSpec{Family::OMM, 10, 2}.enumerate_front();
    std::vector<BitString> genos;
    for (const auto& v : front) genos.push_back(cfg.problem.canonical_preimage(v));
    REQUIRE(genos.size() == 11);
    eng.seed_population(std::move(genos));
    const RunResult res = eng.run_until(StopRule::FrontCovered, 1000);
    CHECK(res.covered);
    CHECK(res.generations == 0);

    Engine fresh(omm_config(10, 11, 8));
    const RunResult empty = fresh.run_until(StopRule::FrontCovered, 0);
    CHECK_FALSE(empty.covered);
    CHECK(empty.generations == 0);
}

TEST_CASE("seed sweep coverage: 2-OMM n=10 covers within 30 n ln n for >= 90% of 50 seeds") {
    const std::uint64_t bound = static_cast<std::uint64_t>(30.0 * 10.0 * std::log(10.0));
    int covered = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Engine eng(omm_config(10, 11, RandomSource::mix(1717, seed)));
        const RunResult res = eng.run_until(StopRule::FrontCovered, bound);
        if (res.covered) ++covered;
    }
    CHECK(covered >= 45);
}

TEST_CASE("evaluations count mu per generation plus initialization") {
    EngineConfig cfg = omm_config(10, 11, 9);
    Engine eng(cfg);
    const RunResult res = eng.run_until(StopRule::Budget, 13);
    CHECK(res.generations == 13);
    CHECK(res.evaluations == 11 * (13 + 1));
}

TEST_CASE("niching select: forced takes, ties, and protection") {
    const ProblemSpec spec{Family::OMM, 10, 2};
    const ReferencePointSet refs(static_cast<std::uint32_t>(required_p(spec)), 2);
    NormalizedMap map;
    map.y_min = {0, 0};
    map.y_nad = {10, 10};
    map.degenerate = {0, 0};
    RandomSource rng(12);

    SECTION("|Y| + |critical| == target takes everything") {
        const std::vector<ObjectiveVector> y{{5, 5}};
        const std::vector<ObjectiveVector> crit{{4, 6}, {6, 4}};
        const auto sel = niching_select(y, crit, 3, map, refs, rng);
        CHECK(sel == std::vector<std::uint32_t>{0, 1});
        CHECK(rng.counter() == 0); // the shortcut consumes no draws
    }
    SECTION("two identical candidates, one slot: exactly one survives via the tie draw") {
        const std::vector<ObjectiveVector> crit{{5, 5}, {5, 5}};
        std::map<std::uint32_t, int> picks;
        for (int t = 0; t < 200; ++t) {
            const auto sel = niching_select({}, crit, 1, map, refs, rng);
            REQUIRE(sel.size() == 1);
            ++picks[sel[0]];
        }
        CHECK(picks[0] > 0);
        CHECK(picks[1] > 0);
    }
    SECTION("min-rho niche is served first") {
        // Y occupies the niche of (8,2) twice; a single slot must go to the
        // emptier niche of (2,8) even though (8,2) has the closer candidate.
        const std::vector<ObjectiveVector> y{{8, 2}, {8, 2}};
        const std::vector<ObjectiveVector> crit{{8, 2}, {2, 8}};
        const auto sel = niching_select(y, crit, 3, map, refs, rng);
        REQUIRE(sel.size() == 1);
        CHECK(sel[0] == 1);
    }
    SECTION("within a niche the point-to-point distance decides") {
        // both candidates sit on the ray of (1,1)/2 after normalization; the
        // longer vector is farther from the reference point itself
        const std::vector<ObjectiveVector> crit{{9, 9}, {5, 5}};
        const std::vector<ObjectiveVector> y{{10, 0}};
        const auto sel = niching_select(y, crit, 2, map, refs, rng);
        REQUIRE(sel.size() == 1);
        CHECK(sel[0] == 1);
    }
    CHECK_THROWS_AS(niching_select({{1, 1}}, {{2, 2}}, 1, map, refs, rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(niching_select({}, {{2, 2}}, 5, map, refs, rng), std::invalid_argument);
}

namespace {

/// Literal Algorithm 3 over the full lattice, including never-associated
/// reference points. Used to pin the production loop's outcome on tie-free
/// fixtures (where both are deterministic regardless of draw sequences).
std::vector<std::uint32_t> literal_niching(const std::vector<ObjectiveVector>& y,
                                           const std::vector<ObjectiveVector>& crit,
                                           std::uint32_t target, const NormalizedMap& map,
                                           const ReferencePointSet& refs, RandomSource& rng) {
    const double p = refs.divisions();
    std::vector<std::uint64_t> y_ref(y.size()), c_ref(crit.size());
    std::vector<double> c_dist(crit.size());
    std::vector<double> fn;
    for (std::size_t i = 0; i < y.size(); ++i) {
        map.apply(y[i], fn);
        y_ref[i] = associate(refs, fn).ref_index;
    }
    for (std::size_t i = 0; i < crit.size(); ++i) {
        map.apply(crit[i], fn);
        c_ref[i] = associate(refs, fn).ref_index;
        const auto tuple = refs.tuple_at(c_ref[i]);
        double d2 = 0;
        for (std::size_t j = 0; j < fn.size(); ++j) {
            const double diff = fn[j] - tuple[j] / p;
            d2 += diff * diff;
        }
        c_dist[i] = d2;
    }
    std::vector<std::uint32_t> rho(refs.size(), 0);
    for (std::uint64_t r : y_ref) ++rho[r];
    std::vector<std::uint8_t> in_rprime(refs.size(), 1), taken(crit.size(), 0);
    std::vector<std::uint32_t> selected;
    std::uint64_t alive = refs.size();
    while (selected.size() + y.size() < target) {
        REQUIRE(alive > 0);
        std::uint32_t min_rho = std::numeric_limits<std::uint32_t>::max();
        for (std::uint64_t r = 0; r < refs.size(); ++r)
            if (in_rprime[r]) min_rho = std::min(min_rho, rho[r]);
        std::vector<std::uint64_t> ties;
        for (std::uint64_t r = 0; r < refs.size(); ++r)
            if (in_rprime[r] && rho[r] == min_rho) ties.push_back(r);
        const std::uint64_t r_min = ties[ties.size() > 1 ? rng.next_below(ties.size()) : 0];
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < crit.size(); ++c)
            if (!taken[c] && c_ref[c] == r_min) best = std::min(best, c_dist[c]);
        std::vector<std::uint32_t> cand;
        for (std::size_t c = 0; c < crit.size(); ++c)
            if (!taken[c] && c_ref[c] == r_min && c_dist[c] == best)
                cand.push_back(static_cast<std::uint32_t>(c));
        if (cand.empty()) {
            in_rprime[r_min] = 0;
            --alive;
            continue;
        }
        const std::uint32_t chosen = cand[cand.size() > 1 ? rng.next_below(cand.size()) : 0];
        taken[chosen] = 1;
        selected.push_back(chosen);
        ++rho[r_min];
    }
    return selected;
}

} // namespace

TEST_CASE("niching matches the literal full-lattice loop on tie-free fixtures") {
    const ReferencePointSet refs(12, 2); // small lattice so the literal loop is cheap
    NormalizedMap map;
    map.y_min = {0, 0};
    map.y_nad = {10, 10};
    map.degenerate = {0, 0};
    RandomSource rng_a(5), rng_b(91);
    // four populated niches with pairwise distinct rho and one candidate
    // each: every service decision is forced, so the two loops must agree
    // outcome-for-outcome even though their draw sequences differ
    const std::vector<ObjectiveVector> y{{9, 1}, {9, 1}, {9, 1}, {1, 9}, {5, 5}, {5, 5}};
    const std::vector<ObjectiveVector> crit{{9, 1}, {1, 9}, {5, 5}, {4, 6}};
    for (std::uint32_t target = 7; target <= 10; ++target) {
        auto fast = niching_select(y, crit, target, map, refs, rng_a);
        auto slow = literal_niching(y, crit, target, map, refs, rng_b);
        std::sort(fast.begin(), fast.end());
        std::sort(slow.begin(), slow.end());
        CHECK(fast == slow);
    }
}

TEST_CASE("engine snapshot round trip") {
    EngineConfig cfg = omm_config(10, 11, 31415, 1);
    cfg.mu = 22;
    Engine a(cfg);
    for (int i = 0; i < 5; ++i) a.step();
    std::stringstream snapshot;
    a.serialize(snapshot);

    Engine b = Engine::deserialize(snapshot, cfg.instr);
    CHECK(b.generation() == a.generation());
    CHECK(b.evaluations() == a.evaluations());
    CHECK(fitness_multiset(b.population()) == fitness_multiset(a.population()));
    for (int i = 0; i < 5; ++i) {
        a.step();
        b.step();
        REQUIRE(fitness_multiset(a.population()) == fitness_multiset(b.population()));
    }
}

TEST_CASE("engine warns below the protection floors") {
    EngineConfig cfg = omm_config(10, 5, 1); // mu below |S_d| = 11
    cfg.p = 10;                              // p below required_p = 57
    Engine eng(cfg);
    REQUIRE(eng.warnings().size() == 2);
}
