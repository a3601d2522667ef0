#include <catch_amalgamated.hpp>

#include <set>

#include "nsga3lab/problems.hpp"

using namespace nsga3lab;

namespace {

BitString bits(const std::string& s) {
    BitString x(static_cast<std::uint32_t>(s.size()));
    for (std::uint32_t i = 0; i < s.size(); ++i) x.set(i, s[i] == '1');
    return x;
}

std::vector<BitString> all_strings(std::uint32_t n) {
    std::vector<BitString> out;
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << n); ++b) {
        BitString x(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            if ((b >> i) & 1) x.set(i, true);
        }
        out.push_back(std::move(x));
    }
    return out;
}

} // namespace

TEST_CASE("evaluate: frozen values per family") {
    CHECK(ProblemSpec{Family::LOTZ, 4, 2}.evaluate(bits("1100")) == ObjectiveVector{2, 2});
    CHECK(ProblemSpec{Family::LOTZ, 8, 4}.evaluate(bits("10100110")) ==
          ObjectiveVector{1, 1, 0, 1});
    CHECK(ProblemSpec{Family::OMM, 5, 2}.evaluate(bits("10110")) == ObjectiveVector{3, 2});
    CHECK(ProblemSpec{Family::COCZ, 4, 2}.evaluate(bits("1101")) == ObjectiveVector{3, 3});
    CHECK(ProblemSpec{Family::OJZJ, 6, 2, 2}.evaluate(bits("111111")) == ObjectiveVector{8, 2});
    CHECK(ProblemSpec{Family::OJZJ, 6, 2, 2}.evaluate(bits("111110")) == ObjectiveVector{1, 3});
    CHECK(ProblemSpec{Family::RRMO, 10, 2}.evaluate(bits("0011111100")) ==
          ObjectiveVector{8, 8});
    CHECK(ProblemSpec{Family::RRMO, 10, 2}.evaluate(bits("0111111110")) ==
          ObjectiveVector{13, 13});
    CHECK(ProblemSpec{Family::RRMO, 10, 2}.evaluate(bits("0000000000")) ==
          ObjectiveVector{0, 0});
}

TEST_CASE("spec validation names the violated constraint") {
    CHECK_THROWS_AS(ProblemSpec({Family::LOTZ, 5, 4}).validate(), SpecError);
    CHECK_THROWS_AS(ProblemSpec({Family::COCZ, 6, 4}).validate(), SpecError);
    CHECK_THROWS_AS(ProblemSpec({Family::OJZJ, 6, 2, 1}).validate(), SpecError);
    CHECK_THROWS_AS(ProblemSpec({Family::OJZJ, 6, 2, 7}).validate(), SpecError);
    CHECK_THROWS_AS(ProblemSpec({Family::RRMO, 12, 2}).validate(), SpecError);
    CHECK_THROWS_AS(ProblemSpec({Family::OMM, 10, 3}).validate(), SpecError);
    CHECK_NOTHROW(ProblemSpec({Family::RRMO, 20, 4}).validate());
}

TEST_CASE("f_max per family") {
    CHECK(ProblemSpec{Family::LOTZ, 20, 2}.f_max() == 20);
    CHECK(ProblemSpec{Family::OMM, 8, 4}.f_max() == 4);
    CHECK(ProblemSpec{Family::COCZ, 20, 2}.f_max() == 20);
    CHECK(ProblemSpec{Family::OJZJ, 10, 2, 2}.f_max() == 12);
    CHECK(ProblemSpec{Family::RRMO, 10, 2}.f_max() == 14);
}

TEST_CASE("fitness entries stay within [0, f_max] on random inputs") {
    RandomSource rng(31);
    const std::vector<ProblemSpec> specs{
        {Family::LOTZ, 12, 2}, {Family::LOTZ, 8, 4},    {Family::OMM, 12, 2},
        {Family::COCZ, 12, 2}, {Family::OJZJ, 12, 2, 3}, {Family::OJZJ, 8, 4, 2},
        {Family::RRMO, 10, 2}, {Family::RRMO, 20, 4},
    };
    for (const auto& spec : specs) {
        for (int trial = 0; trial < 500; ++trial) {
            const BitString x = BitString::random(spec.n, rng);
            const ObjectiveVector f = spec.evaluate(x);
            REQUIRE(f.size() == spec.d);
            for (std::int32_t v : f) {
                REQUIRE(v >= 0);
                REQUIRE(v <= spec.f_max());
            }
        }
    }
}

TEST_CASE("OMM and COCZ objective coupling") {
    RandomSource rng(32);
    const ProblemSpec omm{Family::OMM, 12, 4};
    for (int trial = 0; trial < 300; ++trial) {
        const ObjectiveVector f = omm.evaluate(BitString::random(12, rng));
        for (std::uint32_t j = 0; j < 2; ++j) CHECK(f[2 * j] + f[2 * j + 1] == 6);
    }
    const ProblemSpec cocz{Family::COCZ, 12, 2};
    for (int trial = 0; trial < 300; ++trial) {
        const ObjectiveVector f = cocz.evaluate(BitString::random(12, rng));
        // odd+even block sums are constant n/d after removing the shared half
        CHECK(f[0] + f[1] >= 6);
        CHECK((f[0] + f[1] - 6) % 2 == 0);
        const std::int32_t fh = (f[0] + f[1] - 6) / 2;
        CHECK(f[0] - fh + (f[1] - fh) == 6);
    }
}

TEST_CASE("is_pareto_optimal spot checks") {
    CHECK(ProblemSpec{Family::OMM, 6, 2}.is_pareto_optimal(bits("010101")));
    CHECK(ProblemSpec{Family::LOTZ, 4, 2}.is_pareto_optimal(bits("1100")));
    CHECK_FALSE(ProblemSpec{Family::LOTZ, 4, 2}.is_pareto_optimal(bits("1010")));
    CHECK_FALSE(ProblemSpec{Family::OJZJ, 6, 2, 2}.is_pareto_optimal(bits("111110")));
    CHECK(ProblemSpec{Family::OJZJ, 6, 2, 2}.is_pareto_optimal(bits("111111")));
}

TEST_CASE("is_pareto_optimal equals exhaustive dominance check on tiny instances") {
    const std::vector<ProblemSpec> specs{
        {Family::LOTZ, 8, 2},    {Family::LOTZ, 8, 4},  {Family::OMM, 8, 2},
        {Family::COCZ, 8, 2},    {Family::COCZ, 8, 4},  {Family::OJZJ, 8, 2, 2},
        {Family::OJZJ, 8, 4, 2}, {Family::RRMO, 10, 2},
    };
    for (const auto& spec : specs) {
        const auto xs = all_strings(spec.n);
        std::vector<ObjectiveVector> fs;
        fs.reserve(xs.size());
        for (const auto& x : xs) fs.push_back(spec.evaluate(x));
        for (std::size_t i = 0; i < xs.size(); ++i) {
            bool dominated = false;
            for (std::size_t j = 0; j < xs.size() && !dominated; ++j)
                dominated = strictly_dominates(fs[j], fs[i]);
            REQUIRE(spec.is_pareto_optimal(xs[i]) == !dominated);
        }
    }
}

TEST_CASE("front enumeration matches closed forms and hand values") {
    CHECK(ProblemSpec{Family::OJZJ, 20, 2, 3}.enumerate_front().size() == 17);

    const auto omm_front = ProblemSpec{Family::OMM, 10, 2}.enumerate_front();
    REQUIRE(omm_front.size() == 11);
    for (std::int32_t i = 0; i <= 10; ++i)
        CHECK(std::find(omm_front.begin(), omm_front.end(), ObjectiveVector{i, 10 - i}) !=
              omm_front.end());

    const auto rrmo_front = ProblemSpec{Family::RRMO, 10, 2}.enumerate_front();
    CHECK(std::set<ObjectiveVector>(rrmo_front.begin(), rrmo_front.end()) ==
          std::set<ObjectiveVector>{{14, 12}, {13, 13}, {12, 14}});

    const std::vector<ProblemSpec> specs{
        {Family::LOTZ, 12, 2},   {Family::LOTZ, 8, 4},    {Family::OMM, 12, 4},
        {Family::COCZ, 16, 4},   {Family::OJZJ, 12, 2, 4}, {Family::OJZJ, 12, 4, 2},
        {Family::RRMO, 20, 2},   {Family::RRMO, 20, 4},
    };
    for (const auto& spec : specs) {
        const auto front = spec.enumerate_front();
        CHECK(front.size() == spec.front_size());
        CHECK(std::set<ObjectiveVector>(front.begin(), front.end()).size() == front.size());
    }

    CHECK_THROWS_AS(ProblemSpec({Family::OMM, 200, 20}).enumerate_front(1000),
                    EnumerationTooLarge);
}

TEST_CASE("front vectors are exactly the fitness values of Pareto optima (tiny instances)") {
    const std::vector<ProblemSpec> specs{
        {Family::LOTZ, 8, 2}, {Family::OMM, 8, 2},     {Family::COCZ, 8, 2},
        {Family::OJZJ, 8, 2, 2}, {Family::RRMO, 10, 2},
    };
    for (const auto& spec : specs) {
        std::set<ObjectiveVector> seen;
        for (const auto& x : all_strings(spec.n)) {
            if (spec.is_pareto_optimal(x)) seen.insert(spec.evaluate(x));
        }
        const auto front = spec.enumerate_front();
        CHECK(std::set<ObjectiveVector>(front.begin(), front.end()) == seen);
    }
}

TEST_CASE("canonical preimages hit their front vectors") {
    const std::vector<ProblemSpec> specs{
        {Family::LOTZ, 12, 2},  {Family::LOTZ, 8, 4},     {Family::OMM, 10, 2},
        {Family::COCZ, 16, 4},  {Family::OJZJ, 12, 2, 3}, {Family::OJZJ, 8, 4, 2},
        {Family::RRMO, 10, 2},  {Family::RRMO, 20, 4},
    };
    for (const auto& spec : specs) {
        for (const auto& v : spec.enumerate_front()) {
            const BitString x = spec.canonical_preimage(v);
            REQUIRE(spec.evaluate(x) == v);
            REQUIRE(spec.is_pareto_optimal(x));
        }
    }
    CHECK_THROWS_AS(ProblemSpec({Family::OJZJ, 6, 2, 2}).canonical_preimage({1, 3}),
                    std::domain_error);
}

TEST_CASE("incomparable set bounds") {
    const IncomparableBound lotz2 = ProblemSpec{Family::LOTZ, 30, 2}.incomparable_set_bound();
    CHECK(lotz2.exact);
    CHECK(lotz2.upper == 31);
    CHECK(*lotz2.lower == 31);

    const IncomparableBound cocz = ProblemSpec{Family::COCZ, 16, 4}.incomparable_set_bound();
    CHECK(cocz.exact);
    CHECK(cocz.upper == 25);

    const IncomparableBound lotz4 = ProblemSpec{Family::LOTZ, 16, 4}.incomparable_set_bound();
    CHECK_FALSE(lotz4.exact);
    CHECK(lotz4.upper == 729);
    CHECK(*lotz4.lower == 91);

    const IncomparableBound omm = ProblemSpec{Family::OMM, 20, 2}.incomparable_set_bound();
    CHECK(omm.exact);
    CHECK(omm.upper == 21);

    const IncomparableBound ojzj = ProblemSpec{Family::OJZJ, 20, 2, 3}.incomparable_set_bound();
    CHECK_FALSE(ojzj.exact);
    CHECK(ojzj.upper == 21);
    CHECK(*ojzj.lower == 17);

    const IncomparableBound rrmo = ProblemSpec{Family::RRMO, 20, 2}.incomparable_set_bound();
    CHECK_FALSE(rrmo.exact);
    CHECK(rrmo.upper == 9);
    CHECK_FALSE(rrmo.lower.has_value());
}

TEST_CASE("OJZJ block labels") {
    const ProblemSpec spec{Family::OJZJ, 6, 2, 2};
    CHECK(spec.block_label({8, 2}).labels == std::vector<BlockSymbol>{BlockSymbol::One});
    CHECK(spec.block_label({4, 4}).labels == std::vector<BlockSymbol>{BlockSymbol::Interior});
    const ProblemSpec spec4{Family::OJZJ, 12, 4, 2};
    CHECK(spec4.block_label({2, 10, 8, 4}).labels ==
          std::vector<BlockSymbol>{BlockSymbol::Zero, BlockSymbol::One});
    CHECK_THROWS_AS(spec.block_label({1, 3}), std::domain_error);
}

TEST_CASE("block labels round-trip the block shapes") {
    const ProblemSpec spec{Family::OJZJ, 12, 4, 2};
    for (const auto& v : spec.enumerate_front()) {
        const BlockLabel label = spec.block_label(v);
        const BitString x = spec.canonical_preimage(v);
        for (std::uint32_t b = 0; b < spec.block_count(); ++b) {
            const std::uint32_t ones = block_stats(x, b, spec.block_len()).ones;
            switch (label.labels[b]) {
                case BlockSymbol::One: CHECK(ones == spec.block_len()); break;
                case BlockSymbol::Zero: CHECK(ones == 0); break;
                case BlockSymbol::Interior:
                    CHECK(ones >= spec.k);
                    CHECK(ones <= spec.block_len() - spec.k);
                    break;
            }
        }
    }
}

TEST_CASE("RRMO region classification") {
    const ProblemSpec spec{Family::RRMO, 10, 2};
    CHECK(spec.rrmo_region(bits("0011111100")).tag == RrmoTag::N);
    CHECK(spec.rrmo_region(bits("0011111100")).blocks_in_a.empty());
    CHECK(spec.rrmo_region(bits("0000000000")).tag == RrmoTag::L);
    // ones = 6 with LZ + TZ = 3: quota met but the block is not in B
    CHECK(spec.rrmo_region(bits("0110111100")).tag == RrmoTag::M);
    // ones = 7, not an A or B shape
    CHECK(spec.rrmo_region(bits("0111111010")).tag == RrmoTag::Dead);
    const auto region_a = spec.rrmo_region(bits("0111111110"));
    CHECK(region_a.tag == RrmoTag::N);
    CHECK(region_a.blocks_in_a == std::vector<std::uint32_t>{0});

    // tags are exhaustive and exclusive over {0,1}^n
    int counts[4] = {0, 0, 0, 0};
    for (const auto& x : all_strings(10)) ++counts[static_cast<int>(spec.rrmo_region(x).tag)];
    CHECK(counts[0] + counts[1] + counts[2] + counts[3] == 1024);
    CHECK(counts[static_cast<int>(RrmoTag::N)] > 0);
    CHECK(counts[static_cast<int>(RrmoTag::M)] > 0);
    CHECK(counts[static_cast<int>(RrmoTag::Dead)] > 0);
}
