#include <catch_amalgamated.hpp>

#include <sstream>

#include "nsga3lab/harness.hpp"

using namespace nsga3lab;

TEST_CASE("plan parsing") {
    const std::string doc = R"({
        "name": "thm2-omm-scaling",
        "family": "OMM",
        "d": 2,
        "n": [20, 40, 80],
        "mu": {"rule": "s-upper"},
        "p": {"rule": "theorem"},
        "eps_nad": {"rule": "f-max"},
        "seeds": 30,
        "master_seed": 5,
        "budget": {"rule": "auto"},
        "stop": "front-covered",
        "workers": 2
    })";
    const ExperimentPlan plan = parse_plan_text(doc);
    CHECK(plan.name == "thm2-omm-scaling");
    CHECK(plan.family == Family::OMM);
    CHECK(plan.n_list == std::vector<std::uint32_t>{20, 40, 80});
    CHECK(plan.seeds == 30);

    const auto configs = expand_plan(plan);
    REQUIRE(configs.size() == 3);
    CHECK(configs[0].mu == 21);
    CHECK(configs[1].mu == 41);
    CHECK(configs[2].mu == 81);
    CHECK(configs[0].p == 114);
    CHECK(configs[0].eps_nad == 20.0);
    CHECK(configs[0].budget > 0);

    CHECK_THROWS_AS(parse_plan_text(R"({"family": "OMM", "d": 2, "n": 10, "typo": 1})"),
                    ConfigError);
    CHECK_THROWS_AS(expand_plan(parse_plan_text(R"({"family": "OJZJ", "d": 2, "n": 10})")),
                    ConfigError); // missing k surfaces at expansion
    CHECK_THROWS_AS(parse_plan_text(R"({"family": "NOPE", "d": 2, "n": 10})"), ConfigError);
    CHECK_THROWS_AS(parse_plan_text(R"({"family": "OMM", "d": 2, "n": 10, "a": 2})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_plan_text("not json"), ConfigError);
}

TEST_CASE("expansion enforces the mu and p floors") {
    ExperimentPlan plan;
    plan.family = Family::OMM;
    plan.d = 2;
    plan.n_list = {10};
    plan.mu_rule = false;
    plan.mu_values = {5}; // below |S_d| = 11
    CHECK_THROWS_AS(expand_plan(plan), ConfigError);

    plan.mu_values = {11};
    plan.p_kind = ExperimentPlan::PKind::Explicit;
    plan.p_value = 10; // below required_p = 57
    CHECK_THROWS_AS(expand_plan(plan), ConfigError);
    plan.p_override = true;
    CHECK(expand_plan(plan)[0].p == 10);

    plan.seeds = 0;
    CHECK_THROWS_AS(expand_plan(plan), ConfigError);
}

TEST_CASE("expansion crosses n, k and mu lists") {
    ExperimentPlan plan;
    plan.family = Family::OJZJ;
    plan.d = 2;
    plan.n_list = {10, 20};
    plan.k_list = {2, 3};
    plan.mu_rule = false;
    plan.mu_values = {30, 60};
    CHECK(expand_plan(plan).size() == 8);
}

TEST_CASE("order statistics use the lower-median convention") {
    const Stats a = order_stats({3, 1, 2});
    CHECK(a.median == 2.0);
    const Stats b = order_stats({4, 1, 3, 2});
    CHECK(b.median == 2.0);
    const Stats c = order_stats({7, 7, 7, 7});
    CHECK(c.median == 7.0);
    CHECK(c.iqr == 0.0);
    CHECK(c.mean == 7.0);
    CHECK_THROWS_AS(order_stats({}), ConfigError);
}

TEST_CASE("run_plan: rows, evaluations and coverage on a small sweep") {
    ExperimentPlan plan;
    plan.name = "smoke";
    plan.family = Family::OMM;
    plan.d = 2;
    plan.n_list = {10};
    plan.seeds = 3;
    plan.master_seed = 11;
    const PlanOutcome outcome = run_plan(plan);
    REQUIRE(outcome.rows.size() == 3);
    for (const ResultRow& row : outcome.rows) {
        CHECK(row.problem == "OMM");
        CHECK(row.mu == 11);
        CHECK(row.covered);
        CHECK(row.violations == 0);
        CHECK(row.evaluations == row.mu * (row.generations + 1));
    }
    CHECK(outcome.summaries[0].coverage_rate == 1.0);
    CHECK(outcome.summaries[0].generations.median > 0);
}

TEST_CASE("CSV schema and determinism across workers") {
    ExperimentPlan plan;
    plan.name = "determinism-smoke";
    plan.family = Family::LOTZ;
    plan.d = 2;
    plan.n_list = {8, 12};
    plan.seeds = 2;
    plan.master_seed = 99;

    auto emit = [&](unsigned workers) {
        ExperimentPlan p = plan;
        p.workers = workers;
        std::ostringstream os;
        write_csv(run_plan(p), os);
        return os.str();
    };
    const std::string csv1 = emit(1);
    const std::string csv2 = emit(2);

    std::istringstream is(csv1);
    std::string header;
    std::getline(is, header);
    CHECK(header ==
          "problem,n,d,k,mu,a,p,eps_nad,seed,generations,evaluations,covered,violations,"
          "wall_ms");

    auto strip = [](const std::string& csv) {
        std::istringstream in(csv);
        std::ostringstream out;
        std::string line;
        while (std::getline(in, line)) out << line.substr(0, line.rfind(',')) << '\n';
        return out.str();
    };
    CHECK(strip(csv1) == strip(csv2));
}

TEST_CASE("auto budgets are generous but finite") {
    ExperimentPlan plan;
    plan.family = Family::OMM;
    plan.d = 2;
    plan.n_list = {20};
    const auto configs = expand_plan(plan);
    // 100x n ln n at n = 20 is about 6000
    CHECK(configs[0].budget > 1000);
    CHECK(configs[0].budget < (std::uint64_t{1} << 62) + 1);

    ExperimentPlan rrmo;
    rrmo.family = Family::RRMO;
    rrmo.d = 2;
    rrmo.n_list = {20};
    rrmo.a = 1;
    rrmo.stop = StopRule::Budget;
    // 100x (n^3 + n (12n)^4 / 4!) at n = 20 is about 2.8e11
    CHECK(expand_plan(rrmo)[0].budget >= 100000000000ull);
    CHECK(expand_plan(rrmo)[0].budget < (std::uint64_t{1} << 62) + 1);
}
