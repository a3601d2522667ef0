// Command-line front end: experiment plans, verification, and the CSV dumps
// for Pareto fronts and reference-point lattices.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nsga3lab/acceptance.hpp"
#include "nsga3lab/harness.hpp"

namespace {

constexpr int EXIT_OK = 0;
constexpr int EXIT_LEMMA_VIOLATION = 1;
constexpr int EXIT_CONFIG_ERROR = 2;
constexpr int EXIT_BUDGET_EXHAUSTED = 3;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<std::uint64_t> budget;
    std::string out_path;
    bool no_instrument = false;
};

std::ostream& open_out(const GlobalOptions& opts, std::ofstream& file) {
    if (opts.out_path.empty()) return std::cout;
    file.open(opts.out_path);
    if (!file) throw nsga3lab::ConfigError("cannot open output file " + opts.out_path);
    return file;
}

int run_or_sweep(const std::string& plan_path, const GlobalOptions& opts, bool allow_sweep) {
    using namespace nsga3lab;
    std::ifstream in(plan_path);
    if (!in) {
        std::cerr << "error: cannot read plan file " << plan_path << "\n";
        return EXIT_CONFIG_ERROR;
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    ExperimentPlan plan = parse_plan_text(buffer.str());
    if (opts.seed) plan.master_seed = *opts.seed;
    if (opts.workers) plan.workers = *opts.workers;
    if (opts.budget) {
        plan.budget_is_auto = false;
        plan.budget_value = *opts.budget;
    }
    if (opts.no_instrument) plan.instrument = false;

    const auto configs = expand_plan(plan);
    if (!allow_sweep && configs.size() != 1) {
        std::cerr << "error: plan expands to " << configs.size()
                  << " configurations; `run` takes exactly one (use `sweep`)\n";
        return EXIT_CONFIG_ERROR;
    }

    const PlanOutcome outcome = run_plan(plan, &std::cerr);
    std::ofstream file;
    write_csv(outcome, open_out(opts, file));
    write_summary(outcome, std::cerr);

    std::uint64_t violations = 0;
    bool uncovered = false;
    for (const ResultRow& row : outcome.rows) {
        violations += row.violations;
        if (!row.covered) uncovered = true;
    }
    if (violations > 0) return EXIT_LEMMA_VIOLATION;
    if (plan.stop == StopRule::FrontCovered && uncovered) return EXIT_BUDGET_EXHAUSTED;
    return EXIT_OK;
}

int dump_front(const std::string& family, std::uint32_t n, std::uint32_t d, std::uint32_t k,
               const GlobalOptions& opts) {
    using namespace nsga3lab;
    ProblemSpec spec{family_from_name(family), n, d, k};
    spec.validate();
    const auto front = spec.enumerate_front();
    std::ofstream file;
    std::ostream& os = open_out(opts, file);
    for (std::uint32_t j = 1; j <= d; ++j) os << (j > 1 ? "," : "") << "v" << j;
    os << "\n";
    for (const auto& v : front) {
        for (std::uint32_t j = 0; j < d; ++j) os << (j > 0 ? "," : "") << v[j];
        os << "\n";
    }
    std::cerr << family << " n=" << n << " d=" << d;
    if (spec.family == Family::OJZJ) std::cerr << " k=" << k;
    std::cerr << ": " << front.size() << " front vectors\n";
    return EXIT_OK;
}

int dump_refpoints(std::uint32_t p, std::uint32_t d, const GlobalOptions& opts) {
    using namespace nsga3lab;
    const ReferencePointSet set(p, d);
    std::ofstream file;
    std::ostream& os = open_out(opts, file);
    for (std::uint32_t j = 1; j <= d; ++j) os << "a" << j << ",";
    os << "p\n";
    set.for_each([&](std::span<const std::int32_t> a, std::uint64_t) {
        for (std::uint32_t j = 0; j < d; ++j) os << a[j] << ",";
        os << p << "\n";
    });
    std::cerr << "|R_p| = " << set.size() << " points (p=" << p << ", d=" << d << ")\n";
    return EXIT_OK;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"NSGA-III many-objective benchmark laboratory"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand arguments

    GlobalOptions opts;
    std::uint64_t seed_arg = 0;
    unsigned workers_arg = 0;
    std::uint64_t budget_arg = 0;
    app.add_option("--seed", seed_arg, "override the plan's master seed")
        ->each([&](const std::string&) { opts.seed = seed_arg; });
    app.add_option("--workers", workers_arg, "worker threads for independent runs")
        ->each([&](const std::string&) { opts.workers = workers_arg; });
    app.add_option("--out", opts.out_path, "write CSV to this path instead of stdout");
    app.add_option("--budget", budget_arg, "override the generation budget")
        ->each([&](const std::string&) { opts.budget = budget_arg; });
    app.add_flag("--no-instrument", opts.no_instrument, "disable lemma instrumentation");

    std::string plan_path;
    auto* run_cmd = app.add_subcommand("run", "execute a single-configuration plan");
    run_cmd->add_option("plan", plan_path, "plan JSON file")->required();

    auto* sweep_cmd = app.add_subcommand("sweep", "execute a plan's full parameter sweep");
    sweep_cmd->add_option("plan", plan_path, "plan JSON file")->required();

    bool full = false;
    auto* verify_cmd = app.add_subcommand("verify", "run the verification suites");
    verify_cmd->add_flag("--full", full, "run the entire acceptance battery");

    std::string family;
    std::uint32_t n = 0, d = 0, k = 0, p = 0;
    auto* front_cmd = app.add_subcommand("front", "dump the Pareto front as CSV");
    front_cmd->add_option("family", family, "LOTZ|OMM|COCZ|OJZJ|RRMO")->required();
    front_cmd->add_option("n", n, "problem size")->required();
    front_cmd->add_option("d", d, "objective count")->required();
    front_cmd->add_option("k", k, "gap size (OJZJ)");

    auto* ref_cmd = app.add_subcommand("refpoints", "dump the reference lattice as CSV");
    ref_cmd->add_option("p", p, "divisions per objective")->required();
    ref_cmd->add_option("d", d, "objective count")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return run_or_sweep(plan_path, opts, false);
        if (sweep_cmd->parsed()) return run_or_sweep(plan_path, opts, true);
        if (front_cmd->parsed()) return dump_front(family, n, d, k, opts);
        if (ref_cmd->parsed()) return dump_refpoints(p, d, opts);
        if (verify_cmd->parsed()) {
            const unsigned workers = opts.workers.value_or(2);
            if (full) {
                const int failures = nsga3lab::acceptance::run_all(std::cout, workers);
                std::cout << (failures == 0 ? "all criteria passed\n"
                                            : std::to_string(failures) + " criteria failed\n");
                return failures == 0 ? EXIT_OK : EXIT_LEMMA_VIOLATION;
            }
            return nsga3lab::acceptance::verify_fast(std::cout, workers) ? EXIT_OK
                                                                         : EXIT_LEMMA_VIOLATION;
        }
    } catch (const nsga3lab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return EXIT_CONFIG_ERROR;
    } catch (const nsga3lab::SpecError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return EXIT_CONFIG_ERROR;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_CONFIG_ERROR;
    }
    return EXIT_CONFIG_ERROR;
}
