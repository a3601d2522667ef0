#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nsga3lab/engine.hpp"
#include "nsga3lab/problems.hpp"
#include "nsga3lab/refpoints.hpp"

namespace nsga3lab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A declarative experiment: one benchmark family, sweep lists for n / k /
/// mu, and rules that resolve the remaining parameters per configuration.
/// Plans are plain JSON documents; see README for the schema.
struct ExperimentPlan {
    std::string name;
    Family family = Family::OMM;
    std::uint32_t d = 2;
    std::vector<std::uint32_t> n_list;
    std::vector<std::uint32_t> k_list{0};
    int a = 0;

    // mu: explicit values, or round(times * (include_a ? 1+a : 1) * S_upper) + plus
    std::vector<std::uint64_t> mu_values;
    bool mu_rule = true;
    double mu_times = 1.0;
    std::int64_t mu_plus = 0;
    bool mu_include_a = true;

    // p: explicit (optionally overriding the required_p floor) or a rule
    enum class PKind { Required, Theorem, Explicit } p_kind = PKind::Required;
    std::uint64_t p_value = 0;
    bool p_override = false;

    bool eps_is_fmax = true;
    double eps_value = 0.0;

    bool budget_is_auto = true;
    std::uint64_t budget_value = 0;

    std::uint32_t seeds = 1;
    std::uint64_t master_seed = 0;
    unsigned workers = 1;
    StopRule stop = StopRule::FrontCovered;
    bool instrument = true;
};

struct ResolvedConfig {
    std::uint32_t config_index = 0;
    ProblemSpec problem;
    std::uint32_t mu = 0;
    int a = 0;
    std::uint32_t p = 0;
    double eps_nad = 0.0;
    std::uint64_t budget = 0;
    StopRule stop = StopRule::FrontCovered;
    bool instrument = true;
};

/// One CSV row; the schema is part of the external interface:
/// problem,n,d,k,mu,a,p,eps_nad,seed,generations,evaluations,covered,violations,wall_ms
struct ResultRow {
    std::uint32_t config_index = 0;
    std::uint32_t seed_index = 0;
    std::string problem;
    std::uint32_t n = 0, d = 0, k = 0, mu = 0;
    int a = 0;
    std::uint64_t p = 0;
    double eps_nad = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t generations = 0;
    std::uint64_t evaluations = 0;
    bool covered = false;
    std::uint64_t violations = 0;
    std::uint64_t wall_ms = 0;
};

/// Exact order statistics, lower-median convention: median = v[(n-1)/2] of
/// the sorted values, q1 = v[(n-1)/4], q3 = v[3(n-1)/4].
struct Stats {
    double median = 0.0;
    double mean = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr = 0.0;
};

inline Stats order_stats(std::vector<std::uint64_t> values) {
    if (values.empty()) throw ConfigError("stats: empty value set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    Stats s;
    s.median = static_cast<double>(values[(n - 1) / 2]);
    s.q1 = static_cast<double>(values[(n - 1) / 4]);
    s.q3 = static_cast<double>(values[3 * (n - 1) / 4]);
    s.iqr = s.q3 - s.q1;
    long double sum = 0;
    for (std::uint64_t v : values) sum += static_cast<long double>(v);
    s.mean = static_cast<double>(sum / static_cast<long double>(n));
    return s;
}

struct ConfigSummary {
    std::uint32_t config_index = 0;
    std::string label;
    std::uint64_t runs = 0;
    double coverage_rate = 0.0;
    Stats generations;
    std::uint64_t violations = 0;
    // instrumentation aggregates
    std::uint64_t bypass_samples = 0;
    std::uint64_t bypass_hits = 0;
    std::uint64_t dominated_survivor_generations = 0;
    std::uint64_t total_generations = 0;
    std::uint64_t pairs_checked_l5 = 0;
    std::uint64_t instrumented_generations = 0;
};

struct PlanOutcome {
    std::vector<ResolvedConfig> configs;
    std::vector<ResultRow> rows;         // sorted by (config_index, seed_index)
    std::vector<ConfigSummary> summaries; // one per config
};

namespace detail {

inline double auto_budget_raw(const ResolvedConfig& c) {
    const double n = c.problem.n, d = c.problem.d, k = c.problem.k;
    const double s = static_cast<double>(c.problem.incomparable_set_bound().upper);
    const double mu = c.mu;
    const auto clamped_log = [](double x) { return std::max(1.0, std::log(std::max(1.0, x))); };
    switch (c.problem.family) {
        case Family::LOTZ:
            return n * clamped_log(std::min(mu / s, n)) + n * n * s / mu;
        case Family::OMM:
        case Family::COCZ:
            return n * clamped_log(std::min(mu / s, n)) + d * s * n * std::log(n) / mu;
        case Family::OJZJ: {
            const double base = n * clamped_log(std::min(mu / s, d)) +
                                d * d * s * n * std::log(n) / mu;
            if (c.a == 0) {
                return base + d * std::pow(n, k) * s / mu +
                       d * clamped_log(std::min(mu / s, std::pow(n, k)));
            }
            return base + k * d * std::pow(12.0 * std::exp(1.0) * n, k) / std::pow(k, k);
        }
        case Family::RRMO: {
            const double w = 2.0 * n / (5.0 * d);
            return n * n * n + n * std::pow(12.0 * n, w) / std::tgamma(w + 1.0);
        }
    }
    return n * n;
}

/// Default budget: 100x the paper's leading-order bound with constant 1, so
/// a timeout indicates a genuine anomaly.
inline std::uint64_t auto_budget(const ResolvedConfig& c) {
    const double v = 100.0 * auto_budget_raw(c);
    if (!std::isfinite(v) || v >= 9e18) return std::uint64_t{1} << 62;
    return static_cast<std::uint64_t>(std::ceil(v));
}

inline std::string fmt_eps(double eps) {
    if (eps == std::floor(eps) && std::abs(eps) < 1e15) {
        std::ostringstream os;
        os << static_cast<long long>(eps);
        return os.str();
    }
    std::ostringstream os;
    os << std::setprecision(17) << eps;
    return os.str();
}

} // namespace detail

inline std::vector<ResolvedConfig> expand_plan(const ExperimentPlan& plan) {
    if (plan.n_list.empty()) throw ConfigError("plan: empty n list");
    if (plan.seeds == 0) throw ConfigError("plan: empty seed list");
    if (plan.family == Family::OJZJ && plan.k_list == std::vector<std::uint32_t>{0})
        throw ConfigError("plan: OJZJ requires k");

    std::vector<ResolvedConfig> out;
    for (std::uint32_t n : plan.n_list) {
        for (std::uint32_t k : plan.k_list) {
            ProblemSpec spec{plan.family, n, plan.d, k};
            try {
                spec.validate();
            } catch (const SpecError& e) {
                throw ConfigError(std::string("plan: ") + e.what());
            }
            const IncomparableBound bound = spec.incomparable_set_bound();
            std::vector<std::uint64_t> mus;
            if (plan.mu_rule) {
                const double base = plan.mu_times *
                                    (plan.mu_include_a ? 1.0 + plan.a : 1.0) *
                                    static_cast<double>(bound.upper);
                mus.push_back(static_cast<std::uint64_t>(
                    std::llround(base) + plan.mu_plus));
            } else {
                mus = plan.mu_values;
            }
            for (std::uint64_t mu : mus) {
                const std::uint64_t mu_floor = (1 + plan.a) * bound.upper;
                if (mu < mu_floor) {
                    throw ConfigError("plan: mu = " + std::to_string(mu) +
                                      " below (1+a)*|S_d| upper bound = " +
                                      std::to_string(mu_floor) + " for n = " + std::to_string(n));
                }
                ResolvedConfig rc;
                rc.config_index = static_cast<std::uint32_t>(out.size());
                rc.problem = spec;
                rc.mu = static_cast<std::uint32_t>(mu);
                rc.a = plan.a;
                switch (plan.p_kind) {
                    case ExperimentPlan::PKind::Required:
                        rc.p = static_cast<std::uint32_t>(required_p(spec));
                        break;
                    case ExperimentPlan::PKind::Theorem:
                        rc.p = static_cast<std::uint32_t>(theorem_p(spec));
                        break;
                    case ExperimentPlan::PKind::Explicit:
                        rc.p = static_cast<std::uint32_t>(plan.p_value);
                        if (rc.p < required_p(spec) && !plan.p_override) {
                            throw ConfigError(
                                "plan: p below required_p; set p.override to force");
                        }
                        break;
                }
                rc.eps_nad = plan.eps_is_fmax ? static_cast<double>(spec.f_max()) : plan.eps_value;
                rc.stop = plan.stop;
                rc.instrument = plan.instrument;
                rc.budget = plan.budget_is_auto ? detail::auto_budget(rc) : plan.budget_value;
                if (rc.stop == StopRule::FrontCovered && spec.front_size() > 1000000) {
                    throw ConfigError("plan: stop=front-covered needs an enumerable front");
                }
                out.push_back(rc);
            }
        }
    }
    return out;
}

/// Parses the JSON plan document. Unknown keys are rejected so typos fail
/// loudly rather than silently running defaults.
inline ExperimentPlan parse_plan(const nlohmann::json& j) {
    static const std::vector<std::string> known{
        "name", "family", "d", "n", "k", "a", "mu", "p", "eps_nad",
        "seeds", "master_seed", "budget", "stop", "workers", "instrument"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw ConfigError("plan: unknown key '" + it.key() + "'");
    }
    ExperimentPlan plan;
    try {
        plan.name = j.value("name", std::string("plan"));
        plan.family = family_from_name(j.at("family").get<std::string>());
        plan.d = j.at("d").get<std::uint32_t>();
        if (j.at("n").is_array())
            plan.n_list = j.at("n").get<std::vector<std::uint32_t>>();
        else
            plan.n_list = {j.at("n").get<std::uint32_t>()};
        if (j.contains("k")) {
            if (j.at("k").is_array())
                plan.k_list = j.at("k").get<std::vector<std::uint32_t>>();
            else
                plan.k_list = {j.at("k").get<std::uint32_t>()};
        }
        plan.a = j.value("a", 0);
        if (plan.a != 0 && plan.a != 1) throw ConfigError("plan: a must be 0 or 1");

        if (j.contains("mu")) {
            const auto& m = j.at("mu");
            if (m.is_number()) {
                plan.mu_rule = false;
                plan.mu_values = {m.get<std::uint64_t>()};
            } else if (m.is_array()) {
                plan.mu_rule = false;
                plan.mu_values = m.get<std::vector<std::uint64_t>>();
            } else if (m.is_object()) {
                if (m.at("rule").get<std::string>() != "s-upper")
                    throw ConfigError("plan: unknown mu rule");
                plan.mu_rule = true;
                plan.mu_times = m.value("times", 1.0);
                plan.mu_plus = m.value("plus", std::int64_t{0});
                plan.mu_include_a = m.value("include_a", true);
            } else {
                throw ConfigError("plan: bad mu");
            }
        }
        if (j.contains("p")) {
            const auto& p = j.at("p");
            if (p.is_number()) {
                plan.p_kind = ExperimentPlan::PKind::Explicit;
                plan.p_value = p.get<std::uint64_t>();
            } else if (p.is_object() && p.contains("rule")) {
                const std::string rule = p.at("rule").get<std::string>();
                if (rule == "required") plan.p_kind = ExperimentPlan::PKind::Required;
                else if (rule == "theorem") plan.p_kind = ExperimentPlan::PKind::Theorem;
                else throw ConfigError("plan: unknown p rule '" + rule + "'");
            } else if (p.is_object()) {
                plan.p_kind = ExperimentPlan::PKind::Explicit;
                plan.p_value = p.at("value").get<std::uint64_t>();
                plan.p_override = p.value("override", false);
            } else {
                throw ConfigError("plan: bad p");
            }
        }
        if (j.contains("eps_nad")) {
            const auto& e = j.at("eps_nad");
            if (e.is_number()) {
                plan.eps_is_fmax = false;
                plan.eps_value = e.get<double>();
            } else if (!(e.is_object() && e.value("rule", "") == "f-max")) {
                throw ConfigError("plan: bad eps_nad");
            }
        }
        if (j.contains("budget")) {
            const auto& b = j.at("budget");
            if (b.is_number()) {
                plan.budget_is_auto = false;
                plan.budget_value = b.get<std::uint64_t>();
            } else if (!(b.is_object() && b.value("rule", "") == "auto")) {
                throw ConfigError("plan: bad budget");
            }
        }
        plan.seeds = j.value("seeds", 1u);
        plan.master_seed = j.value("master_seed", std::uint64_t{0});
        plan.workers = j.value("workers", 1u);
        if (j.contains("stop")) {
            const std::string s = j.at("stop").get<std::string>();
            if (s == "front-covered") plan.stop = StopRule::FrontCovered;
            else if (s == "budget") plan.stop = StopRule::Budget;
            else throw ConfigError("plan: unknown stop rule '" + s + "'");
        }
        plan.instrument = j.value("instrument", true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("plan: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("plan: ") + e.what());
    }
    return plan;
}

inline ExperimentPlan parse_plan_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("plan: invalid JSON: ") + e.what());
    }
    return parse_plan(j);
}

/// Executes every (config, seed) run of the plan. Runs are independent
/// engine instances on worker threads; each run r (in config-major order)
/// draws child seed mix(master_seed, r), so worker count changes neither
/// seeds nor results. Rows are sorted before emission.
inline PlanOutcome run_plan(const ExperimentPlan& plan, std::ostream* progress = nullptr) {
    PlanOutcome outcome;
    outcome.configs = expand_plan(plan);
    const std::uint64_t total_runs =
        static_cast<std::uint64_t>(outcome.configs.size()) * plan.seeds;

    // the reference set of a config is immutable and shared by its runs
    std::vector<std::shared_ptr<const ReferencePointSet>> refsets;
    refsets.reserve(outcome.configs.size());
    for (const ResolvedConfig& rc : outcome.configs) {
        refsets.push_back(std::make_shared<const ReferencePointSet>(rc.p, rc.problem.d));
    }

    outcome.rows.resize(total_runs);
    std::vector<RunResult> results(total_runs);
    std::atomic<std::uint64_t> next{0};
    std::mutex progress_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::uint64_t run = next.fetch_add(1);
            if (run >= total_runs) return;
            const std::uint32_t config_index = static_cast<std::uint32_t>(run / plan.seeds);
            const std::uint32_t seed_index = static_cast<std::uint32_t>(run % plan.seeds);
            const ResolvedConfig& rc = outcome.configs[config_index];

            EngineConfig ec;
            ec.problem = rc.problem;
            ec.mu = rc.mu;
            ec.update_a = rc.a;
            ec.p = rc.p;
            ec.eps_nad = rc.eps_nad;
            ec.seed = RandomSource::mix(plan.master_seed, run);
            ec.max_generations = rc.budget;
            ec.instr.hard_lemmas = rc.instrument;
            ec.instr.sparsity = rc.instrument;
            ec.instr.mechanics = rc.instrument;

            const auto t0 = std::chrono::steady_clock::now();
            Engine engine(ec, refsets[config_index]);
            RunResult res = engine.run_until(rc.stop, rc.budget);
            const auto t1 = std::chrono::steady_clock::now();

            ResultRow row;
            row.config_index = config_index;
            row.seed_index = seed_index;
            row.problem = family_name(rc.problem.family);
            row.n = rc.problem.n;
            row.d = rc.problem.d;
            row.k = rc.problem.family == Family::OJZJ ? rc.problem.k : 0;
            row.mu = rc.mu;
            row.a = rc.a;
            row.p = rc.p;
            row.eps_nad = rc.eps_nad;
            row.seed = ec.seed;
            row.generations = res.generations;
            row.evaluations = res.evaluations;
            row.covered = res.covered;
            row.violations = res.total_violations;
            row.wall_ms = static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count());
            outcome.rows[run] = std::move(row);
            results[run] = std::move(res);

            if (progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                *progress << plan.name << ": run " << (run + 1) << "/" << total_runs << " "
                          << outcome.rows[run].problem << " n=" << outcome.rows[run].n
                          << " mu=" << outcome.rows[run].mu << " seed#" << seed_index
                          << (outcome.rows[run].covered ? " covered in " : " stopped at ")
                          << outcome.rows[run].generations << " generations\n";
            }
        }
    };

    const unsigned workers = std::max(1u, plan.workers);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (unsigned i = 0; i < workers; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    // rows are already in (config-major, seed-minor) order by construction
    for (std::uint32_t ci = 0; ci < outcome.configs.size(); ++ci) {
        ConfigSummary s;
        s.config_index = ci;
        const ResolvedConfig& rc = outcome.configs[ci];
        std::ostringstream label;
        label << family_name(rc.problem.family) << " n=" << rc.problem.n << " d=" << rc.problem.d;
        if (rc.problem.family == Family::OJZJ) label << " k=" << rc.problem.k;
        label << " mu=" << rc.mu << " a=" << rc.a;
        s.label = label.str();
        std::vector<std::uint64_t> gens;
        for (std::uint32_t si = 0; si < plan.seeds; ++si) {
            const std::uint64_t run = static_cast<std::uint64_t>(ci) * plan.seeds + si;
            const ResultRow& row = outcome.rows[run];
            const RunResult& res = results[run];
            ++s.runs;
            s.coverage_rate += row.covered ? 1.0 : 0.0;
            s.violations += row.violations;
            gens.push_back(row.generations);
            s.bypass_samples += res.bypass_samples;
            s.bypass_hits += res.bypass_hits;
            s.dominated_survivor_generations += res.dominated_survivor_generations;
            s.total_generations += res.generations;
            s.pairs_checked_l5 += res.pairs_checked_l5;
            s.instrumented_generations += res.instrumented_generations;
        }
        s.coverage_rate /= static_cast<double>(s.runs);
        s.generations = order_stats(gens);
        outcome.summaries.push_back(std::move(s));
    }
    return outcome;
}

inline void write_csv(const PlanOutcome& outcome, std::ostream& os) {
    os << "problem,n,d,k,mu,a,p,eps_nad,seed,generations,evaluations,covered,violations,wall_ms\n";
    for (const ResultRow& r : outcome.rows) {
        os << r.problem << ',' << r.n << ',' << r.d << ',' << r.k << ',' << r.mu << ',' << r.a
           << ',' << r.p << ',' << detail::fmt_eps(r.eps_nad) << ',' << r.seed << ','
           << r.generations << ',' << r.evaluations << ',' << (r.covered ? 1 : 0) << ','
           << r.violations << ',' << r.wall_ms << '\n';
    }
}

inline void write_summary(const PlanOutcome& outcome, std::ostream& os) {
    for (const ConfigSummary& s : outcome.summaries) {
        os << s.label << ": runs=" << s.runs << " coverage=" << s.coverage_rate
           << " median_gens=" << s.generations.median << " mean_gens=" << s.generations.mean
           << " iqr=" << s.generations.iqr << " violations=" << s.violations;
        if (s.bypass_samples > 0) {
            os << " bypass_freq="
               << static_cast<double>(s.bypass_hits) / static_cast<double>(s.bypass_samples)
               << " dominated_survivor_frac="
               << static_cast<double>(s.dominated_survivor_generations) /
                      static_cast<double>(s.total_generations);
        }
        os << "\n";
    }
}

} // namespace nsga3lab
