#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "llmsaea/harness.hpp"
#include "llmsaea/orchestrator.hpp"

using namespace llmsaea;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(std::string_view problem, std::size_t dim, std::string_view strategy, std::size_t n,
                       std::size_t mfes, std::uint64_t seed)
{
    RunConfig c;
    c.problem = std::make_shared<Problem>(make_classical(problem, dim));
    c.population_size = n;
    c.max_evaluations = mfes;
    c.seed = seed;
    c.strategy = StrategySpec::parse(strategy);
    return c;
}

std::string trace_text(const RunTrace& t)
{
    std::ostringstream out;
    write_trace_csv(t, out);
    return out.str();
}

void require_invariants(const RunConfig& c, const RunTrace& t)
{
    for (const auto& check : check_run_invariants(c, t)) {
        CAPTURE(check.name);
        CAPTURE(check.detail);
        CHECK(check.passed);
    }
}

} // namespace

TEST_CASE("strategy names")
{
    CHECK(StrategySpec::parse("llm").kind == StrategyKind::Expert);
    CHECK(StrategySpec::parse("llm_no_src").mode == DecisionMode::IgnoreLabels);
    CHECK(StrategySpec::parse("llm_src_certain_only").mode == DecisionMode::CertainOnly);
    CHECK(StrategySpec::parse("llm_single_expert").single_expert);
    CHECK(StrategySpec::parse("fixed:5").fixed_action == 5);
    CHECK(StrategySpec::parse("a7").fixed_action == 7);
    CHECK(StrategySpec::parse("seq").kind == StrategyKind::Sequential);
    CHECK(StrategySpec::parse("QLearning").kind == StrategyKind::QLearning);
    CHECK(StrategySpec::parse("fixed:3").name() == "fixed:3");
    CHECK_THROWS_AS(StrategySpec::parse("fixed:9"), ConfigError);
    CHECK_THROWS_AS(StrategySpec::parse("a0"), ConfigError);
    CHECK_THROWS_AS(StrategySpec::parse("bogus"), ConfigError);
}

TEST_CASE("run configuration checks")
{
    auto c = small_config("Ackley", 3, "mock", 10, 30, 1);
    CHECK_NOTHROW(validate(c));
    c.population_size = 3;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.population_size = 10;
    c.max_evaluations = 9;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.max_evaluations = 30;
    c.problem.reset();
    CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("budget equal to the population size")
{
    const auto c = small_config("Rastrigin", 4, "mock", 12, 12, 3);
    const auto t = run(c);
    CHECK(t.rows.size() == 12);
    CHECK(t.iterations == 0);
    double best = t.archive.front().f;
    for (const auto& r : t.rows) {
        CHECK(r.source == "init");
        best = std::min(best, r.value);
    }
    CHECK(t.best().f == best);
}

TEST_CASE("whole-run determinism")
{
    for (std::string_view s : {"mock", "random", "qlearning", "fixed:4"}) {
        const auto c = small_config("Ackley", 4, s, 12, 40, 17);
        CHECK(trace_text(run(c)) == trace_text(run(c)));
    }
    const auto a = small_config("Ackley", 4, "random", 12, 40, 17);
    const auto b = small_config("Ackley", 4, "random", 12, 40, 18);
    CHECK(trace_text(run(a)) != trace_text(run(b)));
}

TEST_CASE("golden fixed a5 run")
{
    const auto c = small_config("Ellipsoid", 10, "fixed:5", 100, 300, 7);
    std::ifstream in(fs::path(LLMSAEA_FIXTURES) / "golden_fixed_a5.csv", std::ios::binary);
    REQUIRE(in);
    std::stringstream golden;
    golden << in.rdbuf();
    CHECK(trace_text(run(c)) == golden.str());
}

TEST_CASE("every strategy keeps the loop invariants")
{
    for (std::string_view s : {"mock", "llm_no_src", "llm_src_certain_only", "llm_single_expert", "seq", "random",
                               "alter", "qlearning", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8"}) {
        CAPTURE(s);
        const auto c = small_config("Griewank", 3, s, 10, 26, 5);
        const auto t = run(c);
        CHECK(t.archive.size() == 26);
        require_invariants(c, t);
    }
}

TEST_CASE("calibrated mock keeps the invariants")
{
    auto c = small_config("Rosenbrock", 3, "mock", 10, 40, 2);
    c.hyper.mock_policy = MockPolicy::Calibrated;
    const auto t = run(c);
    require_invariants(c, t);
    std::size_t multi = 0;
    struct Counter : RunObserver {
        std::size_t* n;
        void on_decision(std::size_t, const std::vector<Selection>& chosen) override { *n += chosen.size() > 1; }
    } counter;
    counter.n = &multi;
    run(c, &counter);
    CHECK(multi > 0);
}

TEST_CASE("unreachable chat endpoint falls back and keeps running")
{
    auto c = small_config("Ackley", 3, "llm", 10, 16, 4);
    c.backend = BackendKind::Llm;
    c.chat.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    c.chat.max_retries = 0;
    c.chat.timeout_seconds = 1.0;
    const auto t = run(c);
    CHECK(t.archive.size() == 16);
    CHECK(t.decision_fallbacks == t.outer_iterations);
    CHECK(t.scoring_fallbacks == t.iterations);
    require_invariants(c, t);
}

TEST_CASE("sequential, alternate and q-learning controllers")
{
    ActionTable stats{};
    Rng rng(1);
    SequentialSelector seq;
    std::vector<int> order;
    for (int t = 1; t <= 9; ++t)
        order.push_back(seq.select(stats, {}, t, rng).front().action);
    CHECK(order == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 1});

    AlternateSelector alt;
    const int first = alt.select(stats, {}, 1, rng).front().action;
    alt.observe(first, true);
    CHECK(alt.select(stats, {}, 2, rng).front().action == first);
    for (int i = 0; i < 200; ++i) {
        alt.observe(first, false);
        CHECK(alt.select(stats, {}, 3, rng).front().action != first);
    }

    QLearningSelector q(0.0, 0.1);
    for (int i = 0; i < 20; ++i) {
        const int a = q.select(stats, {}, i, rng).front().action;
        CHECK(a == 1);
        q.observe(a, false);
    }
    for (double v : q.q())
        CHECK(v == 0.0);
    q.observe(3, true);
    CHECK(q.q()[2] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(q.select(stats, {}, 1, rng).front().action == 3);
    CHECK_THROWS_AS(QLearningSelector(1.5, 0.1), ConfigError);
}

TEST_CASE("propose_candidate returns an in-box point for every action")
{
    const auto problem = make_classical("Rastrigin", 4);
    std::vector<EvaluatedSolution> archive;
    const auto xs = latin_hypercube(20, problem, 3);
    for (std::size_t i = 0; i < xs.size(); ++i)
        archive.push_back({xs[i], problem.evaluate(xs[i]), i});
    const auto pop = select_top(archive, 20);
    Hyperparameters hyper;
    for (const auto& a : kActions) {
        Rng rng(static_cast<std::uint64_t>(a.id));
        const auto x = propose_candidate(a, pop, archive, pop.best().f, problem, hyper, rng);
        CHECK(problem.contains(x));
    }
}
