#include "llmsaea/orchestrator.hpp"

#include <fstream>
#include <iostream>

#include <fmt/format.h>

namespace llmsaea {

void validate(const RunConfig& config)
{
    if (!config.problem)
        throw ConfigError("run: no problem configured");
    if (config.population_size < 4)
        throw ConfigError(fmt::format("run: population size {} below 4", config.population_size));
    if (config.max_evaluations < config.population_size)
        throw ConfigError(fmt::format("run: budget {} smaller than population size {}", config.max_evaluations,
                                      config.population_size));
    validate(config.hyper.de);
    if (config.hyper.infill.lcb_beta < 0.0)
        throw ConfigError("run: LCB beta must be non-negative");
    if (config.hyper.infill.levels < 1)
        throw ConfigError("run: level count must be positive");
    if (config.strategy.kind == StrategyKind::Fixed && !is_valid_action(config.strategy.fixed_action))
        throw ConfigError("run: fixed strategy names no valid action");
}

std::vector<double> propose_candidate(const Action& action, const Population& population,
                                      const std::vector<EvaluatedSolution>& archive, double best_value,
                                      const Problem& problem, const Hyperparameters& hyper, Rng& rng,
                                      GPParams* gp_memory)
{
    if (action.criterion == Criterion::LocalSearch) {
        const std::uint64_t seed = rng.split();
        auto data = TrainingSet::from_population(population);
        if (action.model == SurrogateKind::RBF) {
            const auto model = RbfModel::fit(std::move(data));
            return local_search_select([&](std::span<const double> x) { return model.predict(x); }, population,
                                       population.size(), problem.dim(), seed);
        }
        const auto model = PrsModel::fit(std::move(data), hyper.prs_degree);
        return local_search_select([&](std::span<const double> x) { return model.predict(x); }, population,
                                   population.size(), problem.dim(), seed);
    }

    InfillContext ctx;
    ctx.offspring = de_offspring(population, hyper.de, problem, rng);
    ctx.population = population;
    ctx.best_value = best_value;
    std::size_t pick = 0;

    switch (action.model) {
    case SurrogateKind::GP: {
        const bool warm = gp_memory && gp_memory->size() > 0;
        const auto gp = GPModel::fit(TrainingSet::from_population(population), hyper.gp, rng.split(),
                                     warm ? gp_memory : nullptr);
        if (gp_memory)
            *gp_memory = gp.params();
        pick = action.criterion == Criterion::EI ? ei_select(gp, ctx, hyper.infill.ei_sigma_floor)
                                                 : lcb_select(gp, ctx, hyper.infill.lcb_beta);
        break;
    }
    case SurrogateKind::RBF: {
        const auto model = RbfModel::fit(TrainingSet::from_population(population));
        pick = prescreen_select([&](std::span<const double> x) { return model.predict(x); }, ctx);
        break;
    }
    case SurrogateKind::PRS: {
        const auto model = PrsModel::fit(TrainingSet::from_population(population), hyper.prs_degree);
        pick = prescreen_select([&](std::span<const double> x) { return model.predict(x); }, ctx);
        break;
    }
    case SurrogateKind::KNN: {
        const auto knn = KnnModel::fit(TrainingSet::from_population(population), hyper.knn_k);
        if (action.criterion == Criterion::L1Explore) {
            ctx.archive_inputs.reserve(archive.size());
            for (const auto& s : archive)
                ctx.archive_inputs.push_back(s.x);
            pick = l1_explore_select(knn, ctx, hyper.infill.levels);
        } else {
            pick = l1_exploit_select(knn, ctx, hyper.infill.levels);
        }
        break;
    }
    }
    return ctx.offspring[pick];
}

namespace {

struct Backends {
    std::shared_ptr<DecisionBackend> decision;
    std::shared_ptr<ScoringBackend> scoring;
};

Backends make_backends(const RunConfig& config)
{
    Backends b;
    std::shared_ptr<TranscriptWriter> transcript;
    if (config.transcript)
        transcript = std::make_shared<TranscriptWriter>(*config.transcript);
    std::shared_ptr<ChatTransport> transport;
    auto chat = [&] {
        if (!transport)
            transport = std::make_shared<HttpChatTransport>(config.chat);
        return transport;
    };

    const bool expert = config.strategy.kind == StrategyKind::Expert;
    if (expert) {
        if (config.decision_override)
            b.decision = config.decision_override;
        else if (config.backend == BackendKind::Llm)
            b.decision = std::make_shared<LlmDecisionBackend>(chat(), transcript);
        else if (config.hyper.mock_policy == MockPolicy::Calibrated)
            b.decision = std::make_shared<CalibratedMockDecisionBackend>(config.hyper.calibrated_min_trials);
        else
            b.decision = std::make_shared<MockDecisionBackend>(config.hyper.mock_epsilon);
    }

    const bool expert_scoring = expert && !config.strategy.single_expert;
    if (expert_scoring && config.scoring_override)
        b.scoring = config.scoring_override;
    else if (expert_scoring && config.backend == BackendKind::Llm)
        b.scoring = std::make_shared<LlmScoringBackend>(chat(), transcript);
    else
        b.scoring = std::make_shared<MockScoringBackend>();
    return b;
}

} // namespace

RunTrace run(const RunConfig& config, RunObserver* observer)
{
    validate(config);
    const Problem& problem = *config.problem;
    const std::size_t n = config.population_size;
    const std::size_t budget = config.max_evaluations;

    auto backends = make_backends(config);
    auto selector = make_selector(config, backends.decision);

    Rng rng(config.seed);
    RunTrace trace;
    trace.archive.reserve(budget);
    trace.rows.reserve(budget);

    auto archive_point = [&](std::vector<double> x) {
        const double f = problem.evaluate(x);
        const std::size_t idx = trace.archive.size();
        trace.archive.push_back({std::move(x), f, idx});
        const bool improved = idx == 0 || f < trace.archive[trace.best_index].f;
        if (improved)
            trace.best_index = idx;
        return improved;
    };

    for (auto& x : latin_hypercube(n, problem.lower(), problem.upper(), rng)) {
        archive_point(std::move(x));
        trace.rows.push_back({trace.archive.size(), trace.archive.back().f, trace.best().f, 0, 0, std::nullopt, "init"});
    }

    GPParams gp_memory;
    std::size_t t = 1;
    while (trace.archive.size() < budget) {
        const Population population = select_top(trace.archive, n);
        auto chosen = selector->select(trace.stats, {budget, trace.archive.size()}, t, rng);
        ++trace.outer_iterations;
        if (observer)
            observer->on_decision(t, chosen);

        while (!chosen.empty()) {
            const std::size_t k = rng.index(chosen.size());
            const Selection sel = chosen[k];
            chosen.erase(chosen.begin() + static_cast<std::ptrdiff_t>(k));

            std::vector<double> x;
            try {
                x = propose_candidate(action_by_id(sel.action), population, trace.archive, trace.best().f, problem,
                                      config.hyper, rng, &gp_memory);
            } catch (const TrainingError& e) {
                std::cerr << "warning: action " << sel.action << " could not train its surrogate (" << e.what()
                          << "); using a plain DE trial\n";
                ++trace.training_failures;
                x = de_offspring(population, config.hyper.de, problem, rng).front();
            }

            const bool improved = archive_point(std::move(x));
            const auto& candidate = trace.archive.back();
            const Grade g = grade(population, candidate, t, *backends.scoring);
            if (g.fallback)
                ++trace.scoring_fallbacks;
            record_outcome(trace.stats, sel.action, t, g.score);
            trace.rows.push_back({trace.archive.size(), candidate.f, trace.best().f, t, sel.action, g.score,
                                  std::string(to_string(sel.source))});
            selector->observe(sel.action, improved);
            ++trace.iterations;
            ++t;
            if (trace.archive.size() >= budget || improved)
                break;
        }
    }
    trace.decision_fallbacks = selector->fallbacks();
    return trace;
}

void write_trace_csv(const RunTrace& trace, std::ostream& out)
{
    out << "fe,value,best_so_far,iteration,action,score,source\n";
    for (const auto& r : trace.rows) {
        out << fmt::format("{},{:.17g},{:.17g},{},{},", r.fe, r.value, r.best_so_far, r.iteration, r.action);
        if (r.score)
            out << fmt::format("{:.17g}", *r.score);
        out << ',' << r.source << '\n';
    }
}

void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write trace '" + path.string() + "'");
    write_trace_csv(trace, out);
}

} // namespace llmsaea
