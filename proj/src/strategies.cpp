#include <algorithm>
#include <cctype>
#include <charconv>

#include <fmt/format.h>

#include "llmsaea/orchestrator.hpp"

namespace llmsaea {

namespace {

std::string lowercase(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

int parse_action_id(std::string_view digits, std::string_view original)
{
    int id = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || !is_valid_action(id))
        throw ConfigError("strategy '" + std::string(original) + "' names no action in 1..8");
    return id;
}

} // namespace

StrategySpec StrategySpec::parse(std::string_view name)
{
    const std::string n = lowercase(name);
    StrategySpec s;
    if (n == "llm" || n == "mock" || n == "llm-saea") {
        return s;
    }
    if (n == "llm_no_src" || n == "v-wosrc" || n == "wosrc") {
        s.mode = DecisionMode::IgnoreLabels;
        return s;
    }
    if (n == "llm_src_certain_only" || n == "v-src-certain" || n == "src_certain") {
        s.mode = DecisionMode::CertainOnly;
        return s;
    }
    if (n == "llm_single_expert" || n == "v-de" || n == "single_expert") {
        s.single_expert = true;
        return s;
    }
    if (n == "seq" || n == "v-seq") {
        s.kind = StrategyKind::Sequential;
        return s;
    }
    if (n == "random" || n == "v-random") {
        s.kind = StrategyKind::Random;
        return s;
    }
    if (n == "alter" || n == "v-alter") {
        s.kind = StrategyKind::Alternate;
        return s;
    }
    if (n == "qlearning" || n == "v-q") {
        s.kind = StrategyKind::QLearning;
        return s;
    }
    for (std::string_view prefix : {"fixed:", "v-a", "a"}) {
        if (n.starts_with(prefix)) {
            s.kind = StrategyKind::Fixed;
            s.fixed_action = parse_action_id(std::string_view(n).substr(prefix.size()), name);
            return s;
        }
    }
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::string StrategySpec::name() const
{
    switch (kind) {
    case StrategyKind::Fixed: return fmt::format("fixed:{}", fixed_action);
    case StrategyKind::Sequential: return "seq";
    case StrategyKind::Random: return "random";
    case StrategyKind::Alternate: return "alter";
    case StrategyKind::QLearning: return "qlearning";
    case StrategyKind::Expert: break;
    }
    if (single_expert)
        return "llm_single_expert";
    switch (mode) {
    case DecisionMode::IgnoreLabels: return "llm_no_src";
    case DecisionMode::CertainOnly: return "llm_src_certain_only";
    case DecisionMode::Full: break;
    }
    return "llm";
}

BackendKind parse_backend(std::string_view name)
{
    const std::string n = lowercase(name);
    if (n == "llm")
        return BackendKind::Llm;
    if (n == "mock")
        return BackendKind::Mock;
    throw ConfigError("unknown backend '" + std::string(name) + "' (expected llm or mock)");
}

MockPolicy parse_mock_policy(std::string_view name)
{
    const std::string n = lowercase(name);
    if (n == "epsilon_greedy")
        return MockPolicy::EpsilonGreedy;
    if (n == "calibrated")
        return MockPolicy::Calibrated;
    throw ConfigError("unknown mock policy '" + std::string(name) + "'");
}

FixedSelector::FixedSelector(int action) : action_(action)
{
    if (!is_valid_action(action))
        throw ConfigError(fmt::format("fixed strategy: action {} outside 1..8", action));
}

std::vector<Selection> FixedSelector::select(const ActionTable&, Budget, std::size_t, Rng&)
{
    return {{action_, SelectionSource::Strategy}};
}

std::vector<Selection> SequentialSelector::select(const ActionTable&, Budget, std::size_t, Rng&)
{
    const int a = next_;
    next_ = next_ % static_cast<int>(kActionCount) + 1;
    return {{a, SelectionSource::Strategy}};
}

std::vector<Selection> RandomSelector::select(const ActionTable&, Budget, std::size_t, Rng& rng)
{
    return {{static_cast<int>(rng.index(kActionCount)) + 1, SelectionSource::Strategy}};
}

std::vector<Selection> AlternateSelector::select(const ActionTable&, Budget, std::size_t, Rng& rng)
{
    if (last_ != 0 && improved_)
        return {{last_, SelectionSource::Strategy}};
    if (last_ == 0)
        return {{static_cast<int>(rng.index(kActionCount)) + 1, SelectionSource::Strategy}};
    // uniform over the seven actions other than last_
    int a = static_cast<int>(rng.index(kActionCount - 1)) + 1;
    if (a >= last_)
        ++a;
    return {{a, SelectionSource::Strategy}};
}

void AlternateSelector::observe(int action, bool improved)
{
    last_ = action;
    improved_ = improved;
}

QLearningSelector::QLearningSelector(double epsilon, double alpha) : epsilon_(epsilon), alpha_(alpha)
{
    if (epsilon < 0.0 || epsilon > 1.0 || alpha <= 0.0 || alpha > 1.0)
        throw ConfigError("qlearning: epsilon must lie in [0, 1] and alpha in (0, 1]");
}

std::vector<Selection> QLearningSelector::select(const ActionTable&, Budget, std::size_t, Rng& rng)
{
    if (rng.uniform() < epsilon_)
        return {{static_cast<int>(rng.index(kActionCount)) + 1, SelectionSource::Strategy}};
    const auto best = std::max_element(q_.begin(), q_.end()); // first maximum = lowest id
    return {{static_cast<int>(best - q_.begin()) + 1, SelectionSource::Strategy}};
}

void QLearningSelector::observe(int action, bool improved)
{
    double& q = q_.at(static_cast<std::size_t>(action - 1));
    q += alpha_ * ((improved ? 1.0 : 0.0) - q);
}

ExpertSelector::ExpertSelector(std::shared_ptr<DecisionBackend> backend, DecisionMode mode)
    : backend_(std::move(backend)), mode_(mode)
{
    if (!backend_)
        throw ConfigError("expert strategy requires a decision backend");
}

std::vector<Selection> ExpertSelector::select(const ActionTable& stats, Budget budget, std::size_t iteration,
                                              Rng& rng)
{
    auto chosen = decide(stats, budget, iteration, *backend_, rng, mode_);
    for (const auto& s : chosen)
        if (s.source == SelectionSource::Fallback)
            ++fallbacks_;
    return chosen;
}

std::unique_ptr<ActionSelector> make_selector(const RunConfig& config,
                                              std::shared_ptr<DecisionBackend> decision_backend)
{
    const auto& s = config.strategy;
    switch (s.kind) {
    case StrategyKind::Fixed: return std::make_unique<FixedSelector>(s.fixed_action);
    case StrategyKind::Sequential: return std::make_unique<SequentialSelector>();
    case StrategyKind::Random: return std::make_unique<RandomSelector>();
    case StrategyKind::Alternate: return std::make_unique<AlternateSelector>();
    case StrategyKind::QLearning:
        return std::make_unique<QLearningSelector>(config.hyper.qlearning_epsilon, config.hyper.qlearning_alpha);
    case StrategyKind::Expert: return std::make_unique<ExpertSelector>(std::move(decision_backend), s.mode);
    }
    throw ConfigError("unhandled strategy kind");
}

} // namespace llmsaea
