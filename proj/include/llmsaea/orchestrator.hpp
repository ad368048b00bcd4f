#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "llmsaea/evolution.hpp"
#include "llmsaea/experts.hpp"
#include "llmsaea/gp.hpp"
#include "llmsaea/infill.hpp"
#include "llmsaea/llm_client.hpp"
#include "llmsaea/problem.hpp"

namespace llmsaea {

enum class StrategyKind { Expert, Fixed, Sequential, Random, Alternate, QLearning };

/// Which action-selection controller drives a run.
///
/// Expert strategies consult the decision backend; `single_expert` keeps the
/// decision expert but grades with the percentile rule instead of the scoring expert.
struct StrategySpec {
    StrategyKind kind = StrategyKind::Expert;
    DecisionMode mode = DecisionMode::Full;
    bool single_expert = false;
    int fixed_action = 1;

    /// Accepts llm, mock, llm_no_src, llm_src_certain_only, llm_single_expert,
    /// fixed:<i> (or a<i>), seq, random, alter, qlearning.
    static StrategySpec parse(std::string_view name);
    std::string name() const;
};

enum class BackendKind { Llm, Mock };
enum class MockPolicy { EpsilonGreedy, Calibrated };

BackendKind parse_backend(std::string_view name);
MockPolicy parse_mock_policy(std::string_view name);

/// Every tunable the algorithm exposes.
struct Hyperparameters {
    DEConfig de;
    GPConfig gp;
    InfillConfig infill;
    int prs_degree = 2;
    std::size_t knn_k = 0; // 0 = min(5, n)
    double qlearning_epsilon = 0.1;
    double qlearning_alpha = 0.1;
    MockPolicy mock_policy = MockPolicy::EpsilonGreedy;
    double mock_epsilon = 0.2;
    std::size_t calibrated_min_trials = 2;
};

struct RunConfig {
    std::shared_ptr<const Problem> problem;
    std::size_t population_size = 100;
    std::size_t max_evaluations = 1000;
    std::uint64_t seed = 1;
    StrategySpec strategy;
    BackendKind backend = BackendKind::Mock;
    Hyperparameters hyper;
    ChatConfig chat;
    std::optional<std::filesystem::path> transcript;

    // Injected expert backends take precedence over `backend`.
    std::shared_ptr<DecisionBackend> decision_override;
    std::shared_ptr<ScoringBackend> scoring_override;
};

void validate(const RunConfig& config);

/// One evaluated point of a run.
struct TraceRow {
    std::size_t fe;           // 1-based evaluation count
    double value;             // f(x) of this evaluation
    double best_so_far;
    std::size_t iteration;    // 0 during initialization
    int action;               // 0 during initialization
    std::optional<double> score;
    std::string source;       // init, certain, roulette, fallback, strategy
};

struct RunTrace {
    std::vector<TraceRow> rows;
    std::vector<EvaluatedSolution> archive;
    std::size_t best_index = 0;
    ActionTable stats{};
    std::size_t iterations = 0;       // executed actions
    std::size_t outer_iterations = 0; // decision rounds
    std::size_t scoring_fallbacks = 0;
    std::size_t decision_fallbacks = 0;
    std::size_t training_failures = 0;

    const EvaluatedSolution& best() const { return archive.at(best_index); }
};

/// Observer of the main loop; only used for diagnostics and tests.
struct RunObserver {
    virtual ~RunObserver() = default;
    virtual void on_decision(std::size_t /*iteration*/, const std::vector<Selection>& /*chosen*/) {}
};

RunTrace run(const RunConfig& config, RunObserver* observer = nullptr);

/// Runs one action: fits the surrogate on the population and applies the
/// infill criterion. Consumes `rng` for offspring and sub-optimizer seeds.
/// Throws TrainingError when the surrogate cannot be fitted. `gp_memory`, when
/// given, warm-starts the GP fit and receives the fitted hyperparameters.
std::vector<double> propose_candidate(const Action& action, const Population& population,
                                      const std::vector<EvaluatedSolution>& archive, double best_value,
                                      const Problem& problem, const Hyperparameters& hyper, Rng& rng,
                                      GPParams* gp_memory = nullptr);

void write_trace_csv(const RunTrace& trace, std::ostream& out);
void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);

/// Action-selection controller used by run().
class ActionSelector {
public:
    virtual ~ActionSelector() = default;
    virtual std::vector<Selection> select(const ActionTable& stats, Budget budget, std::size_t iteration,
                                          Rng& rng) = 0;
    /// Called after every executed action.
    virtual void observe(int /*action*/, bool /*improved*/) {}
    virtual std::size_t fallbacks() const { return 0; }
};

class FixedSelector : public ActionSelector {
public:
    explicit FixedSelector(int action);
    std::vector<Selection> select(const ActionTable&, Budget, std::size_t, Rng&) override;

private:
    int action_;
};

class SequentialSelector : public ActionSelector {
public:
    std::vector<Selection> select(const ActionTable&, Budget, std::size_t, Rng&) override;

private:
    int next_ = 1;
};

class RandomSelector : public ActionSelector {
public:
    std::vector<Selection> select(const ActionTable&, Budget, std::size_t, Rng& rng) override;
};

/// Keeps the last action after an improvement, else draws one of the other seven.
class AlternateSelector : public ActionSelector {
public:
    std::vector<Selection> select(const ActionTable&, Budget, std::size_t, Rng& rng) override;
    void observe(int action, bool improved) override;

private:
    int last_ = 0;
    bool improved_ = false;
};

/// Single-state Q-learning: epsilon-greedy over Q, reward 1 on strict improvement.
class QLearningSelector : public ActionSelector {
public:
    QLearningSelector(double epsilon, double alpha);
    std::vector<Selection> select(const ActionTable&, Budget, std::size_t, Rng& rng) override;
    void observe(int action, bool improved) override;
    const std::array<double, kActionCount>& q() const { return q_; }

private:
    double epsilon_;
    double alpha_;
    std::array<double, kActionCount> q_{};
};

class ExpertSelector : public ActionSelector {
public:
    ExpertSelector(std::shared_ptr<DecisionBackend> backend, DecisionMode mode);
    std::vector<Selection> select(const ActionTable& stats, Budget budget, std::size_t iteration,
                                  Rng& rng) override;
    std::size_t fallbacks() const override { return fallbacks_; }

private:
    std::shared_ptr<DecisionBackend> backend_;
    DecisionMode mode_;
    std::size_t fallbacks_ = 0;
};

std::unique_ptr<ActionSelector> make_selector(const RunConfig& config,
                                              std::shared_ptr<DecisionBackend> decision_backend);

} // namespace llmsaea
