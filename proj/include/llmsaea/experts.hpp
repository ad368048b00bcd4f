#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "llmsaea/evolution.hpp"
#include "llmsaea/rng.hpp"

namespace llmsaea {

enum class SurrogateKind { GP, RBF, PRS, KNN };
enum class Criterion { LCB, EI, Prescreening, LocalSearch, L1Exploit, L1Explore };

/// One (surrogate, infill criterion) pair of the action portfolio. Ids run 1..8.
struct Action {
    int id;
    SurrogateKind model;
    Criterion criterion;
};

inline constexpr std::size_t kActionCount = 8;

inline constexpr std::array<Action, kActionCount> kActions{{
    {1, SurrogateKind::GP, Criterion::LCB},
    {2, SurrogateKind::GP, Criterion::EI},
    {3, SurrogateKind::RBF, Criterion::Prescreening},
    {4, SurrogateKind::RBF, Criterion::LocalSearch},
    {5, SurrogateKind::PRS, Criterion::Prescreening},
    {6, SurrogateKind::PRS, Criterion::LocalSearch},
    {7, SurrogateKind::KNN, Criterion::L1Exploit},
    {8, SurrogateKind::KNN, Criterion::L1Explore},
}};

const Action& action_by_id(int id); // throws std::out_of_range
bool is_valid_action(int id);
std::string_view to_string(SurrogateKind m);
std::string_view to_string(Criterion c);

/// Running average score S, selection frequency V and selection count T.
struct ActionStats {
    double score = 0.0;
    double frequency = 0.0;
    std::size_t count = 0;
};

using ActionTable = std::array<ActionStats, kActionCount>;

inline ActionStats& stats_of(ActionTable& table, int id) { return table.at(static_cast<std::size_t>(id - 1)); }
inline const ActionStats& stats_of(const ActionTable& table, int id) { return table.at(static_cast<std::size_t>(id - 1)); }

enum class Confidence { Certain, Uncertain };

struct ExpertVerdict {
    std::vector<int> actions;
    std::vector<Confidence> labels;
};

struct Budget {
    std::size_t max_evaluations = 0;
    std::size_t used_evaluations = 0;
};

struct DecisionContext {
    const ActionTable& stats;
    Budget budget;
    std::size_t iteration;
};

struct ScoringContext {
    std::size_t population_size;
    const Population& population;
    const EvaluatedSolution& candidate;
    std::size_t iteration;
};

/// Decision expert: proposes actions with confidence labels.
/// An empty optional signals a failed exchange.
class DecisionBackend {
public:
    virtual ~DecisionBackend() = default;
    virtual std::optional<ExpertVerdict> propose(const DecisionContext& ctx, Rng& rng) = 0;
};

/// Scoring expert: grades a freshly evaluated solution on [0, 10].
class ScoringBackend {
public:
    virtual ~ScoringBackend() = default;
    virtual std::optional<double> score(const ScoringContext& ctx) = 0;
};

/// How the decision expert's labels are used.
enum class DecisionMode {
    Full,            // certain -> accepted, uncertain -> softmax/roulette replacement
    IgnoreLabels,    // every proposed action accepted as if certain
    CertainOnly,     // uncertain entries dropped
};

/// How an action entered the candidate set.
enum class SelectionSource { Certain, Roulette, Fallback, Strategy };
std::string_view to_string(SelectionSource s);

struct Selection {
    int action;
    SelectionSource source;
};

inline constexpr std::size_t kMaxVerdictEntries = 8;
inline constexpr double kMaxScore = 10.0;

/// p_i = exp(s_i - max s) / sum_j exp(s_j - max s).
std::vector<double> softmax_probs(std::span<const double> scores);

/// Index drawn with probability proportional to probs (one uniform draw).
std::size_t roulette_wheel(std::span<const double> probs, Rng& rng);

/// One action drawn from the softmax of all average scores.
int roulette_action(const ActionTable& stats, Rng& rng);

/// Builds the deduplicated candidate action set from a decision-expert
/// exchange. A failed exchange falls back to a single roulette draw, as
/// does an empty result in CertainOnly mode.
std::vector<Selection> decide(const ActionTable& stats, Budget budget, std::size_t iteration,
                              DecisionBackend& backend, Rng& rng, DecisionMode mode = DecisionMode::Full);

/// Incremental mean and frequency update for the executed action, where
/// `iteration` is the counter value before it advances.
/// S' = (T S + s) / (T + 1), V' = (T + 1) / (iteration + 1), T' = T + 1.
ActionStats score_and_update(const ActionStats& stats, std::size_t iteration, double score);

/// Applies score_and_update to `action` and refreshes every other action's
/// frequency to T_a / (iteration + 1).
void record_outcome(ActionTable& table, int action, std::size_t iteration, double score);

struct Grade {
    double score;
    bool clamped = false;
    bool fallback = false;
};

/// Scores x_t with the backend; replies outside [0, 10] are clamped, failures
/// use the percentile-rank rule.
Grade grade(const Population& population, const EvaluatedSolution& candidate, std::size_t iteration,
            ScoringBackend& backend);

/// round(10 * fraction of population members with objective worse than x_t).
double percentile_score(const Population& population, double candidate_value);

} // namespace llmsaea
