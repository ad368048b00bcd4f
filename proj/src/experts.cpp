#include "llmsaea/experts.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace llmsaea {

const Action& action_by_id(int id)
{
    if (!is_valid_action(id))
        throw std::out_of_range("action id " + std::to_string(id) + " outside 1..8");
    return kActions[static_cast<std::size_t>(id - 1)];
}

bool is_valid_action(int id) { return id >= 1 && id <= static_cast<int>(kActionCount); }

std::string_view to_string(SurrogateKind m)
{
    switch (m) {
    case SurrogateKind::GP: return "GP";
    case SurrogateKind::RBF: return "RBF";
    case SurrogateKind::PRS: return "PRS";
    case SurrogateKind::KNN: return "KNN";
    }
    return "?";
}

std::string_view to_string(Criterion c)
{
    switch (c) {
    case Criterion::LCB: return "LCB";
    case Criterion::EI: return "EI";
    case Criterion::Prescreening: return "Prescreening";
    case Criterion::LocalSearch: return "Local search";
    case Criterion::L1Exploit: return "L1-exploitation";
    case Criterion::L1Explore: return "L1-exploration";
    }
    return "?";
}

std::string_view to_string(SelectionSource s)
{
    switch (s) {
    case SelectionSource::Certain: return "certain";
    case SelectionSource::Roulette: return "roulette";
    case SelectionSource::Fallback: return "fallback";
    case SelectionSource::Strategy: return "strategy";
    }
    return "?";
}

std::vector<double> softmax_probs(std::span<const double> scores)
{
    if (scores.empty())
        return {};
    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        p[i] = std::exp(scores[i] - top);
        sum += p[i];
    }
    for (double& v : p)
        v /= sum;
    return p;
}

std::size_t roulette_wheel(std::span<const double> probs, Rng& rng)
{
    if (probs.empty())
        throw std::invalid_argument("roulette_wheel: no probabilities");
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc)
            return i;
    }
    // rounding left the cumulative sum short of 1; pick the last positive slot
    for (std::size_t i = probs.size(); i-- > 0;)
        if (probs[i] > 0.0)
            return i;
    return probs.size() - 1;
}

int roulette_action(const ActionTable& stats, Rng& rng)
{
    std::array<double, kActionCount> scores{};
    for (std::size_t i = 0; i < kActionCount; ++i)
        scores[i] = stats[i].score;
    const auto p = softmax_probs(scores);
    return static_cast<int>(roulette_wheel(p, rng)) + 1;
}

namespace {

void insert_unique(std::vector<Selection>& set, int action, SelectionSource source)
{
    for (const auto& s : set)
        if (s.action == action)
            return;
    set.push_back({action, source});
}

} // namespace

std::vector<Selection> decide(const ActionTable& stats, Budget budget, std::size_t iteration,
                              DecisionBackend& backend, Rng& rng, DecisionMode mode)
{
    std::vector<Selection> chosen;
    const DecisionContext ctx{stats, budget, iteration};
    auto verdict = backend.propose(ctx, rng);

    if (verdict && verdict->actions.size() != verdict->labels.size())
        verdict.reset();
    if (verdict && verdict->actions.empty())
        verdict.reset();
    if (!verdict) {
        insert_unique(chosen, roulette_action(stats, rng), SelectionSource::Fallback);
        return chosen;
    }
    if (verdict->actions.size() > kMaxVerdictEntries) {
        std::cerr << "warning: decision expert proposed " << verdict->actions.size() << " actions, keeping the first "
                  << kMaxVerdictEntries << '\n';
        verdict->actions.resize(kMaxVerdictEntries);
        verdict->labels.resize(kMaxVerdictEntries);
    }

    for (std::size_t i = 0; i < verdict->actions.size(); ++i) {
        const int a = verdict->actions[i];
        if (!is_valid_action(a))
            continue;
        const bool certain = verdict->labels[i] == Confidence::Certain;
        switch (mode) {
        case DecisionMode::IgnoreLabels:
            insert_unique(chosen, a, SelectionSource::Certain);
            break;
        case DecisionMode::CertainOnly:
            if (certain)
                insert_unique(chosen, a, SelectionSource::Certain);
            break;
        case DecisionMode::Full:
            if (certain)
                insert_unique(chosen, a, SelectionSource::Certain);
            else
                insert_unique(chosen, roulette_action(stats, rng), SelectionSource::Roulette);
            break;
        }
    }
    if (chosen.empty())
        insert_unique(chosen, roulette_action(stats, rng), SelectionSource::Fallback);
    return chosen;
}

ActionStats score_and_update(const ActionStats& stats, std::size_t iteration, double score)
{
    const double t_prev = static_cast<double>(stats.count);
    ActionStats next;
    next.score = (t_prev * stats.score + score) / (t_prev + 1.0);
    next.frequency = (t_prev + 1.0) / static_cast<double>(iteration + 1);
    next.count = stats.count + 1;
    return next;
}

void record_outcome(ActionTable& table, int action, std::size_t iteration, double score)
{
    auto& s = stats_of(table, action);
    s = score_and_update(s, iteration, score);
    for (auto& other : table)
        other.frequency = static_cast<double>(other.count) / static_cast<double>(iteration + 1);
}

double percentile_score(const Population& population, double candidate_value)
{
    if (population.empty())
        return 0.0;
    std::size_t worse = 0;
    for (const auto& m : population.members)
        if (m.f > candidate_value)
            ++worse;
    return std::round(kMaxScore * static_cast<double>(worse) / static_cast<double>(population.size()));
}

Grade grade(const Population& population, const EvaluatedSolution& candidate, std::size_t iteration,
            ScoringBackend& backend)
{
    if (population.empty())
        throw std::invalid_argument("grade: empty population");
    const ScoringContext ctx{population.size(), population, candidate, iteration};
    const auto reply = backend.score(ctx);
    if (!reply || !std::isfinite(*reply))
        return {percentile_score(population, candidate.f), false, true};
    const double clamped = std::clamp(*reply, 0.0, kMaxScore);
    return {clamped, clamped != *reply, false};
}

} // namespace llmsaea
