#include "llmsaea/llm_client.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include <fmt/format.h>

namespace llmsaea {

std::string PromptTemplate::render(const std::map<std::string, std::string>& slots) const
{
    std::string out;
    const std::string& text = task_description;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t open = text.find("{{", pos);
        if (open == std::string::npos) {
            out.append(text, pos);
            break;
        }
        const std::size_t close = text.find("}}", open + 2);
        if (close == std::string::npos)
            throw TemplateError("unterminated placeholder in prompt template");
        out.append(text, pos, open - pos);
        const std::string name = text.substr(open + 2, close - open - 2);
        const auto it = slots.find(name);
        if (it == slots.end())
            throw TemplateError("prompt slot '" + name + "' is not bound");
        out += it->second;
        pos = close + 2;
    }
    if (out.find("{{") != std::string::npos || out.find("}}") != std::string::npos)
        throw TemplateError("rendered prompt still contains placeholder markers");
    return out;
}

const PromptTemplate& decision_template()
{
    static const PromptTemplate t{
        "You are an expert in surrogate-assisted evolutionary optimization and algorithm configuration.",
        "Task: you configure a surrogate-assisted evolutionary algorithm that minimizes an expensive black-box "
        "function. In each iteration you choose which combinations of surrogate model and infill sampling "
        "criterion (actions) should propose the next solutions for expensive evaluation.\n"
        "\n"
        "Actions with their average score S (0 = poor, 10 = excellent) and selection frequency V:\n"
        "{{action_table}}\n"
        "\n"
        "Optimization state: {{fes}} of {{mfes}} function evaluations used, {{remaining}} remaining. "
        "Current iteration t = {{t}}.\n"
        "\n"
        "Select one or more actions that are most likely to improve the best solution found so far. Balance "
        "actions with high average scores against actions that have rarely been tried, and take the remaining "
        "budget into account.\n"
        "Then reflect on each selected action: label it \"certain\" if you are confident it is a good choice, "
        "or \"uncertain\" if you are not.\n"
        "\n"
        "Reply with one line per selected action and nothing else, using exactly this format:\n"
        "Action <id>: certain\n"
        "Action <id>: uncertain\n"};
    return t;
}

const PromptTemplate& scoring_template()
{
    static const PromptTemplate t{
        "You are an expert in evaluating candidate solutions of expensive optimization problems.",
        "Task: score a newly evaluated solution against the current population of a minimization problem. "
        "Lower objective values are better.\n"
        "\n"
        "The population contains N = {{n}} solutions:\n"
        "{{population}}\n"
        "\n"
        "Newly evaluated solution x_t: f = {{candidate}}\n"
        "\n"
        "Give x_t an integer score from 0 to 10, where 10 means it is better than every solution in the "
        "population and 0 means it is worse than all of them.\n"
        "\n"
        "Reply using exactly this format:\n"
        "Score: <integer from 0 to 10>\n"};
    return t;
}

ChatPrompt render_decision_prompt(const ActionTable& stats, Budget budget, std::size_t iteration)
{
    std::string table;
    for (const auto& a : kActions) {
        const auto& s = stats_of(stats, a.id);
        if (!table.empty())
            table += '\n';
        table += fmt::format("Action {}: ({}, {}), S={:.4g}, V={:.4g}", a.id, to_string(a.model),
                             to_string(a.criterion), s.score, s.frequency);
    }
    const std::size_t remaining =
        budget.max_evaluations > budget.used_evaluations ? budget.max_evaluations - budget.used_evaluations : 0;
    const auto& tpl = decision_template();
    return {tpl.role_preamble, tpl.render({{"action_table", table},
                                           {"fes", std::to_string(budget.used_evaluations)},
                                           {"mfes", std::to_string(budget.max_evaluations)},
                                           {"remaining", std::to_string(remaining)},
                                           {"t", std::to_string(iteration)}})};
}

ChatPrompt render_scoring_prompt(std::size_t population_size, const Population& population,
                                 const EvaluatedSolution& candidate)
{
    std::string summary;
    for (std::size_t i = 0; i < population.size(); ++i) {
        if (!summary.empty())
            summary += '\n';
        summary += fmt::format("Solution {}: f = {:.6e}", i + 1, population.members[i].f);
    }
    const auto& tpl = scoring_template();
    return {tpl.role_preamble, tpl.render({{"n", std::to_string(population_size)},
                                           {"population", summary},
                                           {"candidate", fmt::format("{:.6e}", candidate.f)}})};
}

namespace {

struct Token {
    std::size_t pos;
    int action;             // 0 for label tokens
    Confidence label;
};

std::vector<std::string> split_segments(std::string_view text)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\n' || c == ';') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

} // namespace

std::optional<ExpertVerdict> parse_decision_reply(std::string_view text)
{
    static const std::regex id_re(
        R"(\b(?:actions?|a)\s*[#:(]?\s*([1-8](?:\s*(?:,|and|&|/|or)\s*(?:a\s*)?[1-8])*)(?![0-9.]))",
        std::regex::icase | std::regex::ECMAScript);
    static const std::regex label_re(R"(\b(uncertain|certain)\b)", std::regex::icase | std::regex::ECMAScript);
    static const std::regex digit_re(R"([1-8])");

    ExpertVerdict verdict;
    for (const auto& seg : split_segments(text)) {
        std::vector<Token> tokens;
        for (auto it = std::sregex_iterator(seg.begin(), seg.end(), id_re); it != std::sregex_iterator(); ++it) {
            const std::string ids = (*it)[1].str();
            const std::size_t base = static_cast<std::size_t>(it->position(1));
            for (auto d = std::sregex_iterator(ids.begin(), ids.end(), digit_re); d != std::sregex_iterator(); ++d)
                tokens.push_back({base + static_cast<std::size_t>(d->position(0)), std::stoi(d->str()),
                                  Confidence::Uncertain});
        }
        if (tokens.empty())
            continue;
        std::vector<Token> labels;
        for (auto it = std::sregex_iterator(seg.begin(), seg.end(), label_re); it != std::sregex_iterator(); ++it) {
            std::string word = (*it)[1].str();
            std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
            labels.push_back({static_cast<std::size_t>(it->position(0)), 0,
                              word == "certain" ? Confidence::Certain : Confidence::Uncertain});
        }
        for (const auto& tok : tokens) {
            Confidence label = Confidence::Uncertain;
            const auto after = std::find_if(labels.begin(), labels.end(), [&](const Token& l) { return l.pos > tok.pos; });
            if (after != labels.end())
                label = after->label;
            else if (!labels.empty())
                label = labels.back().label;
            verdict.actions.push_back(tok.action);
            verdict.labels.push_back(label);
        }
    }
    if (verdict.actions.empty())
        return std::nullopt;
    return verdict;
}

std::optional<double> parse_score_reply(std::string_view text)
{
    static const std::regex keyword_re(R"(score[^0-9\-\n]{0,20}?(-?\d+(?:\.\d+)?))",
                                       std::regex::icase | std::regex::ECMAScript);
    static const std::regex number_re(R"((?:^|[^0-9.\-])(\d+(?:\.\d+)?))", std::regex::ECMAScript);
    const std::string s(text);
    std::smatch m;
    if (std::regex_search(s, m, keyword_re)) {
        const double v = std::stod(m[1].str());
        if (std::isfinite(v))
            return v;
    }
    for (auto it = std::sregex_iterator(s.begin(), s.end(), number_re); it != std::sregex_iterator(); ++it) {
        const double v = std::stod((*it)[1].str());
        if (v >= 0.0 && v <= kMaxScore)
            return v;
    }
    return std::nullopt;
}

ExpertVerdict mock_decision(const ActionTable& stats, Budget, std::size_t, Rng& rng, double epsilon)
{
    if (rng.uniform() < epsilon) {
        const int a = static_cast<int>(rng.index(kActionCount)) + 1;
        return {{a}, {Confidence::Uncertain}};
    }
    int best = 1;
    for (const auto& a : kActions)
        if (stats_of(stats, a.id).score > stats_of(stats, best).score)
            best = a.id;
    return {{best}, {Confidence::Certain}};
}

double mock_score(const Population& population, const EvaluatedSolution& candidate)
{
    return percentile_score(population, candidate.f);
}

std::optional<ExpertVerdict> MockDecisionBackend::propose(const DecisionContext& ctx, Rng& rng)
{
    return mock_decision(ctx.stats, ctx.budget, ctx.iteration, rng, epsilon_);
}

std::optional<ExpertVerdict> CalibratedMockDecisionBackend::propose(const DecisionContext& ctx, Rng& rng)
{
    std::array<int, kActionCount> order{};
    for (std::size_t i = 0; i < kActionCount; ++i)
        order[i] = static_cast<int>(i) + 1;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return stats_of(ctx.stats, a).score > stats_of(ctx.stats, b).score;
    });

    double mean = 0.0;
    std::size_t tried = 0;
    for (const auto& s : ctx.stats)
        if (s.count > 0) {
            mean += s.score;
            ++tried;
        }
    mean = tried > 0 ? mean / static_cast<double>(tried) : 0.0;

    auto label_for = [&](int a) {
        const auto& s = stats_of(ctx.stats, a);
        return s.count >= min_trials_ && s.score >= mean ? Confidence::Certain : Confidence::Uncertain;
    };
    ExpertVerdict v;
    for (int a : {order[0], order[1], static_cast<int>(rng.index(kActionCount)) + 1}) {
        v.actions.push_back(a);
        v.labels.push_back(label_for(a));
    }
    return v;
}

std::optional<double> MockScoringBackend::score(const ScoringContext& ctx)
{
    return mock_score(ctx.population, ctx.candidate);
}

} // namespace llmsaea
