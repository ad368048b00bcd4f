#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "llmsaea/experts.hpp"

namespace llmsaea {

class TemplateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Text with {{slot}} placeholders.
struct PromptTemplate {
    std::string role_preamble;      // system message
    std::string task_description;   // user message with slots

    /// Substitutes every slot; throws TemplateError on a missing binding or
    /// if any placeholder marker survives.
    std::string render(const std::map<std::string, std::string>& slots) const;
};

const PromptTemplate& decision_template();
const PromptTemplate& scoring_template();

struct ChatPrompt {
    std::string system;
    std::string user;
};

ChatPrompt render_decision_prompt(const ActionTable& stats, Budget budget, std::size_t iteration);
ChatPrompt render_scoring_prompt(std::size_t population_size, const Population& population,
                                 const EvaluatedSolution& candidate);

/// Scans for action ids 1..8 with nearby certain/uncertain tokens.
/// Ids without a label are treated as uncertain. Empty optional when no id is found.
std::optional<ExpertVerdict> parse_decision_reply(std::string_view text);

/// Prefers a number following "score"; otherwise the first number in [0, 10].
std::optional<double> parse_score_reply(std::string_view text);

struct ChatConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo-0125";
    double temperature = 0.0;
    int max_retries = 2;
    double timeout_seconds = 30.0;
    std::string api_key_env = "OPENAI_API_KEY";
};

void validate(const ChatConfig& config);

/// Request/response exchange with a chat-completion service.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    /// Returns the assistant message content, or nothing on failure.
    virtual std::optional<std::string> complete(const ChatPrompt& prompt) = 0;
};

/// Chat-completion JSON over HTTP(S). Safe for concurrent use.
class HttpChatTransport : public ChatTransport {
public:
    explicit HttpChatTransport(ChatConfig config);
    std::optional<std::string> complete(const ChatPrompt& prompt) override;

    const ChatConfig& config() const { return config_; }

    static std::string request_body(const ChatConfig& config, const ChatPrompt& prompt);
    static std::optional<std::string> reply_content(std::string_view response_body);

private:
    ChatConfig config_;
    std::string scheme_host_port_;
    std::string path_;
};

/// JSON-lines log of every expert exchange. Thread-safe.
class TranscriptWriter {
public:
    explicit TranscriptWriter(const std::filesystem::path& path);
    void record(std::string_view kind, std::size_t iteration, const ChatPrompt& prompt,
                const std::optional<std::string>& reply, std::string_view parsed, double latency_ms);

private:
    std::mutex mutex_;
    std::ofstream out_;
};

class LlmDecisionBackend : public DecisionBackend {
public:
    LlmDecisionBackend(std::shared_ptr<ChatTransport> transport, std::shared_ptr<TranscriptWriter> transcript = {});
    std::optional<ExpertVerdict> propose(const DecisionContext& ctx, Rng& rng) override;

private:
    std::shared_ptr<ChatTransport> transport_;
    std::shared_ptr<TranscriptWriter> transcript_;
};

class LlmScoringBackend : public ScoringBackend {
public:
    LlmScoringBackend(std::shared_ptr<ChatTransport> transport, std::shared_ptr<TranscriptWriter> transcript = {});
    std::optional<double> score(const ScoringContext& ctx) override;

private:
    std::shared_ptr<ChatTransport> transport_;
    std::shared_ptr<TranscriptWriter> transcript_;
};

/// Epsilon-greedy over average scores: argmax-S (lowest id on ties) labeled
/// certain with probability 1 - epsilon, otherwise a uniform action labeled uncertain.
ExpertVerdict mock_decision(const ActionTable& stats, Budget budget, std::size_t iteration, Rng& rng,
                            double epsilon = 0.2);

/// Percentile rank of x_t in the population on the 0..10 scale.
double mock_score(const Population& population, const EvaluatedSolution& candidate);

class MockDecisionBackend : public DecisionBackend {
public:
    explicit MockDecisionBackend(double epsilon = 0.2) : epsilon_(epsilon) {}
    std::optional<ExpertVerdict> propose(const DecisionContext& ctx, Rng& rng) override;

private:
    double epsilon_;
};

/// Multi-action mock whose labels track the evidence behind each pick.
///
/// Proposes the two best actions by average score plus one uniformly drawn
/// action. An entry is labeled certain when its action has been tried at
/// least `min_trials` times and its average score is at least the mean
/// average score of all tried actions; every other entry is uncertain.
class CalibratedMockDecisionBackend : public DecisionBackend {
public:
    explicit CalibratedMockDecisionBackend(std::size_t min_trials = 2) : min_trials_(min_trials) {}
    std::optional<ExpertVerdict> propose(const DecisionContext& ctx, Rng& rng) override;

private:
    std::size_t min_trials_;
};

class MockScoringBackend : public ScoringBackend {
public:
    std::optional<double> score(const ScoringContext& ctx) override;
};

} // namespace llmsaea
