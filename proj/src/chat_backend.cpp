#include <chrono>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "llmsaea/llm_client.hpp"

namespace llmsaea {

using nlohmann::json;

void validate(const ChatConfig& config)
{
    if (config.max_retries < 0)
        throw ConfigError("chat: max_retries must be non-negative");
    if (!(config.timeout_seconds > 0.0))
        throw ConfigError("chat: timeout must be positive");
    if (config.endpoint.empty())
        throw ConfigError("chat: endpoint URL is empty");
}

HttpChatTransport::HttpChatTransport(ChatConfig config) : config_(std::move(config))
{
    validate(config_);
    const auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("chat: endpoint '" + config_.endpoint + "' lacks a scheme");
    const auto path_start = config_.endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        scheme_host_port_ = config_.endpoint;
        path_ = "/";
    } else {
        scheme_host_port_ = config_.endpoint.substr(0, path_start);
        path_ = config_.endpoint.substr(path_start);
    }
}

std::string HttpChatTransport::request_body(const ChatConfig& config, const ChatPrompt& prompt)
{
    json body = {
        {"model", config.model},
        {"temperature", config.temperature},
        {"messages",
         json::array({{{"role", "system"}, {"content", prompt.system}}, {{"role", "user"}, {"content", prompt.user}}})},
    };
    return body.dump();
}

std::optional<std::string> HttpChatTransport::reply_content(std::string_view response_body)
{
    const json doc = json::parse(response_body, nullptr, false);
    if (doc.is_discarded())
        return std::nullopt;
    try {
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        if (!content.is_string())
            return std::nullopt;
        return content.get<std::string>();
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

std::optional<std::string> HttpChatTransport::complete(const ChatPrompt& prompt)
{
    httplib::Client client(scheme_host_port_);
    // connect + write + read together stay within one timeout per attempt
    const auto slice = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(config_.timeout_seconds / 3.0));
    client.set_connection_timeout(slice);
    client.set_read_timeout(slice);
    client.set_write_timeout(slice);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);

    const std::string body = request_body(config_, prompt);
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        auto res = client.Post(path_, headers, body, "application/json");
        if (res && res->status == 200) {
            if (auto content = reply_content(res->body))
                return content;
        }
        if (res)
            std::cerr << "warning: chat endpoint returned HTTP " << res->status << '\n';
        else
            std::cerr << "warning: chat request failed: " << httplib::to_string(res.error()) << '\n';
    }
    return std::nullopt;
}

TranscriptWriter::TranscriptWriter(const std::filesystem::path& path) : out_(path, std::ios::app)
{
    if (!out_)
        throw ConfigError("cannot open transcript file '" + path.string() + "'");
}

void TranscriptWriter::record(std::string_view kind, std::size_t iteration, const ChatPrompt& prompt,
                              const std::optional<std::string>& reply, std::string_view parsed, double latency_ms)
{
    json line = {
        {"kind", kind},
        {"iteration", iteration},
        {"prompt", {{"system", prompt.system}, {"user", prompt.user}}},
        {"reply", reply ? json(*reply) : json(nullptr)},
        {"parsed", parsed},
        {"latency_ms", latency_ms},
    };
    std::lock_guard lock(mutex_);
    out_ << line.dump() << '\n';
    out_.flush();
}

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

std::string describe(const std::optional<ExpertVerdict>& v)
{
    if (!v)
        return "unparsed";
    std::string out;
    for (std::size_t i = 0; i < v->actions.size(); ++i) {
        if (i)
            out += "; ";
        out += fmt::format("{}:{}", v->actions[i], v->labels[i] == Confidence::Certain ? "certain" : "uncertain");
    }
    return out;
}

} // namespace

LlmDecisionBackend::LlmDecisionBackend(std::shared_ptr<ChatTransport> transport,
                                       std::shared_ptr<TranscriptWriter> transcript)
    : transport_(std::move(transport)), transcript_(std::move(transcript))
{
}

std::optional<ExpertVerdict> LlmDecisionBackend::propose(const DecisionContext& ctx, Rng&)
{
    const auto prompt = render_decision_prompt(ctx.stats, ctx.budget, ctx.iteration);
    const auto start = std::chrono::steady_clock::now();
    const auto reply = transport_->complete(prompt);
    std::optional<ExpertVerdict> verdict;
    if (reply)
        verdict = parse_decision_reply(*reply);
    if (transcript_)
        transcript_->record("decision", ctx.iteration, prompt, reply, describe(verdict), elapsed_ms(start));
    return verdict;
}

LlmScoringBackend::LlmScoringBackend(std::shared_ptr<ChatTransport> transport,
                                     std::shared_ptr<TranscriptWriter> transcript)
    : transport_(std::move(transport)), transcript_(std::move(transcript))
{
}

std::optional<double> LlmScoringBackend::score(const ScoringContext& ctx)
{
    const auto prompt = render_scoring_prompt(ctx.population_size, ctx.population, ctx.candidate);
    const auto start = std::chrono::steady_clock::now();
    const auto reply = transport_->complete(prompt);
    std::optional<double> value;
    if (reply)
        value = parse_score_reply(*reply);
    if (transcript_)
        transcript_->record("score", ctx.iteration, prompt, reply, value ? fmt::format("{}", *value) : "unparsed",
                            elapsed_ms(start));
    return value;
}

} // namespace llmsaea
