#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "llmsaea/llm_client.hpp"
#include "prompt_snapshot.hpp"

using namespace llmsaea;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("decision prompt matches the golden file")
{
    const auto prompt = render_decision_prompt(test_support::snapshot_stats(), {1000, 250}, 42);
    const std::string text = prompt.system + "\n---\n" + prompt.user;
    CHECK(text == slurp(fs::path(LLMSAEA_FIXTURES) / "decision_prompt.golden.txt"));
}

TEST_CASE("decision prompt slots")
{
    const auto p = render_decision_prompt(ActionTable{}, {300, 100}, 1);
    for (int a = 1; a <= 8; ++a)
        CHECK(p.user.find("Action " + std::to_string(a) + ": (") != std::string::npos);
    std::size_t zero_rows = 0;
    for (std::size_t pos = 0; (pos = p.user.find("S=0, V=0", pos)) != std::string::npos; ++pos)
        ++zero_rows;
    CHECK(zero_rows == 8);
    CHECK(p.user.find("100 of 300") != std::string::npos);
    CHECK(p.user.find("t = 1") != std::string::npos);
    CHECK(p.user.find("{{") == std::string::npos);
}

TEST_CASE("scoring prompt lists every member")
{
    std::vector<EvaluatedSolution> archive;
    for (std::size_t i = 0; i < 10; ++i)
        archive.push_back({{0.0}, 1.5 * static_cast<double>(i), i});
    const auto pop = select_top(archive, 10);
    const auto p = render_scoring_prompt(10, pop, {{0.0}, 2.0, 10});
    std::istringstream lines(p.user);
    std::string line;
    std::size_t count = 0;
    while (std::getline(lines, line))
        if (line.rfind("Solution ", 0) == 0 && line.find("f = ") != std::string::npos)
            ++count;
    CHECK(count == 10);
    CHECK(p.user.find("N = 10") != std::string::npos);
}

TEST_CASE("template errors")
{
    const PromptTemplate t{"sys", "a {{x}} b {{y}}"};
    CHECK(t.render({{"x", "1"}, {"y", "2"}}) == "a 1 b 2");
    CHECK_THROWS_AS(t.render({{"x", "1"}}), TemplateError);
    CHECK_THROWS_AS(t.render({{"x", "{{"}, {"y", "2"}}), TemplateError);
    const PromptTemplate open{"sys", "a {{x"};
    CHECK_THROWS_AS(open.render({{"x", "1"}}), TemplateError);
}

TEST_CASE("reply parsing")
{
    const auto v = parse_decision_reply("Action 3: certain; Action 7: uncertain");
    REQUIRE(v);
    CHECK(v->actions == std::vector<int>{3, 7});
    CHECK(v->labels == std::vector<Confidence>{Confidence::Certain, Confidence::Uncertain});
    CHECK(parse_score_reply("Score: 8 out of 10") == 8.0);
    CHECK_FALSE(parse_decision_reply("nothing useful here"));
    CHECK_FALSE(parse_score_reply("no digits"));

    // replies in the format the prompt asks for round-trip exactly
    Rng rng(3);
    for (int rep = 0; rep < 200; ++rep) {
        ExpertVerdict want;
        std::string text;
        const std::size_t n = 1 + rng.index(8);
        for (std::size_t i = 0; i < n; ++i) {
            want.actions.push_back(static_cast<int>(rng.index(8)) + 1);
            want.labels.push_back(rng.uniform() < 0.5 ? Confidence::Certain : Confidence::Uncertain);
            text += "Action " + std::to_string(want.actions.back()) + ": " +
                    (want.labels.back() == Confidence::Certain ? "certain" : "uncertain") + "\n";
        }
        const auto got = parse_decision_reply(text);
        REQUIRE(got);
        CHECK(got->actions == want.actions);
        CHECK(got->labels == want.labels);
    }
    for (int s = 0; s <= 10; ++s)
        CHECK(parse_score_reply("Score: " + std::to_string(s) + "\n") == static_cast<double>(s));
}

TEST_CASE("recorded reply corpus")
{
    const fs::path dir = fs::path(LLMSAEA_FIXTURES) / "replies";
    const auto expected = nlohmann::json::parse(slurp(dir / "expected.json"));
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".txt")
            continue;
        ++files;
        const std::string name = entry.path().filename().string();
        CAPTURE(name);
        REQUIRE(expected.contains(name));
        const auto& e = expected.at(name);
        const std::string text = slurp(entry.path());
        const bool rejected = e.value("rejected", false);
        if (e.at("kind") == "decision") {
            const auto v = parse_decision_reply(text);
            if (rejected) {
                CHECK_FALSE(v);
                continue;
            }
            REQUIRE(v);
            CHECK(v->actions == e.at("actions").get<std::vector<int>>());
            std::vector<Confidence> labels;
            for (const auto& l : e.at("labels"))
                labels.push_back(l == "certain" ? Confidence::Certain : Confidence::Uncertain);
            CHECK(v->labels == labels);
        } else {
            const auto s = parse_score_reply(text);
            if (rejected) {
                CHECK_FALSE(s);
                continue;
            }
            REQUIRE(s);
            CHECK(*s == e.at("value").get<double>());
        }
    }
    CHECK(files == 20);
}

TEST_CASE("chat config validation")
{
    ChatConfig c;
    CHECK_NOTHROW(validate(c));
    c.max_retries = -1;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = {};
    c.timeout_seconds = 0.0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = {};
    c.endpoint = "localhost:8080/v1";
    CHECK_THROWS_AS(HttpChatTransport{c}, ConfigError);
}

TEST_CASE("wire format against a local server")
{
    httplib::Server server;
    std::string seen_body, seen_auth, seen_path;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_body = req.body;
        seen_path = req.path;
        seen_auth = req.get_header_value("Authorization");
        nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "Action 2: certain"}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    ::setenv("LLMSAEA_TEST_KEY", "sk-test-123", 1);
    ChatConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    cfg.api_key_env = "LLMSAEA_TEST_KEY";
    cfg.model = "test-model";
    HttpChatTransport transport(cfg);
    const auto reply = transport.complete({"system text", "user text"});
    server.stop();
    worker.join();
    ::unsetenv("LLMSAEA_TEST_KEY");

    REQUIRE(reply);
    CHECK(*reply == "Action 2: certain");
    CHECK(seen_path == "/v1/chat/completions");
    CHECK(seen_auth == "Bearer sk-test-123");
    const auto body = nlohmann::json::parse(seen_body);
    CHECK(body.at("model") == "test-model");
    CHECK(body.at("temperature") == 0.0);
    REQUIRE(body.at("messages").size() == 2);
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "system text");
    CHECK(body["messages"][1]["role"] == "user");
    CHECK(body["messages"][1]["content"] == "user text");
}

TEST_CASE("no key header without the environment variable")
{
    httplib::Server server;
    bool had_auth = true;
    server.Post("/c", [&](const httplib::Request& req, httplib::Response& res) {
        had_auth = req.has_header("Authorization");
        res.status = 500;
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    ChatConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/c";
    cfg.api_key_env = "LLMSAEA_SURELY_UNSET_KEY";
    cfg.max_retries = 1;
    const auto reply = HttpChatTransport(cfg).complete({"s", "u"});
    server.stop();
    worker.join();
    CHECK_FALSE(reply);
    CHECK_FALSE(had_auth);
}

TEST_CASE("unreachable endpoint fails fast")
{
    ChatConfig cfg;
    cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    cfg.max_retries = 0;
    cfg.timeout_seconds = 2.0;
    const auto start = std::chrono::steady_clock::now();
    CHECK_FALSE(HttpChatTransport(cfg).complete({"s", "u"}));
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(3));

    auto transport = std::make_shared<HttpChatTransport>(cfg);
    LlmDecisionBackend decision(transport);
    Rng rng(1);
    ActionTable stats{};
    CHECK_FALSE(decision.propose({stats, {}, 1}, rng));
}

TEST_CASE("reply content extraction")
{
    CHECK(HttpChatTransport::reply_content(R"({"choices":[{"message":{"content":"hi"}}]})") == "hi");
    CHECK_FALSE(HttpChatTransport::reply_content("not json"));
    CHECK_FALSE(HttpChatTransport::reply_content(R"({"choices":[]})"));
    CHECK_FALSE(HttpChatTransport::reply_content(R"({"choices":[{"message":{"content":null}}]})"));
}

TEST_CASE("transcript lines")
{
    const fs::path path = fs::temp_directory_path() / "llmsaea_transcript_test.jsonl";
    fs::remove(path);
    {
        TranscriptWriter w(path);
        w.record("decision", 3, {"s", "u"}, std::string("Action 1: certain"), "1:certain", 12.5);
        w.record("score", 4, {"s", "u"}, std::nullopt, "unparsed", 1.0);
    }
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    const auto a = nlohmann::json::parse(line);
    CHECK(a.at("iteration") == 3);
    CHECK(a.at("reply") == "Action 1: certain");
    CHECK(a.at("latency_ms") == 12.5);
    std::getline(in, line);
    CHECK(nlohmann::json::parse(line).at("reply").is_null());
    fs::remove(path);
}
