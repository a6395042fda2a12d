#include <doctest.h>

#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "paireval/errors.hpp"
#include "paireval/http_judge.hpp"
#include "test_support.hpp"

using namespace paireval;
using json = nlohmann::json;

namespace {

// Local inference-server stand-in with a swappable request handler.
class StubServer {
  public:
    StubServer() {
        const auto route = [this](const httplib::Request& req, httplib::Response& res) {
            requests.fetch_add(1);
            handler(req, res);
        };
        server_.Post("/v1/completions", route);
        server_.Post("/v1/chat/completions", route);
        server_.Post("/custom/route", route);
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string url(const std::string& path = "") const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

    // Canned completions payload with the given first-token top logprobs.
    static std::string completions_body(const std::map<std::string, double>& top) {
        json payload;
        payload["choices"] = json::array();
        json logprobs;
        logprobs["tokens"] = json::array({"A"});
        logprobs["token_logprobs"] = json::array({-0.1});
        logprobs["top_logprobs"] = json::array({json(top)});
        payload["choices"].push_back({{"text", "A"}, {"logprobs", std::move(logprobs)}});
        return payload.dump();
    }

    static std::string chat_body(const std::map<std::string, double>& top) {
        json entries = json::array();
        for (const auto& [token, lp] : top) entries.push_back({{"token", token}, {"logprob", lp}});
        json payload;
        payload["choices"] = json::array();
        json content = json::array();
        content.push_back({{"token", "A"}, {"logprob", -0.1}, {"top_logprobs", std::move(entries)}});
        payload["choices"].push_back({{"logprobs", {{"content", std::move(content)}}}});
        return payload.dump();
    }

    std::function<void(const httplib::Request&, httplib::Response&)> handler;
    std::atomic<int> requests{0};

  private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

JudgeConfig http_config(const StubServer& server, const std::string& path = "") {
    JudgeConfig cfg;
    cfg.backend = BackendKind::kHttp;
    cfg.endpoint = server.url(path);
    cfg.model = "stub-model";
    cfg.max_retries = 2;
    cfg.retry_backoff = std::chrono::milliseconds(1);
    cfg.request_timeout = std::chrono::milliseconds(2000);
    return cfg;
}

PairQuery simple_query() {
    PairQuery q;
    q.prompt = "Which is better?";
    q.label_first = "A";
    q.label_second = "B";
    return q;
}

} // namespace

TEST_CASE("analytic normalization: ln 0.6 vs ln 0.3 gives 2/3") {
    StubServer server;
    server.handler = [](const httplib::Request&, httplib::Response& res) {
        res.set_content(StubServer::completions_body({{"A", std::log(0.6)}, {"B", std::log(0.3)}}),
                        "application/json");
    };
    HttpJudge judge(http_config(server));
    const auto verdict = judge.judge_pair(simple_query());
    CHECK(verdict.p_first_better == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(verdict.raw_probs.at("A") == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(verdict.raw_probs.at("B") == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(verdict.backend_id == "http");
}

TEST_CASE("missing-label floor: only A present at 0.9") {
    StubServer server;
    server.handler = [](const httplib::Request&, httplib::Response& res) {
        res.set_content(StubServer::completions_body({{"A", std::log(0.9)}}), "application/json");
    };
    HttpJudge judge(http_config(server));
    const auto verdict = judge.judge_pair(simple_query());
    // Frozen oracle: 0.9 / (0.9 + 1e-6).
    CHECK(verdict.p_first_better == doctest::Approx(0.9999988888901234).epsilon(1e-12));
}

TEST_CASE("leading-space token variants are summed") {
    StubServer server;
    server.handler = [](const httplib::Request&, httplib::Response& res) {
        res.set_content(StubServer::completions_body(
                            {{"A", std::log(0.3)}, {" A", std::log(0.2)}, {"B", std::log(0.4)}}),
                        "application/json");
    };
    HttpJudge judge(http_config(server));
    const auto verdict = judge.judge_pair(simple_query());
    CHECK(verdict.raw_probs.at("A") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(verdict.p_first_better == doctest::Approx(0.5 / 0.9).epsilon(1e-12));
}

TEST_CASE("response without logprobs is a protocol error") {
    StubServer server;
    server.handler = [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"choices": [{"text": "A"}]})", "application/json");
    };
    HttpJudge judge(http_config(server));
    CHECK_THROWS_WITH_AS(judge.judge_pair(simple_query()), doctest::Contains("logprobs"),
                         BackendError);
}

TEST_CASE("both labels absent is a degenerate-distribution error carrying the payload") {
    StubServer server;
    const std::string body = StubServer::completions_body({{"C", std::log(0.9)}});
    server.handler = [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(body, "application/json");
    };
    HttpJudge judge(http_config(server));
    try {
        judge.judge_pair(simple_query());
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(std::string(e.what()).find("degenerate") != std::string::npos);
        CHECK(e.payload() == body);
    }
}

TEST_CASE("direct mode floors an absent positive label instead of failing") {
    StubServer server;
    server.handler = [](const httplib::Request&, httplib::Response& res) {
        res.set_content(StubServer::completions_body({{"C", std::log(0.9)}}), "application/json");
    };
    HttpJudge judge(http_config(server));
    DirectQuery q;
    q.prompt = "Is it good?";
    q.positive_label = "Yes";
    q.negative_label = "No";
    const auto verdict = judge.judge_direct(q);
    CHECK(verdict.raw_probs.at("Yes") == 1e-6);
}

TEST_CASE("retries recover from transient 500s") {
    StubServer server;
    server.handler = [&](const httplib::Request&, httplib::Response& res) {
        if (server.requests.load() <= 2) {
            res.status = 500;
            res.set_content("overloaded", "text/plain");
            return;
        }
        res.set_content(StubServer::completions_body({{"A", std::log(0.8)}, {"B", std::log(0.1)}}),
                        "application/json");
    };
    HttpJudge judge(http_config(server));
    const auto verdict = judge.judge_pair(simple_query());
    CHECK(verdict.p_first_better == doctest::Approx(0.8 / 0.9).epsilon(1e-12));
    CHECK(server.requests.load() == 3);
}

TEST_CASE("retries exhaust into a transport error") {
    StubServer server;
    server.handler = [](const httplib::Request&, httplib::Response& res) {
        res.status = 503;
        res.set_content("down", "text/plain");
    };
    HttpJudge judge(http_config(server));
    CHECK_THROWS_WITH_AS(judge.judge_pair(simple_query()), doctest::Contains("attempts"),
                         BackendError);
    CHECK(server.requests.load() == 3); // initial try + 2 retries
}

TEST_CASE("non-retryable 4xx fails immediately") {
    StubServer server;
    server.handler = [](const httplib::Request&, httplib::Response& res) {
        res.status = 400;
        res.set_content("bad request", "text/plain");
    };
    HttpJudge judge(http_config(server));
    CHECK_THROWS_AS(judge.judge_pair(simple_query()), BackendError);
    CHECK(server.requests.load() == 1);
}

TEST_CASE("request carries the pinned decoding parameters") {
    StubServer server;
    json seen;
    server.handler = [&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        res.set_content(StubServer::completions_body({{"A", std::log(0.5)}, {"B", std::log(0.5)}}),
                        "application/json");
    };
    HttpJudge judge(http_config(server));
    judge.judge_pair(simple_query());
    CHECK(seen["model"] == "stub-model");
    CHECK(seen["prompt"] == "Which is better?");
    CHECK(seen["max_tokens"] == 1);
    CHECK(seen["temperature"] == 0);
    CHECK(seen["logprobs"] == 5);
}

TEST_CASE("chat protocol parses the content top_logprobs shape") {
    StubServer server;
    server.handler = [](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        REQUIRE(body.contains("messages"));
        CHECK(body["messages"][0]["role"] == "user");
        res.set_content(StubServer::chat_body({{"A", std::log(0.6)}, {"B", std::log(0.3)}}),
                        "application/json");
    };
    JudgeConfig cfg = http_config(server);
    cfg.api = ApiKind::kChat;
    HttpJudge judge(cfg);
    const auto verdict = judge.judge_pair(simple_query());
    CHECK(verdict.p_first_better == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("custom endpoint paths are preserved") {
    StubServer server;
    server.handler = [](const httplib::Request& req, httplib::Response& res) {
        CHECK(req.path == "/custom/route");
        res.set_content(StubServer::completions_body({{"A", std::log(0.5)}, {"B", std::log(0.5)}}),
                        "application/json");
    };
    HttpJudge judge(http_config(server, "/custom/route"));
    CHECK(judge.judge_pair(simple_query()).p_first_better == doctest::Approx(0.5));
}

TEST_CASE("endpoint parsing") {
    const auto ep = parse_endpoint("http://localhost:8000", ApiKind::kCompletions);
    CHECK(ep.scheme == "http");
    CHECK(ep.host == "localhost");
    CHECK(ep.port == 8000);
    CHECK(ep.path == "/v1/completions");

    const auto chat = parse_endpoint("http://localhost:8000/", ApiKind::kChat);
    CHECK(chat.path == "/v1/chat/completions");

    const auto https = parse_endpoint("https://api.example.com", ApiKind::kCompletions);
    CHECK(https.port == 443);

    CHECK_THROWS_AS(parse_endpoint("ftp://nope", ApiKind::kCompletions), DataError);
    CHECK_THROWS_AS(parse_endpoint("http://", ApiKind::kCompletions), DataError);
}

TEST_CASE("max_in_flight caps concurrent requests") {
    StubServer server;
    std::atomic<int> concurrent{0};
    std::atomic<int> peak{0};
    server.handler = [&](const httplib::Request&, httplib::Response& res) {
        const int now = concurrent.fetch_add(1) + 1;
        int seen = peak.load();
        while (now > seen && !peak.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        concurrent.fetch_sub(1);
        res.set_content(StubServer::completions_body({{"A", std::log(0.5)}, {"B", std::log(0.5)}}),
                        "application/json");
    };
    JudgeConfig cfg = http_config(server);
    cfg.max_in_flight = 2;
    HttpJudge judge(cfg);

    std::vector<std::thread> callers;
    for (int i = 0; i < 8; ++i) {
        callers.emplace_back([&] { judge.judge_pair(simple_query()); });
    }
    for (auto& t : callers) t.join();
    CHECK(server.requests.load() == 8);
    CHECK(peak.load() <= 2);
}

TEST_CASE("connection refused surfaces as a transport error after retries") {
    JudgeConfig cfg;
    cfg.backend = BackendKind::kHttp;
    cfg.endpoint = "http://127.0.0.1:1"; // nothing listens there
    cfg.model = "m";
    cfg.max_retries = 1;
    cfg.retry_backoff = std::chrono::milliseconds(1);
    cfg.request_timeout = std::chrono::milliseconds(200);
    HttpJudge judge(cfg);
    CHECK_THROWS_WITH_AS(judge.judge_pair(simple_query()), doctest::Contains("transport"),
                         BackendError);
}
