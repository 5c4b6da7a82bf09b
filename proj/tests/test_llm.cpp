#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <atomic>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "httplib.h"
#include "json.hpp"
#include "rwg/errors.hpp"
#include "rwg/llm.hpp"

using namespace rwg;
using nlohmann::json;

TEST_CASE("mock backend replays its script in order") {
    MockBackend mock({{"select", "(1, Abstract)"}, {"select", "<End>"}});
    ChatRequest req;
    req.user = "please select the next section";
    CHECK(mock.complete(req) == "(1, Abstract)");
    CHECK(mock.complete(req) == "<End>");
    CHECK_THROWS_AS(mock.complete(req), ScriptExhaustedError);
}

TEST_CASE("mock matcher failure is an error, not a skip") {
    MockBackend mock({{"THIS STRING IS NOT THERE", "x"}});
    ChatRequest req;
    req.user = "something else";
    CHECK_THROWS_AS(mock.complete(req), MatcherMismatchError);
}

TEST_CASE("mock matcher sees system and user text") {
    MockBackend mock({{"sys-marker", "ok"}});
    ChatRequest req;
    req.system = "a sys-marker here";
    req.user = "plain";
    CHECK(mock.complete(req) == "ok");
}

TEST_CASE("usage counters start at zero and never decrease") {
    MockBackend mock({{"", "abcd"}, {"", "efgh"}});
    auto u0 = mock.usage_report();
    CHECK(u0.requests == 0);
    CHECK(u0.prompt_tokens == 0);
    CHECK(u0.reply_tokens == 0);

    ChatRequest req;
    req.system = "12345678";  // 2 tokens
    req.user = "1234";        // 1 token
    mock.complete(req);
    auto u1 = mock.usage_report();
    CHECK(u1.requests == 1);
    CHECK(u1.prompt_tokens == 3);
    CHECK(u1.reply_tokens == 1);

    mock.complete(req);
    auto u2 = mock.usage_report();
    CHECK(u2.requests == 2);
    CHECK(u2.prompt_tokens >= u1.prompt_tokens);
    CHECK(u2.reply_tokens >= u1.reply_tokens);
}

TEST_CASE("mock runs are deterministic") {
    const std::vector<MockStep> steps = {{"a", "r1"}, {"b", "r2"}};
    std::vector<std::string> replies1, replies2;
    for (auto* out : {&replies1, &replies2}) {
        MockBackend mock(steps);
        ChatRequest req;
        req.user = "a then b";
        out->push_back(mock.complete(req));
        out->push_back(mock.complete(req));
    }
    CHECK(replies1 == replies2);
}

TEST_CASE("script json parsing") {
    const auto steps = MockBackend::steps_from_json(
        R"({"steps": [{"match": "m", "reply": "r"}]})");
    REQUIRE(steps.size() == 1);
    CHECK(steps[0].match == "m");
    CHECK(steps[0].reply == "r");
    CHECK_THROWS_AS(MockBackend::steps_from_json("[]"), ConfigError);
}

TEST_CASE("chat request validation") {
    MockBackend mock({{"", "x"}});
    ChatRequest req;
    req.max_reply_tokens = 0;
    CHECK_THROWS_AS(mock.complete(req), ConfigError);
    req.max_reply_tokens = 10;
    req.temperature = -0.5;
    CHECK_THROWS_AS(mock.complete(req), ConfigError);
}

// ---- HTTP backend against an in-process server --------------------------

namespace {

struct TestServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> hits{0};

    explicit TestServer(std::function<void(int, const httplib::Request&, httplib::Response&)> fn) {
        server.Post("/v1/chat/completions",
                    [this, fn](const httplib::Request& req, httplib::Response& res) {
                        fn(hits.fetch_add(1) + 1, req, res);
                    });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~TestServer() {
        server.stop();
        thread.join();
    }
    BackendConfig config() const {
        BackendConfig cfg;
        cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
        cfg.model_name = "test-model";
        cfg.max_retries = 3;
        cfg.retry_backoff = {std::chrono::milliseconds(1), std::chrono::milliseconds(1)};
        return cfg;
    }
};

std::string ok_body(const std::string& content) {
    json j;
    j["choices"] = json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}});
    return j.dump();
}

}  // namespace

TEST_CASE("http backend round trip carries messages and params") {
    std::string seen_body;
    TestServer server([&](int, const httplib::Request& req, httplib::Response& res) {
        seen_body = req.body;
        res.set_content(ok_body("hello back"), "application/json");
    });
    HttpBackend backend(server.config());
    ChatRequest req;
    req.system = "sys";
    req.user = "usr";
    req.temperature = 0.25;
    req.max_reply_tokens = 77;
    CHECK(backend.complete(req) == "hello back");

    const json body = json::parse(seen_body);
    CHECK(body["model"] == "test-model");
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "sys");
    CHECK(body["messages"][1]["role"] == "user");
    CHECK(body["messages"][1]["content"] == "usr");
    CHECK(body["max_tokens"] == 77);
    CHECK(body["temperature"] == doctest::Approx(0.25));
}

TEST_CASE("http backend retries transient failures then succeeds") {
    TestServer server([&](int hit, const httplib::Request&, httplib::Response& res) {
        if (hit <= 2) {
            res.status = hit == 1 ? 429 : 503;
            res.set_content("busy", "text/plain");
        } else {
            res.set_content(ok_body("finally"), "application/json");
        }
    });
    HttpBackend backend(server.config());
    ChatRequest req;
    req.user = "u";
    CHECK(backend.complete(req) == "finally");
    CHECK(server.hits.load() == 3);
}

TEST_CASE("http backend surfaces rate limiting after the retry budget") {
    TestServer server([&](int, const httplib::Request&, httplib::Response& res) {
        res.status = 429;
    });
    auto cfg = server.config();
    cfg.max_retries = 2;
    HttpBackend backend(cfg);
    ChatRequest req;
    req.user = "u";
    CHECK_THROWS_AS(backend.complete(req), RateLimitedError);
    CHECK(server.hits.load() == 3);  // initial + 2 retries
}

TEST_CASE("http backend never retries auth failures") {
    TestServer server([&](int, const httplib::Request&, httplib::Response& res) {
        res.status = 401;
    });
    HttpBackend backend(server.config());
    ChatRequest req;
    req.user = "u";
    CHECK_THROWS_AS(backend.complete(req), AuthError);
    CHECK(server.hits.load() == 1);
}

TEST_CASE("http backend sends the bearer token from the environment") {
    std::string auth_header;
    TestServer server([&](int, const httplib::Request& req, httplib::Response& res) {
        auth_header = req.get_header_value("Authorization");
        res.set_content(ok_body("ok"), "application/json");
    });
    setenv("RWG_TEST_TOKEN", "sekret", 1);
    auto cfg = server.config();
    cfg.auth_token_env_var = "RWG_TEST_TOKEN";
    HttpBackend backend(cfg);
    ChatRequest req;
    req.user = "u";
    CHECK(backend.complete(req) == "ok");
    CHECK(auth_header == "Bearer sekret");

    unsetenv("RWG_TEST_TOKEN");
    HttpBackend backend2(cfg);
    CHECK_THROWS_AS(backend2.complete(req), AuthError);
}

TEST_CASE("make_backend builds from specs") {
    const auto mock = make_backend(
        R"({"type": "mock", "script": [{"match": "", "reply": "hi"}]})", ".");
    ChatRequest req;
    req.user = "u";
    CHECK(mock->complete(req) == "hi");

    CHECK_THROWS_AS(make_backend(R"({"type": "nope"})", "."), ConfigError);
    CHECK_THROWS_AS(make_backend(R"({"type": "mock"})", "."), ConfigError);
    CHECK_THROWS_AS(make_backend("not json", "."), ConfigError);

    const auto scripted = make_backend(
        R"({"type": "mock", "script_path": "writer_small.script.json"})", RWG_FIXTURE_DIR);
    ChatRequest wreq;
    wreq.user = "write the related work section please";
    CHECK(scripted->complete(wreq).find("[1, 2]") != std::string::npos);
}
