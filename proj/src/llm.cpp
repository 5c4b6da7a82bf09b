#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "rwg/llm.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "rwg/errors.hpp"
#include "rwg/memory.hpp"

namespace rwg {

using nlohmann::json;

std::string LlmBackend::complete(const ChatRequest& request) {
    if (request.max_reply_tokens <= 0) throw ConfigError("max_reply_tokens must be > 0");
    if (request.temperature < 0) throw ConfigError("temperature must be >= 0");
    requests_.fetch_add(1, std::memory_order_relaxed);
    prompt_tokens_.fetch_add(estimate_tokens(request.system) + estimate_tokens(request.user),
                             std::memory_order_relaxed);
    std::string reply = do_complete(request);
    reply_tokens_.fetch_add(estimate_tokens(reply), std::memory_order_relaxed);
    return reply;
}

BackendUsage LlmBackend::usage_report() const {
    return {requests_.load(), prompt_tokens_.load(), reply_tokens_.load()};
}

MockBackend::MockBackend(std::vector<MockStep> steps) : steps_(std::move(steps)) {}

std::vector<MockStep> MockBackend::steps_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("mock script is not valid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("steps") || !j["steps"].is_array()) {
        throw ConfigError("mock script must be {\"steps\": [...]}");
    }
    std::vector<MockStep> steps;
    for (const auto& s : j["steps"]) {
        steps.push_back({s.value("match", std::string()), s.value("reply", std::string())});
    }
    return steps;
}

size_t MockBackend::remaining() const {
    std::lock_guard<std::mutex> lock(mu_);
    return steps_.size() - next_;
}

std::string MockBackend::do_complete(const ChatRequest& request) {
    std::lock_guard<std::mutex> lock(mu_);
    if (next_ >= steps_.size()) {
        throw ScriptExhaustedError("mock script exhausted after " + std::to_string(steps_.size()) +
                                   " steps");
    }
    const MockStep& step = steps_[next_];
    const std::string prompt = request.system + "\n" + request.user;
    if (prompt.find(step.match) == std::string::npos) {
        throw MatcherMismatchError("mock step " + std::to_string(next_) +
                                   ": prompt does not contain \"" + step.match + "\"");
    }
    ++next_;
    return step.reply;
}

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
    if (config_.endpoint_url.empty()) throw ConfigError("http backend needs endpoint_url");
    if (config_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

namespace {

// Splits an endpoint URL into the httplib origin and a path prefix.
void split_url(const std::string& url, std::string& origin, std::string& base_path) {
    const size_t scheme = url.find("://");
    const size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
    const size_t path_start = url.find('/', host_start);
    if (path_start == std::string::npos) {
        origin = url;
        base_path.clear();
    } else {
        origin = url.substr(0, path_start);
        base_path = url.substr(path_start);
        while (!base_path.empty() && base_path.back() == '/') base_path.pop_back();
    }
}

}  // namespace

std::string HttpBackend::attempt(const ChatRequest& request) {
    std::string origin, base_path;
    split_url(config_.endpoint_url, origin, base_path);

    httplib::Client client(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.request_timeout);
    client.set_connection_timeout(secs.count(), 0);
    client.set_read_timeout(secs.count(), 0);
    client.set_write_timeout(secs.count(), 0);

    httplib::Headers headers;
    if (!config_.auth_token_env_var.empty()) {
        const char* token = std::getenv(config_.auth_token_env_var.c_str());
        if (!token || !*token) {
            throw AuthError("auth token environment variable " + config_.auth_token_env_var +
                            " is not set");
        }
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    json body;
    body["model"] = config_.model_name;
    body["messages"] = json::array();
    if (!request.system.empty()) {
        body["messages"].push_back({{"role", "system"}, {"content", request.system}});
    }
    body["messages"].push_back({{"role", "user"}, {"content", request.user}});
    body["max_tokens"] = request.max_reply_tokens;
    body["temperature"] = request.temperature;

    auto res = client.Post(base_path + "/chat/completions", headers, body.dump(),
                           "application/json");
    if (!res) {
        throw TimeoutError("request to " + origin + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
        throw AuthError("authentication rejected (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429) {
        throw RateLimitedError("rate limited (HTTP 429)");
    }
    if (res->status >= 500) {
        throw TimeoutError("server error (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status != 200) {
        throw BackendError("unexpected HTTP status " + std::to_string(res->status));
    }
    try {
        json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw BackendError(std::string("malformed completion response: ") + e.what());
    }
}

std::string HttpBackend::do_complete(const ChatRequest& request) {
    for (int attempt_idx = 0;; ++attempt_idx) {
        try {
            return attempt(request);
        } catch (const TimeoutError&) {
            if (attempt_idx >= config_.max_retries) throw;
        } catch (const RateLimitedError&) {
            if (attempt_idx >= config_.max_retries) throw;
        }
        // AuthError and plain BackendError are non-transient and propagate.
        std::chrono::milliseconds wait(0);
        if (!config_.retry_backoff.empty()) {
            const size_t i = std::min(static_cast<size_t>(attempt_idx),
                                      config_.retry_backoff.size() - 1);
            wait = config_.retry_backoff[i];
        }
        if (wait.count() > 0) std::this_thread::sleep_for(wait);
    }
}

std::shared_ptr<LlmBackend> make_backend(const std::string& spec_json,
                                         const std::string& base_dir) {
    json spec;
    try {
        spec = json::parse(spec_json);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("backend spec is not valid JSON: ") + e.what());
    }
    if (!spec.is_object() || !spec.contains("type")) {
        throw ConfigError("backend spec needs a \"type\" field");
    }
    const std::string type = spec["type"].get<std::string>();
    if (type == "mock") {
        if (spec.contains("script_path")) {
            std::string path = spec["script_path"].get<std::string>();
            if (!path.empty() && path.front() != '/' && !base_dir.empty()) {
                path = base_dir + "/" + path;
            }
            std::ifstream in(path, std::ios::binary);
            if (!in) throw ConfigError("cannot open mock script: " + path);
            std::stringstream buf;
            buf << in.rdbuf();
            return std::make_shared<MockBackend>(MockBackend::steps_from_json(buf.str()));
        }
        if (spec.contains("script")) {
            json wrapper;
            wrapper["steps"] = spec["script"];
            return std::make_shared<MockBackend>(MockBackend::steps_from_json(wrapper.dump()));
        }
        throw ConfigError("mock backend needs script or script_path");
    }
    if (type == "http") {
        BackendConfig cfg;
        cfg.endpoint_url = spec.value("endpoint_url", std::string());
        cfg.model_name = spec.value("model", std::string());
        cfg.auth_token_env_var = spec.value("auth_env", std::string());
        cfg.request_timeout = std::chrono::milliseconds(spec.value("timeout_ms", 60000));
        cfg.max_retries = spec.value("max_retries", 3);
        if (spec.contains("backoff_ms")) {
            cfg.retry_backoff.clear();
            for (const auto& ms : spec["backoff_ms"]) {
                cfg.retry_backoff.emplace_back(ms.get<long>());
            }
        }
        return std::make_shared<HttpBackend>(cfg);
    }
    throw ConfigError("unknown backend type \"" + type + "\"");
}

}  // namespace rwg
