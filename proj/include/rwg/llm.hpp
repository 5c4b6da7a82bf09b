#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace rwg {

struct ChatRequest {
    std::string system;
    std::string user;
    int max_reply_tokens = 1024;  // > 0
    double temperature = 0.0;     // >= 0
};

struct GenerationParams {
    double temperature = 0.0;
    int max_reply_tokens = 1024;
};

struct BackendUsage {
    long requests = 0;
    long prompt_tokens = 0;  // heuristic estimates
    long reply_tokens = 0;
};

// Chat-completion backend. Usage counters are uniform across implementations
// and updated atomically, so one instance may serve concurrent runs.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;

    std::string complete(const ChatRequest& request);
    BackendUsage usage_report() const;

protected:
    virtual std::string do_complete(const ChatRequest& request) = 0;

private:
    std::atomic<long> requests_{0};
    std::atomic<long> prompt_tokens_{0};
    std::atomic<long> reply_tokens_{0};
};

// A scripted step: the prompt must contain `match` (checked against
// system + "\n" + user); the step's reply is returned. Steps are consumed
// strictly in order.
struct MockStep {
    std::string match;
    std::string reply;
};

class MockBackend : public LlmBackend {
public:
    explicit MockBackend(std::vector<MockStep> steps);
    MockBackend(std::initializer_list<MockStep> steps)
        : MockBackend(std::vector<MockStep>(steps)) {}

    // {"steps": [{"match": "...", "reply": "..."}]}
    static std::vector<MockStep> steps_from_json(const std::string& json_text);

    size_t remaining() const;

protected:
    std::string do_complete(const ChatRequest& request) override;  // ScriptExhausted / MatcherMismatch

private:
    std::vector<MockStep> steps_;
    mutable std::mutex mu_;
    size_t next_ = 0;
};

struct BackendConfig {
    std::string endpoint_url;        // base URL of an OpenAI-compatible service
    std::string model_name;
    std::string auth_token_env_var;  // empty -> no Authorization header
    std::chrono::milliseconds request_timeout{60000};
    int max_retries = 3;             // transient failures only
    std::vector<std::chrono::milliseconds> retry_backoff{
        std::chrono::milliseconds(500), std::chrono::milliseconds(1000),
        std::chrono::milliseconds(2000)};
};

// POSTs to <base>/chat/completions. Retries Timeout/RateLimited/5xx per the
// backoff schedule; never retries auth or other client errors. The bearer
// token is read from the configured environment variable and never logged.
class HttpBackend : public LlmBackend {
public:
    explicit HttpBackend(BackendConfig config);

protected:
    std::string do_complete(const ChatRequest& request) override;

private:
    std::string attempt(const ChatRequest& request);  // single HTTP round trip
    BackendConfig config_;
};

// Builds a backend from a JSON spec: {"type": "mock", "script": [...]} or
// {"type": "mock", "script_path": "..."} (resolved against base_dir) or
// {"type": "http", "endpoint_url": ..., "model": ..., "auth_env": ...,
//  "timeout_ms": ..., "max_retries": ..., "backoff_ms": [...]}.
std::shared_ptr<LlmBackend> make_backend(const std::string& spec_json, const std::string& base_dir);

}  // namespace rwg
