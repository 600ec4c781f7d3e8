#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wedas/common.hpp"
#include "wedas/error.hpp"

namespace wedas {

enum class Role { system, user, assistant };

std::string role_to_string(Role role);
Role role_from_string(const std::string& s);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

inline ChatMessage system_msg(std::string content) { return {Role::system, std::move(content)}; }
inline ChatMessage user_msg(std::string content) { return {Role::user, std::move(content)}; }
inline ChatMessage assistant_msg(std::string content) {
    return {Role::assistant, std::move(content)};
}

// Sampling parameters; the defaults are pinned and asserted byte-for-byte in
// serialized form, so changing any of them is a contract change.
struct DecodingConfig {
    double temperature = 1.0;
    double top_p = 0.95;
    double min_p = 0.0;
    int top_k = -1;
    int max_tokens = 16384;
};

nlohmann::json decoding_to_json(const DecodingConfig& cfg);

struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct Completion {
    std::string text;
    std::string model_id;
    Usage usage;
};

// Stable identity of a request: FNV-1a over the canonical JSON serialization
// of the decoding config and message list. Same inputs, same hex, on every
// platform — scripted fixtures key off this.
std::string fingerprint(const std::vector<ChatMessage>& messages, const DecodingConfig& cfg);

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual Completion complete(const std::vector<ChatMessage>& messages,
                                const DecodingConfig& cfg) = 0;
    virtual std::string id() const = 0;
};

// Deterministic replay backend: a fingerprint-to-response table loaded from a
// JSONL fixture file, one {"fingerprint", "response"} object per line.
class ScriptedChatBackend : public ChatBackend {
public:
    ScriptedChatBackend() = default;
    static ScriptedChatBackend from_jsonl(const std::filesystem::path& path);

    void add(const std::string& fp, const std::string& response);
    std::size_t size() const { return fixtures_.size(); }

    Completion complete(const std::vector<ChatMessage>& messages,
                        const DecodingConfig& cfg) override;
    std::string id() const override { return "scripted"; }

private:
    std::unordered_map<std::string, std::string> fixtures_;
};

// Rule-driven backend: answers from a pure function of the conversation and
// records every (fingerprint, response) pair it produced, so a test can run
// once against rules and save the transcript as a scripted fixture file.
class CallbackChatBackend : public ChatBackend {
public:
    using Responder = std::function<std::string(const std::vector<ChatMessage>&)>;
    explicit CallbackChatBackend(Responder responder) : responder_(std::move(responder)) {}

    Completion complete(const std::vector<ChatMessage>& messages,
                        const DecodingConfig& cfg) override;
    std::string id() const override { return "callback"; }

    const std::vector<std::pair<std::string, std::string>>& recorded() const { return recorded_; }
    void save_fixtures_jsonl(const std::filesystem::path& path) const;

private:
    Responder responder_;
    std::vector<std::pair<std::string, std::string>> recorded_;
    std::unordered_set<std::string> seen_;
    mutable std::mutex mu_;
};

// Shared token bucket: capacity and refill rate both equal requests_per_minute.
// acquire() blocks (via the injected sleeper) until a token is available.
class RateLimiter {
public:
    explicit RateLimiter(int requests_per_minute, Clock clock = system_clock_ms,
                         Sleeper sleeper = thread_sleep_ms);
    void acquire();

private:
    double capacity_;
    double per_ms_;
    double tokens_;
    std::int64_t last_ms_;
    Clock clock_;
    Sleeper sleeper_;
    std::mutex mu_;
};

struct LiveLlmConfig {
    std::string base_url;  // typically from env LLM_BASE_URL, e.g. "https://host/v1"
    std::string api_key;   // typically from env LLM_API_KEY
    std::string model;
    // OpenAI-compatible endpoints differ on extended sampling knobs; min_p and
    // top_k are sent only when this is set, and otherwise dropped with a warning.
    bool supports_extended_sampling = false;
    int requests_per_minute = 60;
    HttpRetryPolicy retry;
};

class LiveChatBackend : public ChatBackend {
public:
    explicit LiveChatBackend(LiveLlmConfig config, Clock clock = system_clock_ms,
                             Sleeper sleeper = thread_sleep_ms);

    Completion complete(const std::vector<ChatMessage>& messages,
                        const DecodingConfig& cfg) override;
    std::string id() const override { return "live"; }

    // Times a non-default min_p/top_k had to be dropped for an endpoint that
    // does not support them.
    std::size_t dropped_param_warnings() const { return warnings_.load(); }

    // Request body construction, separated out so tests can pin the wire shape.
    static nlohmann::json build_request(const LiveLlmConfig& config,
                                        const std::vector<ChatMessage>& messages,
                                        const DecodingConfig& cfg,
                                        std::size_t* dropped = nullptr);

private:
    LiveLlmConfig config_;
    Clock clock_;
    Sleeper sleeper_;
    RateLimiter limiter_;
    std::atomic<std::size_t> warnings_{0};
};

// Validates an extracted JSON value against a named schema; returns an error
// description, or nullopt when the value conforms.
using SchemaValidator = std::function<std::optional<std::string>(const nlohmann::json&)>;

// Finds the first balanced top-level JSON object in free-form completion text
// (code fences and surrounding prose are tolerated). Returns nullopt when no
// parseable object exists.
std::optional<nlohmann::json> extract_first_json_object(const std::string& text);

// Front door for all model calls: counts requests, extracts and validates
// structured output, and performs the single bounded repair retry.
class LlmGateway {
public:
    explicit LlmGateway(std::shared_ptr<ChatBackend> backend);

    Completion complete(const std::vector<ChatMessage>& messages, const DecodingConfig& cfg);

    // Extract-validate-repair loop, bounded at two completions total. Throws
    // JsonExtractError when no object can be pulled out of the text at all,
    // and SchemaError when validation still fails after the repair retry.
    nlohmann::json complete_json(const std::vector<ChatMessage>& messages,
                                 const DecodingConfig& cfg, const std::string& schema_id);

    void register_schema(const std::string& schema_id, SchemaValidator validator);

    std::size_t calls() const { return calls_.load(); }
    ChatBackend& backend() { return *backend_; }

private:
    std::shared_ptr<ChatBackend> backend_;
    std::map<std::string, SchemaValidator> schemas_;
    std::atomic<std::size_t> calls_{0};
    std::mutex mu_;
};

}  // namespace wedas
