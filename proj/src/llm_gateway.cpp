#include "wedas/llm_gateway.hpp"

#include <algorithm>
#include <fstream>

#include <httplib.h>

#include "http_support.hpp"

namespace wedas {

using nlohmann::json;

std::string role_to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw Error(ErrorKind::schema, "unknown chat role: " + s);
}

json decoding_to_json(const DecodingConfig& cfg) {
    return json{{"temperature", cfg.temperature},
                {"top_p", cfg.top_p},
                {"min_p", cfg.min_p},
                {"top_k", cfg.top_k},
                {"max_tokens", cfg.max_tokens}};
}

namespace {

void check_messages(const std::vector<ChatMessage>& messages) {
    if (messages.empty()) {
        throw Error(ErrorKind::config, "chat request has no messages");
    }
    for (const auto& m : messages) {
        if (m.content.empty() && m.role != Role::assistant) {
            throw Error(ErrorKind::config,
                        "empty content in " + role_to_string(m.role) + " message");
        }
    }
}

json messages_to_json(const std::vector<ChatMessage>& messages) {
    json arr = json::array();
    for (const auto& m : messages) {
        arr.push_back({{"role", role_to_string(m.role)}, {"content", m.content}});
    }
    return arr;
}

}  // namespace

std::string fingerprint(const std::vector<ChatMessage>& messages, const DecodingConfig& cfg) {
    // nlohmann objects serialize with keys in sorted order, and doubles in
    // shortest round-trip form, so dump() is canonical across platforms.
    json canonical{{"decoding", decoding_to_json(cfg)}, {"messages", messages_to_json(messages)}};
    return fnv1a64_hex(canonical.dump());
}

ScriptedChatBackend ScriptedChatBackend::from_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open fixture file: " + path.string());
    ScriptedChatBackend backend;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::config, "fixture line " + std::to_string(lineno) +
                                               " is not valid JSON: " + e.what());
        }
        backend.add(j.at("fingerprint").get<std::string>(), j.at("response").get<std::string>());
    }
    return backend;
}

void ScriptedChatBackend::add(const std::string& fp, const std::string& response) {
    fixtures_[fp] = response;
}

Completion ScriptedChatBackend::complete(const std::vector<ChatMessage>& messages,
                                         const DecodingConfig& cfg) {
    check_messages(messages);
    std::string fp = fingerprint(messages, cfg);
    auto it = fixtures_.find(fp);
    if (it == fixtures_.end()) {
        throw Error(ErrorKind::script_miss, "no scripted fixture for fingerprint " + fp);
    }
    Completion c;
    c.text = it->second;
    c.model_id = "scripted";
    return c;
}

Completion CallbackChatBackend::complete(const std::vector<ChatMessage>& messages,
                                         const DecodingConfig& cfg) {
    check_messages(messages);
    std::string response = responder_(messages);
    std::string fp = fingerprint(messages, cfg);
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (seen_.insert(fp).second) {
            recorded_.emplace_back(fp, response);
        }
    }
    Completion c;
    c.text = std::move(response);
    c.model_id = "callback";
    return c;
}

void CallbackChatBackend::save_fixtures_jsonl(const std::filesystem::path& path) const {
    std::lock_guard<std::mutex> lock(mu_);
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write fixture file: " + path.string());
    for (const auto& [fp, response] : recorded_) {
        out << json{{"fingerprint", fp}, {"response", response}}.dump() << '\n';
    }
}

RateLimiter::RateLimiter(int requests_per_minute, Clock clock, Sleeper sleeper)
    : capacity_(std::max(1, requests_per_minute)),
      per_ms_(capacity_ / 60000.0),
      tokens_(capacity_),
      clock_(std::move(clock)),
      sleeper_(std::move(sleeper)) {
    last_ms_ = clock_();
}

void RateLimiter::acquire() {
    // The lock is held across the sleep: concurrent callers queue up, which is
    // exactly the throughput the bucket allows anyway.
    std::lock_guard<std::mutex> lock(mu_);
    for (;;) {
        std::int64_t now = clock_();
        if (now > last_ms_) {
            tokens_ = std::min(capacity_, tokens_ + per_ms_ * static_cast<double>(now - last_ms_));
            last_ms_ = now;
        }
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        auto wait = static_cast<std::int64_t>((1.0 - tokens_) / per_ms_) + 1;
        sleeper_(wait);
    }
}

json LiveChatBackend::build_request(const LiveLlmConfig& config,
                                    const std::vector<ChatMessage>& messages,
                                    const DecodingConfig& cfg, std::size_t* dropped) {
    json req{{"model", config.model},
             {"messages", messages_to_json(messages)},
             {"temperature", cfg.temperature},
             {"top_p", cfg.top_p},
             {"max_tokens", cfg.max_tokens}};
    if (config.supports_extended_sampling) {
        req["min_p"] = cfg.min_p;
        req["top_k"] = cfg.top_k;
    } else if (cfg.min_p != 0.0 || cfg.top_k != -1) {
        // Non-default values were requested but the endpoint cannot take them.
        if (dropped) ++*dropped;
    }
    return req;
}

LiveChatBackend::LiveChatBackend(LiveLlmConfig config, Clock clock, Sleeper sleeper)
    : config_(std::move(config)),
      clock_(clock),
      sleeper_(sleeper),
      limiter_(config_.requests_per_minute, clock, sleeper) {}

Completion LiveChatBackend::complete(const std::vector<ChatMessage>& messages,
                                     const DecodingConfig& cfg) {
    check_messages(messages);
    if (config_.base_url.empty()) {
        throw Error(ErrorKind::config, "no chat endpoint configured (set LLM_BASE_URL)");
    }
    if (config_.api_key.empty()) {
        throw Error(ErrorKind::auth, "no chat API key configured (set LLM_API_KEY)");
    }

    std::size_t dropped = 0;
    json req = build_request(config_, messages, cfg, &dropped);
    warnings_ += dropped;
    std::string req_body = req.dump();

    std::string endpoint = config_.base_url;
    while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
    endpoint += "/chat/completions";
    auto url = detail::split_url(endpoint);

    std::string resp_body;
    for (int attempt = 0;; ++attempt) {
        limiter_.acquire();
        httplib::Client client(url.base);
        client.set_connection_timeout(config_.retry.timeout_sec);
        client.set_read_timeout(config_.retry.timeout_sec);
        httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};
        auto res = client.Post(url.path, headers, req_body, "application/json");

        if (res && res->status >= 200 && res->status < 300) {
            resp_body = res->body;
            break;
        }
        if (res && detail::auth_status(res->status)) {
            throw Error(ErrorKind::auth, "chat endpoint rejected credentials (HTTP " +
                                             std::to_string(res->status) + ")");
        }
        bool retryable = !res || detail::retryable_status(res->status);
        if (!retryable) {
            throw Error(ErrorKind::network,
                        "chat request failed with HTTP " + std::to_string(res->status));
        }
        if (attempt >= config_.retry.max_retries) {
            throw Error(ErrorKind::network, "chat request failed after " +
                                                std::to_string(attempt + 1) + " attempts");
        }
        sleeper_(static_cast<std::int64_t>(config_.retry.base_delay_ms) << attempt);
    }

    json parsed;
    try {
        parsed = json::parse(resp_body);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::network, std::string("unparseable chat response: ") + e.what());
    }

    Completion c;
    try {
        c.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::network, "chat response missing choices[0].message.content");
    }
    c.model_id = parsed.value("model", config_.model);
    if (parsed.contains("usage") && parsed["usage"].is_object()) {
        c.usage.prompt_tokens = parsed["usage"].value("prompt_tokens", std::int64_t{0});
        c.usage.completion_tokens = parsed["usage"].value("completion_tokens", std::int64_t{0});
    }
    return c;
}

std::optional<json> extract_first_json_object(const std::string& text) {
    // Scan every '{' in order; the first one that opens a balanced,
    // parseable object wins. Brace counting is string-aware so braces inside
    // JSON strings do not confuse it.
    for (std::size_t start = text.find('{'); start != std::string::npos;
         start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) {
                    json parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
                    if (!parsed.is_discarded()) return parsed;
                    break;  // balanced but not valid JSON; try the next '{'
                }
            }
        }
    }
    return std::nullopt;
}

LlmGateway::LlmGateway(std::shared_ptr<ChatBackend> backend) : backend_(std::move(backend)) {
    if (!backend_) throw Error(ErrorKind::config, "gateway requires a chat backend");
}

Completion LlmGateway::complete(const std::vector<ChatMessage>& messages,
                                const DecodingConfig& cfg) {
    ++calls_;
    return backend_->complete(messages, cfg);
}

void LlmGateway::register_schema(const std::string& schema_id, SchemaValidator validator) {
    std::lock_guard<std::mutex> lock(mu_);
    schemas_[schema_id] = std::move(validator);
}

json LlmGateway::complete_json(const std::vector<ChatMessage>& messages,
                               const DecodingConfig& cfg, const std::string& schema_id) {
    SchemaValidator validator;
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = schemas_.find(schema_id);
        if (it == schemas_.end()) {
            throw Error(ErrorKind::config, "no schema registered under id " + schema_id);
        }
        validator = it->second;
    }

    Completion first = complete(messages, cfg);
    auto extracted = extract_first_json_object(first.text);
    if (!extracted) {
        throw Error(ErrorKind::json_extract,
                    "no JSON object found in completion for schema " + schema_id);
    }
    auto error = validator(*extracted);
    if (!error) return *extracted;

    // Exactly one repair retry: the failed reply plus a deterministic
    // correction request are appended to the conversation.
    std::vector<ChatMessage> repair = messages;
    repair.push_back(assistant_msg(first.text));
    repair.push_back(user_msg("Your previous reply failed validation: " + *error +
                              ". Return only a corrected JSON object that satisfies the "
                              "required schema, with no other text."));
    Completion second = complete(repair, cfg);
    auto retried = extract_first_json_object(second.text);
    if (!retried) {
        throw Error(ErrorKind::json_extract,
                    "no JSON object found in repair completion for schema " + schema_id);
    }
    error = validator(*retried);
    if (!error) return *retried;
    throw Error(ErrorKind::schema,
                "completion failed schema " + schema_id + " after one repair retry: " + *error);
}

}  // namespace wedas
