#pragma once

#include <functional>
#include <memory>
#include <string>

#include <json.hpp>

#include "wedas/agent_core.hpp"
#include "wedas/llm_gateway.hpp"
#include "wedas/search_env.hpp"

namespace wedas {

// Effective tool configuration, merged from four layers with fixed
// precedence: command-line flags > environment variables > config file >
// built-in defaults. The defaults below are the pinned sampling and agent
// limits the rest of the system is tested against.
struct AppConfig {
    // Credentials and endpoints for live mode. Env: SERPER_API_KEY,
    // LLM_API_KEY, LLM_BASE_URL.
    std::string serper_api_key;
    std::string llm_api_key;
    std::string llm_base_url = "https://api.openai.com/v1";
    std::string llm_model;

    // Offline mode inputs: a local corpus JSONL and a scripted-response JSONL.
    std::string local_corpus;
    std::string scripted_llm;

    // Observation cache directory for live search; empty disables caching.
    std::string cache_dir;

    std::string tool_mode = "wedas";  // "baseline" or "wedas"
    int probe_iterations = 1;
    int max_candidates_per_iteration = 5;
    int trials = 3;
    int workers = 1;
    int search_k = 10;
    int requests_per_minute = 60;
    std::size_t context_char_budget = 0;  // 0 = unlimited
    AgentLimits limits;
    DecodingConfig decoding;
};

// The config-file layer: overrides fields of `base` from a JSON object.
// Unknown keys are rejected so typos fail loudly rather than silently
// falling back to defaults.
AppConfig config_from_json(const nlohmann::json& j, AppConfig base = {});

// Loads and applies a JSON config file over `base`.
AppConfig load_config_file(const std::string& path, AppConfig base = {});

// The environment layer. `getenv_fn` is injectable for tests; pass nullptr
// results through unchanged.
using GetEnvFn = std::function<const char*(const char*)>;
AppConfig apply_env(AppConfig base, const GetEnvFn& getenv_fn);

// Full effective view, suitable for printing. Secrets are redacted to
// "(set)"/"(unset)"; everything else appears verbatim.
nlohmann::json config_to_json(const AppConfig& config);

// Throws ErrorKind::config with an actionable message when a field is out of
// range or inconsistent.
void validate_config(const AppConfig& config);

// Derives the agent-engine run configuration from the merged view.
RunConfig make_run_config(const AppConfig& config);

// Backend construction. Offline inputs win when present; otherwise live mode
// is attempted and missing credentials produce an actionable config error.
std::shared_ptr<SearchBackend> build_search_backend(const AppConfig& config);
std::shared_ptr<ChatBackend> build_chat_backend(const AppConfig& config);

}  // namespace wedas
