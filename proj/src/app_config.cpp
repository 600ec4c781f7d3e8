#include "wedas/app_config.hpp"

#include <fstream>
#include <set>

#include "wedas/error.hpp"

namespace wedas {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "serper_api_key", "llm_api_key",   "llm_base_url",
        "llm_model",      "local_corpus",  "scripted_llm",
        "cache_dir",      "tool_mode",     "probe_iterations",
        "max_candidates_per_iteration",    "trials",
        "workers",        "search_k",      "requests_per_minute",
        "context_char_budget",             "max_turns",
        "max_tool_calls_per_turn",         "decoding",
    };
    return keys;
}

const std::set<std::string>& known_decoding_keys() {
    static const std::set<std::string> keys = {"temperature", "top_p", "min_p", "top_k",
                                               "max_tokens"};
    return keys;
}

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            throw Error(ErrorKind::config,
                        std::string("config key \"") + key + "\" has the wrong type");
        }
    }
}

}  // namespace

AppConfig config_from_json(const json& j, AppConfig base) {
    if (!j.is_object()) {
        throw Error(ErrorKind::config, "config file must contain a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (known_keys().find(key) == known_keys().end()) {
            throw Error(ErrorKind::config, "unknown config key \"" + key + "\"");
        }
    }
    take(j, "serper_api_key", base.serper_api_key);
    take(j, "llm_api_key", base.llm_api_key);
    take(j, "llm_base_url", base.llm_base_url);
    take(j, "llm_model", base.llm_model);
    take(j, "local_corpus", base.local_corpus);
    take(j, "scripted_llm", base.scripted_llm);
    take(j, "cache_dir", base.cache_dir);
    take(j, "tool_mode", base.tool_mode);
    take(j, "probe_iterations", base.probe_iterations);
    take(j, "max_candidates_per_iteration", base.max_candidates_per_iteration);
    take(j, "trials", base.trials);
    take(j, "workers", base.workers);
    take(j, "search_k", base.search_k);
    take(j, "requests_per_minute", base.requests_per_minute);
    take(j, "context_char_budget", base.context_char_budget);
    take(j, "max_turns", base.limits.max_turns);
    take(j, "max_tool_calls_per_turn", base.limits.max_tool_calls_per_turn);
    if (j.contains("decoding")) {
        const json& d = j.at("decoding");
        if (!d.is_object()) {
            throw Error(ErrorKind::config, "config key \"decoding\" must be an object");
        }
        for (const auto& [key, value] : d.items()) {
            if (known_decoding_keys().find(key) == known_decoding_keys().end()) {
                throw Error(ErrorKind::config, "unknown config key \"decoding." + key + "\"");
            }
        }
        take(d, "temperature", base.decoding.temperature);
        take(d, "top_p", base.decoding.top_p);
        take(d, "min_p", base.decoding.min_p);
        take(d, "top_k", base.decoding.top_k);
        take(d, "max_tokens", base.decoding.max_tokens);
    }
    return base;
}

AppConfig load_config_file(const std::string& path, AppConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open config file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorKind::config, "config file is not valid JSON: " + path);
    }
    return config_from_json(j, std::move(base));
}

AppConfig apply_env(AppConfig base, const GetEnvFn& getenv_fn) {
    if (const char* v = getenv_fn("SERPER_API_KEY")) base.serper_api_key = v;
    if (const char* v = getenv_fn("LLM_API_KEY")) base.llm_api_key = v;
    if (const char* v = getenv_fn("LLM_BASE_URL")) base.llm_base_url = v;
    return base;
}

json config_to_json(const AppConfig& config) {
    auto redact = [](const std::string& secret) {
        return secret.empty() ? "(unset)" : "(set)";
    };
    return json{
        {"serper_api_key", redact(config.serper_api_key)},
        {"llm_api_key", redact(config.llm_api_key)},
        {"llm_base_url", config.llm_base_url},
        {"llm_model", config.llm_model},
        {"local_corpus", config.local_corpus},
        {"scripted_llm", config.scripted_llm},
        {"cache_dir", config.cache_dir},
        {"tool_mode", config.tool_mode},
        {"probe_iterations", config.probe_iterations},
        {"max_candidates_per_iteration", config.max_candidates_per_iteration},
        {"trials", config.trials},
        {"workers", config.workers},
        {"search_k", config.search_k},
        {"requests_per_minute", config.requests_per_minute},
        {"context_char_budget", config.context_char_budget},
        {"max_turns", config.limits.max_turns},
        {"max_tool_calls_per_turn", config.limits.max_tool_calls_per_turn},
        {"decoding", decoding_to_json(config.decoding)},
    };
}

void validate_config(const AppConfig& config) {
    if (config.tool_mode != "baseline" && config.tool_mode != "wedas") {
        throw Error(ErrorKind::config,
                    "tool_mode must be \"baseline\" or \"wedas\", got \"" + config.tool_mode +
                        "\"");
    }
    if (config.probe_iterations < 0) {
        throw Error(ErrorKind::config, "probe_iterations must be >= 0");
    }
    if (config.max_candidates_per_iteration < 2 || config.max_candidates_per_iteration > 5) {
        throw Error(ErrorKind::config, "max_candidates_per_iteration must be in [2, 5]");
    }
    if (config.trials < 1) throw Error(ErrorKind::config, "trials must be >= 1");
    if (config.workers < 1) throw Error(ErrorKind::config, "workers must be >= 1");
    if (config.search_k < 1) throw Error(ErrorKind::config, "search_k must be >= 1");
    if (config.requests_per_minute < 1) {
        throw Error(ErrorKind::config, "requests_per_minute must be >= 1");
    }
    if (config.limits.max_turns < 1) throw Error(ErrorKind::config, "max_turns must be >= 1");
    if (config.limits.max_tool_calls_per_turn < 1) {
        throw Error(ErrorKind::config, "max_tool_calls_per_turn must be >= 1");
    }
    if (config.decoding.max_tokens < 1) {
        throw Error(ErrorKind::config, "decoding.max_tokens must be >= 1");
    }
    if (config.decoding.temperature < 0.0) {
        throw Error(ErrorKind::config, "decoding.temperature must be >= 0");
    }
    if (config.decoding.top_p <= 0.0 || config.decoding.top_p > 1.0) {
        throw Error(ErrorKind::config, "decoding.top_p must be in (0, 1]");
    }
}

RunConfig make_run_config(const AppConfig& config) {
    RunConfig run;
    run.tool_mode = tool_mode_from_string(config.tool_mode);
    run.limits = config.limits;
    run.budget.max_iterations = config.probe_iterations;
    run.budget.max_candidates_per_iteration = config.max_candidates_per_iteration;
    run.decoding = config.decoding;
    run.search_k = config.search_k;
    run.context_char_budget = config.context_char_budget;
    return run;
}

std::shared_ptr<SearchBackend> build_search_backend(const AppConfig& config) {
    if (!config.local_corpus.empty()) {
        return std::make_shared<LocalSearchBackend>(LocalCorpus::from_jsonl(config.local_corpus));
    }
    if (config.serper_api_key.empty()) {
        throw Error(ErrorKind::config,
                    "live search needs SERPER_API_KEY (or pass --local-corpus PATH to run "
                    "against a local document file)");
    }
    SerperConfig serper;
    serper.api_key = config.serper_api_key;
    serper.cache_dir = config.cache_dir;
    return std::make_shared<SerperSearchBackend>(std::move(serper));
}

std::shared_ptr<ChatBackend> build_chat_backend(const AppConfig& config) {
    if (!config.scripted_llm.empty()) {
        return std::make_shared<ScriptedChatBackend>(
            ScriptedChatBackend::from_jsonl(config.scripted_llm));
    }
    if (config.llm_api_key.empty()) {
        throw Error(ErrorKind::config,
                    "live completions need LLM_API_KEY (or pass --scripted-llm PATH to replay "
                    "recorded responses)");
    }
    if (config.llm_model.empty()) {
        throw Error(ErrorKind::config, "live completions need llm_model to be set");
    }
    LiveLlmConfig live;
    live.base_url = config.llm_base_url;
    live.api_key = config.llm_api_key;
    live.model = config.llm_model;
    live.requests_per_minute = config.requests_per_minute;
    return std::make_shared<LiveChatBackend>(std::move(live));
}

}  // namespace wedas
