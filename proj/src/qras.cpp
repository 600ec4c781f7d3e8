#include "wedas/qras.hpp"

#include <algorithm>
#include <cmath>

#include "wedas/prompts.hpp"

namespace wedas {

using nlohmann::json;

std::vector<ChatMessage> build_judge_prompt(const std::vector<JudgeItem>& items) {
    if (items.empty()) {
        throw Error(ErrorKind::config, "judge prompt requires at least one item");
    }
    json payload = json::array();
    for (const auto& item : items) {
        json results = json::array();
        for (const auto& doc : item.observation.documents) {
            results.push_back({{"title", doc.title}, {"snippet", doc.snippet}, {"url", doc.url}});
        }
        payload.push_back({{"query", item.query}, {"results", std::move(results)}});
    }
    return {system_msg(std::string(prompts::judge_system_v1())), user_msg(payload.dump())};
}

namespace {

std::optional<std::string> validate_evaluations(const json& j) {
    if (!j.is_object() || !j.contains("evaluations") || !j["evaluations"].is_array()) {
        return "top-level object must contain an \"evaluations\" array";
    }
    std::size_t index = 0;
    for (const auto& e : j["evaluations"]) {
        std::string where = "evaluations[" + std::to_string(index++) + "]";
        if (!e.is_object()) return where + " must be an object";
        if (!e.contains("query") || !e["query"].is_string()) {
            return where + " needs a string \"query\"";
        }
        if (!e.contains("overall_relevance_score") || !e["overall_relevance_score"].is_number()) {
            return where + " needs a numeric \"overall_relevance_score\"";
        }
        if (!e.contains("dimension_scores") || !e["dimension_scores"].is_object()) {
            return where + " needs a \"dimension_scores\" object";
        }
        for (const char* dim : {"topical_relevance", "info_density", "noise_level"}) {
            if (!e["dimension_scores"].contains(dim) || !e["dimension_scores"][dim].is_number()) {
                return where + ".dimension_scores needs numeric \"" + dim + "\"";
            }
        }
        if (!e.contains("analysis") || !e["analysis"].is_string()) {
            return where + " needs a string \"analysis\"";
        }
    }
    return std::nullopt;
}

int clamp_round_dim(const json& value, const std::string& query, const char* dim) {
    if (!value.is_number()) {
        throw Error(ErrorKind::missing_evaluation,
                    "non-numeric " + std::string(dim) + " for query \"" + query + "\"");
    }
    auto rounded = std::llround(value.get<double>());
    return static_cast<int>(std::clamp<long long>(rounded, 0, 10));
}

}  // namespace

void register_qras_schema(LlmGateway& gateway) {
    gateway.register_schema(kQrasSchemaId, validate_evaluations);
}

std::vector<QrasResult> parse_evaluations(const json& raw,
                                          const std::vector<std::string>& expected_queries) {
    if (!raw.is_object() || !raw.contains("evaluations") || !raw["evaluations"].is_array()) {
        throw Error(ErrorKind::missing_evaluation, "judge output has no evaluations array");
    }
    const json& evals = raw["evaluations"];

    // Alignment: exact query echo first, then positional fallback — an
    // expected query is never silently dropped.
    std::vector<int> chosen(expected_queries.size(), -1);
    std::vector<bool> consumed(evals.size(), false);
    for (std::size_t i = 0; i < expected_queries.size(); ++i) {
        for (std::size_t e = 0; e < evals.size(); ++e) {
            if (consumed[e]) continue;
            if (evals[e].is_object() && evals[e].value("query", "") == expected_queries[i]) {
                chosen[i] = static_cast<int>(e);
                consumed[e] = true;
                break;
            }
        }
    }
    for (std::size_t i = 0; i < expected_queries.size(); ++i) {
        if (chosen[i] >= 0) continue;
        if (i < evals.size() && !consumed[i]) {
            chosen[i] = static_cast<int>(i);
            consumed[i] = true;
            continue;
        }
        for (std::size_t e = 0; e < evals.size(); ++e) {
            if (!consumed[e]) {
                chosen[i] = static_cast<int>(e);
                consumed[e] = true;
                break;
            }
        }
        if (chosen[i] < 0) {
            throw Error(ErrorKind::missing_evaluation,
                        "judge returned no evaluation for query \"" + expected_queries[i] + "\"");
        }
    }

    std::vector<QrasResult> results;
    results.reserve(expected_queries.size());
    for (std::size_t i = 0; i < expected_queries.size(); ++i) {
        const json& e = evals[static_cast<std::size_t>(chosen[i])];
        if (!e.is_object() || !e.contains("dimension_scores") ||
            !e["dimension_scores"].is_object()) {
            throw Error(ErrorKind::missing_evaluation, "evaluation for query \"" +
                                                           expected_queries[i] +
                                                           "\" lacks dimension_scores");
        }
        const json& dims = e["dimension_scores"];
        QrasResult r;
        r.query = expected_queries[i];
        r.dims.topical_relevance =
            clamp_round_dim(dims.value("topical_relevance", json()), r.query, "topical_relevance");
        r.dims.info_density =
            clamp_round_dim(dims.value("info_density", json()), r.query, "info_density");
        r.dims.noise_level =
            clamp_round_dim(dims.value("noise_level", json()), r.query, "noise_level");
        r.overall =
            (r.dims.topical_relevance + r.dims.info_density + r.dims.noise_level) / 3.0;
        r.analysis = e.value("analysis", "");
        if (e.contains("overall_relevance_score") && e["overall_relevance_score"].is_number()) {
            r.judge_reported_overall = e["overall_relevance_score"].get<double>();
        }
        results.push_back(std::move(r));
    }
    return results;
}

QrasEvaluator::QrasEvaluator(std::shared_ptr<LlmGateway> gateway, DecodingConfig decoding)
    : gateway_(std::move(gateway)), decoding_(decoding) {
    if (!gateway_) throw Error(ErrorKind::config, "evaluator requires a gateway");
    register_qras_schema(*gateway_);
}

std::vector<QrasResult> QrasEvaluator::score_batch(const std::vector<JudgeItem>& items) {
    if (items.empty()) return {};
    auto messages = build_judge_prompt(items);
    json raw = gateway_->complete_json(messages, decoding_, kQrasSchemaId);
    std::vector<std::string> expected;
    expected.reserve(items.size());
    for (const auto& item : items) expected.push_back(item.query);
    return parse_evaluations(raw, expected);
}

}  // namespace wedas
