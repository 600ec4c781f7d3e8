#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "wedas/llm_gateway.hpp"
#include "wedas/search_env.hpp"

namespace wedas {

// Integer sub-scores in [0,10]. All three are higher-is-better: noise_level 0
// means pure noise and 10 means zero noise.
struct DimensionScores {
    int topical_relevance = 0;
    int info_density = 0;
    int noise_level = 0;
};

struct QrasResult {
    std::string query;
    double overall = 0.0;  // always the exact unweighted mean of the three sub-scores
    DimensionScores dims;
    std::string analysis;
    double judge_reported_overall = 0.0;  // what the judge claimed; logged, never used
};

struct JudgeItem {
    std::string query;
    Observation observation;
};

// Schema id under which the judge output validator is registered.
inline constexpr const char* kQrasSchemaId = "qras_evaluations_v1";

// System message is the versioned judge prompt; user message is a JSON array
// of {"query", "results": [{title, snippet, url}]} in input order.
std::vector<ChatMessage> build_judge_prompt(const std::vector<JudgeItem>& items);

// Registers the judge output validator on a gateway under kQrasSchemaId.
void register_qras_schema(LlmGateway& gateway);

// Aligns judge output to the expected queries (exact query echo first, then
// positional fallback), clamps and rounds sub-scores, and recomputes the
// overall locally — the judge-reported overall is retained for logging only.
std::vector<QrasResult> parse_evaluations(const nlohmann::json& raw,
                                          const std::vector<std::string>& expected_queries);

class QrasEvaluator {
public:
    explicit QrasEvaluator(std::shared_ptr<LlmGateway> gateway, DecodingConfig decoding = {});

    // One result per item, in input order. Empty observations are still
    // scored: the judge sees an empty results array.
    std::vector<QrasResult> score_batch(const std::vector<JudgeItem>& items);

    LlmGateway& gateway() { return *gateway_; }

private:
    std::shared_ptr<LlmGateway> gateway_;
    DecodingConfig decoding_;
};

}  // namespace wedas
