#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wedas/qras.hpp"
#include "wedas/search_env.hpp"

namespace wedas {

// A scored probe: the query, the relevance score that produced it, the
// judge's analysis, and the iteration that created it. Probes are guidance
// about how to search — they never carry result snippets and are never
// evidence.
struct ProbeTuple {
    std::string query;
    double score = 0.0;  // the recomputed overall from scoring
    std::string analysis;
    int iteration = 0;  // 1-based creating iteration
    DimensionScores dims;
};

// Live probe set plus an audit trail of everything ever dropped. The dynamic
// threshold is the minimum score among live tuples.
class ProbeSet {
public:
    const std::vector<ProbeTuple>& live() const { return live_; }
    const std::vector<ProbeTuple>& dropped() const { return dropped_; }

    bool contains_query(const std::string& query) const;  // live or dropped
    void add(ProbeTuple tuple);                           // rejects duplicate live queries

    // Moves the lowest-scored live tuple (ties: oldest iteration, then
    // lexicographically smallest query) to the audit trail. No-op when empty.
    std::optional<ProbeTuple> drop_min();

    std::optional<double> threshold() const;  // min live score; empty set has none
    std::size_t total_created() const { return live_.size() + dropped_.size(); }
    int max_iteration() const;

private:
    std::vector<ProbeTuple> live_;
    std::vector<ProbeTuple> dropped_;
};

struct GuidanceReport {
    std::string origin_query;
    std::vector<ProbeTuple> tuples;  // live set at termination, score-descending
    int iterations_run = 0;
    bool terminated_early = false;
    bool degraded = false;  // probing failed wholesale; guidance may be partial or empty
};

struct ProbeBudget {
    int max_iterations = 1;              // T; 0 disables probing entirely
    int max_candidates_per_iteration = 5;  // batch cap, valid range [2,5]
};

// Strict-threshold filter: keeps candidates with score > tau, stable order.
std::vector<std::pair<std::string, double>> prune_by_threshold(
    const std::vector<std::pair<std::string, double>>& candidates, double tau);

// Schema id for the candidate generator's structured output.
inline constexpr const char* kProbeCandidatesSchemaId = "probe_candidates_v1";

// Sink for probe trace events, one JSON object per append/drop.
using ProbeEventSink = std::function<void(const nlohmann::json&)>;

class ProbeEngine {
public:
    ProbeEngine(std::shared_ptr<SearchBackend> search, std::shared_ptr<LlmGateway> generation,
                std::shared_ptr<QrasEvaluator> evaluator, DecodingConfig decoding = {},
                ProbeEventSink sink = nullptr);

    // Asks the generator for derived queries given the origin query and its
    // results; enforces the 6-word limit, drops empties, deduplicates against
    // the origin query and all existing probes, and truncates to the batch cap.
    // An empty list is a valid prune signal.
    std::vector<std::string> generate_candidates(const std::string& q0, const ProbeSet& set,
                                                 const Observation& last_obs,
                                                 const ProbeBudget& budget);

    // One probing step: generate, search and score every candidate (a failed
    // search skips that candidate with a warning), append all, then exactly
    // one drop-min. Zero candidates leave the set unchanged (a prune step).
    ProbeSet probe_iteration(const std::string& q0, ProbeSet set, const ProbeBudget& budget);

    // Runs at most T iterations, stopping early on a prune. A wholesale
    // iteration failure is logged and yields the partial report, degraded.
    GuidanceReport run_probing(const std::string& q0, const ProbeBudget& budget);

    // Plain search for q0 (failures are fatal) plus guidance from probing
    // (failures degrade to an empty report). With T = 0 the observation is
    // bit-identical to baseline search.
    std::pair<Observation, GuidanceReport> wedas_search(const SearchQuery& q0,
                                                        const ProbeBudget& budget);

    std::size_t validation_rejects() const { return validation_rejects_; }
    std::size_t search_failures() const { return search_failures_; }

private:
    ProbeSet step_with_candidates(ProbeSet set, const std::vector<std::string>& candidates,
                                  int iteration);
    GuidanceReport probe_with_obs(const std::string& q0, const Observation& obs,
                                  const ProbeBudget& budget);
    void emit(const ProbeTuple& tuple, bool dropped);

    std::shared_ptr<SearchBackend> search_;
    std::shared_ptr<LlmGateway> generation_;
    std::shared_ptr<QrasEvaluator> evaluator_;
    DecodingConfig decoding_;
    ProbeEventSink sink_;
    std::size_t validation_rejects_ = 0;
    std::size_t search_failures_ = 0;
};

}  // namespace wedas
