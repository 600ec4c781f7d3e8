#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wedas/agent_core.hpp"
#include "wedas/text_metrics.hpp"

namespace wedas {

// ---------------------------------------------------------------------------
// Trajectory loading
// ---------------------------------------------------------------------------

struct LoadResult {
    std::vector<Trajectory> trajectories;
    std::size_t malformed = 0;  // unparseable lines plus unusable events, all skipped
    std::size_t files_read = 0;
};

// Reads every .jsonl file in a directory (sorted by filename). Malformed
// content is counted and skipped, never fatal.
LoadResult load_trajectories(const std::string& dir);

// ---------------------------------------------------------------------------
// Alignment split and aggregates
// ---------------------------------------------------------------------------

struct OutcomeSplit {
    std::vector<AlignmentTriple> success;
    std::vector<AlignmentTriple> failure;
    std::size_t excluded_unknown = 0;  // unknown-outcome trajectories left out
};

// Every search step of a graded trajectory contributes one triple between its
// query and its observation text; idf statistics are fitted over all analyzed
// observation texts.
OutcomeSplit split_by_outcome(const std::vector<Trajectory>& trajectories);

inline constexpr int kHistogramBins = 20;  // uniform over [0,1]

struct Histogram {
    std::array<std::size_t, kHistogramBins> bins{};
};

struct OutcomeStats {
    std::size_t count = 0;
    double tfidf_mean = 0.0;
    double jaccard_mean = 0.0;
    double nls_mean = 0.0;
    Histogram tfidf_hist;
    Histogram jaccard_hist;
    Histogram nls_hist;
};

struct MetricSummary {
    OutcomeStats success;
    OutcomeStats failure;
    std::size_t excluded_unknown = 0;
};

// Deterministic and invariant under input order (triples are sorted before
// the reduction).
MetricSummary summarize_metrics(const OutcomeSplit& split);

// CSV exports, full double precision (shortest round-trip form).
//   histogram: method,outcome,metric,bin_lo,bin_hi,count
//   means:     method,outcome,tfidf_mean,jaccard_mean,nls_mean
std::string histogram_csv(const std::vector<std::pair<std::string, MetricSummary>>& by_method);
std::string means_csv(const std::vector<std::pair<std::string, MetricSummary>>& by_method);

// Plain-text rendering of the means (three decimals), one row per
// method/outcome pair, matching the CSV aggregates.
std::string render_means_table(const std::vector<std::pair<std::string, MetricSummary>>& by_method);

// ---------------------------------------------------------------------------
// pass@k
// ---------------------------------------------------------------------------

struct PassAtK {
    int k = 1;
    int n_trials = 0;
    double value = 0.0;
};

// `results` holds one row per task, each row the per-trial success flags (all
// rows equally long). pass@1 is the mean per-trial success rate; for k > 1 a
// task counts when any of its first k trials succeeded.
PassAtK pass_at_k(const std::vector<std::vector<bool>>& results, int k);

// ---------------------------------------------------------------------------
// Probe-iteration ablation
// ---------------------------------------------------------------------------

struct AblationRow {
    int t_iterations = 0;
    double pass1_percent = 0.0;
    double pass3_percent = 0.0;
};

// Runs one trial: returns task success. Thrown exceptions are recorded as
// failures and the harness continues.
using TaskRunner = std::function<bool(const Task& task, int t_iterations, int trial_index)>;

std::vector<AblationRow> ablation_harness(const std::vector<Task>& tasks,
                                          const std::vector<int>& t_values,
                                          const TaskRunner& runner, int n_trials = 3);

std::string render_ablation_table(const std::vector<AblationRow>& rows);

// ---------------------------------------------------------------------------
// Information-gain toy model
// ---------------------------------------------------------------------------

// Exactly enumerable joint model over (state, relevance, observation):
//   P(a, z, o) = prior[a] * P(z|a) * P(o|z, a).
struct ToyModel {
    struct Query {
        std::string name;
        std::vector<double> p_rel_given_state;                    // [state] = P(z=1|a)
        std::vector<std::vector<std::vector<double>>> p_obs;      // [z][state][obs] = P(o|z,a)
    };
    std::string name;
    std::vector<double> prior;  // over the answer states
    int n_observations = 0;
    double delta_max = 0.0;
    std::vector<Query> queries;
};

ToyModel toy_model_from_json(const nlohmann::json& j);
ToyModel load_toy_model(const std::string& path);

struct EigQueryResult {
    std::string name;
    double eig = 0.0;                 // exact E_o[KL(posterior || prior)], natural log
    double expected_relevance = 0.0;  // E_o[P(z=1|o)]
    double bound = 0.0;               // delta_max * expected_relevance
    bool holds = false;               // eig <= bound + 1e-9
};

struct EigReport {
    std::string model_name;
    std::vector<EigQueryResult> queries;
    bool all_hold = false;
};

// Validates the model's assumptions first (irrelevant observations must not
// shift the posterior; every relevant-shift is capped by delta_max), then
// checks the bound by exact enumeration.
EigReport eig_bound_check(const ToyModel& model);

std::string render_eig_report(const EigReport& report);

}  // namespace wedas
