#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wedas/common.hpp"
#include "wedas/error.hpp"
#include "wedas/llm_gateway.hpp"
#include "wedas/probe_engine.hpp"
#include "wedas/qras.hpp"
#include "wedas/search_env.hpp"

namespace wedas {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Task {
    std::string task_id;
    std::string prompt;  // must be non-empty
    std::optional<std::string> ground_truth;
};

struct SubQuestion {
    int index = 0;  // contiguous from 1
    std::string text;
};

enum class ToolMode { baseline, wedas };
std::string to_string(ToolMode mode);
ToolMode tool_mode_from_string(const std::string& s);

enum class ActionKind { search, wedas_search, terminate, answer };
std::string to_string(ActionKind kind);
ActionKind action_kind_from_string(const std::string& s);

enum class Outcome { success, failure, unknown };
std::string to_string(Outcome outcome);
Outcome outcome_from_string(const std::string& s);

struct TrajectoryStep {
    int turn = 0;             // 1-based; steps from one completion share a turn
    std::string reasoning;    // completion text outside tool blocks
    ActionKind action = ActionKind::search;
    nlohmann::json args = nlohmann::json::object();
    std::string observation;       // rendered string as shown to the agent
    std::string observation_text;  // raw snippet-only textualization, for analytics
    std::optional<GuidanceReport> guidance;
    std::int64_t started_at = 0;
    std::int64_t ended_at = 0;
};

struct Trajectory {
    std::string task_id;
    int subquestion_index = 0;
    std::string subquestion;
    std::string method;  // "baseline" or "wedas"
    std::vector<TrajectoryStep> steps;
    std::string summary;
    Outcome outcome = Outcome::unknown;
};

struct AgentLimits {
    int max_turns = 600;
    int max_tool_calls_per_turn = 10;
};

struct FinalAnswer {
    std::string text;
    Outcome outcome = Outcome::unknown;
};

struct RunConfig {
    ToolMode tool_mode = ToolMode::baseline;
    AgentLimits limits;
    ProbeBudget budget;          // used only in wedas mode
    DecodingConfig decoding;
    int search_k = 10;           // default depth when a search call omits "k"
    std::size_t context_char_budget = 0;  // 0 = unlimited
    Clock clock = system_clock_ms;
};

struct PlanResult {
    std::vector<SubQuestion> sub_questions;
    bool degraded = false;  // planner output was unusable; fell back to the raw prompt
};

// ---------------------------------------------------------------------------
// Textual tool-call protocol
// ---------------------------------------------------------------------------

// One fenced block: <tool name="NAME">{json}</tool>. Only complete blocks are
// recognised; everything else in the completion is reasoning text.
struct ToolBlock {
    std::string name;
    std::string payload;  // raw text between the tags, not yet parsed
};

std::vector<ToolBlock> parse_tool_blocks(const std::string& completion_text);

// The completion text with every recognised tool block removed and the
// remainder trimmed — the reasoning c_t recorded on each step of the turn.
std::string strip_tool_blocks(const std::string& completion_text);

// ---------------------------------------------------------------------------
// Rendering (pinned formats; fixtures and logs depend on these bytes)
// ---------------------------------------------------------------------------

std::string render_observation_block(const std::string& query_text, const Observation& obs);
std::string render_guidance_block(const GuidanceReport& report);  // empty when no tuples
std::string render_tool_error(const std::string& tool_name, const std::string& message);
std::string render_cap_notice(int max_tool_calls_per_turn);
std::string render_trajectory_for_summary(const Trajectory& trajectory);

inline constexpr const char* kElisionStub = "[observation elided]";

// Normalized-exact-match grading between an answer and the ground truth.
Outcome grade_answer(const std::string& answer, const std::optional<std::string>& ground_truth);

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

class TrajectoryLog;  // trajectory.hpp

// Plan / act / summarize / synthesize over a search backend and an LLM
// gateway. In wedas mode an internal probe engine built over the same
// search backend and gateway supplies guidance; `evaluator` is required then.
class AgentEngine {
public:
    AgentEngine(std::shared_ptr<LlmGateway> gateway, std::shared_ptr<SearchBackend> search,
                RunConfig config, std::shared_ptr<QrasEvaluator> evaluator = nullptr);

    // Task decomposition. Unusable planner output degrades to one
    // sub-question equal to the raw prompt; gateway errors propagate.
    PlanResult plan(const Task& task);

    // Reason–act loop for one sub-question. Tool failures become observation
    // strings; a completion failure aborts the trajectory (outcome unknown).
    Trajectory reason_act_loop(const SubQuestion& sq, const std::string& task_id = "",
                               TrajectoryLog* log = nullptr);

    // Single completion over the rendered trajectory; empty trajectory yields
    // "" without calling the gateway.
    std::string summarize(const Trajectory& trajectory);

    // Single completion over the task prompt and accumulated knowledge.
    std::string synthesize_answer(const Task& task, const std::vector<std::string>& knowledge);

    // plan -> loop per sub-question -> summarize -> synthesize -> grade. All
    // events stream into `log` (when given) before the call returns.
    std::pair<FinalAnswer, std::vector<Trajectory>> run_task(const Task& task,
                                                             TrajectoryLog* log = nullptr);

    // Completions made by plan/act/summarize/synthesize (excludes probe calls).
    std::int64_t core_completions() const { return core_completions_; }
    const RunConfig& config() const { return config_; }
    LlmGateway& gateway() { return *gateway_; }

private:
    struct LoopResult {
        Trajectory trajectory;
        bool aborted = false;  // completion failure ended the loop early
    };

    LoopResult run_loop(const SubQuestion& sq, const std::string& task_id, TrajectoryLog* log);
    Completion complete_counted(const std::vector<ChatMessage>& messages);
    Observation execute_search(const std::string& query_text, int k,
                               std::optional<GuidanceReport>* guidance_out,
                               const std::string& task_id, int sq_index, int turn,
                               TrajectoryLog* log);

    std::shared_ptr<LlmGateway> gateway_;
    std::shared_ptr<SearchBackend> search_;
    RunConfig config_;
    std::shared_ptr<QrasEvaluator> evaluator_;
    std::unique_ptr<ProbeEngine> probes_;
    std::shared_ptr<std::function<void(const nlohmann::json&)>> probe_route_;
    std::int64_t core_completions_ = 0;
};

}  // namespace wedas
