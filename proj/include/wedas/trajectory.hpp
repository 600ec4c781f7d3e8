#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wedas/agent_core.hpp"

namespace wedas {

// ---------------------------------------------------------------------------
// Event construction — one JSON object per line, shape:
//   {"type": "plan"|"step"|"probe"|"summary"|"answer",
//    "task_id": string, "sq": int, "turn": int, "payload": object}
// ---------------------------------------------------------------------------

nlohmann::json guidance_to_json(const GuidanceReport& report);
GuidanceReport guidance_from_json(const nlohmann::json& j);

nlohmann::json step_to_payload(const TrajectoryStep& step);
TrajectoryStep step_from_payload(const nlohmann::json& payload);

nlohmann::json plan_event(const std::string& task_id, const std::vector<SubQuestion>& sqs,
                          ToolMode mode, bool degraded);
nlohmann::json step_event(const std::string& task_id, int sq_index, const TrajectoryStep& step);
nlohmann::json probe_event(const std::string& task_id, int sq_index, int turn,
                           const nlohmann::json& engine_event);
nlohmann::json summary_event(const std::string& task_id, int sq_index, const std::string& text);
nlohmann::json answer_event(const std::string& task_id, const FinalAnswer& answer,
                            const std::vector<Outcome>& sq_outcomes);

// ---------------------------------------------------------------------------
// Writer — append-only, one flushed line per event.
// ---------------------------------------------------------------------------

class TrajectoryLog {
public:
    explicit TrajectoryLog(const std::string& path);  // truncates, then append-only
    void append(const nlohmann::json& event);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Reader
// ---------------------------------------------------------------------------

// Strict line-by-line parse; blank lines are skipped, a malformed line is a
// parse error naming the line number.
std::vector<nlohmann::json> read_event_lines(const std::string& path);

// Everything one task's log file holds, reassembled.
struct TaskRecord {
    std::string task_id;
    std::vector<std::string> planned_sub_questions;
    std::string mode;  // "baseline" or "wedas"
    bool plan_degraded = false;
    std::vector<Trajectory> trajectories;  // ordered by sub-question index
    std::vector<nlohmann::json> probe_events;
    FinalAnswer answer;
    bool has_answer = false;
};

// With `skipped` given, events that fail to assemble are counted and skipped
// instead of aborting the whole record.
TaskRecord assemble_task_record(const std::vector<nlohmann::json>& events,
                                std::size_t* skipped = nullptr);

inline TaskRecord read_task_record(const std::string& path) {
    return assemble_task_record(read_event_lines(path));
}

}  // namespace wedas
