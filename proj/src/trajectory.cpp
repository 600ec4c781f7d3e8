#include "wedas/trajectory.hpp"

#include <map>

namespace wedas {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

json guidance_to_json(const GuidanceReport& report) {
    json tuples = json::array();
    for (const auto& t : report.tuples) {
        tuples.push_back({{"query", t.query},
                          {"score", t.score},
                          {"analysis", t.analysis},
                          {"iteration", t.iteration},
                          {"dims",
                           {{"topical_relevance", t.dims.topical_relevance},
                            {"info_density", t.dims.info_density},
                            {"noise_level", t.dims.noise_level}}}});
    }
    return json{{"origin_query", report.origin_query},
                {"tuples", tuples},
                {"iterations_run", report.iterations_run},
                {"terminated_early", report.terminated_early},
                {"degraded", report.degraded}};
}

GuidanceReport guidance_from_json(const json& j) {
    try {
        GuidanceReport report;
        report.origin_query = j.at("origin_query").get<std::string>();
        for (const auto& t : j.at("tuples")) {
            ProbeTuple tuple;
            tuple.query = t.at("query").get<std::string>();
            tuple.score = t.at("score").get<double>();
            tuple.analysis = t.at("analysis").get<std::string>();
            tuple.iteration = t.at("iteration").get<int>();
            const json& dims = t.at("dims");
            tuple.dims.topical_relevance = dims.at("topical_relevance").get<int>();
            tuple.dims.info_density = dims.at("info_density").get<int>();
            tuple.dims.noise_level = dims.at("noise_level").get<int>();
            report.tuples.push_back(std::move(tuple));
        }
        report.iterations_run = j.at("iterations_run").get<int>();
        report.terminated_early = j.at("terminated_early").get<bool>();
        report.degraded = j.at("degraded").get<bool>();
        return report;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("malformed guidance payload: ") + e.what());
    }
}

json step_to_payload(const TrajectoryStep& step) {
    json payload{{"reasoning", step.reasoning}, {"action", to_string(step.action)},
                 {"args", step.args},           {"observation", step.observation},
                 {"otext", step.observation_text}, {"started_at", step.started_at},
                 {"ended_at", step.ended_at}};
    if (step.guidance.has_value()) payload["guidance"] = guidance_to_json(*step.guidance);
    return payload;
}

TrajectoryStep step_from_payload(const json& payload) {
    try {
        TrajectoryStep step;
        step.reasoning = payload.at("reasoning").get<std::string>();
        step.action = action_kind_from_string(payload.at("action").get<std::string>());
        step.args = payload.at("args");
        step.observation = payload.at("observation").get<std::string>();
        step.observation_text = payload.at("otext").get<std::string>();
        step.started_at = payload.at("started_at").get<std::int64_t>();
        step.ended_at = payload.at("ended_at").get<std::int64_t>();
        if (payload.contains("guidance")) step.guidance = guidance_from_json(payload.at("guidance"));
        return step;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("malformed step payload: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------------

namespace {

json event_shell(const char* type, const std::string& task_id, int sq, int turn, json payload) {
    return json{{"type", type},
                {"task_id", task_id},
                {"sq", sq},
                {"turn", turn},
                {"payload", std::move(payload)}};
}

}  // namespace

json plan_event(const std::string& task_id, const std::vector<SubQuestion>& sqs, ToolMode mode,
                bool degraded) {
    json texts = json::array();
    for (const auto& sq : sqs) texts.push_back(sq.text);
    return event_shell("plan", task_id, 0, 0,
                       json{{"sub_questions", std::move(texts)},
                            {"mode", to_string(mode)},
                            {"degraded", degraded}});
}

json step_event(const std::string& task_id, int sq_index, const TrajectoryStep& step) {
    return event_shell("step", task_id, sq_index, step.turn, step_to_payload(step));
}

json probe_event(const std::string& task_id, int sq_index, int turn, const json& engine_event) {
    return event_shell("probe", task_id, sq_index, turn, engine_event);
}

json summary_event(const std::string& task_id, int sq_index, const std::string& text) {
    return event_shell("summary", task_id, sq_index, 0, json{{"text", text}});
}

json answer_event(const std::string& task_id, const FinalAnswer& answer,
                  const std::vector<Outcome>& sq_outcomes) {
    json outcomes = json::array();
    for (const auto& o : sq_outcomes) outcomes.push_back(to_string(o));
    return event_shell("answer", task_id, 0, 0,
                       json{{"text", answer.text},
                            {"outcome", to_string(answer.outcome)},
                            {"sq_outcomes", std::move(outcomes)}});
}

// ---------------------------------------------------------------------------
// Writer
// ---------------------------------------------------------------------------

TrajectoryLog::TrajectoryLog(const std::string& path) : path_(path), out_(path, std::ios::trunc) {
    if (!out_) throw Error(ErrorKind::io, "cannot open trajectory log for writing: " + path);
}

void TrajectoryLog::append(const json& event) {
    out_ << event.dump() << '\n';
    out_.flush();
    if (!out_) throw Error(ErrorKind::io, "failed writing trajectory log: " + path_);
}

// ---------------------------------------------------------------------------
// Reader
// ---------------------------------------------------------------------------

std::vector<json> read_event_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open trajectory log for reading: " + path);
    std::vector<json> events;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json event = json::parse(line, nullptr, false);
        if (event.is_discarded() || !event.is_object() || !event.contains("type") ||
            !event["type"].is_string()) {
            throw Error(ErrorKind::config,
                        path + ": line " + std::to_string(line_no) + " is not a trajectory event");
        }
        events.push_back(std::move(event));
    }
    return events;
}

TaskRecord assemble_task_record(const std::vector<json>& events, std::size_t* skipped) {
    TaskRecord record;
    std::map<int, Trajectory> by_sq;
    for (const auto& event : events) {
        try {
            const std::string type = event.at("type").get<std::string>();
            const std::string task_id = event.at("task_id").get<std::string>();
            if (record.task_id.empty()) record.task_id = task_id;
            const int sq = event.at("sq").get<int>();
            const json& payload = event.at("payload");
            if (type == "plan") {
                record.mode = payload.at("mode").get<std::string>();
                record.plan_degraded = payload.at("degraded").get<bool>();
                for (const auto& text : payload.at("sub_questions")) {
                    record.planned_sub_questions.push_back(text.get<std::string>());
                }
            } else if (type == "step") {
                TrajectoryStep step = step_from_payload(payload);
                step.turn = event.at("turn").get<int>();
                by_sq[sq].steps.push_back(std::move(step));
            } else if (type == "probe") {
                record.probe_events.push_back(event);
            } else if (type == "summary") {
                by_sq[sq].summary = payload.at("text").get<std::string>();
            } else if (type == "answer") {
                record.has_answer = true;
                record.answer.text = payload.at("text").get<std::string>();
                record.answer.outcome =
                    outcome_from_string(payload.at("outcome").get<std::string>());
                if (payload.contains("sq_outcomes")) {
                    int index = 1;
                    for (const auto& o : payload.at("sq_outcomes")) {
                        by_sq[index].outcome = outcome_from_string(o.get<std::string>());
                        ++index;
                    }
                }
            } else {
                throw Error(ErrorKind::config, "unknown trajectory event type: " + type);
            }
        } catch (const json::exception& e) {
            if (skipped) {
                ++*skipped;
                continue;
            }
            throw Error(ErrorKind::config, std::string("malformed trajectory event: ") + e.what());
        } catch (const Error&) {
            if (skipped) {
                ++*skipped;
                continue;
            }
            throw;
        }
    }
    for (auto& [index, trajectory] : by_sq) {
        trajectory.task_id = record.task_id;
        trajectory.subquestion_index = index;
        if (index >= 1 &&
            index <= static_cast<int>(record.planned_sub_questions.size())) {
            trajectory.subquestion = record.planned_sub_questions[index - 1];
        }
        trajectory.method = record.mode;
        record.trajectories.push_back(std::move(trajectory));
    }
    return record;
}

}  // namespace wedas
