#include "wedas/agent_core.hpp"

#include <algorithm>
#include <functional>

#include "wedas/prompts.hpp"
#include "wedas/text_metrics.hpp"
#include "wedas/trajectory.hpp"

namespace wedas {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Enum conversions
// ---------------------------------------------------------------------------

std::string to_string(ToolMode mode) {
    return mode == ToolMode::baseline ? "baseline" : "wedas";
}

ToolMode tool_mode_from_string(const std::string& s) {
    if (s == "baseline") return ToolMode::baseline;
    if (s == "wedas") return ToolMode::wedas;
    throw Error(ErrorKind::config, "unknown tool mode: " + s);
}

std::string to_string(ActionKind kind) {
    switch (kind) {
        case ActionKind::search: return "search";
        case ActionKind::wedas_search: return "wedas_search";
        case ActionKind::terminate: return "terminate";
        case ActionKind::answer: return "answer";
    }
    return "search";
}

ActionKind action_kind_from_string(const std::string& s) {
    if (s == "search") return ActionKind::search;
    if (s == "wedas_search") return ActionKind::wedas_search;
    if (s == "terminate") return ActionKind::terminate;
    if (s == "answer") return ActionKind::answer;
    throw Error(ErrorKind::config, "unknown action kind: " + s);
}

std::string to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::success: return "success";
        case Outcome::failure: return "failure";
        case Outcome::unknown: return "unknown";
    }
    return "unknown";
}

Outcome outcome_from_string(const std::string& s) {
    if (s == "success") return Outcome::success;
    if (s == "failure") return Outcome::failure;
    if (s == "unknown") return Outcome::unknown;
    throw Error(ErrorKind::config, "unknown outcome: " + s);
}

// ---------------------------------------------------------------------------
// Tool-block parsing
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kOpenPrefix = "<tool name=\"";
constexpr const char* kCloseTag = "</tool>";

struct BlockSpan {
    std::size_t begin = 0;  // start of the opening tag
    std::size_t end = 0;    // one past the closing tag
    ToolBlock block;
};

std::vector<BlockSpan> scan_blocks(const std::string& text) {
    std::vector<BlockSpan> spans;
    const std::string open(kOpenPrefix);
    const std::string close(kCloseTag);
    std::size_t pos = 0;
    while (true) {
        std::size_t start = text.find(open, pos);
        if (start == std::string::npos) break;
        std::size_t name_end = text.find('"', start + open.size());
        if (name_end == std::string::npos) break;
        if (name_end + 1 >= text.size() || text[name_end + 1] != '>') {
            pos = start + open.size();
            continue;
        }
        std::size_t body_start = name_end + 2;
        std::size_t body_end = text.find(close, body_start);
        if (body_end == std::string::npos) break;  // unterminated block: not a call
        BlockSpan span;
        span.begin = start;
        span.end = body_end + close.size();
        span.block.name = text.substr(start + open.size(), name_end - start - open.size());
        span.block.payload = text.substr(body_start, body_end - body_start);
        spans.push_back(std::move(span));
        pos = body_end + close.size();
    }
    return spans;
}

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<ToolBlock> parse_tool_blocks(const std::string& completion_text) {
    std::vector<ToolBlock> blocks;
    for (auto& span : scan_blocks(completion_text)) blocks.push_back(std::move(span.block));
    return blocks;
}

std::string strip_tool_blocks(const std::string& completion_text) {
    std::string out;
    std::size_t pos = 0;
    for (const auto& span : scan_blocks(completion_text)) {
        out += completion_text.substr(pos, span.begin - pos);
        pos = span.end;
    }
    out += completion_text.substr(pos);
    return trim_copy(out);
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

std::string render_observation_block(const std::string& query_text, const Observation& obs) {
    std::string head = "OBSERVATION (search \"" + query_text + "\")";
    if (obs.documents.empty()) return head + ": no results";
    return head + ":\n" + textualize(obs, true).text;
}

std::string render_guidance_block(const GuidanceReport& report) {
    if (report.tuples.empty()) return "";
    std::vector<ProbeTuple> ordered = report.tuples;
    std::sort(ordered.begin(), ordered.end(), [](const ProbeTuple& a, const ProbeTuple& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.iteration != b.iteration) return a.iteration < b.iteration;
        return a.query < b.query;
    });
    std::string out = "SEARCH GUIDANCE (not evidence):";
    for (const auto& t : ordered) {
        out += "\n- query=\"" + t.query + "\" score=" + json(t.score).dump() + " analysis=\"" +
               t.analysis + "\"";
    }
    return out;
}

std::string render_tool_error(const std::string& tool_name, const std::string& message) {
    return "TOOL ERROR (" + tool_name + "): " + message;
}

std::string render_cap_notice(int max_tool_calls_per_turn) {
    return "TOOL LIMIT: at most " + std::to_string(max_tool_calls_per_turn) +
           " tool calls per turn; this call was not executed.";
}

std::string render_trajectory_for_summary(const Trajectory& trajectory) {
    std::string out = "SUB-QUESTION: " + trajectory.subquestion;
    for (const auto& s : trajectory.steps) {
        out += "\nTURN " + std::to_string(s.turn) + " ACTION " + to_string(s.action) + " " +
               s.args.dump();
        if (!s.observation.empty()) out += "\n" + s.observation;
    }
    return out;
}

Outcome grade_answer(const std::string& answer, const std::optional<std::string>& ground_truth) {
    if (!ground_truth.has_value()) return Outcome::unknown;
    return normalize(answer).normalized == normalize(*ground_truth).normalized
               ? Outcome::success
               : Outcome::failure;
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

AgentEngine::AgentEngine(std::shared_ptr<LlmGateway> gateway, std::shared_ptr<SearchBackend> search,
                         RunConfig config, std::shared_ptr<QrasEvaluator> evaluator)
    : gateway_(std::move(gateway)),
      search_(std::move(search)),
      config_(std::move(config)),
      evaluator_(std::move(evaluator)) {
    if (!gateway_ || !search_) {
        throw Error(ErrorKind::config, "agent engine needs a gateway and a search backend");
    }
    if (config_.limits.max_turns <= 0 || config_.limits.max_tool_calls_per_turn <= 0) {
        throw Error(ErrorKind::config, "agent limits must be positive");
    }
    if (!config_.clock) config_.clock = system_clock_ms;
    if (config_.tool_mode == ToolMode::wedas) {
        if (!evaluator_) {
            throw Error(ErrorKind::config, "wedas tool mode requires a relevance evaluator");
        }
        probe_route_ = std::make_shared<std::function<void(const json&)>>();
        auto route = probe_route_;
        probes_ = std::make_unique<ProbeEngine>(
            search_, gateway_, evaluator_, config_.decoding,
            [route](const json& event) {
                if (*route) (*route)(event);
            });
    }
}

Completion AgentEngine::complete_counted(const std::vector<ChatMessage>& messages) {
    ++core_completions_;
    return gateway_->complete(messages, config_.decoding);
}

PlanResult AgentEngine::plan(const Task& task) {
    if (task.prompt.empty()) throw Error(ErrorKind::config, "task prompt must be non-empty");
    std::vector<ChatMessage> messages = {system_msg(std::string(prompts::planner_system_v1())),
                                         user_msg(task.prompt)};
    Completion completion = complete_counted(messages);

    PlanResult result;
    auto extracted = extract_first_json_object(completion.text);
    if (extracted && extracted->is_object() && extracted->contains("sub_questions") &&
        (*extracted)["sub_questions"].is_array()) {
        std::vector<SubQuestion> sqs;
        bool ok = true;
        for (const auto& item : (*extracted)["sub_questions"]) {
            if (!item.is_string() || item.get<std::string>().empty()) {
                ok = false;
                break;
            }
            sqs.push_back({static_cast<int>(sqs.size()) + 1, item.get<std::string>()});
        }
        if (ok && !sqs.empty()) {
            result.sub_questions = std::move(sqs);
            return result;
        }
    }
    result.sub_questions = {{1, task.prompt}};
    result.degraded = true;
    return result;
}

Observation AgentEngine::execute_search(const std::string& query_text, int k,
                                        std::optional<GuidanceReport>* guidance_out,
                                        const std::string& task_id, int sq_index, int turn,
                                        TrajectoryLog* log) {
    SearchQuery query{query_text, k};
    if (config_.tool_mode == ToolMode::baseline) {
        guidance_out->reset();
        return search_->search(query);
    }
    *probe_route_ = [log, task_id, sq_index, turn](const json& event) {
        if (log) log->append(probe_event(task_id, sq_index, turn, event));
    };
    auto [obs, report] = probes_->wedas_search(query, config_.budget);
    *probe_route_ = nullptr;
    *guidance_out = std::move(report);
    return obs;
}

Trajectory AgentEngine::reason_act_loop(const SubQuestion& sq, const std::string& task_id,
                                        TrajectoryLog* log) {
    return run_loop(sq, task_id, log).trajectory;
}

AgentEngine::LoopResult AgentEngine::run_loop(const SubQuestion& sq, const std::string& task_id,
                                              TrajectoryLog* log) {
    LoopResult result;
    Trajectory& traj = result.trajectory;
    traj.task_id = task_id;
    traj.subquestion_index = sq.index;
    traj.subquestion = sq.text;
    traj.method = to_string(config_.tool_mode);

    struct Segment {
        enum Kind { observation, guidance, notice } kind = observation;
        std::string text;
        bool elided = false;
    };
    struct TurnRecord {
        std::string assistant;
        std::vector<Segment> segments;
    };
    std::vector<TurnRecord> turns;

    auto render_user_turn = [](const TurnRecord& t) {
        std::string out;
        for (const auto& s : t.segments) {
            if (!out.empty()) out += "\n\n";
            out += s.elided ? std::string(kElisionStub) : s.text;
        }
        return out;
    };
    auto build_messages = [&]() {
        std::vector<ChatMessage> messages;
        messages.push_back(system_msg(std::string(prompts::actor_system_v1())));
        messages.push_back(user_msg("SUB-QUESTION: " + sq.text));
        for (const auto& t : turns) {
            messages.push_back(assistant_msg(t.assistant));
            messages.push_back(user_msg(render_user_turn(t)));
        }
        return messages;
    };
    // Oldest observations collapse to a stub when the rendered context exceeds
    // the character budget; the sub-question and guidance are never elided.
    auto apply_elision = [&]() {
        if (config_.context_char_budget == 0) return;
        auto total_chars = [&]() {
            std::size_t n = 0;
            for (const auto& m : build_messages()) n += m.content.size();
            return n;
        };
        while (total_chars() > config_.context_char_budget) {
            Segment* oldest = nullptr;
            for (auto& t : turns) {
                for (auto& s : t.segments) {
                    if (s.kind == Segment::observation && !s.elided) {
                        oldest = &s;
                        break;
                    }
                }
                if (oldest) break;
            }
            if (!oldest) break;
            oldest->elided = true;
        }
    };

    auto record_step = [&](TrajectoryStep step) {
        if (log) log->append(step_event(task_id, sq.index, step));
        traj.steps.push_back(std::move(step));
    };

    bool ended = false;
    for (int turn = 1; turn <= config_.limits.max_turns && !ended; ++turn) {
        apply_elision();
        Completion completion;
        try {
            completion = complete_counted(build_messages());
        } catch (const Error&) {
            result.aborted = true;
            return result;
        }

        auto blocks = parse_tool_blocks(completion.text);
        std::string reasoning = strip_tool_blocks(completion.text);
        TurnRecord record;
        record.assistant = completion.text;

        if (blocks.empty()) {
            // A completion without tool calls is the final answer for this
            // sub-question.
            TrajectoryStep step;
            step.turn = turn;
            step.reasoning = reasoning;
            step.action = ActionKind::answer;
            step.args = json{{"text", reasoning}};
            step.started_at = config_.clock();
            step.ended_at = step.started_at;
            record_step(std::move(step));
            turns.push_back(std::move(record));
            ended = true;
            break;
        }

        int executed = 0;
        for (const auto& block : blocks) {
            ActionKind kind;
            try {
                kind = action_kind_from_string(block.name);
            } catch (const Error&) {
                record.segments.push_back(
                    {Segment::notice,
                     render_tool_error(block.name,
                                       "unknown tool; available tools: search, wedas_search, "
                                       "answer, terminate"),
                     false});
                continue;
            }

            json args;
            std::string args_error;
            try {
                args = json::parse(block.payload);
                if (!args.is_object()) {
                    args = json{{"raw", block.payload}};
                    args_error = "arguments must be a JSON object";
                }
            } catch (const json::exception& e) {
                args = json{{"raw", block.payload}};
                args_error = std::string("invalid JSON arguments: ") + e.what();
            }

            TrajectoryStep step;
            step.turn = turn;
            step.reasoning = reasoning;
            step.action = kind;
            step.args = args;
            step.started_at = config_.clock();

            if (executed >= config_.limits.max_tool_calls_per_turn) {
                step.observation = render_cap_notice(config_.limits.max_tool_calls_per_turn);
                step.ended_at = config_.clock();
                record.segments.push_back({Segment::notice, step.observation, false});
                record_step(std::move(step));
                continue;
            }
            ++executed;

            if (!args_error.empty()) {
                step.observation = render_tool_error(block.name, args_error);
                step.ended_at = config_.clock();
                record.segments.push_back({Segment::notice, step.observation, false});
                record_step(std::move(step));
                continue;
            }

            if (kind == ActionKind::terminate) {
                step.ended_at = config_.clock();
                record_step(std::move(step));
                ended = true;
                break;
            }

            if (kind == ActionKind::answer) {
                if (!args.contains("text") || !args["text"].is_string() ||
                    args["text"].get<std::string>().empty()) {
                    step.observation = render_tool_error(
                        block.name, "arguments must provide a non-empty string \"text\"");
                    step.ended_at = config_.clock();
                    record.segments.push_back({Segment::notice, step.observation, false});
                    record_step(std::move(step));
                    continue;
                }
                step.ended_at = config_.clock();
                record_step(std::move(step));
                ended = true;
                break;
            }

            // search / wedas_search
            if (!args.contains("q") || !args["q"].is_string() ||
                args["q"].get<std::string>().empty()) {
                step.observation =
                    render_tool_error(block.name, "arguments must provide a non-empty string \"q\"");
                step.ended_at = config_.clock();
                record.segments.push_back({Segment::notice, step.observation, false});
                record_step(std::move(step));
                continue;
            }
            int k = config_.search_k;
            if (args.contains("k")) {
                if (!args["k"].is_number_integer() || args["k"].get<int>() < 1) {
                    step.observation = render_tool_error(
                        block.name, "argument \"k\" must be a positive integer");
                    step.ended_at = config_.clock();
                    record.segments.push_back({Segment::notice, step.observation, false});
                    record_step(std::move(step));
                    continue;
                }
                k = args["k"].get<int>();
            }
            std::string query_text = args["q"].get<std::string>();
            try {
                std::optional<GuidanceReport> guidance;
                Observation obs =
                    execute_search(query_text, k, &guidance, task_id, sq.index, turn, log);
                step.observation = render_observation_block(query_text, obs);
                step.observation_text = textualize(obs).text;
                step.guidance = std::move(guidance);
                record.segments.push_back({Segment::observation, step.observation, false});
                if (step.guidance) {
                    std::string block_text = render_guidance_block(*step.guidance);
                    if (!block_text.empty()) {
                        record.segments.push_back({Segment::guidance, block_text, false});
                    }
                }
            } catch (const Error& e) {
                step.observation = render_tool_error(block.name, e.what());
                record.segments.push_back({Segment::notice, step.observation, false});
            }
            step.ended_at = config_.clock();
            record_step(std::move(step));
        }
        turns.push_back(std::move(record));
    }
    return result;
}

std::string AgentEngine::summarize(const Trajectory& trajectory) {
    if (trajectory.steps.empty()) return "";
    std::vector<ChatMessage> messages = {system_msg(std::string(prompts::summarizer_system_v1())),
                                         user_msg(render_trajectory_for_summary(trajectory))};
    return complete_counted(messages).text;
}

std::string AgentEngine::synthesize_answer(const Task& task,
                                           const std::vector<std::string>& knowledge) {
    std::vector<ChatMessage> messages = {
        system_msg(std::string(prompts::synthesizer_system_v1())),
        user_msg(json{{"task", task.prompt}, {"knowledge", knowledge}}.dump())};
    return complete_counted(messages).text;
}

std::pair<FinalAnswer, std::vector<Trajectory>> AgentEngine::run_task(const Task& task,
                                                                      TrajectoryLog* log) {
    std::int64_t completions_before = core_completions_;
    PlanResult planned = plan(task);
    if (log) {
        log->append(plan_event(task.task_id, planned.sub_questions, config_.tool_mode,
                               planned.degraded));
    }

    std::vector<Trajectory> trajectories;
    std::vector<bool> aborted;
    std::vector<std::string> knowledge;
    for (const auto& sq : planned.sub_questions) {
        LoopResult loop = run_loop(sq, task.task_id, log);
        bool failed = loop.aborted;
        if (!failed) {
            try {
                loop.trajectory.summary = summarize(loop.trajectory);
            } catch (const Error&) {
                failed = true;
            }
        }
        if (!failed) {
            knowledge.push_back(loop.trajectory.summary);
            if (log) log->append(summary_event(task.task_id, sq.index, loop.trajectory.summary));
        }
        aborted.push_back(failed);
        trajectories.push_back(std::move(loop.trajectory));
    }

    FinalAnswer answer;
    answer.text = synthesize_answer(task, knowledge);
    answer.outcome = grade_answer(answer.text, task.ground_truth);

    std::vector<Outcome> sq_outcomes;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        trajectories[i].outcome = aborted[i] ? Outcome::unknown : answer.outcome;
        sq_outcomes.push_back(trajectories[i].outcome);
    }
    if (log) log->append(answer_event(task.task_id, answer, sq_outcomes));

    std::int64_t used = core_completions_ - completions_before;
    std::int64_t bound = 1 +
                         static_cast<std::int64_t>(planned.sub_questions.size()) *
                             (static_cast<std::int64_t>(config_.limits.max_turns) + 1) +
                         1;
    if (used > bound) {
        throw Error(ErrorKind::internal, "completion budget exceeded: used " +
                                             std::to_string(used) + " of " +
                                             std::to_string(bound));
    }
    return {std::move(answer), std::move(trajectories)};
}

}  // namespace wedas
