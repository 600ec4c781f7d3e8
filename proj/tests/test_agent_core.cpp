#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

#include <json.hpp>

#include "support/random_gen.hpp"
#include "wedas/agent_core.hpp"
#include "wedas/prompts.hpp"
#include "wedas/trajectory.hpp"

using namespace wedas;
using nlohmann::json;

namespace {

Clock fixed_clock(std::int64_t t) {
    return [t]() { return t; };
}

LocalCorpus single_doc_corpus() {
    return LocalCorpus::from_documents(
        {{"d1", "Lyon guide", "capital of gaul is lyon", "http://x/1"}});
}

LocalCorpus wedas_corpus() {
    return LocalCorpus::from_documents({
        {"d1", "Lyon guide", "capital of gaul is lyon", "http://x/1"},
        {"d2", "Gaul history", "gaul history mentions lyon", "http://x/2"},
        {"d3", "Roman towns", "roman settlements payload lyon", "http://x/3"},
    });
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Wires a scripted gateway, a deterministic local backend, and an engine;
// exposes helpers that rebuild the exact message vectors the engine sends so
// tests can register completion fixtures by fingerprint.
struct AgentFixture {
    std::shared_ptr<LocalSearchBackend> search;
    std::shared_ptr<ScriptedChatBackend> llm;
    std::shared_ptr<LlmGateway> gateway;
    std::shared_ptr<QrasEvaluator> evaluator;
    RunConfig config;
    std::unique_ptr<AgentEngine> engine;

    AgentFixture(LocalCorpus corpus, RunConfig cfg,
                 std::shared_ptr<ScriptedChatBackend> shared_llm = nullptr)
        : config(std::move(cfg)) {
        search = std::make_shared<LocalSearchBackend>(std::move(corpus), fixed_clock(1000));
        llm = shared_llm ? std::move(shared_llm) : std::make_shared<ScriptedChatBackend>();
        gateway = std::make_shared<LlmGateway>(llm);
        evaluator = std::make_shared<QrasEvaluator>(gateway, config.decoding);
        engine = std::make_unique<AgentEngine>(gateway, search, config, evaluator);
    }

    void script(const std::vector<ChatMessage>& messages, const std::string& response) {
        llm->add(fingerprint(messages, config.decoding), response);
    }

    std::vector<ChatMessage> planner_messages(const std::string& prompt) const {
        return {system_msg(std::string(prompts::planner_system_v1())), user_msg(prompt)};
    }

    std::vector<ChatMessage> actor_messages(
        const std::string& sq_text,
        const std::vector<std::pair<std::string, std::string>>& history) const {
        std::vector<ChatMessage> messages = {system_msg(std::string(prompts::actor_system_v1())),
                                             user_msg("SUB-QUESTION: " + sq_text)};
        for (const auto& [assistant, user] : history) {
            messages.push_back(assistant_msg(assistant));
            messages.push_back(user_msg(user));
        }
        return messages;
    }

    std::vector<ChatMessage> summarizer_messages(const std::string& rendered) const {
        return {system_msg(std::string(prompts::summarizer_system_v1())), user_msg(rendered)};
    }

    std::vector<ChatMessage> synthesizer_messages(const std::string& prompt,
                                                  const std::vector<std::string>& knowledge) const {
        return {system_msg(std::string(prompts::synthesizer_system_v1())),
                user_msg(json{{"task", prompt}, {"knowledge", knowledge}}.dump())};
    }

    // Probe fixtures, mirrored from the engine's generator/judge payloads.
    void script_probe_generation(const std::string& q0, const std::vector<std::string>& probed,
                                 const std::vector<std::string>& derived) {
        Observation obs = search->search({q0, 10});
        json results = json::array();
        for (const auto& d : obs.documents) {
            results.push_back({{"title", d.title}, {"snippet", d.snippet}, {"url", d.url}});
        }
        std::vector<ChatMessage> messages = {
            system_msg(std::string(prompts::generator_system_v1())),
            user_msg(json{{"query", q0}, {"results", results}, {"already_probed", probed}}.dump())};
        script(messages, json{{"analysis", "generated"}, {"derived_queries", derived}}.dump());
    }

    void script_probe_judgement(const std::vector<std::pair<std::string, std::array<int, 3>>>& scored) {
        std::vector<JudgeItem> items;
        json evals = json::array();
        for (const auto& [query, dims] : scored) {
            items.push_back({query, search->search({query, 10})});
            evals.push_back(json{{"query", query},
                                 {"overall_relevance_score", (dims[0] + dims[1] + dims[2]) / 3.0},
                                 {"dimension_scores",
                                  {{"topical_relevance", dims[0]},
                                   {"info_density", dims[1]},
                                   {"noise_level", dims[2]}}},
                                 {"analysis", "judged " + query}});
        }
        script(build_judge_prompt(items), json{{"evaluations", evals}}.dump());
    }
};

RunConfig baseline_config() {
    RunConfig cfg;
    cfg.tool_mode = ToolMode::baseline;
    cfg.clock = fixed_clock(777);
    return cfg;
}

RunConfig wedas_config(int t_iterations) {
    RunConfig cfg;
    cfg.tool_mode = ToolMode::wedas;
    cfg.budget.max_iterations = t_iterations;
    cfg.clock = fixed_clock(777);
    return cfg;
}

std::string temp_log_path(const std::string& stem) {
    return "/tmp/wedas_agent_test_" + stem + ".jsonl";
}

const char* kTurn1Search =
    "I will search for this.\n<tool name=\"search\">{\"q\": \"capital of gaul\"}</tool>";
const char* kObs1Literal =
    "OBSERVATION (search \"capital of gaul\"):\nLyon guide\ncapital of gaul is lyon";
const char* kTurn2Answer = "Found it.\n<tool name=\"answer\">{\"text\": \"lyon\"}</tool>";

// Registers the canonical two-turn episode (search, then answer) for the
// given sub-question against the single-doc corpus.
void script_two_turn_episode(AgentFixture& f, const std::string& sq_text) {
    f.script(f.actor_messages(sq_text, {}), kTurn1Search);
    f.script(f.actor_messages(sq_text, {{kTurn1Search, kObs1Literal}}), kTurn2Answer);
}

}  // namespace

// ---------------------------------------------------------------------------
// Protocol parsing
// ---------------------------------------------------------------------------

TEST_CASE("tool blocks parse in order and ignore unterminated ones") {
    std::string text =
        "thinking\n<tool name=\"search\">{\"q\": \"a\"}</tool>\nmore\n"
        "<tool name=\"answer\">{\"text\": \"b\"}</tool>\n"
        "<tool name=\"broken\">{\"x\": 1}";
    auto blocks = parse_tool_blocks(text);
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].name == "search");
    CHECK(blocks[0].payload == "{\"q\": \"a\"}");
    CHECK(blocks[1].name == "answer");
    CHECK(strip_tool_blocks(text) ==
          "thinking\n\nmore\n\n<tool name=\"broken\">{\"x\": 1}");

    CHECK(parse_tool_blocks("no tools here").empty());
    CHECK(strip_tool_blocks("  padded  ") == "padded");
}

TEST_CASE("enum conversions round-trip and reject junk") {
    for (auto kind : {ActionKind::search, ActionKind::wedas_search, ActionKind::terminate,
                      ActionKind::answer}) {
        CHECK(action_kind_from_string(to_string(kind)) == kind);
    }
    for (auto outcome : {Outcome::success, Outcome::failure, Outcome::unknown}) {
        CHECK(outcome_from_string(to_string(outcome)) == outcome);
    }
    for (auto mode : {ToolMode::baseline, ToolMode::wedas}) {
        CHECK(tool_mode_from_string(to_string(mode)) == mode);
    }
    CHECK_THROWS_AS(action_kind_from_string("browse"), Error);
    CHECK_THROWS_AS(outcome_from_string("maybe"), Error);
    CHECK_THROWS_AS(tool_mode_from_string("hybrid"), Error);
}

TEST_CASE("grading is a normalized exact match") {
    CHECK(grade_answer("  Lyon ", std::optional<std::string>("lyon")) == Outcome::success);
    CHECK(grade_answer("LYON", std::optional<std::string>("  lyon")) == Outcome::success);
    // Normalization collapses case and whitespace but keeps punctuation.
    CHECK(grade_answer("lyon.", std::optional<std::string>("lyon")) == Outcome::failure);
    CHECK(grade_answer("paris", std::optional<std::string>("lyon")) == Outcome::failure);
    CHECK(grade_answer("anything", std::nullopt) == Outcome::unknown);
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

TEST_CASE("plan parses sub-questions and degrades on unusable output") {
    AgentFixture f(single_doc_corpus(), baseline_config());

    f.script(f.planner_messages("task one"),
             "{\"sub_questions\": [\"first\", \"second\", \"third\"]}");
    PlanResult three = f.engine->plan({"t", "task one", std::nullopt});
    REQUIRE(three.sub_questions.size() == 3);
    CHECK_FALSE(three.degraded);
    CHECK(three.sub_questions[0].index == 1);
    CHECK(three.sub_questions[1].index == 2);
    CHECK(three.sub_questions[2].index == 3);
    CHECK(three.sub_questions[2].text == "third");

    f.script(f.planner_messages("task two"), "not json at all");
    PlanResult fallback = f.engine->plan({"t", "task two", std::nullopt});
    REQUIRE(fallback.sub_questions.size() == 1);
    CHECK(fallback.sub_questions[0].text == "task two");
    CHECK(fallback.degraded);

    f.script(f.planner_messages("task three"), "{\"sub_questions\": []}");
    CHECK(f.engine->plan({"t", "task three", std::nullopt}).degraded);

    f.script(f.planner_messages("task four"), "{\"sub_questions\": [\"ok\", 7]}");
    CHECK(f.engine->plan({"t", "task four", std::nullopt}).degraded);

    // Gateway errors propagate; invalid tasks are rejected up front.
    CHECK_THROWS_AS(f.engine->plan({"t", "unscripted prompt", std::nullopt}), Error);
    CHECK_THROWS_AS(f.engine->plan({"t", "", std::nullopt}), Error);
}

// ---------------------------------------------------------------------------
// Reason-act loop
// ---------------------------------------------------------------------------

TEST_CASE("a scripted two-turn episode replays against the hand-written trajectory") {
    AgentFixture f(single_doc_corpus(), baseline_config());
    script_two_turn_episode(f, "What is the capital of Gaul?");

    Trajectory t = f.engine->reason_act_loop({1, "What is the capital of Gaul?"}, "t1");
    REQUIRE(t.steps.size() == 2);
    CHECK(t.task_id == "t1");
    CHECK(t.subquestion_index == 1);
    CHECK(t.method == "baseline");

    const TrajectoryStep& s1 = t.steps[0];
    CHECK(s1.turn == 1);
    CHECK(s1.reasoning == "I will search for this.");
    CHECK(s1.action == ActionKind::search);
    CHECK(s1.args == json{{"q", "capital of gaul"}});
    CHECK(s1.observation == kObs1Literal);
    CHECK(s1.observation_text == "capital of gaul is lyon");
    CHECK_FALSE(s1.guidance.has_value());
    CHECK(s1.started_at == 777);
    CHECK(s1.ended_at == 777);

    const TrajectoryStep& s2 = t.steps[1];
    CHECK(s2.turn == 2);
    CHECK(s2.reasoning == "Found it.");
    CHECK(s2.action == ActionKind::answer);
    CHECK(s2.args == json{{"text", "lyon"}});
    CHECK(s2.observation.empty());  // terminal steps carry no observation
    CHECK(s2.observation_text.empty());

    // Summarization over the rendered trajectory.
    std::string rendered =
        "SUB-QUESTION: What is the capital of Gaul?\n"
        "TURN 1 ACTION search {\"q\":\"capital of gaul\"}\n" +
        std::string(kObs1Literal) +
        "\nTURN 2 ACTION answer {\"text\":\"lyon\"}";
    CHECK(render_trajectory_for_summary(t) == rendered);
    f.script(f.summarizer_messages(rendered), "The capital is lyon.");
    CHECK(f.engine->summarize(t) == "The capital is lyon.");
}

TEST_CASE("max_turns caps the loop regardless of what the actor wants") {
    RunConfig cfg = baseline_config();
    cfg.limits.max_turns = 1;
    AgentFixture f(single_doc_corpus(), cfg);
    script_two_turn_episode(f, "q");
    Trajectory t = f.engine->reason_act_loop({1, "q"});
    REQUIRE(t.steps.size() == 1);
    CHECK(t.steps[0].action == ActionKind::search);  // no voluntary terminal step
}

TEST_CASE("the eleventh tool call in a turn is rejected with a cap notice") {
    AgentFixture f(single_doc_corpus(), baseline_config());
    std::string turn1 = "burst";
    std::vector<std::string> observations;
    for (int i = 1; i <= 11; ++i) {
        turn1 += "\n<tool name=\"search\">{\"q\": \"nores zz" + std::to_string(i) + "\"}</tool>";
    }
    for (int i = 1; i <= 10; ++i) {
        // No document matches, so each executed search observes no results.
        observations.push_back("OBSERVATION (search \"nores zz" + std::to_string(i) +
                               "\"): no results");
    }
    observations.push_back(render_cap_notice(10));
    std::string turn1_user;
    for (const auto& o : observations) {
        if (!turn1_user.empty()) turn1_user += "\n\n";
        turn1_user += o;
    }
    f.script(f.actor_messages("q", {}), turn1);
    f.script(f.actor_messages("q", {{turn1, turn1_user}}),
             "<tool name=\"answer\">{\"text\": \"done\"}</tool>");

    Trajectory t = f.engine->reason_act_loop({1, "q"});
    REQUIRE(t.steps.size() == 12);
    for (int i = 0; i < 10; ++i) {
        CHECK(t.steps[i].turn == 1);
        CHECK(t.steps[i].observation == observations[i]);
    }
    CHECK(t.steps[10].observation ==
          "TOOL LIMIT: at most 10 tool calls per turn; this call was not executed.");
    CHECK(t.steps[10].args == json{{"q", "nores zz11"}});
    CHECK(t.steps[11].turn == 2);
    CHECK(t.steps[11].action == ActionKind::answer);
}

TEST_CASE("tool failures become observations the agent can read") {
    AgentFixture f(single_doc_corpus(), baseline_config());

    SUBCASE("malformed JSON arguments") {
        std::string turn1 = "<tool name=\"search\">{not json}</tool>";
        std::string expected_error;
        try {
            json discarded = json::parse(std::string("{not json}"));
            (void)discarded;
        } catch (const json::exception& e) {
            expected_error =
                render_tool_error("search", std::string("invalid JSON arguments: ") + e.what());
        }
        REQUIRE_FALSE(expected_error.empty());
        f.script(f.actor_messages("q", {}), turn1);
        f.script(f.actor_messages("q", {{turn1, expected_error}}),
                 "<tool name=\"answer\">{\"text\": \"done\"}</tool>");
        Trajectory t = f.engine->reason_act_loop({1, "q"});
        REQUIRE(t.steps.size() == 2);
        CHECK(t.steps[0].observation == expected_error);
        CHECK(t.steps[0].args == json{{"raw", "{not json}"}});
        CHECK(t.steps[0].observation_text.empty());
    }

    SUBCASE("unknown tool names produce a notice but no step") {
        std::string turn1 = "<tool name=\"browse\">{}</tool>";
        std::string notice = render_tool_error(
            "browse", "unknown tool; available tools: search, wedas_search, answer, terminate");
        f.script(f.actor_messages("q", {}), turn1);
        f.script(f.actor_messages("q", {{turn1, notice}}),
                 "<tool name=\"answer\">{\"text\": \"done\"}</tool>");
        Trajectory t = f.engine->reason_act_loop({1, "q"});
        REQUIRE(t.steps.size() == 1);
        CHECK(t.steps[0].action == ActionKind::answer);
    }

    SUBCASE("missing q, bad k, and empty answer text") {
        std::string turn1 =
            "<tool name=\"search\">{}</tool>\n"
            "<tool name=\"search\">{\"q\": \"x\", \"k\": 0}</tool>\n"
            "<tool name=\"answer\">{\"text\": \"\"}</tool>";
        std::string u1 = render_tool_error("search",
                                           "arguments must provide a non-empty string \"q\"");
        std::string u2 = render_tool_error("search", "argument \"k\" must be a positive integer");
        std::string u3 = render_tool_error("answer",
                                           "arguments must provide a non-empty string \"text\"");
        f.script(f.actor_messages("q", {}), turn1);
        f.script(f.actor_messages("q", {{turn1, u1 + "\n\n" + u2 + "\n\n" + u3}}),
                 "<tool name=\"terminate\">{}</tool>");
        Trajectory t = f.engine->reason_act_loop({1, "q"});
        REQUIRE(t.steps.size() == 4);
        CHECK(t.steps[0].observation == u1);
        CHECK(t.steps[1].observation == u2);
        CHECK(t.steps[2].observation == u3);
        CHECK(t.steps[3].action == ActionKind::terminate);
        CHECK(t.steps[3].observation.empty());
    }

    SUBCASE("search backend errors surface in the observation") {
        // A backend that always fails: an empty corpus.
        std::string expected;
        AgentFixture g(LocalCorpus::from_documents({}), baseline_config());
        try {
            g.search->search({"anything", 10});
            FAIL("expected empty-corpus error");
        } catch (const Error& e) {
            expected = render_tool_error("search", e.what());
        }
        std::string turn1 = "<tool name=\"search\">{\"q\": \"anything\"}</tool>";
        g.script(g.actor_messages("q", {}), turn1);
        g.script(g.actor_messages("q", {{turn1, expected}}),
                 "<tool name=\"answer\">{\"text\": \"done\"}</tool>");
        Trajectory t = g.engine->reason_act_loop({1, "q"});
        REQUIRE(t.steps.size() == 2);
        CHECK(t.steps[0].observation == expected);
    }
}

TEST_CASE("a completion without tool calls is an implicit final answer") {
    AgentFixture f(single_doc_corpus(), baseline_config());
    f.script(f.actor_messages("q", {}), "just a thought");
    Trajectory t = f.engine->reason_act_loop({1, "q"});
    REQUIRE(t.steps.size() == 1);
    CHECK(t.steps[0].action == ActionKind::answer);
    CHECK(t.steps[0].args == json{{"text", "just a thought"}});
}

TEST_CASE("blocks after a terminal action in the same turn are ignored") {
    AgentFixture f(single_doc_corpus(), baseline_config());
    f.script(f.actor_messages("q", {}),
             "<tool name=\"answer\">{\"text\": \"early\"}</tool>\n"
             "<tool name=\"search\">{\"q\": \"capital of gaul\"}</tool>");
    Trajectory t = f.engine->reason_act_loop({1, "q"});
    REQUIRE(t.steps.size() == 1);
    CHECK(t.steps[0].action == ActionKind::answer);
    CHECK(f.gateway->calls() == 1);
}

TEST_CASE("two searches in one turn share the turn number") {
    AgentFixture f(single_doc_corpus(), baseline_config());
    std::string turn1 =
        "<tool name=\"search\">{\"q\": \"capital of gaul\"}</tool>\n"
        "<tool name=\"search\">{\"q\": \"nores zz\"}</tool>";
    std::string u = std::string(kObs1Literal) + "\n\n" +
                    "OBSERVATION (search \"nores zz\"): no results";
    f.script(f.actor_messages("q", {}), turn1);
    f.script(f.actor_messages("q", {{turn1, u}}),
             "<tool name=\"answer\">{\"text\": \"done\"}</tool>");
    Trajectory t = f.engine->reason_act_loop({1, "q"});
    REQUIRE(t.steps.size() == 3);
    CHECK(t.steps[0].turn == 1);
    CHECK(t.steps[1].turn == 1);
    CHECK(t.steps[2].turn == 2);
}

TEST_CASE("a gateway failure aborts the loop with the steps gathered so far") {
    AgentFixture f(single_doc_corpus(), baseline_config());
    f.script(f.actor_messages("q", {}), kTurn1Search);
    // No fixture for turn 2: the loop aborts there.
    Trajectory t = f.engine->reason_act_loop({1, "q"});
    CHECK(t.steps.size() == 1);
    CHECK(t.outcome == Outcome::unknown);
}

// ---------------------------------------------------------------------------
// Summarize / synthesize
// ---------------------------------------------------------------------------

TEST_CASE("summarize skips the gateway for empty trajectories") {
    AgentFixture f(single_doc_corpus(), baseline_config());
    Trajectory empty;
    CHECK(f.engine->summarize(empty) == "");
    CHECK(f.gateway->calls() == 0);
}

TEST_CASE("synthesis always makes exactly one call, even on empty knowledge") {
    AgentFixture f(single_doc_corpus(), baseline_config());
    f.script(f.synthesizer_messages("the task", {}), "unknown");
    CHECK(f.engine->synthesize_answer({"t", "the task", std::nullopt}, {}) == "unknown");
    CHECK(f.gateway->calls() == 1);

    f.script(f.synthesizer_messages("the task", {"k1", "k2", "k3"}), "lyon");
    CHECK(f.engine->synthesize_answer({"t", "the task", std::nullopt}, {"k1", "k2", "k3"}) ==
          "lyon");
    CHECK(f.gateway->calls() == 2);
}

// ---------------------------------------------------------------------------
// run_task end-to-end
// ---------------------------------------------------------------------------

namespace {

// Registers every fixture for a one-sub-question task whose answer is planted
// in the corpus, and returns the expected knowledge string.
void script_full_task(AgentFixture& f, const std::string& prompt, const std::string& sq_text) {
    f.script(f.planner_messages(prompt), "{\"sub_questions\": [\"" + sq_text + "\"]}");
    script_two_turn_episode(f, sq_text);
    std::string rendered =
        "SUB-QUESTION: " + sq_text +
        "\nTURN 1 ACTION search {\"q\":\"capital of gaul\"}\n" + std::string(kObs1Literal) +
        "\nTURN 2 ACTION answer {\"text\":\"lyon\"}";
    f.script(f.summarizer_messages(rendered), "The capital is lyon.");
    f.script(f.synthesizer_messages(prompt, {"The capital is lyon."}), "lyon");
}

}  // namespace

TEST_CASE("run_task drives plan, loop, summary, synthesis, grading, and the log") {
    AgentFixture f(single_doc_corpus(), baseline_config());
    script_full_task(f, "Where is the capital of Gaul?", "What is the capital of Gaul?");

    std::string path = temp_log_path("full");
    TrajectoryLog log(path);
    auto [answer, trajectories] =
        f.engine->run_task({"t1", "Where is the capital of Gaul?", std::string("lyon")}, &log);

    CHECK(answer.text == "lyon");
    CHECK(answer.outcome == Outcome::success);
    REQUIRE(trajectories.size() == 1);
    CHECK(trajectories[0].outcome == Outcome::success);
    CHECK(trajectories[0].summary == "The capital is lyon.");
    // plan + 2 actor turns + 1 summary + 1 synthesis.
    CHECK(f.engine->core_completions() == 5);
    CHECK(f.gateway->calls() == 5);

    auto events = read_event_lines(path);
    REQUIRE(events.size() == 5);
    CHECK(events[0]["type"] == "plan");
    CHECK(events[1]["type"] == "step");
    CHECK(events[2]["type"] == "step");
    CHECK(events[3]["type"] == "summary");
    CHECK(events[4]["type"] == "answer");
    CHECK(events[0]["payload"]["mode"] == "baseline");
    CHECK(events[4]["payload"]["outcome"] == "success");

    // Lossless reassembly.
    TaskRecord record = read_task_record(path);
    CHECK(record.task_id == "t1");
    CHECK(record.mode == "baseline");
    CHECK_FALSE(record.plan_degraded);
    CHECK(record.has_answer);
    CHECK(record.answer.text == "lyon");
    REQUIRE(record.trajectories.size() == 1);
    const Trajectory& original = trajectories[0];
    const Trajectory& restored = record.trajectories[0];
    CHECK(restored.subquestion == original.subquestion);
    CHECK(restored.method == original.method);
    CHECK(restored.summary == original.summary);
    CHECK(restored.outcome == original.outcome);
    REQUIRE(restored.steps.size() == original.steps.size());
    for (std::size_t i = 0; i < original.steps.size(); ++i) {
        CHECK(step_to_payload(restored.steps[i]) == step_to_payload(original.steps[i]));
        CHECK(restored.steps[i].turn == original.steps[i].turn);
    }
    std::remove(path.c_str());
}

TEST_CASE("run_task without ground truth grades unknown") {
    AgentFixture f(single_doc_corpus(), baseline_config());
    script_full_task(f, "p", "What is the capital of Gaul?");
    auto [answer, trajectories] = f.engine->run_task({"t1", "p", std::nullopt});
    CHECK(answer.outcome == Outcome::unknown);
    CHECK(trajectories[0].outcome == Outcome::unknown);
}

TEST_CASE("a failing sub-question does not abort the others") {
    AgentFixture f(single_doc_corpus(), baseline_config());
    std::string prompt = "two part task";
    f.script(f.planner_messages(prompt),
             "{\"sub_questions\": [\"What is the capital of Gaul?\", \"unscripted one\"]}");
    script_two_turn_episode(f, "What is the capital of Gaul?");
    std::string rendered =
        "SUB-QUESTION: What is the capital of Gaul?\n"
        "TURN 1 ACTION search {\"q\":\"capital of gaul\"}\n" + std::string(kObs1Literal) +
        "\nTURN 2 ACTION answer {\"text\":\"lyon\"}";
    f.script(f.summarizer_messages(rendered), "summary one");
    // Sub-question 2 has no actor fixture at all: it aborts immediately.
    f.script(f.synthesizer_messages(prompt, {"summary one"}), "lyon");

    std::string path = temp_log_path("abort");
    TrajectoryLog log(path);
    auto [answer, trajectories] = f.engine->run_task({"t2", prompt, std::string("lyon")}, &log);
    CHECK(answer.outcome == Outcome::success);
    REQUIRE(trajectories.size() == 2);
    CHECK(trajectories[0].outcome == Outcome::success);
    CHECK(trajectories[1].outcome == Outcome::unknown);
    CHECK(trajectories[1].steps.empty());
    CHECK(trajectories[1].summary.empty());

    TaskRecord record = read_task_record(path);
    REQUIRE(record.trajectories.size() == 2);
    CHECK(record.trajectories[1].outcome == Outcome::unknown);
    CHECK(record.trajectories[1].subquestion == "unscripted one");
    CHECK(record.trajectories[1].steps.empty());
    std::remove(path.c_str());
}

TEST_CASE("replay is deterministic: two fresh runs write identical logs") {
    auto run_once = [](const std::string& stem) {
        AgentFixture f(single_doc_corpus(), baseline_config());
        script_full_task(f, "Where is the capital of Gaul?", "What is the capital of Gaul?");
        std::string path = temp_log_path(stem);
        TrajectoryLog log(path);
        f.engine->run_task({"t1", "Where is the capital of Gaul?", std::string("lyon")}, &log);
        std::string bytes = read_file(path);
        std::remove(path.c_str());
        return bytes;
    };
    CHECK(run_once("replay_a") == run_once("replay_b"));
}

// ---------------------------------------------------------------------------
// Wedas mode
// ---------------------------------------------------------------------------

namespace {

// Fixtures for a wedas-mode episode: the search for "capital of gaul" probes
// two candidates, keeps "roman settlements" (8.0), drops "gaul history" (6.0).
GuidanceReport script_wedas_probe(AgentFixture& f) {
    f.script_probe_generation("capital of gaul", {}, {"gaul history", "roman settlements"});
    f.script_probe_judgement({
        {"gaul history", {9, 6, 3}},      // 6.0
        {"roman settlements", {8, 8, 8}},  // 8.0
    });
    GuidanceReport expected;
    expected.origin_query = "capital of gaul";
    ProbeTuple kept;
    kept.query = "roman settlements";
    kept.score = 8.0;
    kept.analysis = "judged roman settlements";
    kept.iteration = 1;
    kept.dims = {8, 8, 8};
    expected.tuples = {kept};
    expected.iterations_run = 1;
    return expected;
}

}  // namespace

TEST_CASE("wedas mode attaches guidance, injects the block, and logs probe events") {
    AgentFixture f(wedas_corpus(), wedas_config(1));
    GuidanceReport expected = script_wedas_probe(f);

    std::string obs1 =
        render_observation_block("capital of gaul", f.search->search({"capital of gaul", 10}));
    std::string guidance_block = render_guidance_block(expected);
    CHECK(guidance_block ==
          "SEARCH GUIDANCE (not evidence):\n"
          "- query=\"roman settlements\" score=8.0 analysis=\"judged roman settlements\"");
    std::string turn2_user = obs1 + "\n\n" + guidance_block;

    f.script(f.actor_messages("q", {}), kTurn1Search);
    f.script(f.actor_messages("q", {{kTurn1Search, turn2_user}}), kTurn2Answer);

    std::string path = temp_log_path("wedas");
    TrajectoryLog log(path);
    Trajectory t = f.engine->reason_act_loop({1, "q"}, "tw", &log);

    REQUIRE(t.steps.size() == 2);
    REQUIRE(t.steps[0].guidance.has_value());
    const GuidanceReport& got = *t.steps[0].guidance;
    CHECK(got.origin_query == "capital of gaul");
    REQUIRE(got.tuples.size() == 1);
    CHECK(got.tuples[0].query == "roman settlements");
    CHECK(got.tuples[0].score == 8.0);
    CHECK(got.iterations_run == 1);
    CHECK_FALSE(got.degraded);
    CHECK(t.method == "wedas");

    auto events = read_event_lines(path);
    // 2 probe appends + 1 drop + 2 steps.
    REQUIRE(events.size() == 5);
    CHECK(events[0]["type"] == "probe");
    CHECK(events[0]["task_id"] == "tw");
    CHECK(events[0]["sq"] == 1);
    CHECK(events[0]["turn"] == 1);
    CHECK(events[0]["payload"]["query"] == "gaul history");
    CHECK(events[2]["payload"]["dropped"] == true);
    CHECK(events[3]["type"] == "step");

    // Guidance survives the JSONL round-trip losslessly.
    TaskRecord record = read_task_record(path);
    REQUIRE(record.trajectories.size() == 1);
    REQUIRE(record.trajectories[0].steps[0].guidance.has_value());
    CHECK(guidance_to_json(*record.trajectories[0].steps[0].guidance) ==
          guidance_to_json(*t.steps[0].guidance));
    std::remove(path.c_str());
}

TEST_CASE("baseline and wedas with zero probe iterations differ only in guidance") {
    auto shared = std::make_shared<ScriptedChatBackend>();
    AgentFixture base(single_doc_corpus(), baseline_config(), shared);
    AgentFixture wzero(single_doc_corpus(), wedas_config(0), shared);
    script_full_task(base, "Where is the capital of Gaul?", "What is the capital of Gaul?");

    auto [a_base, t_base] =
        base.engine->run_task({"t1", "Where is the capital of Gaul?", std::string("lyon")});
    auto [a_wedas, t_wedas] =
        wzero.engine->run_task({"t1", "Where is the capital of Gaul?", std::string("lyon")});

    CHECK(a_base.text == a_wedas.text);
    CHECK(a_base.outcome == a_wedas.outcome);
    REQUIRE(t_base.size() == t_wedas.size());
    REQUIRE(t_base[0].steps.size() == t_wedas[0].steps.size());
    for (std::size_t i = 0; i < t_base[0].steps.size(); ++i) {
        json base_payload = step_to_payload(t_base[0].steps[i]);
        json wedas_payload = step_to_payload(t_wedas[0].steps[i]);
        CHECK_FALSE(base_payload.contains("guidance"));
        if (t_base[0].steps[i].action == ActionKind::search) {
            REQUIRE(t_wedas[0].steps[i].guidance.has_value());
            CHECK(t_wedas[0].steps[i].guidance->tuples.empty());
            CHECK(t_wedas[0].steps[i].guidance->iterations_run == 0);
            wedas_payload.erase("guidance");
        }
        CHECK(base_payload == wedas_payload);
    }
    // No probe calls were made: both runs used the same five completions.
    CHECK(base.gateway->calls() + wzero.gateway->calls() == 10);
}

// ---------------------------------------------------------------------------
// Context elision
// ---------------------------------------------------------------------------

TEST_CASE("over-budget contexts elide the oldest observation, never guidance") {
    SUBCASE("oldest observation collapses to the stub") {
        std::string obs_a = std::string(kObs1Literal);
        std::string obs_b = "OBSERVATION (search \"nores zz\"): no results";
        std::string turn1 = kTurn1Search;
        std::string turn2 = "Next.\n<tool name=\"search\">{\"q\": \"nores zz\"}</tool>";
        std::string turn3 = "<tool name=\"answer\">{\"text\": \"done\"}</tool>";

        // Compute the context size the engine would see before turn 3 and set
        // the budget one character below it.
        RunConfig cfg = baseline_config();
        AgentFixture probe_sizes(single_doc_corpus(), cfg);
        std::size_t total = 0;
        for (const auto& m :
             probe_sizes.actor_messages("q", {{turn1, obs_a}, {turn2, obs_b}})) {
            total += m.content.size();
        }
        cfg.context_char_budget = total - 1;

        AgentFixture f(single_doc_corpus(), cfg);
        f.script(f.actor_messages("q", {}), turn1);
        f.script(f.actor_messages("q", {{turn1, obs_a}}), turn2);
        // Turn 3 must see the elided variant; registering only that fixture
        // proves the engine applied the elision.
        f.script(f.actor_messages("q", {{turn1, kElisionStub}, {turn2, obs_b}}), turn3);
        Trajectory t = f.engine->reason_act_loop({1, "q"});
        REQUIRE(t.steps.size() == 3);
        CHECK(t.steps[2].action == ActionKind::answer);
        // The persisted step still holds the full observation.
        CHECK(t.steps[0].observation == obs_a);
    }

    SUBCASE("guidance blocks survive even a tiny budget") {
        RunConfig cfg = wedas_config(1);
        cfg.context_char_budget = 1;  // force elision of everything elidable
        AgentFixture f(wedas_corpus(), cfg);
        GuidanceReport expected = script_wedas_probe(f);
        std::string guidance_block = render_guidance_block(expected);

        f.script(f.actor_messages("q", {}), kTurn1Search);
        f.script(f.actor_messages(
                     "q", {{kTurn1Search, std::string(kElisionStub) + "\n\n" + guidance_block}}),
                 kTurn2Answer);
        Trajectory t = f.engine->reason_act_loop({1, "q"});
        REQUIRE(t.steps.size() == 2);
        CHECK(t.steps[1].action == ActionKind::answer);
    }
}

// ---------------------------------------------------------------------------
// Construction validation
// ---------------------------------------------------------------------------

TEST_CASE("engine construction validates limits and wedas prerequisites") {
    auto search = std::make_shared<LocalSearchBackend>(single_doc_corpus(), fixed_clock(1));
    auto llm = std::make_shared<ScriptedChatBackend>();
    auto gateway = std::make_shared<LlmGateway>(llm);

    RunConfig bad = baseline_config();
    bad.limits.max_turns = 0;
    CHECK_THROWS_AS(AgentEngine(gateway, search, bad), Error);

    RunConfig wedas = wedas_config(1);
    CHECK_THROWS_AS(AgentEngine(gateway, search, wedas), Error);  // no evaluator

    CHECK_THROWS_AS(AgentEngine(nullptr, search, baseline_config()), Error);
}

// ---------------------------------------------------------------------------
// Trajectory persistence units
// ---------------------------------------------------------------------------

TEST_CASE("guidance payloads round-trip exactly, including doubles") {
    std::mt19937 rng(20260818);
    for (int i = 0; i < 200; ++i) {
        GuidanceReport report;
        report.origin_query = "origin " + std::to_string(i);
        int n = testgen::rand_int(rng, 0, 4);
        for (int j = 0; j < n; ++j) {
            ProbeTuple t;
            t.query = "q" + std::to_string(i) + "_" + std::to_string(j);
            t.score = testgen::rand_int(rng, 0, 30) / 3.0;
            t.analysis = "a" + std::to_string(j);
            t.iteration = testgen::rand_int(rng, 1, 5);
            t.dims = {testgen::rand_int(rng, 0, 10), testgen::rand_int(rng, 0, 10),
                      testgen::rand_int(rng, 0, 10)};
            report.tuples.push_back(std::move(t));
        }
        report.iterations_run = testgen::rand_int(rng, 0, 5);
        report.terminated_early = testgen::rand_int(rng, 0, 1) == 1;
        report.degraded = testgen::rand_int(rng, 0, 1) == 1;

        json encoded = guidance_to_json(report);
        json reparsed = json::parse(encoded.dump());
        GuidanceReport back = guidance_from_json(reparsed);
        CHECK(guidance_to_json(back) == encoded);
        REQUIRE(back.tuples.size() == report.tuples.size());
        for (std::size_t j = 0; j < back.tuples.size(); ++j) {
            CHECK(back.tuples[j].score == report.tuples[j].score);  // exact
        }
    }
}

TEST_CASE("step events round-trip through payloads") {
    TrajectoryStep step;
    step.turn = 3;
    step.reasoning = "why";
    step.action = ActionKind::wedas_search;
    step.args = json{{"q", "x"}, {"k", 4}};
    step.observation = "OBSERVATION (search \"x\"): no results";
    step.observation_text = "";
    step.guidance = GuidanceReport{};
    step.guidance->origin_query = "x";
    step.started_at = 1111;
    step.ended_at = 2222;

    json event = step_event("task9", 2, step);
    CHECK(event["type"] == "step");
    CHECK(event["sq"] == 2);
    CHECK(event["turn"] == 3);
    TrajectoryStep back = step_from_payload(event["payload"]);
    back.turn = event["turn"].get<int>();
    CHECK(step_to_payload(back) == step_to_payload(step));
    CHECK(back.turn == step.turn);

    CHECK_THROWS_AS(step_from_payload(json{{"reasoning", "only"}}), Error);
}

TEST_CASE("the log writer produces strict JSONL the reader accepts") {
    std::string path = temp_log_path("writer");
    {
        TrajectoryLog log(path);
        log.append(plan_event("t", {{1, "one"}}, ToolMode::baseline, false));
        log.append(summary_event("t", 1, "s"));
        log.append(answer_event("t", {"a", Outcome::failure}, {Outcome::failure}));
    }
    auto events = read_event_lines(path);
    REQUIRE(events.size() == 3);
    CHECK(events[0]["payload"]["sub_questions"] == json::array({"one"}));
    CHECK(events[2]["payload"]["sq_outcomes"] == json::array({"failure"}));
    std::remove(path.c_str());

    CHECK_THROWS_AS(read_event_lines("/nonexistent/never.jsonl"), Error);

    std::string bad_path = temp_log_path("bad");
    {
        std::ofstream out(bad_path);
        out << "{\"type\": \"plan\"}\n\nnot json\n";
    }
    CHECK_THROWS_AS(read_event_lines(bad_path), Error);
    try {
        read_event_lines(bad_path);
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    std::remove(bad_path.c_str());
}
