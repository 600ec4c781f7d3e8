// Regenerates the committed offline benchmark under data/benchmark/: the
// corpus, the task list, and the scripted-response fixture file recorded by
// running every (mode, probe-depth) combination against the rule responder.
// Also re-checks the intended outcome grid, so a drift in agent mechanics
// fails generation instead of silently producing stale fixtures.
//
// Usage: make_benchmark_fixtures [output-dir]   (default: data/benchmark)

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "benchmark_rules.hpp"
#include "wedas/agent_core.hpp"
#include "wedas/app_config.hpp"
#include "wedas/qras.hpp"

using namespace wedas;
using nlohmann::json;

int main(int argc, char** argv) {
    std::filesystem::path out_dir = argc > 1 ? argv[1] : "data/benchmark";
    std::filesystem::create_directories(out_dir);

    {
        std::ofstream corpus(out_dir / "corpus.jsonl");
        for (const auto& doc : bench::benchmark_corpus()) {
            corpus << json{{"doc_id", doc.doc_id},
                           {"title", doc.title},
                           {"body", doc.body},
                           {"url", doc.url}}
                          .dump()
                   << "\n";
        }
        std::ofstream tasks(out_dir / "tasks.jsonl");
        for (const auto& task : bench::benchmark_tasks()) {
            tasks << json{{"task_id", task.task_id},
                          {"prompt", bench::task_prompt(task)},
                          {"ground_truth", task.ground_truth}}
                         .dump()
                  << "\n";
        }
    }

    auto chat = std::make_shared<CallbackChatBackend>(bench::rule_responder);
    auto corpus = LocalCorpus::from_documents(bench::benchmark_corpus());

    struct Combo {
        ToolMode mode;
        int t;
    };
    const std::vector<Combo> combos = {{ToolMode::baseline, 0},
                                       {ToolMode::wedas, 0},
                                       {ToolMode::wedas, 1},
                                       {ToolMode::wedas, 2}};

    bool all_as_expected = true;
    for (const auto& combo : combos) {
        std::cout << to_string(combo.mode) << " T=" << combo.t << ":";
        for (const auto& spec : bench::benchmark_tasks()) {
            auto gateway = std::make_shared<LlmGateway>(chat);
            auto search = std::make_shared<LocalSearchBackend>(corpus);
            auto evaluator = std::make_shared<QrasEvaluator>(gateway);
            RunConfig config;
            config.tool_mode = combo.mode;
            config.budget.max_iterations = combo.t;
            AgentEngine engine(gateway, search, config, evaluator);

            auto [answer, trajectories] = engine.run_task(bench::as_agent_task(spec));
            bool succeeded = answer.outcome == Outcome::success;
            bool easy = spec.vault.empty() && !spec.answer.empty();
            bool deep = !spec.vault.empty();
            bool expected =
                easy || (deep && combo.mode == ToolMode::wedas && combo.t >= 1);
            std::cout << " " << spec.task_id << (succeeded ? "+" : "-");
            if (succeeded != expected) {
                std::cout << "(!)";
                all_as_expected = false;
            }
        }
        std::cout << "\n";
    }
    if (!all_as_expected) {
        std::cerr << "outcome grid deviates from the intended design; fixtures not saved\n";
        return 1;
    }

    chat->save_fixtures_jsonl(out_dir / "llm_fixtures.jsonl");
    std::cout << "wrote " << chat->recorded().size() << " fixtures to "
              << (out_dir / "llm_fixtures.jsonl") << "\n";
    return 0;
}
