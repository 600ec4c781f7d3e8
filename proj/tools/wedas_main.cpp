// Command-line front end: run single tasks, sweep benchmarks, probe queries,
// analyze trajectory logs, and check the information-gain bound on toy models.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wedas/agent_core.hpp"
#include "wedas/analysis.hpp"
#include "wedas/app_config.hpp"
#include "wedas/error.hpp"
#include "wedas/probe_engine.hpp"
#include "wedas/qras.hpp"
#include "wedas/trajectory.hpp"

using namespace wedas;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Task task_from_json(const json& j) {
    Task task;
    task.task_id = j.at("task_id").get<std::string>();
    task.prompt = j.at("prompt").get<std::string>();
    if (j.contains("ground_truth") && j.at("ground_truth").is_string()) {
        task.ground_truth = j.at("ground_truth").get<std::string>();
    }
    return task;
}

Task load_task_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open task file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorKind::config, "task file must hold one JSON object: " + path);
    }
    try {
        return task_from_json(j);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, "malformed task file " + path + ": " + e.what());
    }
}

std::vector<Task> load_benchmark(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open benchmark file: " + path);
    std::vector<Task> tasks;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error(ErrorKind::config,
                        "benchmark line " + std::to_string(line_no) + " is not a JSON object");
        }
        try {
            tasks.push_back(task_from_json(j));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::config,
                        "benchmark line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (tasks.empty()) throw Error(ErrorKind::config, "benchmark file has no tasks: " + path);
    return tasks;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << content;
        if (!out) throw Error(ErrorKind::io, "cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

struct Engines {
    std::shared_ptr<SearchBackend> search;
    std::shared_ptr<ChatBackend> chat;
};

Engines build_backends(const AppConfig& config) {
    return {build_search_backend(config), build_chat_backend(config)};
}

// A fresh engine per episode: gateways count calls per run, while the
// underlying backends (corpus, fixture table, or live connections) are shared.
AgentEngine make_engine(const Engines& backends, const AppConfig& config,
                        int probe_iterations) {
    AppConfig effective = config;
    effective.probe_iterations = probe_iterations;
    auto gateway = std::make_shared<LlmGateway>(backends.chat);
    auto evaluator = std::make_shared<QrasEvaluator>(gateway, config.decoding);
    return AgentEngine(gateway, backends.search, make_run_config(effective), evaluator);
}

int cmd_run(const AppConfig& config, const std::string& task_file, const std::string& out_dir) {
    validate_config(config);
    Task task = load_task_file(task_file);
    Engines backends = build_backends(config);

    fs::create_directories(out_dir);
    fs::path log_path = fs::path(out_dir) / (task.task_id + ".jsonl");
    TrajectoryLog log(log_path.string());

    AgentEngine engine = make_engine(backends, config, config.probe_iterations);
    auto [answer, trajectories] = engine.run_task(task, &log);

    fs::path answer_path = fs::path(out_dir) / (task.task_id + ".answer.json");
    write_file_atomic(answer_path, json{{"task_id", task.task_id},
                                        {"answer", answer.text},
                                        {"outcome", to_string(answer.outcome)}}
                                           .dump(2) +
                                       "\n");

    std::cout << "task " << task.task_id << ": " << to_string(answer.outcome) << "\n"
              << "answer: " << answer.text << "\n"
              << "trajectory: " << log_path.string() << "\n"
              << "answer file: " << answer_path.string() << "\n";
    return 0;
}

int cmd_bench(const AppConfig& config, const std::string& bench_file,
              std::vector<int> t_values, int sample, unsigned int seed) {
    validate_config(config);
    std::vector<Task> tasks = load_benchmark(bench_file);

    if (sample > 0) {
        if (static_cast<std::size_t>(sample) > tasks.size()) {
            throw Error(ErrorKind::config,
                        "--sample " + std::to_string(sample) + " exceeds benchmark size " +
                            std::to_string(tasks.size()));
        }
        // Hand-rolled Fisher-Yates: mt19937 output is standard-defined, so the
        // same seed picks the same subset on every platform.
        std::vector<std::size_t> idx(tasks.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::mt19937 rng(seed);
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            std::size_t j = rng() % (i + 1);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(static_cast<std::size_t>(sample));
        std::sort(idx.begin(), idx.end());
        std::vector<Task> subset;
        for (std::size_t i : idx) subset.push_back(tasks[i]);
        tasks = std::move(subset);
    }

    if (t_values.empty()) t_values = {config.probe_iterations};
    Engines backends = build_backends(config);
    const int trials = config.trials;

    std::cout << "benchmark: " << tasks.size() << " tasks, mode " << config.tool_mode << ", "
              << trials << " trials per cell\n";

    auto run_grid = [&](int t) {
        std::vector<std::vector<std::uint8_t>> grid(
            tasks.size(), std::vector<std::uint8_t>(static_cast<std::size_t>(trials), 0));
        std::atomic<std::size_t> next{0};
        const std::size_t n_jobs = tasks.size() * static_cast<std::size_t>(trials);
        std::mutex warn_mu;
        auto worker = [&]() {
            while (true) {
                std::size_t job = next.fetch_add(1);
                if (job >= n_jobs) break;
                std::size_t ti = job / static_cast<std::size_t>(trials);
                std::size_t trial = job % static_cast<std::size_t>(trials);
                try {
                    AgentEngine engine = make_engine(backends, config, t);
                    auto [answer, trajectories] = engine.run_task(tasks[ti]);
                    grid[ti][trial] = answer.outcome == Outcome::success ? 1 : 0;
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(warn_mu);
                    std::cerr << "warning: " << tasks[ti].task_id << " trial " << trial + 1
                              << " failed: " << e.what() << "\n";
                }
            }
        };
        std::size_t n_workers =
            std::min<std::size_t>(static_cast<std::size_t>(config.workers), n_jobs);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w + 1 < n_workers; ++w) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();

        std::vector<std::vector<bool>> results(tasks.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            results[i].assign(grid[i].begin(), grid[i].end());
        }
        return results;
    };

    std::vector<AblationRow> rows;
    std::vector<double> pass1_only;
    for (int t : t_values) {
        auto results = run_grid(t);
        if (trials >= 3) {
            AblationRow row;
            row.t_iterations = t;
            row.pass1_percent = pass_at_k(results, 1).value * 100.0;
            row.pass3_percent = pass_at_k(results, 3).value * 100.0;
            rows.push_back(row);
        } else {
            pass1_only.push_back(pass_at_k(results, 1).value * 100.0);
        }
    }

    if (trials >= 3) {
        std::cout << render_ablation_table(rows);
    } else {
        std::cout << "pass@3 unavailable: needs at least 3 trials, got " << trials << "\n";
        std::cout << "T  pass@1\n";
        for (std::size_t i = 0; i < t_values.size(); ++i) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%-2d %.2f\n", t_values[i], pass1_only[i]);
            std::cout << buf;
        }
    }
    return 0;
}

int cmd_probe(const AppConfig& config, const std::string& query, int t_iterations) {
    validate_config(config);
    Engines backends = build_backends(config);
    auto gateway = std::make_shared<LlmGateway>(backends.chat);
    auto evaluator = std::make_shared<QrasEvaluator>(gateway, config.decoding);
    ProbeEngine probes(backends.search, gateway, evaluator, config.decoding);

    ProbeBudget budget{t_iterations, config.max_candidates_per_iteration};
    GuidanceReport report = probes.run_probing(query, budget);

    std::cout << "origin query: " << report.origin_query << "\n"
              << "iterations run: " << report.iterations_run
              << (report.terminated_early ? " (terminated early)" : "") << "\n";
    if (report.degraded) std::cout << "warning: probing degraded; guidance may be partial\n";
    if (report.tuples.empty()) {
        std::cout << "(no guidance gathered)\n";
    } else {
        for (const auto& tuple : report.tuples) {
            std::cout << "  score=" << json(tuple.score).dump() << " query=\"" << tuple.query
                      << "\" analysis=\"" << tuple.analysis << "\"\n";
        }
    }
    return 0;
}

int cmd_analyze(const AppConfig&, const std::string& dir, const std::string& csv_dir) {
    LoadResult loaded = load_trajectories(dir);

    std::map<std::string, std::vector<Trajectory>> by_method;
    for (auto& trajectory : loaded.trajectories) {
        by_method[trajectory.method].push_back(std::move(trajectory));
    }

    std::vector<std::pair<std::string, MetricSummary>> summaries;
    std::size_t excluded = 0;
    for (const auto& [method, trajectories] : by_method) {
        MetricSummary summary = summarize_metrics(split_by_outcome(trajectories));
        excluded += summary.excluded_unknown;
        summaries.emplace_back(method, summary);
    }

    std::cout << render_means_table(summaries);
    std::cout << "files: " << loaded.files_read << "  malformed lines: " << loaded.malformed
              << "  ungraded trajectories excluded: " << excluded << "\n";

    if (!csv_dir.empty()) {
        fs::create_directories(csv_dir);
        write_file_atomic(fs::path(csv_dir) / "means.csv", means_csv(summaries));
        write_file_atomic(fs::path(csv_dir) / "histograms.csv", histogram_csv(summaries));
        std::cout << "wrote " << (fs::path(csv_dir) / "means.csv").string() << " and "
                  << (fs::path(csv_dir) / "histograms.csv").string() << "\n";
    }
    return 0;
}

int cmd_simulate_eig(const std::string& model_file) {
    ToyModel model = load_toy_model(model_file);
    EigReport report = eig_bound_check(model);
    std::cout << render_eig_report(report);
    return report.all_hold ? 0 : 1;
}

int cmd_config_check(const AppConfig& config) {
    validate_config(config);
    std::cout << config_to_json(config).dump(2) << "\n";
    std::cout << "config ok\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep-search agent with probe-guided web querying"};
    app.require_subcommand(1);

    // Global layers: flags > env > config file > defaults.
    std::string config_path, local_corpus, scripted_llm, serper_key, llm_key, llm_base,
        llm_model, mode, cache_dir;
    int search_k = 0, trials = 0, workers = 0;
    bool verbose = false;
    auto* o_config = app.add_option("--config", config_path, "JSON config file");
    auto* o_corpus =
        app.add_option("--local-corpus", local_corpus, "local corpus JSONL (offline search)");
    auto* o_scripted = app.add_option("--scripted-llm", scripted_llm,
                                      "scripted completions JSONL (offline model)");
    auto* o_serper = app.add_option("--serper-api-key", serper_key, "live search API key");
    auto* o_llm_key = app.add_option("--llm-api-key", llm_key, "live completions API key");
    auto* o_llm_base = app.add_option("--llm-base-url", llm_base, "live completions base URL");
    auto* o_llm_model = app.add_option("--llm-model", llm_model, "live completions model name");
    auto* o_mode = app.add_option("--mode", mode, "tool mode: baseline or wedas");
    auto* o_cache = app.add_option("--cache-dir", cache_dir, "observation cache directory");
    auto* o_search_k = app.add_option("--search-k", search_k, "results per search");
    auto* o_trials = app.add_option("--trials", trials, "trials per benchmark task");
    auto* o_workers = app.add_option("--workers", workers, "parallel benchmark episodes");
    app.add_flag("--verbose", verbose, "print the effective config before running");

    auto* run_cmd = app.add_subcommand("run", "run one task end to end");
    std::string task_file, out_dir = "out";
    int t_run = -1;
    run_cmd->add_option("task-file", task_file, "JSON task file")->required();
    run_cmd->add_option("-T,--probe-iterations", t_run, "probe iterations per search");
    run_cmd->add_option("--out", out_dir, "output directory (default: out)");
    run_cmd->fallthrough();

    auto* bench_cmd = app.add_subcommand("bench", "run a benchmark and report pass rates");
    std::string bench_file;
    std::vector<int> t_bench;
    int sample = 0;
    unsigned int seed = 0;
    bench_cmd->add_option("benchmark-file", bench_file, "benchmark JSONL, one task per line")
        ->required();
    bench_cmd->add_option("-T,--probe-iterations", t_bench,
                          "probe iterations; repeat the flag to sweep");
    bench_cmd->add_option("--sample", sample, "uniformly sample this many tasks");
    bench_cmd->add_option("--seed", seed, "sampling seed");
    bench_cmd->fallthrough();

    auto* probe_cmd = app.add_subcommand("probe", "probe a query and print the guidance");
    std::string probe_query;
    int t_probe = -1;
    probe_cmd->add_option("query", probe_query, "origin query")->required();
    probe_cmd->add_option("-T,--probe-iterations", t_probe, "probe iterations");
    probe_cmd->fallthrough();

    auto* analyze_cmd =
        app.add_subcommand("analyze", "aggregate alignment metrics over trajectory logs");
    std::string analyze_dir, csv_dir;
    analyze_cmd->add_option("dir", analyze_dir, "directory of trajectory JSONL files")
        ->required();
    analyze_cmd->add_option("--csv-dir", csv_dir, "also write means.csv and histograms.csv");
    analyze_cmd->fallthrough();

    auto* eig_cmd =
        app.add_subcommand("simulate-eig", "check the information-gain bound on a toy model");
    std::string model_file;
    eig_cmd->add_option("model-file", model_file, "toy model JSON")->required();
    eig_cmd->fallthrough();

    auto* check_cmd = app.add_subcommand("config-check", "print and validate the merged config");
    check_cmd->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        AppConfig config;
        if (o_config->count() > 0) config = load_config_file(config_path, config);
        config = apply_env(std::move(config),
                           [](const char* name) { return std::getenv(name); });
        if (o_corpus->count() > 0) config.local_corpus = local_corpus;
        if (o_scripted->count() > 0) config.scripted_llm = scripted_llm;
        if (o_serper->count() > 0) config.serper_api_key = serper_key;
        if (o_llm_key->count() > 0) config.llm_api_key = llm_key;
        if (o_llm_base->count() > 0) config.llm_base_url = llm_base;
        if (o_llm_model->count() > 0) config.llm_model = llm_model;
        if (o_mode->count() > 0) config.tool_mode = mode;
        if (o_cache->count() > 0) config.cache_dir = cache_dir;
        if (o_search_k->count() > 0) config.search_k = search_k;
        if (o_trials->count() > 0) config.trials = trials;
        if (o_workers->count() > 0) config.workers = workers;

        if (verbose) {
            std::cerr << "effective config:\n" << config_to_json(config).dump(2) << "\n";
        }

        if (run_cmd->parsed()) {
            if (t_run >= 0) config.probe_iterations = t_run;
            return cmd_run(config, task_file, out_dir);
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(config, bench_file, t_bench, sample, seed);
        }
        if (probe_cmd->parsed()) {
            if (t_probe >= 0) config.probe_iterations = t_probe;
            return cmd_probe(config, probe_query, config.probe_iterations);
        }
        if (analyze_cmd->parsed()) {
            return cmd_analyze(config, analyze_dir, csv_dir);
        }
        if (eig_cmd->parsed()) {
            return cmd_simulate_eig(model_file);
        }
        if (check_cmd->parsed()) {
            return cmd_config_check(config);
        }
        std::cerr << "error: no command\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
