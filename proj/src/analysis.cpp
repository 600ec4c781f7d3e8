#include "wedas/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <tuple>

#include "wedas/error.hpp"
#include "wedas/trajectory.hpp"

namespace wedas {

using nlohmann::json;

namespace {

std::string double_to_string(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error(ErrorKind::internal, "double formatting failed");
    return std::string(buf, ptr);
}

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

LoadResult load_trajectories(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw Error(ErrorKind::io, "not a directory: " + dir);
    }
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            paths.push_back(entry.path().string());
        }
    }
    std::sort(paths.begin(), paths.end());

    LoadResult result;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) {
            ++result.malformed;
            continue;
        }
        ++result.files_read;
        std::vector<json> events;
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            json event = json::parse(line, nullptr, false);
            if (event.is_discarded() || !event.is_object()) {
                ++result.malformed;
                continue;
            }
            events.push_back(std::move(event));
        }
        TaskRecord record = assemble_task_record(events, &result.malformed);
        for (auto& trajectory : record.trajectories) {
            result.trajectories.push_back(std::move(trajectory));
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Split and aggregates
// ---------------------------------------------------------------------------

OutcomeSplit split_by_outcome(const std::vector<Trajectory>& trajectories) {
    OutcomeSplit split;
    struct Pending {
        bool is_success = false;
        std::string query;
        std::string otext;
    };
    std::vector<Pending> pending;
    CorpusStats stats;
    for (const auto& t : trajectories) {
        if (t.outcome == Outcome::unknown) {
            ++split.excluded_unknown;
            continue;
        }
        for (const auto& s : t.steps) {
            if (s.action != ActionKind::search && s.action != ActionKind::wedas_search) continue;
            Pending p;
            p.is_success = t.outcome == Outcome::success;
            if (s.args.is_object() && s.args.contains("q") && s.args["q"].is_string()) {
                p.query = s.args["q"].get<std::string>();
            }
            p.otext = s.observation_text;
            stats.add_document(normalize(p.otext).tokens);
            pending.push_back(std::move(p));
        }
    }
    for (const auto& p : pending) {
        AlignmentTriple triple = alignment_triple(p.query, p.otext, stats);
        (p.is_success ? split.success : split.failure).push_back(triple);
    }
    return split;
}

namespace {

int bin_index(double v) {
    if (v <= 0.0) return 0;
    if (v >= 1.0) return kHistogramBins - 1;
    int index = static_cast<int>(v * kHistogramBins);
    return std::min(index, kHistogramBins - 1);
}

OutcomeStats stats_over(std::vector<AlignmentTriple> triples) {
    OutcomeStats stats;
    stats.count = triples.size();
    std::sort(triples.begin(), triples.end(), [](const AlignmentTriple& a,
                                                 const AlignmentTriple& b) {
        return std::tie(a.tfidf, a.jaccard, a.nls) < std::tie(b.tfidf, b.jaccard, b.nls);
    });
    double sum_tfidf = 0.0;
    double sum_jaccard = 0.0;
    double sum_nls = 0.0;
    for (const auto& t : triples) {
        sum_tfidf += t.tfidf;
        sum_jaccard += t.jaccard;
        sum_nls += t.nls;
        ++stats.tfidf_hist.bins[bin_index(t.tfidf)];
        ++stats.jaccard_hist.bins[bin_index(t.jaccard)];
        ++stats.nls_hist.bins[bin_index(t.nls)];
    }
    if (stats.count > 0) {
        stats.tfidf_mean = sum_tfidf / static_cast<double>(stats.count);
        stats.jaccard_mean = sum_jaccard / static_cast<double>(stats.count);
        stats.nls_mean = sum_nls / static_cast<double>(stats.count);
    }
    return stats;
}

}  // namespace

MetricSummary summarize_metrics(const OutcomeSplit& split) {
    MetricSummary summary;
    summary.success = stats_over(split.success);
    summary.failure = stats_over(split.failure);
    summary.excluded_unknown = split.excluded_unknown;
    return summary;
}

namespace {

void append_histogram_rows(std::string& out, const std::string& method,
                           const std::string& outcome, const std::string& metric,
                           const Histogram& hist) {
    for (int i = 0; i < kHistogramBins; ++i) {
        double lo = static_cast<double>(i) / kHistogramBins;
        double hi = static_cast<double>(i + 1) / kHistogramBins;
        out += method + "," + outcome + "," + metric + "," + double_to_string(lo) + "," +
               double_to_string(hi) + "," + std::to_string(hist.bins[i]) + "\n";
    }
}

}  // namespace

std::string histogram_csv(const std::vector<std::pair<std::string, MetricSummary>>& by_method) {
    std::string out = "method,outcome,metric,bin_lo,bin_hi,count\n";
    for (const auto& [method, summary] : by_method) {
        append_histogram_rows(out, method, "success", "tfidf", summary.success.tfidf_hist);
        append_histogram_rows(out, method, "success", "jaccard", summary.success.jaccard_hist);
        append_histogram_rows(out, method, "success", "nls", summary.success.nls_hist);
        append_histogram_rows(out, method, "failure", "tfidf", summary.failure.tfidf_hist);
        append_histogram_rows(out, method, "failure", "jaccard", summary.failure.jaccard_hist);
        append_histogram_rows(out, method, "failure", "nls", summary.failure.nls_hist);
    }
    return out;
}

std::string means_csv(const std::vector<std::pair<std::string, MetricSummary>>& by_method) {
    std::string out = "method,outcome,tfidf_mean,jaccard_mean,nls_mean\n";
    for (const auto& [method, summary] : by_method) {
        out += method + ",success," + double_to_string(summary.success.tfidf_mean) + "," +
               double_to_string(summary.success.jaccard_mean) + "," +
               double_to_string(summary.success.nls_mean) + "\n";
        out += method + ",failure," + double_to_string(summary.failure.tfidf_mean) + "," +
               double_to_string(summary.failure.jaccard_mean) + "," +
               double_to_string(summary.failure.nls_mean) + "\n";
    }
    return out;
}

std::string render_means_table(
    const std::vector<std::pair<std::string, MetricSummary>>& by_method) {
    std::string out = "Query-result alignment means\n";
    out += "method      outcome  n      tfidf  jaccard  nls\n";
    for (const auto& [method, summary] : by_method) {
        for (const auto& [outcome, stats] :
             {std::pair<const char*, const OutcomeStats*>{"success", &summary.success},
              std::pair<const char*, const OutcomeStats*>{"failure", &summary.failure}}) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%-11s %-8s %-6zu %-6s %-8s %s\n", method.c_str(),
                          outcome, stats->count, fixed3(stats->tfidf_mean).c_str(),
                          fixed3(stats->jaccard_mean).c_str(), fixed3(stats->nls_mean).c_str());
            out += buf;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// pass@k
// ---------------------------------------------------------------------------

PassAtK pass_at_k(const std::vector<std::vector<bool>>& results, int k) {
    if (k < 1) throw Error(ErrorKind::config, "k must be at least 1");
    if (results.empty()) throw Error(ErrorKind::config, "pass@k needs at least one task");
    const std::size_t n_trials = results.front().size();
    if (n_trials == 0) throw Error(ErrorKind::config, "pass@k needs at least one trial");
    for (const auto& row : results) {
        if (row.size() != n_trials) {
            throw Error(ErrorKind::config, "all tasks must have the same number of trials");
        }
    }
    if (static_cast<std::size_t>(k) > n_trials) {
        throw Error(ErrorKind::config, "pass@" + std::to_string(k) + " needs at least " +
                                           std::to_string(k) + " trials, got " +
                                           std::to_string(n_trials));
    }

    double total = 0.0;
    for (const auto& row : results) {
        if (k == 1) {
            std::size_t successes = 0;
            for (bool b : row) successes += b ? 1 : 0;
            total += static_cast<double>(successes) / static_cast<double>(n_trials);
        } else {
            bool any = false;
            for (int i = 0; i < k; ++i) any = any || row[static_cast<std::size_t>(i)];
            total += any ? 1.0 : 0.0;
        }
    }
    PassAtK out;
    out.k = k;
    out.n_trials = static_cast<int>(n_trials);
    out.value = total / static_cast<double>(results.size());
    return out;
}

// ---------------------------------------------------------------------------
// Ablation harness
// ---------------------------------------------------------------------------

std::vector<AblationRow> ablation_harness(const std::vector<Task>& tasks,
                                          const std::vector<int>& t_values,
                                          const TaskRunner& runner, int n_trials) {
    if (tasks.empty()) throw Error(ErrorKind::config, "ablation needs at least one task");
    if (t_values.empty()) throw Error(ErrorKind::config, "ablation needs at least one T value");
    if (n_trials < 3) {
        throw Error(ErrorKind::config,
                    "ablation reports pass@3 and needs at least 3 trials, got " +
                        std::to_string(n_trials));
    }
    std::vector<AblationRow> rows;
    for (int t : t_values) {
        std::vector<std::vector<bool>> results;
        results.reserve(tasks.size());
        for (const auto& task : tasks) {
            std::vector<bool> trials;
            trials.reserve(static_cast<std::size_t>(n_trials));
            for (int trial = 0; trial < n_trials; ++trial) {
                bool ok = false;
                try {
                    ok = runner(task, t, trial);
                } catch (const std::exception&) {
                    ok = false;  // a failed run counts as a failure
                }
                trials.push_back(ok);
            }
            results.push_back(std::move(trials));
        }
        AblationRow row;
        row.t_iterations = t;
        row.pass1_percent = pass_at_k(results, 1).value * 100.0;
        row.pass3_percent = pass_at_k(results, 3).value * 100.0;
        rows.push_back(row);
    }
    return rows;
}

std::string render_ablation_table(const std::vector<AblationRow>& rows) {
    std::string out = "Probe-iteration ablation (n_trials per cell = 3)\n";
    out += "T  pass@1  pass@3\n";
    for (const auto& row : rows) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%-2d %-7s %s\n", row.t_iterations,
                      fixed2(row.pass1_percent).c_str(), fixed2(row.pass3_percent).c_str());
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Toy model
// ---------------------------------------------------------------------------

namespace {

constexpr double kNormTolerance = 1e-12;
constexpr double kBoundTolerance = 1e-9;

void check_distribution(const std::vector<double>& p, const std::string& what) {
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0 || v > 1.0) {
            throw Error(ErrorKind::config, what + " has a probability outside [0,1]");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > kNormTolerance) {
        throw Error(ErrorKind::config,
                    what + " must sum to 1 (got " + double_to_string(sum) + ")");
    }
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) {
            throw Error(ErrorKind::config, "posterior support exceeds prior support");
        }
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

}  // namespace

ToyModel toy_model_from_json(const json& j) {
    try {
        ToyModel model;
        model.name = j.value("name", "model");
        model.prior = j.at("prior").get<std::vector<double>>();
        model.n_observations = j.at("n_observations").get<int>();
        model.delta_max = j.at("delta_max").get<double>();
        if (model.prior.empty()) throw Error(ErrorKind::config, "prior must be non-empty");
        if (model.n_observations < 1) {
            throw Error(ErrorKind::config, "n_observations must be at least 1");
        }
        if (model.delta_max < 0.0) throw Error(ErrorKind::config, "delta_max must be >= 0");
        check_distribution(model.prior, "prior");
        const std::size_t n_states = model.prior.size();
        const std::size_t joint =
            n_states * 2 * static_cast<std::size_t>(model.n_observations);
        if (joint > 10000) {
            throw Error(ErrorKind::config,
                        "model too large for exact enumeration: " + std::to_string(joint) +
                            " joint outcomes (limit 10000)");
        }
        for (const auto& jq : j.at("queries")) {
            ToyModel::Query q;
            q.name = jq.value("name", "q" + std::to_string(model.queries.size()));
            q.p_rel_given_state = jq.at("p_rel_given_state").get<std::vector<double>>();
            if (q.p_rel_given_state.size() != n_states) {
                throw Error(ErrorKind::config,
                            "query " + q.name + ": p_rel_given_state must have one entry per state");
            }
            for (double v : q.p_rel_given_state) {
                if (v < 0.0 || v > 1.0) {
                    throw Error(ErrorKind::config,
                                "query " + q.name + ": P(z=1|state) outside [0,1]");
                }
            }
            q.p_obs = jq.at("p_obs").get<std::vector<std::vector<std::vector<double>>>>();
            if (q.p_obs.size() != 2) {
                throw Error(ErrorKind::config,
                            "query " + q.name + ": p_obs must have tables for z=0 and z=1");
            }
            for (int z = 0; z < 2; ++z) {
                if (q.p_obs[z].size() != n_states) {
                    throw Error(ErrorKind::config, "query " + q.name + ": p_obs[z=" +
                                                       std::to_string(z) +
                                                       "] must have one row per state");
                }
                for (std::size_t a = 0; a < n_states; ++a) {
                    if (q.p_obs[z][a].size() != static_cast<std::size_t>(model.n_observations)) {
                        throw Error(ErrorKind::config,
                                    "query " + q.name + ": p_obs rows must have one entry per "
                                                        "observation");
                    }
                    check_distribution(q.p_obs[z][a], "query " + q.name + " p_obs[z=" +
                                                          std::to_string(z) + "][state=" +
                                                          std::to_string(a) + "]");
                }
            }
            model.queries.push_back(std::move(q));
        }
        if (model.queries.empty()) {
            throw Error(ErrorKind::config, "model must define at least one query");
        }
        return model;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("malformed toy model: ") + e.what());
    }
}

ToyModel load_toy_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open toy model: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::config, "toy model is not valid JSON: " + path);
    return toy_model_from_json(j);
}

EigReport eig_bound_check(const ToyModel& model) {
    const std::size_t n_states = model.prior.size();
    const std::size_t n_obs = static_cast<std::size_t>(model.n_observations);

    EigReport report;
    report.model_name = model.name;
    for (const auto& q : model.queries) {
        // Joint P(a, z, o) = prior[a] * P(z|a) * P(o|z,a).
        auto joint = [&](std::size_t a, int z, std::size_t o) {
            double pz = z == 1 ? q.p_rel_given_state[a] : 1.0 - q.p_rel_given_state[a];
            return model.prior[a] * pz * q.p_obs[z][a][o];
        };

        // Assumption checks first: irrelevant observations must leave the
        // posterior at the prior, and every relevant shift is capped.
        for (int z = 0; z < 2; ++z) {
            for (std::size_t o = 0; o < n_obs; ++o) {
                double p_o_z = 0.0;
                std::vector<double> posterior(n_states, 0.0);
                for (std::size_t a = 0; a < n_states; ++a) {
                    posterior[a] = joint(a, z, o);
                    p_o_z += posterior[a];
                }
                if (p_o_z <= 0.0) continue;
                for (auto& v : posterior) v /= p_o_z;
                double shift = kl_divergence(posterior, model.prior);
                if (z == 0 && shift > kBoundTolerance) {
                    throw Error(ErrorKind::config,
                                "query " + q.name + ": irrelevant observation " +
                                    std::to_string(o) + " shifts the posterior by " +
                                    double_to_string(shift) +
                                    "; the bound requires negligible shift when z=0");
                }
                if (z == 1 && shift > model.delta_max + kBoundTolerance) {
                    throw Error(ErrorKind::config,
                                "query " + q.name + ": delta(o=" + std::to_string(o) +
                                    ", z=1) = " + double_to_string(shift) +
                                    " exceeds delta_max = " + double_to_string(model.delta_max));
                }
            }
        }

        EigQueryResult result;
        result.name = q.name;
        for (std::size_t o = 0; o < n_obs; ++o) {
            double p_o = 0.0;
            double p_o_rel = 0.0;
            std::vector<double> posterior(n_states, 0.0);
            for (std::size_t a = 0; a < n_states; ++a) {
                double with_rel = joint(a, 1, o);
                double without = joint(a, 0, o);
                posterior[a] = with_rel + without;
                p_o += with_rel + without;
                p_o_rel += with_rel;
            }
            if (p_o <= 0.0) continue;
            for (auto& v : posterior) v /= p_o;
            result.eig += p_o * kl_divergence(posterior, model.prior);
            result.expected_relevance += p_o_rel;  // = sum_o P(o) * P(z=1|o)
        }
        result.bound = model.delta_max * result.expected_relevance;
        result.holds = result.eig <= result.bound + kBoundTolerance;
        report.queries.push_back(std::move(result));
    }
    report.all_hold = std::all_of(report.queries.begin(), report.queries.end(),
                                  [](const EigQueryResult& r) { return r.holds; });
    return report;
}

std::string render_eig_report(const EigReport& report) {
    std::string out = "Information-gain bound check for model \"" + report.model_name +
                      "\" (KL in natural log)\n";
    out += "query           eig         bound       E[P(z=1|o)]  holds\n";
    for (const auto& q : report.queries) {
        char buf[192];
        std::snprintf(buf, sizeof(buf), "%-15s %-11s %-11s %-12s %s\n", q.name.c_str(),
                      double_to_string(q.eig).substr(0, 10).c_str(),
                      double_to_string(q.bound).substr(0, 10).c_str(),
                      double_to_string(q.expected_relevance).substr(0, 10).c_str(),
                      q.holds ? "yes" : "NO");
        out += buf;
    }
    out += report.all_hold ? "bound holds for every query\n"
                           : "BOUND VIOLATED for at least one query\n";
    return out;
}

}  // namespace wedas
