#include "wedas/probe_engine.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include "wedas/prompts.hpp"

namespace wedas {

using nlohmann::json;

namespace {

int word_count(const std::string& text) {
    std::istringstream in(text);
    std::string word;
    int count = 0;
    while (in >> word) ++count;
    return count;
}

void check_budget(const ProbeBudget& budget) {
    if (budget.max_iterations < 0) {
        throw Error(ErrorKind::config, "probe iteration budget must be non-negative");
    }
    if (budget.max_candidates_per_iteration < 2 || budget.max_candidates_per_iteration > 5) {
        throw Error(ErrorKind::config, "candidate batch cap must be between 2 and 5");
    }
}

std::optional<std::string> validate_candidates(const json& j) {
    if (!j.is_object() || !j.contains("derived_queries") || !j["derived_queries"].is_array()) {
        return "top-level object must contain a \"derived_queries\" array";
    }
    for (const auto& q : j["derived_queries"]) {
        if (!q.is_string()) return "\"derived_queries\" entries must all be strings";
    }
    return std::nullopt;
}

}  // namespace

bool ProbeSet::contains_query(const std::string& query) const {
    auto match = [&](const ProbeTuple& t) { return t.query == query; };
    return std::any_of(live_.begin(), live_.end(), match) ||
           std::any_of(dropped_.begin(), dropped_.end(), match);
}

void ProbeSet::add(ProbeTuple tuple) {
    for (const auto& t : live_) {
        if (t.query == tuple.query) {
            throw Error(ErrorKind::config, "duplicate live probe query: " + tuple.query);
        }
    }
    live_.push_back(std::move(tuple));
}

std::optional<ProbeTuple> ProbeSet::drop_min() {
    if (live_.empty()) return std::nullopt;
    auto worst = std::min_element(live_.begin(), live_.end(),
                                  [](const ProbeTuple& a, const ProbeTuple& b) {
                                      if (a.score != b.score) return a.score < b.score;
                                      if (a.iteration != b.iteration) return a.iteration < b.iteration;
                                      return a.query < b.query;
                                  });
    ProbeTuple dropped = *worst;
    live_.erase(worst);
    dropped_.push_back(dropped);
    return dropped;
}

std::optional<double> ProbeSet::threshold() const {
    if (live_.empty()) return std::nullopt;
    double min = live_.front().score;
    for (const auto& t : live_) min = std::min(min, t.score);
    return min;
}

int ProbeSet::max_iteration() const {
    int max = 0;
    for (const auto& t : live_) max = std::max(max, t.iteration);
    for (const auto& t : dropped_) max = std::max(max, t.iteration);
    return max;
}

std::vector<std::pair<std::string, double>> prune_by_threshold(
    const std::vector<std::pair<std::string, double>>& candidates, double tau) {
    std::vector<std::pair<std::string, double>> kept;
    for (const auto& c : candidates) {
        if (c.second > tau) kept.push_back(c);
    }
    return kept;
}

ProbeEngine::ProbeEngine(std::shared_ptr<SearchBackend> search,
                         std::shared_ptr<LlmGateway> generation,
                         std::shared_ptr<QrasEvaluator> evaluator, DecodingConfig decoding,
                         ProbeEventSink sink)
    : search_(std::move(search)),
      generation_(std::move(generation)),
      evaluator_(std::move(evaluator)),
      decoding_(decoding),
      sink_(std::move(sink)) {
    if (!search_ || !generation_ || !evaluator_) {
        throw Error(ErrorKind::config, "probe engine requires search, generation, and evaluator");
    }
    generation_->register_schema(kProbeCandidatesSchemaId, validate_candidates);
}

void ProbeEngine::emit(const ProbeTuple& tuple, bool dropped) {
    if (!sink_) return;
    sink_(json{{"type", "probe"},
               {"iteration", tuple.iteration},
               {"query", tuple.query},
               {"score", tuple.score},
               {"dims",
                {{"topical_relevance", tuple.dims.topical_relevance},
                 {"info_density", tuple.dims.info_density},
                 {"noise_level", tuple.dims.noise_level}}},
               {"analysis", tuple.analysis},
               {"dropped", dropped}});
}

std::vector<std::string> ProbeEngine::generate_candidates(const std::string& q0,
                                                          const ProbeSet& set,
                                                          const Observation& last_obs,
                                                          const ProbeBudget& budget) {
    check_budget(budget);
    json results = json::array();
    for (const auto& doc : last_obs.documents) {
        results.push_back({{"title", doc.title}, {"snippet", doc.snippet}, {"url", doc.url}});
    }
    // The probed-so-far list distinguishes successive iterations (the origin
    // query and its results never change) and steers the generator away from
    // repeats; local dedup below enforces it regardless.
    json probed = json::array();
    for (const auto& t : set.live()) probed.push_back(t.query);
    for (const auto& t : set.dropped()) probed.push_back(t.query);
    std::vector<ChatMessage> messages = {
        system_msg(std::string(prompts::generator_system_v1())),
        user_msg(json{{"query", q0},
                      {"results", std::move(results)},
                      {"already_probed", std::move(probed)}}
                     .dump())};

    json raw = generation_->complete_json(messages, decoding_, kProbeCandidatesSchemaId);

    std::vector<std::string> accepted;
    for (const auto& entry : raw["derived_queries"]) {
        if (static_cast<int>(accepted.size()) >= budget.max_candidates_per_iteration) break;
        std::string candidate = entry.get<std::string>();
        int words = word_count(candidate);
        if (words == 0 || words > 6) {
            ++validation_rejects_;
            continue;
        }
        if (candidate == q0 || set.contains_query(candidate) ||
            std::find(accepted.begin(), accepted.end(), candidate) != accepted.end()) {
            continue;
        }
        accepted.push_back(std::move(candidate));
    }
    return accepted;
}

ProbeSet ProbeEngine::step_with_candidates(ProbeSet set,
                                           const std::vector<std::string>& candidates,
                                           int iteration) {
    std::vector<JudgeItem> items;
    for (const auto& candidate : candidates) {
        try {
            // Probe searches always use the standard result depth.
            Observation obs = search_->search({candidate, 10});
            items.push_back({candidate, std::move(obs)});
        } catch (const std::exception& e) {
            ++search_failures_;
            std::cerr << "warning: probe search failed for \"" << candidate << "\": " << e.what()
                      << "\n";
        }
    }
    if (items.empty()) return set;  // every search failed; nothing to score or drop

    auto scores = evaluator_->score_batch(items);
    for (const auto& result : scores) {
        ProbeTuple tuple;
        tuple.query = result.query;
        tuple.score = result.overall;
        tuple.analysis = result.analysis;
        tuple.iteration = iteration;
        tuple.dims = result.dims;
        set.add(tuple);
        emit(tuple, false);
    }
    if (auto dropped = set.drop_min()) emit(*dropped, true);
    return set;
}

ProbeSet ProbeEngine::probe_iteration(const std::string& q0, ProbeSet set,
                                      const ProbeBudget& budget) {
    check_budget(budget);
    Observation obs = search_->search({q0, 10});
    auto candidates = generate_candidates(q0, set, obs, budget);
    if (candidates.empty()) return set;  // prune step: set unchanged
    int iteration = set.max_iteration() + 1;
    return step_with_candidates(std::move(set), candidates, iteration);
}

GuidanceReport ProbeEngine::probe_with_obs(const std::string& q0, const Observation& obs,
                                           const ProbeBudget& budget) {
    GuidanceReport report;
    report.origin_query = q0;

    ProbeSet set;
    for (int t = 1; t <= budget.max_iterations; ++t) {
        try {
            auto candidates = generate_candidates(q0, set, obs, budget);
            report.iterations_run = t;
            if (candidates.empty()) {  // prune signal: converged, stop probing
                report.terminated_early = true;
                break;
            }
            set = step_with_candidates(std::move(set), candidates, t);
        } catch (const std::exception& e) {
            std::cerr << "warning: probe iteration " << t << " failed: " << e.what() << "\n";
            report.iterations_run = t;
            report.terminated_early = true;
            report.degraded = true;
            break;
        }
    }

    report.tuples = set.live();
    std::sort(report.tuples.begin(), report.tuples.end(),
              [](const ProbeTuple& a, const ProbeTuple& b) {
                  if (a.score != b.score) return a.score > b.score;
                  if (a.iteration != b.iteration) return a.iteration < b.iteration;
                  return a.query < b.query;
              });
    return report;
}

GuidanceReport ProbeEngine::run_probing(const std::string& q0, const ProbeBudget& budget) {
    check_budget(budget);
    if (budget.max_iterations == 0) {
        GuidanceReport report;
        report.origin_query = q0;
        return report;
    }
    Observation obs = search_->search({q0, 10});
    return probe_with_obs(q0, obs, budget);
}

std::pair<Observation, GuidanceReport> ProbeEngine::wedas_search(const SearchQuery& q0,
                                                                 const ProbeBudget& budget) {
    check_budget(budget);
    Observation obs = search_->search(q0);  // evidence; failure here is fatal

    GuidanceReport report;
    report.origin_query = q0.text;
    if (budget.max_iterations > 0) {
        try {
            report = probe_with_obs(q0.text, obs, budget);
        } catch (const std::exception& e) {
            std::cerr << "warning: probing failed for \"" << q0.text << "\": " << e.what() << "\n";
            report = GuidanceReport{};
            report.origin_query = q0.text;
            report.degraded = true;
        }
    }
    return {std::move(obs), std::move(report)};
}

}  // namespace wedas
