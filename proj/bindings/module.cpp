// Python bindings for the alignment metrics, local search ranking, probe-set
// thresholding, and the offline analytics operations. String inputs are
// normalized internally so callers can pass raw text.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wedas/agent_core.hpp"
#include "wedas/analysis.hpp"
#include "wedas/probe_engine.hpp"
#include "wedas/search_env.hpp"
#include "wedas/text_metrics.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

wedas::CorpusStats stats_from_docs(const std::vector<std::string>& corpus) {
    wedas::CorpusStats stats;
    for (const auto& doc : corpus) stats.add_document(wedas::normalize(doc).tokens);
    return stats;
}

wedas::Observation observation_from_results(const std::string& query,
                                            const std::vector<py::dict>& results) {
    wedas::Observation obs;
    obs.query = {query, static_cast<int>(results.size())};
    obs.backend_id = "python";
    int rank = 1;
    for (const auto& r : results) {
        wedas::Document d;
        if (r.contains("title")) d.title = r["title"].cast<std::string>();
        if (r.contains("snippet")) d.snippet = r["snippet"].cast<std::string>();
        if (r.contains("url")) d.url = r["url"].cast<std::string>();
        d.rank = rank++;
        obs.documents.push_back(std::move(d));
    }
    return obs;
}

py::dict document_to_dict(const wedas::Document& d) {
    py::dict out;
    out["title"] = d.title;
    out["snippet"] = d.snippet;
    out["url"] = d.url;
    out["rank"] = d.rank;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "query/observation alignment metrics and offline analytics";

    py::register_exception<wedas::Error>(m, "EngineError");

    m.def(
        "normalize",
        [](const std::string& text) {
            auto n = wedas::normalize(text);
            py::dict out;
            out["normalized"] = n.normalized;
            out["tokens"] = n.tokens;
            return out;
        },
        py::arg("text"),
        "Lowercase, collapse whitespace, and tokenize; returns {normalized, tokens}.");

    m.def(
        "levenshtein",
        [](const std::string& a, const std::string& b) {
            return wedas::levenshtein(wedas::to_codepoints(a), wedas::to_codepoints(b));
        },
        py::arg("a"), py::arg("b"), "Codepoint-level edit distance.");

    m.def(
        "jaccard",
        [](const std::string& a, const std::string& b) {
            return wedas::jaccard(wedas::normalize(a), wedas::normalize(b));
        },
        py::arg("a"), py::arg("b"), "Token-set Jaccard similarity of two texts.");

    m.def(
        "nls",
        [](const std::string& a, const std::string& b) {
            return wedas::nls(wedas::normalize(a), wedas::normalize(b));
        },
        py::arg("a"), py::arg("b"),
        "Normalized Levenshtein similarity of two texts (1 - distance / max length).");

    m.def(
        "tfidf_cosine",
        [](const std::string& a, const std::string& b, const std::vector<std::string>& corpus) {
            return wedas::tfidf_cosine(wedas::normalize(a), wedas::normalize(b),
                                       stats_from_docs(corpus));
        },
        py::arg("a"), py::arg("b"), py::arg("corpus") = std::vector<std::string>{},
        "TF-IDF cosine similarity; document frequencies fitted over `corpus` "
        "(raw term frequencies when empty).");

    m.def(
        "alignment",
        [](const std::string& query, const std::string& observation,
           const std::vector<std::string>& corpus) {
            auto t = wedas::alignment_triple(query, observation, stats_from_docs(corpus));
            py::dict out;
            out["tfidf"] = t.tfidf;
            out["jaccard"] = t.jaccard;
            out["nls"] = t.nls;
            return out;
        },
        py::arg("query"), py::arg("observation"), py::arg("corpus") = std::vector<std::string>{},
        "All three alignment metrics between a query and an observation text.");

    m.def(
        "textualize",
        [](const std::string& query, const std::vector<py::dict>& results, bool include_titles) {
            return wedas::textualize(observation_from_results(query, results), include_titles)
                .text;
        },
        py::arg("query"), py::arg("results"), py::arg("include_titles") = false,
        "Concatenate result snippets (optionally titles) into the text that "
        "alignment metrics score.");

    m.def(
        "rank_local",
        [](const std::vector<py::dict>& docs, const std::string& query, int k) {
            std::vector<wedas::CorpusDoc> corpus_docs;
            for (const auto& d : docs) {
                wedas::CorpusDoc doc;
                doc.doc_id = d["doc_id"].cast<std::string>();
                if (d.contains("title")) doc.title = d["title"].cast<std::string>();
                if (d.contains("body")) doc.body = d["body"].cast<std::string>();
                if (d.contains("url")) doc.url = d["url"].cast<std::string>();
                corpus_docs.push_back(std::move(doc));
            }
            auto corpus = wedas::LocalCorpus::from_documents(corpus_docs);
            auto obs = wedas::rank_local(corpus, {query, k}, []() { return std::int64_t{0}; });
            std::vector<py::dict> out;
            for (const auto& d : obs.documents) out.push_back(document_to_dict(d));
            return out;
        },
        py::arg("docs"), py::arg("query"), py::arg("k") = 10,
        "Rank documents ({doc_id, title, body, url}) against a query by "
        "TF-IDF cosine; deterministic, zero scores excluded.");

    m.def(
        "prune_by_threshold",
        [](const std::vector<std::pair<std::string, double>>& candidates, double tau) {
            return wedas::prune_by_threshold(candidates, tau);
        },
        py::arg("candidates"), py::arg("tau"),
        "Keep (query, score) pairs scoring strictly above tau, in stable order.");

    m.def(
        "grade_answer",
        [](const std::string& answer, const std::optional<std::string>& ground_truth) {
            return wedas::to_string(wedas::grade_answer(answer, ground_truth));
        },
        py::arg("answer"), py::arg("ground_truth") = std::nullopt,
        "Normalized exact-match grading: 'success', 'failure', or 'unknown'.");

    m.def(
        "pass_at_k",
        [](const std::vector<std::vector<bool>>& results, int k) {
            return wedas::pass_at_k(results, k).value;
        },
        py::arg("results"), py::arg("k") = 1,
        "pass@k over per-task trial outcomes (rows of equal length).");

    m.def(
        "eig_bound_check",
        [](const std::string& model_json) {
            auto report = wedas::eig_bound_check(wedas::toy_model_from_json(json::parse(model_json)));
            std::vector<py::dict> out;
            for (const auto& q : report.queries) {
                py::dict row;
                row["name"] = q.name;
                row["eig"] = q.eig;
                row["expected_relevance"] = q.expected_relevance;
                row["bound"] = q.bound;
                row["holds"] = q.holds;
                out.push_back(std::move(row));
            }
            return out;
        },
        py::arg("model_json"),
        "Exact-enumeration information-gain bound check over a JSON toy model; "
        "one {name, eig, expected_relevance, bound, holds} row per query.");
}
