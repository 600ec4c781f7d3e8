#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wedas/common.hpp"
#include "wedas/error.hpp"
#include "wedas/text_metrics.hpp"

namespace wedas {

struct SearchQuery {
    std::string text;
    int k = 10;
};

struct Document {
    std::string title;
    std::string snippet;
    std::string url;
    int rank = 0;
};

struct Observation {
    SearchQuery query;
    std::vector<Document> documents;
    std::string backend_id;
    std::int64_t fetched_at = 0;
};

struct TextualizedObservation {
    std::string text;
    bool include_titles = false;
};

// Snippet-only concatenation by default; with titles, title then snippet per
// rank, all joined by a single newline.
TextualizedObservation textualize(const Observation& obs, bool include_titles = false);

nlohmann::json observation_to_json(const Observation& obs);
Observation observation_from_json(const nlohmann::json& j);

class SearchBackend {
public:
    virtual ~SearchBackend() = default;
    virtual Observation search(const SearchQuery& query) = 0;
    virtual std::string id() const = 0;
};

struct CorpusDoc {
    std::string doc_id;
    std::string title;
    std::string body;
    std::string url;
};

// Immutable in-memory document collection with a prebuilt lexical index.
class LocalCorpus {
public:
    LocalCorpus() = default;
    static LocalCorpus from_documents(std::vector<CorpusDoc> docs);
    // JSONL, one {"doc_id", "title", "body", "url"} per line.
    static LocalCorpus from_jsonl(const std::filesystem::path& path);

    const std::vector<CorpusDoc>& documents() const { return docs_; }
    const std::vector<NormalizedText>& normalized_bodies() const { return bodies_; }
    const CorpusStats& stats() const { return stats_; }
    bool empty() const { return docs_.empty(); }

private:
    std::vector<CorpusDoc> docs_;
    std::vector<NormalizedText> bodies_;
    CorpusStats stats_;
};

// Deterministic TF-IDF cosine ranking over the corpus. Zero-score documents
// are excluded; ties break by ascending doc_id.
Observation rank_local(const LocalCorpus& corpus, const SearchQuery& query,
                       const Clock& clock = system_clock_ms);

class LocalSearchBackend : public SearchBackend {
public:
    explicit LocalSearchBackend(LocalCorpus corpus, Clock clock = system_clock_ms)
        : corpus_(std::move(corpus)), clock_(std::move(clock)) {}

    Observation search(const SearchQuery& query) override;
    std::string id() const override { return "local"; }
    const LocalCorpus& corpus() const { return corpus_; }

private:
    LocalCorpus corpus_;
    Clock clock_;
};

// On-disk observation cache keyed by (backend_id, query text, k); one JSON
// file per key hash, written via rename so readers never see partial files.
class ObservationCache {
public:
    explicit ObservationCache(std::filesystem::path dir);

    static std::string key_hash(const std::string& backend_id, const std::string& text, int k);
    std::optional<Observation> load(const std::string& backend_id, const SearchQuery& query) const;
    void store(const Observation& obs) const;

private:
    std::filesystem::path dir_;
};

struct SerperConfig {
    std::string endpoint = "https://google.serper.dev/search";
    std::string api_key;  // typically from env SERPER_API_KEY
    HttpRetryPolicy retry;
    std::filesystem::path cache_dir;  // empty disables caching
};

// Serper-compatible live backend: POST {"q", "num"} with X-API-KEY header,
// parsing the "organic" result array.
class SerperSearchBackend : public SearchBackend {
public:
    explicit SerperSearchBackend(SerperConfig config, Clock clock = system_clock_ms);

    Observation search(const SearchQuery& query) override;
    std::string id() const override { return "serper"; }

    // Malformed result items dropped during parsing (e.g. empty url).
    std::size_t warning_count() const { return warnings_; }

private:
    SerperConfig config_;
    Clock clock_;
    std::unique_ptr<ObservationCache> cache_;
    std::size_t warnings_ = 0;
};

// Parses a Serper response body; malformed items are dropped and counted.
std::vector<Document> parse_serper_organic(const nlohmann::json& body, int k,
                                           std::size_t* dropped = nullptr);

}  // namespace wedas
