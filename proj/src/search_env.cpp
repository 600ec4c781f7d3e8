#include "wedas/search_env.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <unordered_set>

#include <httplib.h>

#include "http_support.hpp"

namespace wedas {

using nlohmann::json;

TextualizedObservation textualize(const Observation& obs, bool include_titles) {
    TextualizedObservation result;
    result.include_titles = include_titles;
    bool first = true;
    for (const auto& doc : obs.documents) {
        if (include_titles) {
            if (!first) result.text += '\n';
            result.text += doc.title;
            result.text += '\n';
            result.text += doc.snippet;
        } else {
            if (!first) result.text += '\n';
            result.text += doc.snippet;
        }
        first = false;
    }
    return result;
}

json observation_to_json(const Observation& obs) {
    json docs = json::array();
    for (const auto& d : obs.documents) {
        docs.push_back({{"title", d.title}, {"snippet", d.snippet}, {"url", d.url}, {"rank", d.rank}});
    }
    return json{{"query", {{"text", obs.query.text}, {"k", obs.query.k}}},
                {"documents", docs},
                {"backend_id", obs.backend_id},
                {"fetched_at", obs.fetched_at}};
}

Observation observation_from_json(const json& j) {
    Observation obs;
    obs.query.text = j.at("query").at("text").get<std::string>();
    obs.query.k = j.at("query").at("k").get<int>();
    obs.backend_id = j.at("backend_id").get<std::string>();
    obs.fetched_at = j.at("fetched_at").get<std::int64_t>();
    for (const auto& d : j.at("documents")) {
        Document doc;
        doc.title = d.at("title").get<std::string>();
        doc.snippet = d.at("snippet").get<std::string>();
        doc.url = d.at("url").get<std::string>();
        doc.rank = d.at("rank").get<int>();
        obs.documents.push_back(std::move(doc));
    }
    return obs;
}

LocalCorpus LocalCorpus::from_documents(std::vector<CorpusDoc> docs) {
    LocalCorpus corpus;
    std::unordered_set<std::string> ids;
    for (const auto& d : docs) {
        if (!ids.insert(d.doc_id).second) {
            throw Error(ErrorKind::config, "duplicate doc_id in corpus: " + d.doc_id);
        }
    }
    corpus.docs_ = std::move(docs);
    corpus.bodies_.reserve(corpus.docs_.size());
    for (const auto& d : corpus.docs_) {
        corpus.bodies_.push_back(normalize(d.body));
        corpus.stats_.add_document(corpus.bodies_.back().tokens);
    }
    return corpus;
}

LocalCorpus LocalCorpus::from_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open corpus file: " + path.string());
    std::vector<CorpusDoc> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::config,
                        "corpus line " + std::to_string(lineno) + " is not valid JSON: " + e.what());
        }
        CorpusDoc d;
        d.doc_id = j.at("doc_id").get<std::string>();
        d.title = j.value("title", "");
        d.body = j.value("body", "");
        d.url = j.value("url", "");
        docs.push_back(std::move(d));
    }
    return from_documents(std::move(docs));
}

Observation rank_local(const LocalCorpus& corpus, const SearchQuery& query, const Clock& clock) {
    if (corpus.empty()) throw Error(ErrorKind::empty_corpus, "local corpus has no documents");

    NormalizedText nq = normalize(query.text);
    struct Scored {
        double score;
        std::size_t index;
    };
    std::vector<Scored> scored;
    for (std::size_t i = 0; i < corpus.documents().size(); ++i) {
        double s = tfidf_cosine(nq, corpus.normalized_bodies()[i], corpus.stats());
        if (s > 0.0) scored.push_back({s, i});
    }
    std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return corpus.documents()[a.index].doc_id < corpus.documents()[b.index].doc_id;
    });
    if (static_cast<int>(scored.size()) > query.k) scored.resize(static_cast<std::size_t>(query.k));

    Observation obs;
    obs.query = query;
    obs.backend_id = "local";
    obs.fetched_at = clock();
    int rank = 1;
    for (const auto& s : scored) {
        const CorpusDoc& d = corpus.documents()[s.index];
        obs.documents.push_back({d.title, d.body, d.url, rank++});
    }
    return obs;
}

Observation LocalSearchBackend::search(const SearchQuery& query) {
    return rank_local(corpus_, query, clock_);
}

ObservationCache::ObservationCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create cache dir " + dir_.string() + ": " + ec.message());
}

std::string ObservationCache::key_hash(const std::string& backend_id, const std::string& text, int k) {
    std::string key = backend_id;
    key += '\x1f';
    key += text;
    key += '\x1f';
    key += std::to_string(k);
    return fnv1a64_hex(key);
}

std::optional<Observation> ObservationCache::load(const std::string& backend_id,
                                                  const SearchQuery& query) const {
    auto file = dir_ / (key_hash(backend_id, query.text, query.k) + ".json");
    std::ifstream in(file);
    if (!in) return std::nullopt;
    try {
        json j = json::parse(in);
        return observation_from_json(j);
    } catch (const std::exception&) {
        return std::nullopt;  // corrupt entries are treated as misses
    }
}

void ObservationCache::store(const Observation& obs) const {
    auto name = key_hash(obs.backend_id, obs.query.text, obs.query.k);
    auto final_path = dir_ / (name + ".json");
    auto tmp_path = dir_ / (name + ".json.tmp");
    {
        std::ofstream out(tmp_path);
        if (!out) throw Error(ErrorKind::io, "cannot write cache file " + tmp_path.string());
        out << observation_to_json(obs).dump(2) << '\n';
    }
    std::error_code ec;
    std::filesystem::rename(tmp_path, final_path, ec);
    if (ec) throw Error(ErrorKind::io, "cache rename failed: " + ec.message());
}

std::vector<Document> parse_serper_organic(const json& body, int k, std::size_t* dropped) {
    std::vector<Document> docs;
    if (!body.contains("organic") || !body["organic"].is_array()) return docs;
    for (const auto& item : body["organic"]) {
        if (static_cast<int>(docs.size()) >= k) break;
        if (!item.is_object()) {
            if (dropped) ++*dropped;
            continue;
        }
        std::string url = item.value("link", "");
        if (url.empty()) {
            if (dropped) ++*dropped;
            continue;
        }
        Document d;
        d.title = item.value("title", "");
        d.snippet = item.value("snippet", "");
        d.url = std::move(url);
        d.rank = static_cast<int>(docs.size()) + 1;
        docs.push_back(std::move(d));
    }
    return docs;
}

SerperSearchBackend::SerperSearchBackend(SerperConfig config, Clock clock)
    : config_(std::move(config)), clock_(std::move(clock)) {
    if (!config_.cache_dir.empty()) {
        cache_ = std::make_unique<ObservationCache>(config_.cache_dir);
    }
}

Observation SerperSearchBackend::search(const SearchQuery& query) {
    if (cache_) {
        if (auto hit = cache_->load(id(), query)) return *hit;
    }
    if (config_.api_key.empty()) {
        throw Error(ErrorKind::auth, "no Serper API key configured (set SERPER_API_KEY)");
    }

    auto url = detail::split_url(config_.endpoint);
    json req{{"q", query.text}, {"num", query.k}};
    std::string req_body = req.dump();

    std::string resp_body;
    for (int attempt = 0;; ++attempt) {
        httplib::Client client(url.base);
        client.set_connection_timeout(config_.retry.timeout_sec);
        client.set_read_timeout(config_.retry.timeout_sec);
        httplib::Headers headers{{"X-API-KEY", config_.api_key}};
        auto res = client.Post(url.path, headers, req_body, "application/json");

        if (res && res->status >= 200 && res->status < 300) {
            resp_body = res->body;
            break;
        }
        if (res && detail::auth_status(res->status)) {
            throw Error(ErrorKind::auth, "search endpoint rejected credentials (HTTP " +
                                             std::to_string(res->status) + ")");
        }
        bool retryable = !res || detail::retryable_status(res->status);
        if (!retryable) {
            throw Error(ErrorKind::network,
                        "search request failed with HTTP " + std::to_string(res->status));
        }
        if (attempt >= config_.retry.max_retries) {
            throw Error(ErrorKind::network, "search request failed after " +
                                                std::to_string(attempt + 1) + " attempts");
        }
        detail::backoff_sleep(config_.retry.base_delay_ms, attempt);
    }

    json parsed;
    try {
        parsed = json::parse(resp_body);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::network, std::string("unparseable search response: ") + e.what());
    }

    Observation obs;
    obs.query = query;
    obs.backend_id = id();
    obs.fetched_at = clock_();
    obs.documents = parse_serper_organic(parsed, query.k, &warnings_);
    if (cache_) cache_->store(obs);
    return obs;
}

}  // namespace wedas
