#include "wedas/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace wedas {

namespace {

bool is_unicode_space(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_token_char(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    }
    // Non-ASCII: anything that is not whitespace contributes to a token, so
    // scripts without ASCII-style word characters still tokenize.
    return !is_unicode_space(cp);
}

char32_t ascii_lower(char32_t cp) {
    return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

using TermCounts = std::unordered_map<std::string, std::size_t>;

TermCounts term_counts(const std::vector<std::string>& tokens) {
    TermCounts counts;
    for (const auto& t : tokens) ++counts[t];
    return counts;
}

}  // namespace

std::vector<char32_t> to_codepoints(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char b0 = static_cast<unsigned char>(text[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            out.push_back(b0);  // stray continuation byte
            ++i;
            continue;
        }
        if (i + len > text.size()) {
            out.push_back(b0);
            ++i;
            continue;
        }
        bool valid = true;
        for (std::size_t j = 1; j < len; ++j) {
            unsigned char bj = static_cast<unsigned char>(text[i + j]);
            if ((bj & 0xC0) != 0x80) {
                valid = false;
                break;
            }
            cp = (cp << 6) | (bj & 0x3F);
        }
        if (!valid) {
            out.push_back(b0);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

NormalizedText normalize(std::string_view text) {
    NormalizedText result;
    result.raw.assign(text);

    std::vector<char32_t> cps = to_codepoints(text);
    std::vector<char32_t> cleaned;
    cleaned.reserve(cps.size());
    bool pending_space = false;
    for (char32_t cp : cps) {
        if (is_unicode_space(cp)) {
            if (!cleaned.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            cleaned.push_back(U' ');
            pending_space = false;
        }
        cleaned.push_back(ascii_lower(cp));
    }

    std::string token;
    for (char32_t cp : cleaned) {
        append_utf8(result.normalized, cp);
        if (is_token_char(cp)) {
            append_utf8(token, cp);
        } else if (!token.empty()) {
            result.tokens.push_back(std::move(token));
            token.clear();
        }
    }
    if (!token.empty()) result.tokens.push_back(std::move(token));
    return result;
}

std::size_t levenshtein(const std::vector<char32_t>& a, const std::vector<char32_t>& b) {
    const std::vector<char32_t>& shorter = a.size() <= b.size() ? a : b;
    const std::vector<char32_t>& longer = a.size() <= b.size() ? b : a;
    const std::size_t n = shorter.size();

    std::vector<std::size_t> row(n + 1);
    for (std::size_t i = 0; i <= n; ++i) row[i] = i;

    for (std::size_t j = 1; j <= longer.size(); ++j) {
        std::size_t diag = row[0];
        row[0] = j;
        for (std::size_t i = 1; i <= n; ++i) {
            std::size_t saved = row[i];
            if (shorter[i - 1] == longer[j - 1]) {
                row[i] = diag;
            } else {
                row[i] = 1 + std::min({row[i - 1], row[i], diag});
            }
            diag = saved;
        }
    }
    return row[n];
}

void CorpusStats::add_document(const std::vector<std::string>& tokens) {
    ++doc_count;
    std::unordered_set<std::string_view> seen;
    for (const auto& t : tokens) {
        if (seen.insert(t).second) ++doc_frequency[t];
    }
}

double CorpusStats::idf(std::string_view term) const {
    auto it = doc_frequency.find(std::string(term));
    double df = it == doc_frequency.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((1.0 + static_cast<double>(doc_count)) / (1.0 + df)) + 1.0;
}

double jaccard(const NormalizedText& q, const NormalizedText& o) {
    std::unordered_set<std::string_view> sq(q.tokens.begin(), q.tokens.end());
    std::unordered_set<std::string_view> so(o.tokens.begin(), o.tokens.end());
    if (sq.empty() && so.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : sq) {
        if (so.count(t)) ++inter;
    }
    std::size_t uni = sq.size() + so.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double nls(const NormalizedText& q, const NormalizedText& o) {
    std::vector<char32_t> a = to_codepoints(q.normalized);
    std::vector<char32_t> b = to_codepoints(o.normalized);
    std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    double dist = static_cast<double>(levenshtein(a, b));
    return 1.0 - dist / static_cast<double>(longest);
}

double tfidf_cosine(const NormalizedText& q, const NormalizedText& o, const CorpusStats& stats) {
    TermCounts tq = term_counts(q.tokens);
    TermCounts to = term_counts(o.tokens);
    if (tq.empty() || to.empty()) return 0.0;

    const bool use_idf = stats.doc_count >= 2;
    auto weight = [&](const TermCounts& counts, const std::string& term) {
        auto it = counts.find(term);
        if (it == counts.end()) return 0.0;
        double tf = static_cast<double>(it->second);
        return use_idf ? tf * stats.idf(term) : tf;
    };

    double dot = 0.0, norm_q = 0.0, norm_o = 0.0;
    for (const auto& [term, count] : tq) {
        double wq = use_idf ? static_cast<double>(count) * stats.idf(term) : static_cast<double>(count);
        norm_q += wq * wq;
        dot += wq * weight(to, term);
    }
    for (const auto& [term, count] : to) {
        double wo = use_idf ? static_cast<double>(count) * stats.idf(term) : static_cast<double>(count);
        norm_o += wo * wo;
    }
    if (norm_q == 0.0 || norm_o == 0.0) return 0.0;
    double cosine = dot / (std::sqrt(norm_q) * std::sqrt(norm_o));
    return std::clamp(cosine, 0.0, 1.0);
}

AlignmentTriple alignment_triple(std::string_view q, std::string_view o, const CorpusStats& stats) {
    NormalizedText nq = normalize(q);
    NormalizedText no = normalize(o);
    AlignmentTriple triple;
    triple.tfidf = tfidf_cosine(nq, no, stats);
    triple.jaccard = jaccard(nq, no);
    triple.nls = nls(nq, no);
    return triple;
}

}  // namespace wedas
