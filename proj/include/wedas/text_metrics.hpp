#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wedas {

// Lowercased, whitespace-collapsed form of a string plus its token list.
// Tokens are split on any non-alphanumeric codepoint; empty tokens dropped.
struct NormalizedText {
    std::string raw;
    std::string normalized;
    std::vector<std::string> tokens;
};

// Document-frequency statistics backing the idf weights of the TF-IDF cosine.
struct CorpusStats {
    std::size_t doc_count = 0;
    std::unordered_map<std::string, std::size_t> doc_frequency;

    // Counts each distinct term of one document once.
    void add_document(const std::vector<std::string>& tokens);

    // Smoothed idf: ln((1 + N) / (1 + df)) + 1. Unseen terms use df = 0.
    double idf(std::string_view term) const;
};

struct AlignmentTriple {
    double tfidf = 0.0;
    double jaccard = 0.0;
    double nls = 0.0;
};

NormalizedText normalize(std::string_view text);

// Decodes UTF-8 into codepoints; invalid bytes pass through as single codepoints.
std::vector<char32_t> to_codepoints(std::string_view text);

// Unit-cost edit distance over codepoint sequences (two-row Wagner-Fischer).
std::size_t levenshtein(const std::vector<char32_t>& a, const std::vector<char32_t>& b);

// Token-set overlap. Both sets empty -> 1.0; exactly one empty -> 0.0.
double jaccard(const NormalizedText& q, const NormalizedText& o);

// 1 - Lev(q, o) / max(|q|, |o|) on normalized strings, codepoint-level.
double nls(const NormalizedText& q, const NormalizedText& o);

// Cosine over tf*idf vectors; raw-TF cosine when stats.doc_count < 2.
// Either vector all-zero -> 0.0.
double tfidf_cosine(const NormalizedText& q, const NormalizedText& o, const CorpusStats& stats);

AlignmentTriple alignment_triple(std::string_view q, std::string_view o, const CorpusStats& stats);

}  // namespace wedas
