#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "thinkrank/core.hpp"

namespace thinkrank {

struct Bm25Params {
    double k1 = 1.5;  // term-frequency saturation
    double b = 0.75;  // document-length normalization, in [0,1]
};

struct Posting {
    std::uint32_t doc = 0;  // ordinal into doc_ids
    std::uint32_t tf = 0;
};

// Inverted index over title + " " + text. Immutable once built; safe to
// query from any number of threads.
struct Bm25Index {
    std::unordered_map<std::string, std::vector<Posting>> postings;
    std::vector<std::uint32_t> doc_lengths;
    std::vector<std::string> doc_ids;
    double avgdl = 0.0;
    Bm25Params params;
    std::unordered_set<std::string> stopwords;

    std::size_t doc_count() const { return doc_ids.size(); }
};

// Lowercases, splits on any non-alphanumeric byte, drops empty tokens and
// configured stopwords. No stemming.
std::vector<std::string> tokenize(std::string_view text,
                                  const std::unordered_set<std::string>* stopwords = nullptr);

// Lucene-style IDF: ln(1 + (N - df + 0.5) / (df + 0.5)); nonnegative for
// all df <= N.
double bm25_idf(std::size_t doc_count, std::size_t df);

Bm25Index build_index(std::span<const Document> corpus, Bm25Params params = {},
                      std::unordered_set<std::string> stopwords = {});

// Top-k by score descending, ties by ascending document ordinal. A query
// that tokenizes to nothing (or matches nothing) yields an empty list.
std::vector<ScoredCandidate> retrieve(const Bm25Index& index, const Query& query, std::size_t k);

} // namespace thinkrank
