#include "thinkrank/bm25.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace thinkrank {

std::vector<std::string> tokenize(std::string_view text,
                                  const std::unordered_set<std::string>* stopwords) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char ch : text) {
        if (std::isalnum(ch)) {
            current.push_back(static_cast<char>(std::tolower(ch)));
        } else if (!current.empty()) {
            if (!stopwords || !stopwords->count(current)) tokens.push_back(current);
            current.clear();
        }
    }
    if (!current.empty() && (!stopwords || !stopwords->count(current))) {
        tokens.push_back(current);
    }
    return tokens;
}

double bm25_idf(std::size_t doc_count, std::size_t df) {
    const double n = static_cast<double>(doc_count);
    const double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

Bm25Index build_index(std::span<const Document> corpus, Bm25Params params,
                      std::unordered_set<std::string> stopwords) {
    if (corpus.empty()) throw ValidationError("build_index: empty corpus");
    if (params.k1 <= 0.0) throw ValidationError("build_index: k1 must be > 0");
    if (params.b < 0.0 || params.b > 1.0) throw ValidationError("build_index: b must be in [0,1]");

    Bm25Index index;
    index.params = params;
    index.stopwords = std::move(stopwords);
    index.doc_ids.reserve(corpus.size());
    index.doc_lengths.reserve(corpus.size());

    std::uint64_t total_len = 0;
    for (const auto& doc : corpus) {
        const auto ordinal = static_cast<std::uint32_t>(index.doc_ids.size());
        std::string body = doc.title.empty() ? doc.text : doc.title + " " + doc.text;
        auto tokens = tokenize(body, &index.stopwords);

        std::unordered_map<std::string, std::uint32_t> tf;
        for (auto& t : tokens) ++tf[t];
        for (auto& [term, count] : tf) {
            index.postings[term].push_back(Posting{ordinal, count});
        }
        index.doc_ids.push_back(doc.id);
        index.doc_lengths.push_back(static_cast<std::uint32_t>(tokens.size()));
        total_len += tokens.size();
    }
    index.avgdl = static_cast<double>(total_len) / static_cast<double>(corpus.size());
    return index;
}

std::vector<ScoredCandidate> retrieve(const Bm25Index& index, const Query& query, std::size_t k) {
    if (k < 1) throw ValidationError("retrieve: k must be >= 1");

    auto terms = tokenize(query.text, &index.stopwords);
    // Distinct terms in first-occurrence order; each query term contributes
    // once, and the fixed order keeps float accumulation deterministic.
    std::vector<std::string> distinct;
    std::unordered_set<std::string> seen;
    for (auto& t : terms) {
        if (seen.insert(t).second) distinct.push_back(t);
    }

    const double k1 = index.params.k1;
    const double b = index.params.b;
    const std::size_t n_docs = index.doc_count();

    std::vector<double> scores(n_docs, 0.0);
    std::vector<bool> touched(n_docs, false);
    for (const auto& term : distinct) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) continue;
        const double idf = bm25_idf(n_docs, it->second.size());
        for (const Posting& p : it->second) {
            const double dl = index.doc_lengths[p.doc];
            if (dl == 0.0 && b == 1.0) continue;  // tf term defined as 0
            const double tf = p.tf;
            const double denom = tf + k1 * (1.0 - b + b * dl / index.avgdl);
            scores[p.doc] += idf * tf * (k1 + 1.0) / denom;
            touched[p.doc] = true;
        }
    }

    std::vector<std::uint32_t> hits;
    for (std::uint32_t d = 0; d < n_docs; ++d) {
        if (touched[d]) hits.push_back(d);
    }
    const std::size_t top = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(top), hits.end(),
                      [&scores](std::uint32_t a, std::uint32_t b2) {
                          if (scores[a] != scores[b2]) return scores[a] > scores[b2];
                          return a < b2;
                      });
    hits.resize(top);

    std::vector<ScoredCandidate> out;
    out.reserve(top);
    int rank = 1;
    for (auto d : hits) {
        out.push_back(ScoredCandidate{index.doc_ids[d], rank++, scores[d]});
    }
    return out;
}

} // namespace thinkrank
