#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thinkrank/errors.hpp"

namespace thinkrank {

// One passage of the corpus. `title` empty means the record had none.
struct Document {
    std::string id;
    std::string title;
    std::string text;
};

struct Query {
    std::string id;
    std::string text;
    std::optional<std::string> instruction;  // instruction-following variants
    std::optional<std::string> dataset_key;  // selects a dataset-specific prompt
};

// Graded relevance judgment, TREC convention (integer grade >= 0).
struct QrelEntry {
    std::string query_id;
    std::string doc_id;
    int grade = 0;
};

// One line of a TREC run file. Within a query: ranks 1..n without gaps,
// scores nonincreasing with rank.
struct RunEntry {
    std::string query_id;
    std::string doc_id;
    int rank = 0;
    double score = 0.0;
    std::string run_tag;
};

// A candidate flowing from a first stage into the reranker. `score` is the
// stage's own score: calibrated probabilities in [0,1] from the reranker,
// unbounded lexical scores from BM25.
struct ScoredCandidate {
    std::string doc_id;
    int first_stage_rank = 0;
    double score = 0.0;
};

// Orders candidates by score descending, ties broken by ascending
// first_stage_rank, and assigns ranks 1..n. Throws ValidationError on an
// empty list or a non-finite score.
std::vector<RunEntry> stable_rank(const std::string& query_id,
                                  std::vector<ScoredCandidate> candidates,
                                  const std::string& run_tag);

// grade >= threshold. Callers pass threshold >= 1.
bool binarize(int grade, int threshold);

// doc_id -> grade for one query.
using QueryQrels = std::map<std::string, int>;
// query_id -> (doc_id -> grade).
using QrelMap = std::map<std::string, QueryQrels>;

QrelMap group_qrels(std::span<const QrelEntry> entries);

// query_id -> that query's entries sorted by rank.
std::map<std::string, std::vector<RunEntry>> group_run(std::span<const RunEntry> entries);

} // namespace thinkrank
