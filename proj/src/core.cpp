#include "thinkrank/core.hpp"

#include <algorithm>
#include <cmath>

namespace thinkrank {

std::vector<RunEntry> stable_rank(const std::string& query_id,
                                  std::vector<ScoredCandidate> candidates,
                                  const std::string& run_tag) {
    if (candidates.empty()) {
        throw ValidationError("stable_rank: empty candidate list for query " + query_id);
    }
    for (const auto& c : candidates) {
        if (!std::isfinite(c.score)) {
            throw ValidationError("stable_rank: non-finite score for doc " + c.doc_id);
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const ScoredCandidate& a, const ScoredCandidate& b) {
                         if (a.score != b.score) return a.score > b.score;
                         return a.first_stage_rank < b.first_stage_rank;
                     });
    std::vector<RunEntry> out;
    out.reserve(candidates.size());
    int rank = 1;
    for (const auto& c : candidates) {
        out.push_back(RunEntry{query_id, c.doc_id, rank++, c.score, run_tag});
    }
    return out;
}

bool binarize(int grade, int threshold) {
    return grade >= threshold;
}

QrelMap group_qrels(std::span<const QrelEntry> entries) {
    QrelMap map;
    for (const auto& e : entries) {
        map[e.query_id][e.doc_id] = e.grade;
    }
    return map;
}

std::map<std::string, std::vector<RunEntry>> group_run(std::span<const RunEntry> entries) {
    std::map<std::string, std::vector<RunEntry>> map;
    for (const auto& e : entries) {
        map[e.query_id].push_back(e);
    }
    for (auto& [qid, list] : map) {
        std::sort(list.begin(), list.end(),
                  [](const RunEntry& a, const RunEntry& b) { return a.rank < b.rank; });
    }
    return map;
}

} // namespace thinkrank
