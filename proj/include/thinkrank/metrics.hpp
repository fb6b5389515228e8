#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "thinkrank/core.hpp"
#include "thinkrank/trec_io.hpp"

namespace thinkrank {

// Per-query and mean metric values. Queries without a single relevant
// judgment are excluded from nDCG/MRR means and counted in `excluded`.
struct MetricReport {
    std::map<std::string, std::map<std::string, double>> per_query;  // qid -> metric -> value
    std::map<std::string, double> means;
    std::vector<int> k_values;
    std::size_t query_count = 0;
    std::map<std::string, std::size_t> excluded;  // metric -> queries skipped
};

// The per-query primitives take one query's run entries sorted by rank and
// that query's doc_id -> grade map.

// Linear gain, log2(i+1) discount; unjudged docs gain 0; IDCG over all
// judged docs truncated at k. nullopt when the query has no relevant doc.
std::optional<double> ndcg_at_k(std::span<const RunEntry> run, const QueryQrels& qrels, int k);

// 1/rank of the first doc with grade >= rel_threshold within the top k,
// 0 when none.
double mrr_at_k(std::span<const RunEntry> run, const QueryQrels& qrels, int k,
                int rel_threshold = 1);

// Fraction of the top min(k, n) docs holding any judgment, grade 0 included.
double judged_at_k(std::span<const RunEntry> run, const QueryQrels& qrels, int k);

// Paired rank-change metric for instruction following. Per changed doc with
// original rank R_og and instructed rank R_new:
//   delta = R_og/R_new - 1   when R_new < R_og,
//   delta = 1 - R_new/R_og   otherwise.
// A doc absent from a run ranks at run length + 1; queries with no changed
// docs are excluded. Returns the mean over queries of per-query doc means
// (raw value; reports display it x100).
double p_mrr(const std::map<std::string, std::vector<RunEntry>>& run_original,
             const std::map<std::string, std::vector<RunEntry>>& run_instructed,
             const std::map<std::string, std::vector<std::string>>& changed_docs);

struct PairwiseResult {
    double accuracy = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
    std::size_t flagged = 0;  // instances where the scorer failed
};

using PairScorer = std::function<double(const Query&, const Document&)>;

// An instance counts iff both queries score their own document strictly
// above the counterpart's; ties and scorer failures count as incorrect.
PairwiseResult pairwise_accuracy(std::span<const PairedInstance> instances,
                                 const PairScorer& scorer);

// Aggregate evaluation. `metric_names` from {"ndcg", "mrr", "judged"};
// columns expand per k as e.g. "ndcg@10".
MetricReport evaluate(std::span<const RunEntry> run, std::span<const QrelEntry> qrels,
                      const std::vector<int>& k_values,
                      const std::set<std::string>& metric_names, int rel_threshold = 1);

// Machine-readable keyed lines and an aligned table for terminals.
void write_report_keyed(const MetricReport& report, std::ostream& out);
MetricReport read_report_keyed(std::istream& in);
std::string format_report_table(const MetricReport& report);
void write_report_csv(const MetricReport& report, std::ostream& out);

} // namespace thinkrank
