#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thinkrank/core.hpp"

namespace thinkrank {

// One row of the human-annotation sheet: a top-k document that is unjudged
// or judged below the relevance threshold in at least one run.
struct AnnotationItem {
    std::string query_id;
    std::string doc_id;
    std::string query_text;
    std::string doc_text;
    std::vector<std::string> source_runs;                   // run tags surfacing the doc
    std::vector<std::pair<std::string, int>> rank_positions;  // (run_tag, rank)
    std::optional<int> current_grade;  // absent = unjudged
    std::optional<int> proposed_grade; // filled by the annotator
};

// Union over runs of top-k docs that are unjudged or judged below
// rel_threshold, de-duplicated on (query_id, doc_id) with source runs
// accumulated. Output sorted by (query_id, doc_id).
std::vector<AnnotationItem> find_audit_set(const std::vector<std::vector<RunEntry>>& runs,
                                           std::span<const QrelEntry> qrels, int k,
                                           int rel_threshold,
                                           const std::map<std::string, Query>& queries,
                                           const std::map<std::string, Document>& docs);

enum class ChangeCategory { unjudged_to_graded, changed_grade };

struct ChangeLogEntry {
    std::string query_id;
    std::string doc_id;
    std::optional<int> old_grade;
    int new_grade = 0;
    ChangeCategory category = ChangeCategory::unjudged_to_graded;
};

struct MergeResult {
    std::vector<QrelEntry> fixed;       // original order, new entries appended
    std::vector<ChangeLogEntry> log;
};

// Add-and-override: annotations replace existing grades and insert new
// entries. Every annotation must carry a proposed grade; two annotations
// proposing different grades for one (query_id, doc_id) are an error.
MergeResult merge_annotations(std::span<const QrelEntry> qrels,
                              std::span<const AnnotationItem> annotations);

struct RunDelta {
    std::string run_tag;
    double ndcg_original = 0.0;
    double ndcg_fixed = 0.0;
    double judged_original = 0.0;
    double judged_fixed = 0.0;

    double ndcg_delta() const { return ndcg_fixed - ndcg_original; }
    double judged_delta() const { return judged_fixed - judged_original; }
};

// Mean nDCG@k and Judged@k per run under both judgment sets.
std::vector<RunDelta> metric_delta(const std::vector<std::vector<RunEntry>>& runs,
                                   std::span<const QrelEntry> qrels_original,
                                   std::span<const QrelEntry> qrels_fixed, int k);

// CSV annotation sheet, hand-editable. doc_text is truncated to a
// 500-character excerpt on write.
void write_annotation_sheet(std::span<const AnnotationItem> items, std::ostream& out);
std::vector<AnnotationItem> read_annotation_sheet(std::istream& in);

void write_change_log(std::span<const ChangeLogEntry> log, std::ostream& out);

} // namespace thinkrank
