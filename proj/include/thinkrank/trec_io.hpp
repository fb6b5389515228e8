#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "thinkrank/core.hpp"

namespace thinkrank {

// Placeholder the dataset-specific prompt templates must contain; replaced
// by the query text at prompt-assembly time.
inline constexpr const char* kQueryPlaceholder = "FILL_QUERY_HERE";
// Literal marker inside templates, expanded to '\n' at assembly time.
inline constexpr const char* kNewlineMarker = "<newline>";

// dataset_key -> template body, stored verbatim.
struct PromptMap {
    std::map<std::string, std::string> entries;
};

// One NevIR-style contrastive pair: doc_a relevant to query_a, doc_b to
// query_b.
struct PairedInstance {
    std::string id;
    Query query_a;
    Query query_b;
    Document doc_a;
    Document doc_b;
};

// TREC qrels, 4 whitespace-separated columns: qid 0 docid grade.
std::vector<QrelEntry> parse_qrels(std::istream& in);
void write_qrels(std::span<const QrelEntry> entries, std::ostream& out);

// TREC run, 6 columns: qid Q0 docid rank score tag. Scores are written with
// 6 decimals. parse_run validates rank contiguity and score monotonicity per
// query unless allow_foreign is set (runs produced elsewhere).
std::vector<RunEntry> parse_run(std::istream& in, bool allow_foreign = false);
void write_run(std::span<const RunEntry> entries, std::ostream& out);

// JSONL corpus/queries, BEIR convention: _id, title, text / _id, text,
// optional instruction and dataset_key. Unknown keys are ignored.
std::vector<Document> load_corpus(std::istream& in);
void write_corpus(std::span<const Document> docs, std::ostream& out);
std::vector<Query> load_queries(std::istream& in);
void write_queries(std::span<const Query> queries, std::ostream& out);

// Keyed text file, one `dataset_key<TAB>template` record per line, '#'
// comment lines skipped. Templates are kept verbatim; <newline> markers are
// NOT expanded here. A template without FILL_QUERY_HERE is rejected.
PromptMap load_prompt_map(std::istream& in);
void write_prompt_map(const PromptMap& map, std::ostream& out);

// Paired-instance JSONL with keys id, q1, q2, doc1, doc2 (nested records).
std::vector<PairedInstance> load_paired_instances(std::istream& in);

// Convenience id -> record maps; duplicate ids rejected upstream.
std::map<std::string, Document> index_corpus(std::span<const Document> docs);
std::map<std::string, Query> index_queries(std::span<const Query> queries);

} // namespace thinkrank
