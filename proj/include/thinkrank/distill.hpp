#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "thinkrank/backend.hpp"
#include "thinkrank/core.hpp"
#include "thinkrank/rerank.hpp"

namespace thinkrank {

// Provenance of a (query, passage) pair: official positives, easy negatives
// sampled by a first-stage mix, and two bands of mined hard negatives.
enum class Pool {
    official_positive,
    easy_negative,
    hard_negative_1_5,
    hard_negative_5_10,
};
inline constexpr std::size_t kPoolCount = 4;

const char* pool_name(Pool pool);
Pool pool_from_name(const std::string& name);

// Forward-only lifecycle: pending -> generated -> (dropped_* | kept).
enum class ExampleStatus {
    pending,
    generated,
    dropped_agreement,
    dropped_self_filter,
    dropped_malformed,
    kept,
};

const char* status_name(ExampleStatus status);
ExampleStatus status_from_name(const std::string& name);

struct PoolEntry {
    std::string query_id;
    std::string doc_id;
    bool implied_label = false;
};

struct DistillExample {
    std::string query_id;
    std::string doc_id;
    Pool pool = Pool::official_positive;
    bool implied_label = false;
    std::string chain;
    std::optional<bool> teacher_prediction;
    std::optional<bool> self_prediction;
    ExampleStatus status = ExampleStatus::pending;
};

// Sampling proportions (indexed by Pool, summing to 1) and the sources the
// final mix draws from. target_total == 0 in assemble_mix means "take every
// eligible example".
struct MixSpec {
    std::array<double, kPoolCount> proportions{0.25, 0.25, 0.25, 0.25};
    std::size_t target_total = 0;
    Pool positive_source = Pool::official_positive;
    std::vector<Pool> negative_sources{Pool::easy_negative, Pool::hard_negative_1_5,
                                       Pool::hard_negative_5_10};

    void validate() const;
};

MixSpec load_mix_spec(std::istream& in);

// Pool input JSONL: {query_id, doc_id, implied_label, pool}. Duplicate
// (query_id, doc_id) rows within a pool collapse to the first occurrence
// (generation rounds are merged by concatenating files).
std::map<Pool, std::vector<PoolEntry>> load_pool_entries(std::istream& in);

// Integer quotas per pool: floor(p_i * total) plus one for the largest
// remainders until the quotas sum to total. Ties go to the lower pool index.
std::array<std::size_t, kPoolCount> apportion(const std::array<double, kPoolCount>& proportions,
                                              std::size_t total);

// Deterministic sampling without replacement (seeded Fisher-Yates per
// pool). A pool smaller than its quota is an error naming the shortfall.
std::vector<DistillExample> sample_candidates(const std::map<Pool, std::vector<PoolEntry>>& pools,
                                              const MixSpec& spec, std::uint64_t seed);

// Final verdict out of a teacher completion: the token after the last
// "</think>" (case and trailing punctuation tolerated), or - when the
// marker is absent - whichever of "true"/"false" appears alone in the
// trailing 20 characters. nullopt means malformed.
std::optional<bool> parse_teacher_verdict(std::string_view completion_text);

struct JournalRecord {
    std::string query_id;
    std::string doc_id;
    Pool pool = Pool::official_positive;
    ExampleStatus status = ExampleStatus::pending;
    std::optional<bool> teacher_prediction;
    std::optional<bool> self_prediction;
    std::string chain;
    std::string timestamp;
};

void append_journal(std::ostream& out, const JournalRecord& record);
std::vector<JournalRecord> load_journal(std::istream& in);
// Replays records onto matching examples; only forward transitions apply.
// Returns the number of examples advanced.
std::size_t apply_journal(std::vector<DistillExample>& examples,
                          std::span<const JournalRecord> records);

struct GenerateReport {
    std::size_t generated = 0;
    std::size_t malformed = 0;
    std::size_t skipped = 0;  // already past pending when the pass started
    double teacher_true_rate = 0.0;  // fraction of generated examples judged true
};

// Harvests one trace per pending example through the backend, parsing the
// final verdict. Each outcome is appended to the journal (when given) as it
// lands, so an interrupted batch resumes via apply_journal without
// re-requesting completed examples.
GenerateReport generate_traces(CompletionBackend& backend, std::vector<DistillExample>& examples,
                               const std::map<std::string, Query>& queries,
                               const std::map<std::string, Document>& docs,
                               const GenParams& params, const PromptTemplate& tmpl,
                               std::ostream* journal = nullptr, int concurrency = 8);

struct PoolAgreement {
    std::size_t checked = 0;
    std::size_t disagreed = 0;

    double rate() const { return checked == 0 ? 0.0 : double(disagreed) / double(checked); }
};

struct AgreementReport {
    std::map<Pool, PoolAgreement> per_pool;  // disagreement observed per pool
    std::size_t trusted_checked = 0;
    std::size_t trusted_dropped = 0;

    double trusted_drop_rate() const {
        return trusted_checked == 0 ? 0.0 : double(trusted_dropped) / double(trusted_checked);
    }
};

// Drops generated examples in trusted pools whose teacher prediction
// contradicts the implied label; untrusted pools pass through but their
// disagreement is still measured.
AgreementReport agreement_filter(std::vector<DistillExample>& examples,
                                 const std::set<Pool>& trusted_pools);

struct SelfFilterReport {
    std::size_t checked = 0;
    std::size_t dropped = 0;
    std::size_t flagged = 0;  // scorer failures; example retained

    double drop_rate() const { return checked == 0 ? 0.0 : double(dropped) / double(checked); }
};

// Re-judges every generated example with the scorer backend and drops those
// whose prediction disagrees with the teacher's. The filter is advisory: a
// scorer failure keeps the example and flags it.
SelfFilterReport self_filter(CompletionBackend& scorer, std::vector<DistillExample>& examples,
                             const std::map<std::string, Query>& queries,
                             const std::map<std::string, Document>& docs, const GenParams& params,
                             const PromptTemplate& tmpl, int concurrency = 8);

struct MixReport {
    std::map<Pool, std::size_t> kept_per_pool;
    std::size_t kept_positives = 0;
    std::size_t kept_negatives = 0;
    double teacher_true_rate = 0.0;  // over every generated example, pre-mix
    std::vector<std::string> warnings;
};

// Marks the final training set: teacher-true examples from the positive
// source, teacher-false from the negative sources. A per-pool quota applies
// when spec.target_total > 0; shortfalls take what is available and warn.
MixReport assemble_mix(std::vector<DistillExample>& examples, const MixSpec& spec);

struct TrainingRecord {
    std::string prompt;      // assembled inference prompt, ends "<think>"
    std::string completion;  // chain + "</think> " + verdict word
    bool label = false;
    Pool pool = Pool::official_positive;
};

void export_training(std::span<const DistillExample> examples,
                     const std::map<std::string, Query>& queries,
                     const std::map<std::string, Document>& docs, const PromptTemplate& tmpl,
                     std::ostream& out);
std::vector<TrainingRecord> load_training(std::istream& in);

struct ChainLengthStats {
    std::size_t bin_width = 0;
    std::vector<std::pair<std::size_t, std::size_t>> bins;  // (lower edge, count)
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    std::map<int, double> percentiles;  // 25, 50, 75, 90, 95, 99 (nearest rank)
};

// Whitespace-split word counts over every example that carries a chain.
ChainLengthStats chain_length_stats(std::span<const DistillExample> examples,
                                    std::size_t bin_width = 25);
void write_histogram_csv(const ChainLengthStats& stats, std::ostream& out);

// DistillExample JSONL, the handoff format between pipeline subcommands.
void write_examples(std::span<const DistillExample> examples, std::ostream& out);
std::vector<DistillExample> load_examples(std::istream& in);

// Keyed fine-tuning configuration template (adapter rank/alpha, learning
// rate, batch size) exported next to the training data. Documentation
// metadata only; this artifact does not train.
void write_training_config_template(std::ostream& out);

} // namespace thinkrank
