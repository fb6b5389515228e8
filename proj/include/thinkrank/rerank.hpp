#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "thinkrank/backend.hpp"
#include "thinkrank/core.hpp"
#include "thinkrank/trec_io.hpp"

namespace thinkrank {

inline constexpr const char* kThinkOpen = "<think>";
inline constexpr const char* kThinkClose = "</think>";
inline constexpr const char* kQuerySlot = "{query}";
inline constexpr const char* kPassageSlot = "{passage}";

// The fixed instruction block. Must contain exactly one {query} slot,
// exactly one {passage} slot, and end with "<think>".
struct PromptTemplate {
    std::string body;

    static PromptTemplate standard();
    void validate() const;
};

std::string load_prompt_template(std::istream& in);

enum class JudgeMode { reasoning, direct };

const char* judge_mode_name(JudgeMode mode);
JudgeMode judge_mode_from_name(const std::string& name);

// One reranker verdict. In direct mode the chain is empty. A nonempty
// `error` marks a failed judgment; its score is forced to 0 so it ranks
// below every successful one.
struct ReasoningJudgment {
    std::string query_id;
    std::string doc_id;
    std::string chain;  // text strictly between <think> and </think>
    bool prediction = false;
    double lp_true = 0.0;
    double lp_false = 0.0;
    double score = 0.0;
    JudgeMode mode = JudgeMode::reasoning;
    int tokens_used = 0;
    std::string error;
};

// Two-way softmax over the aggregated answer logprobs, computed stably by
// shifting both by their max. Invariant under lp -> lp + c.
double calibrated_score(double lp_true, double lp_false);

// Fills the template slots. The effective query text is the dataset
// template (when query.dataset_key is set and a map given) with
// FILL_QUERY_HERE replaced by query.text and <newline> markers expanded;
// a present instruction is appended after one space. Passage text is
// title + " " + text when the title is nonempty.
std::string assemble_prompt(const PromptTemplate& tmpl, const Query& query,
                            const Document& doc, const PromptMap* prompt_map = nullptr);

// Reasoning mode: complete until "</think>" (or max_tokens, in which case
// the truncated chain is closed and scored anyway), then read the answer
// logprobs off the closed prompt. Direct mode skips the chain completion.
ReasoningJudgment judge(CompletionBackend& backend, const Query& query, const Document& doc,
                        const GenParams& params, JudgeMode mode, const PromptTemplate& tmpl,
                        const PromptMap* prompt_map = nullptr);

struct RerankConfig {
    std::size_t k_max = 100;
    std::string run_tag = "thinkrank";
    int concurrency = 8;  // bound on in-flight backend requests
    JudgeMode mode = JudgeMode::reasoning;
    PromptTemplate prompt_template = PromptTemplate::standard();
    const PromptMap* prompt_map = nullptr;
    GenParams gen;
};

struct RerankResult {
    std::vector<RunEntry> run;
    std::vector<ReasoningJudgment> judgments;  // in candidate order
};

// One judge call per candidate (concurrently, bounded by
// config.concurrency), then a stable_rank over the scores with first-stage
// tie-break. Undecidable judgments score 0 and the batch continues;
// transport/capability failures abort the batch.
RerankResult rerank(CompletionBackend& backend, const Query& query,
                    const std::vector<ScoredCandidate>& candidates,
                    const std::map<std::string, Document>& corpus, const RerankConfig& config);

// Judgments JSONL sidecar, one record per (query_id, doc_id).
void write_judgments(std::span<const ReasoningJudgment> judgments, std::ostream& out);

} // namespace thinkrank
