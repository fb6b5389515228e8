#include "thinkrank/rerank.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace thinkrank {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

void replace_first(std::string& s, const std::string& from, const std::string& to) {
    auto pos = s.find(from);
    if (pos != std::string::npos) s.replace(pos, from.size(), to);
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

} // namespace

PromptTemplate PromptTemplate::standard() {
    return PromptTemplate{
        "Determine if the following passage is relevant to the query. "
        "Answer only with 'true' or 'false'.\n\n"
        "Query: {query}\n\n"
        "Passage: {passage}\n\n"
        "<think>"};
}

void PromptTemplate::validate() const {
    if (count_occurrences(body, kQuerySlot) != 1) {
        throw ValidationError("prompt template must contain exactly one {query} slot");
    }
    if (count_occurrences(body, kPassageSlot) != 1) {
        throw ValidationError("prompt template must contain exactly one {passage} slot");
    }
    const std::string open = kThinkOpen;
    if (body.size() < open.size() ||
        body.compare(body.size() - open.size(), open.size(), open) != 0) {
        throw ValidationError("prompt template must end with <think>");
    }
}

std::string load_prompt_template(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string body = ss.str();
    // Tolerate a trailing newline from editors.
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    return body;
}

const char* judge_mode_name(JudgeMode mode) {
    return mode == JudgeMode::reasoning ? "reasoning" : "direct";
}

JudgeMode judge_mode_from_name(const std::string& name) {
    if (name == "reasoning") return JudgeMode::reasoning;
    if (name == "direct") return JudgeMode::direct;
    throw ConfigError("unknown mode \"" + name + "\" (expected reasoning or direct)");
}

double calibrated_score(double lp_true, double lp_false) {
    const double m = std::max(lp_true, lp_false);
    const double et = std::exp(lp_true - m);
    const double ef = std::exp(lp_false - m);
    return et / (et + ef);
}

std::string assemble_prompt(const PromptTemplate& tmpl, const Query& query,
                            const Document& doc, const PromptMap* prompt_map) {
    tmpl.validate();

    std::string query_text = query.text;
    if (query.dataset_key && prompt_map) {
        auto it = prompt_map->entries.find(*query.dataset_key);
        if (it == prompt_map->entries.end()) {
            throw ConfigError("prompt map has no entry for dataset key \"" +
                              *query.dataset_key + "\"");
        }
        query_text = it->second;
        replace_all(query_text, kQueryPlaceholder, query.text);
        replace_all(query_text, kNewlineMarker, "\n");
    }
    if (query.instruction) {
        query_text += " " + *query.instruction;
    }

    const std::string passage_text =
        doc.title.empty() ? doc.text : doc.title + " " + doc.text;

    std::string prompt = tmpl.body;
    replace_first(prompt, kQuerySlot, query_text);
    replace_first(prompt, kPassageSlot, passage_text);
    return prompt;
}

ReasoningJudgment judge(CompletionBackend& backend, const Query& query, const Document& doc,
                        const GenParams& params, JudgeMode mode, const PromptTemplate& tmpl,
                        const PromptMap* prompt_map) {
    params.validate();

    ReasoningJudgment j;
    j.query_id = query.id;
    j.doc_id = doc.id;
    j.mode = mode;

    const std::string assembled = assemble_prompt(tmpl, query, doc, prompt_map);
    std::string closed_prompt;

    if (mode == JudgeMode::reasoning) {
        const auto& stops = params.stop_sequences;
        if (std::find(stops.begin(), stops.end(), kThinkClose) == stops.end()) {
            throw ValidationError("reasoning mode requires </think> among stop sequences");
        }
        Completion completion = backend.complete(assembled, params);
        j.chain = completion.text;
        // A backend without stop-sequence support may echo the closing
        // marker; the chain is strictly what precedes it.
        if (auto pos = j.chain.find(kThinkClose); pos != std::string::npos) {
            j.chain.resize(pos);
        }
        j.tokens_used = static_cast<int>(completion.tokens.size());
        closed_prompt = assembled + j.chain + kThinkClose;
    } else {
        closed_prompt = assembled + kThinkClose;
    }

    const AnswerLogprobs lps = answer_logprobs(backend, closed_prompt, params);
    j.lp_true = lps.lp_true;
    j.lp_false = lps.lp_false;
    j.score = calibrated_score(j.lp_true, j.lp_false);
    j.prediction = j.score > 0.5;
    return j;
}

RerankResult rerank(CompletionBackend& backend, const Query& query,
                    const std::vector<ScoredCandidate>& candidates,
                    const std::map<std::string, Document>& corpus, const RerankConfig& config) {
    if (candidates.size() > config.k_max) {
        throw ValidationError("rerank: " + std::to_string(candidates.size()) +
                              " candidates exceed k_max " + std::to_string(config.k_max));
    }
    if (candidates.empty()) return {};
    config.prompt_template.validate();
    for (const auto& c : candidates) {
        if (!corpus.count(c.doc_id)) {
            throw ValidationError("rerank: candidate doc \"" + c.doc_id + "\" not in corpus");
        }
    }

    const std::size_t n = candidates.size();
    std::vector<ReasoningJudgment> judgments(n);
    std::vector<std::exception_ptr> fatal(n);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            const auto& cand = candidates[i];
            try {
                judgments[i] = judge(backend, query, corpus.at(cand.doc_id), config.gen,
                                     config.mode, config.prompt_template, config.prompt_map);
            } catch (const UndecidableError& e) {
                ReasoningJudgment failed;
                failed.query_id = query.id;
                failed.doc_id = cand.doc_id;
                failed.mode = config.mode;
                failed.lp_true = kNegInf;
                failed.lp_false = kNegInf;
                failed.score = 0.0;
                failed.error = e.what();
                judgments[i] = std::move(failed);
            } catch (...) {
                fatal[i] = std::current_exception();
                return;
            }
        }
    };

    const std::size_t thread_count =
        std::min<std::size_t>(std::max(config.concurrency, 1), std::max<std::size_t>(n, 1));
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    for (const auto& e : fatal) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<ScoredCandidate> scored;
    scored.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        scored.push_back(ScoredCandidate{candidates[i].doc_id, candidates[i].first_stage_rank,
                                         judgments[i].score});
    }
    RerankResult result;
    result.run = stable_rank(query.id, std::move(scored), config.run_tag);
    result.judgments = std::move(judgments);
    return result;
}

void write_judgments(std::span<const ReasoningJudgment> judgments, std::ostream& out) {
    using nlohmann::json;
    for (const auto& j : judgments) {
        json rec = {
            {"query_id", j.query_id},
            {"doc_id", j.doc_id},
            {"chain", j.chain},
            {"prediction", j.prediction},
            {"lp_true", std::isfinite(j.lp_true) ? json(j.lp_true) : json(nullptr)},
            {"lp_false", std::isfinite(j.lp_false) ? json(j.lp_false) : json(nullptr)},
            {"score", j.score},
            {"mode", judge_mode_name(j.mode)},
            {"tokens_used", j.tokens_used},
        };
        if (!j.error.empty()) rec["error"] = j.error;
        out << rec.dump() << '\n';
    }
}

} // namespace thinkrank
