#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thinkrank/errors.hpp"

namespace thinkrank {

struct GenParams {
    double temperature = 0.3;
    int max_tokens = 1000;
    std::vector<std::string> stop_sequences;
    int logprob_top_k = 5;  // must cover both answer tokens, so >= 2

    void validate() const;
};

enum class FinishReason { stop, length, error };

struct TokenLogprob {
    std::string token;
    double logprob = 0.0;
    std::vector<std::pair<std::string, double>> top_alternatives;
};

struct Completion {
    std::string text;
    std::vector<TokenLogprob> tokens;  // concatenation of tokens equals text
    FinishReason finish_reason = FinishReason::stop;
};

struct BackendConfig {
    std::string endpoint_url;  // full URL of the completions endpoint
    std::string model_name;
    std::string api_key_env = "THINKRANK_API_KEY";  // env var NAME, never the key itself
    std::chrono::milliseconds timeout{30000};
    int max_retries = 3;
    std::chrono::milliseconds retry_base_delay{250};
};

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    virtual Completion complete(const std::string& prompt, const GenParams& params) = 0;
};

struct AnswerLogprobs {
    double lp_true;
    double lp_false;
};

// Issues a 1-token completion for a prompt ending in "</think>" and
// aggregates the returned alternatives: lp_true is the logsumexp over every
// alternative whose trimmed, lowercased surface form is "true" (lp_false
// likewise). An answer word that never appears maps to -infinity; both
// missing raises UndecidableError.
AnswerLogprobs answer_logprobs(CompletionBackend& backend, const std::string& prompt,
                               const GenParams& params);

// logsumexp(a, b), stable under large negative inputs.
double log_add_exp(double a, double b);

// Retries fn on BackendError up to max_retries extra attempts, sleeping
// uniform(0, base_delay * 2^attempt) between tries (full jitter). Rethrows
// the last error once attempts are exhausted.
Completion retry_with_backoff(const std::function<Completion()>& fn, int max_retries,
                              std::chrono::milliseconds base_delay);

// Deterministic scripted backend. Rules are matched against the incoming
// prompt in registration order, first match wins. A matched rule serves two
// shapes of request:
//   - max_tokens == 1 ("answer" calls): a single token drawn from
//     answer_alternatives, with the full alternative list attached;
//   - anything else: the canned text, truncated at the earliest stop
//     sequence (finish = stop) or at max_tokens tokens (finish = length).
class MockBackend : public CompletionBackend {
public:
    enum class Match { prefix, substring };

    struct Response {
        std::string text;
        std::vector<std::pair<std::string, double>> answer_alternatives;
    };

    void register_rule(Match kind, std::string pattern, Response response);
    void set_default(Response response);  // served when no rule matches
    // strict (default): unmatched prompt with no default raises Error.
    void set_strict(bool strict) { strict_ = strict; }

    Completion complete(const std::string& prompt, const GenParams& params) override;

    int call_count() const { return calls_.load(); }

    // Alternatives for a two-way answer with P(true) = p_true.
    static std::vector<std::pair<std::string, double>> binary_answer(double p_true);

private:
    struct Rule {
        Match kind;
        std::string pattern;
        Response response;
    };
    std::vector<Rule> rules_;
    std::optional<Response> default_;
    bool strict_ = true;
    std::atomic<int> calls_{0};
};

// OpenAI-compatible completions client over HTTP. Request body:
// {model, prompt, temperature, max_tokens, stop, logprobs:<top_k>, echo:false}.
// Transient failures (connect errors, HTTP 429/5xx) are retried with
// exponential backoff and full jitter; other non-2xx statuses fail at once.
class HttpBackend : public CompletionBackend {
public:
    explicit HttpBackend(BackendConfig config);
    Completion complete(const std::string& prompt, const GenParams& params) override;

private:
    Completion request_once(const std::string& prompt, const GenParams& params);

    BackendConfig config_;
    std::string base_url_;
    std::string path_;
};

} // namespace thinkrank
