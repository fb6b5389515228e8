#include "thinkrank/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace thinkrank {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string normalize_answer_token(const std::string& token) {
    std::size_t begin = 0;
    std::size_t end = token.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(token[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(token[end - 1]))) --end;
    std::string norm = token.substr(begin, end - begin);
    std::transform(norm.begin(), norm.end(), norm.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return norm;
}

// Split canned text into tokens, whitespace glued to the word that follows
// it, so that concatenating tokens reproduces the text.
std::vector<std::string> split_mock_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        std::size_t start = i;
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

} // namespace

void GenParams::validate() const {
    if (temperature < 0.0) throw ValidationError("GenParams: temperature must be >= 0");
    if (max_tokens < 1) throw ValidationError("GenParams: max_tokens must be >= 1");
    if (logprob_top_k < 2) throw ValidationError("GenParams: logprob_top_k must be >= 2");
}

double log_add_exp(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

AnswerLogprobs answer_logprobs(CompletionBackend& backend, const std::string& prompt,
                               const GenParams& params) {
    params.validate();
    static const std::string closer = "</think>";
    if (prompt.size() < closer.size() ||
        prompt.compare(prompt.size() - closer.size(), closer.size(), closer) != 0) {
        throw ValidationError("answer_logprobs: prompt must end with </think>");
    }

    GenParams answer_params = params;
    answer_params.max_tokens = 1;
    answer_params.stop_sequences.clear();
    Completion completion = backend.complete(prompt, answer_params);
    if (completion.tokens.empty()) {
        throw CapabilityError("answer_logprobs: backend returned no token logprobs");
    }

    const TokenLogprob& first = completion.tokens.front();
    // The sampled token usually repeats inside top_alternatives; dedupe on
    // the literal surface form so its probability is counted once.
    std::vector<std::pair<std::string, double>> alts = first.top_alternatives;
    if (std::none_of(alts.begin(), alts.end(),
                     [&](const auto& a) { return a.first == first.token; })) {
        alts.emplace_back(first.token, first.logprob);
    }

    AnswerLogprobs out{kNegInf, kNegInf};
    for (const auto& [token, lp] : alts) {
        const std::string norm = normalize_answer_token(token);
        if (norm == "true") {
            out.lp_true = log_add_exp(out.lp_true, lp);
        } else if (norm == "false") {
            out.lp_false = log_add_exp(out.lp_false, lp);
        }
    }
    if (out.lp_true == kNegInf && out.lp_false == kNegInf) {
        throw UndecidableError("answer_logprobs: neither 'true' nor 'false' among " +
                               std::to_string(alts.size()) + " alternatives");
    }
    return out;
}

Completion retry_with_backoff(const std::function<Completion()>& fn, int max_retries,
                              std::chrono::milliseconds base_delay) {
    thread_local std::mt19937_64 rng(std::random_device{}());
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const BackendError& e) {
            if (!e.transient() || attempt >= max_retries) throw;
            const double cap =
                static_cast<double>(base_delay.count()) * std::pow(2.0, attempt);
            std::uniform_real_distribution<double> jitter(0.0, cap);
            std::this_thread::sleep_for(
                std::chrono::duration<double, std::milli>(jitter(rng)));
        }
    }
}

void MockBackend::register_rule(Match kind, std::string pattern, Response response) {
    rules_.push_back(Rule{kind, std::move(pattern), std::move(response)});
}

void MockBackend::set_default(Response response) {
    default_ = std::move(response);
}

std::vector<std::pair<std::string, double>> MockBackend::binary_answer(double p_true) {
    return {{" true", std::log(p_true)}, {" false", std::log(1.0 - p_true)}};
}

Completion MockBackend::complete(const std::string& prompt, const GenParams& params) {
    params.validate();
    calls_.fetch_add(1);

    const Response* matched = nullptr;
    for (const auto& rule : rules_) {
        const bool hit = rule.kind == Match::prefix
                             ? prompt.rfind(rule.pattern, 0) == 0
                             : prompt.find(rule.pattern) != std::string::npos;
        if (hit) {
            matched = &rule.response;
            break;
        }
    }
    if (!matched) {
        if (default_) {
            matched = &*default_;
        } else if (strict_) {
            throw Error("mock backend: no rule matches prompt starting \"" +
                        prompt.substr(0, 80) + "\"");
        } else {
            static const Response empty{};
            matched = &empty;
        }
    }

    if (params.max_tokens == 1 && !matched->answer_alternatives.empty()) {
        auto best = std::max_element(
            matched->answer_alternatives.begin(), matched->answer_alternatives.end(),
            [](const auto& a, const auto& b) { return a.second < b.second; });
        Completion c;
        c.text = best->first;
        c.tokens.push_back(TokenLogprob{best->first, best->second, matched->answer_alternatives});
        c.finish_reason = FinishReason::stop;
        return c;
    }

    std::string text = matched->text;
    FinishReason finish = FinishReason::stop;
    std::size_t cut = std::string::npos;
    for (const auto& stop : params.stop_sequences) {
        if (stop.empty()) continue;
        cut = std::min(cut, text.find(stop));
    }
    if (cut != std::string::npos) text.resize(cut);

    auto tokens = split_mock_tokens(text);
    if (tokens.size() > static_cast<std::size_t>(params.max_tokens)) {
        tokens.resize(static_cast<std::size_t>(params.max_tokens));
        finish = FinishReason::length;
        text.clear();
        for (const auto& t : tokens) text += t;
    }

    Completion c;
    c.text = std::move(text);
    c.finish_reason = finish;
    c.tokens.reserve(tokens.size());
    for (auto& t : tokens) {
        c.tokens.push_back(TokenLogprob{std::move(t), -0.1, {}});
    }
    return c;
}

} // namespace thinkrank
