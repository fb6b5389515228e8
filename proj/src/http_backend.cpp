#include <cstdlib>

#include "httplib.h"
#include "json.hpp"

#include "thinkrank/backend.hpp"

namespace thinkrank {

namespace {

using nlohmann::json;

bool is_transient_status(int status) {
    return status == 429 || (status >= 500 && status < 600);
}

FinishReason finish_from_string(const std::string& s) {
    if (s == "length") return FinishReason::length;
    if (s == "stop") return FinishReason::stop;
    return FinishReason::error;
}

// endpoint_url -> ("scheme://host:port", "/path")
std::pair<std::string, std::string> split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint_url must start with http(s)://, got \"" + url + "\"");
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

} // namespace

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
    if (config_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
    std::tie(base_url_, path_) = split_url(config_.endpoint_url);
}

Completion HttpBackend::complete(const std::string& prompt, const GenParams& params) {
    if (prompt.empty()) throw ValidationError("complete: empty prompt");
    params.validate();
    return retry_with_backoff([&] { return request_once(prompt, params); },
                              config_.max_retries, config_.retry_base_delay);
}

Completion HttpBackend::request_once(const std::string& prompt, const GenParams& params) {
    json body = {
        {"model", config_.model_name},
        {"prompt", prompt},
        {"temperature", params.temperature},
        {"max_tokens", params.max_tokens},
        {"logprobs", params.logprob_top_k},
        {"echo", false},
    };
    if (!params.stop_sequences.empty()) body["stop"] = params.stop_sequences;

    httplib::Client client(base_url_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        if (const char* key = std::getenv(config_.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
        throw BackendError("transport failure reaching " + config_.endpoint_url + ": " +
                           httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        const std::string excerpt = res->body.substr(0, 200);
        throw BackendError("backend returned HTTP " + std::to_string(res->status) + ": " +
                               excerpt,
                           res->status, is_transient_status(res->status));
    }

    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty()) {
        throw BackendError("malformed backend response: " + res->body.substr(0, 200),
                           res->status);
    }
    const json& choice = reply["choices"][0];

    Completion completion;
    completion.text = choice.value("text", std::string{});
    completion.finish_reason = finish_from_string(choice.value("finish_reason", "stop"));

    if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
        throw CapabilityError("backend response carries no logprobs; a logprob-capable "
                              "completions endpoint is required");
    }
    const json& lp = choice["logprobs"];
    const json tokens = lp.value("tokens", json::array());
    const json token_lps = lp.value("token_logprobs", json::array());
    const json top_lps = lp.value("top_logprobs", json::array());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        TokenLogprob t;
        t.token = tokens[i].get<std::string>();
        if (i < token_lps.size() && token_lps[i].is_number()) {
            t.logprob = token_lps[i].get<double>();
        }
        if (i < top_lps.size() && top_lps[i].is_object()) {
            for (const auto& [tok, val] : top_lps[i].items()) {
                if (val.is_number()) t.top_alternatives.emplace_back(tok, val.get<double>());
            }
        }
        completion.tokens.push_back(std::move(t));
    }
    return completion;
}

} // namespace thinkrank
