#include "thinkrank/run_config.hpp"

#include <istream>
#include <sstream>

namespace thinkrank {

void RunConfig::validate() const {
    if (concurrency_limit < 1) throw ConfigError("concurrency_limit must be >= 1");
    if (k_rerank < 1) throw ConfigError("k_rerank must be >= 1");
    if (backend.max_retries < 0) throw ConfigError("max_retries must be >= 0");
    gen.validate();
}

RunConfig load_run_config(std::istream& in) {
    RunConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        std::string rest;
        std::getline(ss, rest);
        // trim leading whitespace of the value
        const auto pos = rest.find_first_not_of(" \t");
        rest = pos == std::string::npos ? std::string{} : rest.substr(pos);

        auto as_int = [&](const std::string& s) {
            try {
                return std::stoll(s);
            } catch (const std::exception&) {
                throw ParseError(line_no, "bad integer for " + key + ": \"" + s + "\"");
            }
        };
        auto as_double = [&](const std::string& s) {
            try {
                return std::stod(s);
            } catch (const std::exception&) {
                throw ParseError(line_no, "bad number for " + key + ": \"" + s + "\"");
            }
        };

        if (key == "endpoint_url") {
            config.backend.endpoint_url = rest;
        } else if (key == "model_name") {
            config.backend.model_name = rest;
        } else if (key == "api_key_env") {
            config.backend.api_key_env = rest;
        } else if (key == "timeout_ms") {
            config.backend.timeout = std::chrono::milliseconds(as_int(rest));
        } else if (key == "max_retries") {
            config.backend.max_retries = static_cast<int>(as_int(rest));
        } else if (key == "retry_base_delay_ms") {
            config.backend.retry_base_delay = std::chrono::milliseconds(as_int(rest));
        } else if (key == "temperature") {
            config.gen.temperature = as_double(rest);
        } else if (key == "max_tokens") {
            config.gen.max_tokens = static_cast<int>(as_int(rest));
        } else if (key == "logprob_top_k") {
            config.gen.logprob_top_k = static_cast<int>(as_int(rest));
        } else if (key == "stop") {
            config.gen.stop_sequences.push_back(rest);
        } else if (key == "concurrency_limit") {
            config.concurrency_limit = static_cast<int>(as_int(rest));
        } else if (key == "k_rerank") {
            config.k_rerank = static_cast<int>(as_int(rest));
        } else if (key == "prompt_map_path") {
            config.prompt_map_path = rest;
        } else if (key == "template_path") {
            config.template_path = rest;
        } else if (key == "seed") {
            config.seed = static_cast<std::uint64_t>(as_int(rest));
        } else if (key == "mode") {
            config.mode = judge_mode_from_name(rest);
        } else if (key == "run_tag") {
            config.run_tag = rest;
        } else {
            throw ParseError(line_no, "unknown config key \"" + key + "\"");
        }
    }
    config.validate();
    return config;
}

} // namespace thinkrank
