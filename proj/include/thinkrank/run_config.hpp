#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "thinkrank/backend.hpp"
#include "thinkrank/rerank.hpp"

namespace thinkrank {

// Shared configuration for backend-driven subcommands. Loaded from a keyed
// text file (`key value` per line, '#' comments); flags override. The API
// key itself never appears here, only the environment variable holding it.
struct RunConfig {
    BackendConfig backend;
    GenParams gen;
    int concurrency_limit = 8;
    int k_rerank = 100;
    std::optional<std::string> prompt_map_path;
    std::optional<std::string> template_path;
    std::uint64_t seed = 0;
    JudgeMode mode = JudgeMode::reasoning;
    std::string run_tag = "thinkrank";

    void validate() const;
};

RunConfig load_run_config(std::istream& in);

} // namespace thinkrank
