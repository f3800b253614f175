#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgr/llm.hpp"
#include "tabgr/pipeline.hpp"

namespace tabgr {

/// Resolved settings for one run. Loaded from JSON; command-line flags are
/// merged into that JSON before resolution so both paths share validation.
struct RunConfig {
    Mode mode = Mode::Full;
    Task task = Task::Qa;
    PprConfig ppr = default_ppr_config(Mode::Full, Task::Qa);
    DecomposeOptions decompose;
    std::string questions_path;
    std::string tables_path;
    LlmSettings llm;
    int workers = 1;
    std::string out_dir = "out";
    std::vector<std::uint64_t> seeds{1, 2};
    bool resume = false;

    PipelineConfig pipeline() const;
    nlohmann::json to_json() const;

    /// PPR fields default per (mode, task) and are overridden by "ppr".
    /// The LLM provider is inferred from which of mock_script / base_url is
    /// set unless "llm.provider" names it. Throws ConfigError.
    static RunConfig from_json(const nlohmann::json& j);

    /// Checks cross-field rules; `require_llm` is set for commands that
    /// cannot run without a client.
    void validate(bool require_llm) const;
};

/// Reads a JSON config file; a missing path yields an empty object.
nlohmann::json load_config_json(const std::string& path);

/// Recursive object merge; values in `patch` win.
void merge_json(nlohmann::json& base, const nlohmann::json& patch);

}  // namespace tabgr
