#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgr/atg.hpp"
#include "tabgr/llm.hpp"

namespace tabgr {

enum class ParseStatus { Clean, Repaired, Failed };

std::string_view to_string(ParseStatus status);

struct ReasoningResult {
    std::vector<std::string> path;
    std::string cot;
    std::string answer;
    ParseStatus status = ParseStatus::Failed;
    /// Names of the repairs applied, in the order they fired.
    std::vector<std::string> repairs;
    std::string raw;

    nlohmann::json to_json() const;
};

/// Parses `<think><paths>P</paths>T</think><answer>A</answer>`.
///
/// Repair whitelist (status becomes Repaired, each repair is named):
///  - "missing_think_open":   no <think> before <paths>
///  - "missing_think_close":  no </think>; the thought ends at <answer>
///  - "missing_paths_close":  no </paths>, accepted only when every line up to
///                            </think> or <answer> is a rendered triple
///  - "missing_answer_close": a single <answer> with no </answer>; the answer
///                            runs to the end of the text
///  - "multiple_answers":     several <answer> blocks; the last one wins
///  - "extra_text":           non-whitespace text outside the two sections
///  - "dropped_path_entry":   path entries not of the "(rowK; Col; X)" form
/// Anything else, including a missing <answer> tag, is Failed. Never throws.
ReasoningResult parse_output(const std::string& raw);

/// Inverse of parse_output for well-formed results; paths are joined " → ".
std::string format_output(const ReasoningResult& result);

/// Renders the evidence in rank order, asks the answer prompt once and
/// parses the reply. A reply that continues the prompt's trailing
/// "<think>\n<paths>" is completed with those tags before parsing.
ReasoningResult generate_answer(const std::string& question, const std::string& title,
                                const std::vector<std::string>& headers,
                                const std::vector<Triple>& ranked, LlmSession& llm);

std::string build_answer_prompt(const std::string& question, const std::string& title,
                                const std::vector<std::string>& headers,
                                const std::vector<Triple>& ranked);

struct PathGrounding {
    std::vector<bool> grounded;
    double fraction = 0.0;
};

/// Each path entry is grounded iff it names (row, header, value) of a triple
/// in `evidence` after whitespace trimming. An empty path has fraction 0.
PathGrounding validate_path(const ReasoningResult& result, const AtgGraph& graph,
                            const std::vector<std::size_t>& evidence);

}  // namespace tabgr
