#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tabgr/llm.hpp"

namespace tabgr {

/// Placeholder names a template body may reference as {name}.
inline constexpr std::string_view kPlaceholders[] = {
    "title",       "question",        "candidate_col", "sample_row",
    "reasoning_paths", "available_relations", "header",
};

struct PromptTemplate {
    PromptKind kind = PromptKind::AnswerGen;
    std::string body;
    /// Inserted at the "[Examples]" marker, separated by blank lines.
    std::vector<std::string> few_shot_examples;
};

/// The shipped template for `kind`, with the bundled few-shot examples.
const PromptTemplate& default_template(PromptKind kind);

/// Identifier of the bundled few-shot example set.
std::string_view few_shot_version();

/// Splits a few-shot file: leading "#" comment lines are dropped and
/// examples are separated by lines consisting of "---".
std::vector<std::string> parse_few_shot_file(std::string_view contents);

/// Single pass over the body: every known {placeholder} must be bound
/// (MissingPlaceholder otherwise) and "[Examples]" receives the examples.
/// Substituted text is never rescanned.
std::string render(const PromptTemplate& tmpl, const std::map<std::string, std::string>& bindings);

}  // namespace tabgr
