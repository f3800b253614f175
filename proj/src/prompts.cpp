#include "tabgr/prompts.hpp"

#include <algorithm>

#include "fewshot_data.hpp"
#include "tabgr/error.hpp"
#include "tabgr/text.hpp"

namespace tabgr {

namespace {

constexpr std::string_view kExamplesMarker = "[Examples]";

constexpr std::string_view kColumnSelectBody = R"PROMPT(You are a table analysis assistant.

Given:
- A table title
- A natural language question about the table
- A list of candidate columns from the table
- One sample row from the table
Task: Select the column names that contain the information necessary to answer the question. Only return the column names (split by commas), nothing else.

Here are some examples:
[Examples]

Title: {title}
Question: {question}
Candidate Columns: {candidate_col}
Sample Row: {sample_row}
Answer:)PROMPT";

constexpr std::string_view kSufficiencyBody = R"PROMPT(You are given a TableQA question and multiple candidate reasoning paths.

Instructions:
- Use ONLY the candidate reasoning paths.
- Treat edges as UNDIRECTED: "(rowK; Col; X)" and "(X; Col; rowK)" both mean rowK have Col = X.
- Decide if the provided paths are sufficient to answer the question.
  * Sufficient: the given candidate paths can deterministically yield the answer.
  * Insufficient: necessary link(s) or value(s) are missing or ambiguous.
- If sufficient: Set Finished: True.
- If insufficient: Set Finished: False.
- Output exactly and only the following one section. Do NOT add any other text.
Here are some examples:
[Examples]

Title: {title}
Question: {question}
Candidate Reasoning Paths: {reasoning_paths}
Finished:)PROMPT";

constexpr std::string_view kEdgeSelectBody = R"PROMPT(You are given a TableQA question, a set of (possibly incomplete) candidate reasoning paths, and a set of available relations from the same table graph.

Goal:
- Select the MINIMAL SUFFICIENT subset of relations from Available Relations which, when combined with the candidate reasoning paths, is enough to answer the question.
Rules:
- Use ONLY the relation(s) in provided available relations. Do NOT invent new facts.
- Minimality: choose the fewest relations (>= 1) among available relations that make the answer derivable.
- Tie-breaking: if multiple equally minimal subsets exist, preserve the original order in Available Relations (i.e., pick the earliest lines that work).
Output format (STRICT):
- Output exactly ONE line that starts with: SELECTED_RELATIONS: followed by a Python list literal of strings, e.g. ['relation1', 'relation2'].
- Do NOT output anything else.

Here are some examples:
[Examples]

Title: {title}
Question: {question}
Candidate Reasoning Paths: {reasoning_paths}
Available Relations: {available_relations}
Sample Row: {sample_row}
SELECTED_RELATIONS:)PROMPT";

constexpr std::string_view kAnswerGenBody = R"PROMPT(You are given a TableQA question and a list of candidate reasoning paths. Given a question, you should think it step by step and then answer the question. Also provide the final reasoning path encloses within <paths> ... </paths>.

Rules (strict):
- OUTPUT FORMAT: two sections:
<think> <paths> ... </paths> ... </think>
<answer> ... </answer>

Here are some examples:
[Examples]

YOUR TURN
Title: {title}
Question: {question}
Header: {header}
Table Content: {reasoning_paths}
<think>
<paths>)PROMPT";

PromptTemplate make(PromptKind kind, std::string_view body, std::string_view few_shot) {
    return PromptTemplate{kind, std::string(body), parse_few_shot_file(few_shot)};
}

bool is_placeholder(std::string_view name) {
    return std::find(std::begin(kPlaceholders), std::end(kPlaceholders), name) !=
           std::end(kPlaceholders);
}

}  // namespace

std::vector<std::string> parse_few_shot_file(std::string_view contents) {
    auto lines = text::split(contents, "\n");
    std::size_t i = 0;
    while (i < lines.size() && text::starts_with(lines[i], "#")) ++i;

    std::vector<std::string> examples;
    std::string current;
    auto flush = [&] {
        auto trimmed = text::trim(current);
        if (!trimmed.empty()) examples.emplace_back(trimmed);
        current.clear();
    };
    for (; i < lines.size(); ++i) {
        if (text::trim(lines[i]) == "---") {
            flush();
            continue;
        }
        current += lines[i];
        current += '\n';
    }
    flush();
    return examples;
}

const PromptTemplate& default_template(PromptKind kind) {
    static const PromptTemplate column_select =
        make(PromptKind::ColumnSelect, kColumnSelectBody, fewshot::kColumnSelect);
    static const PromptTemplate sufficiency =
        make(PromptKind::Sufficiency, kSufficiencyBody, fewshot::kSufficiency);
    static const PromptTemplate edge_select =
        make(PromptKind::EdgeSelect, kEdgeSelectBody, fewshot::kEdgeSelect);
    static const PromptTemplate answer_gen =
        make(PromptKind::AnswerGen, kAnswerGenBody, fewshot::kAnswerGen);
    switch (kind) {
        case PromptKind::ColumnSelect: return column_select;
        case PromptKind::Sufficiency: return sufficiency;
        case PromptKind::EdgeSelect: return edge_select;
        case PromptKind::AnswerGen: return answer_gen;
    }
    return answer_gen;
}

std::string_view few_shot_version() { return fewshot::kVersion; }

std::string render(const PromptTemplate& tmpl, const std::map<std::string, std::string>& bindings) {
    const std::string_view body = tmpl.body;
    std::string out;
    out.reserve(body.size() + 1024);
    std::size_t i = 0;
    while (i < body.size()) {
        if (body.compare(i, kExamplesMarker.size(), kExamplesMarker) == 0) {
            out += text::join(tmpl.few_shot_examples, "\n\n");
            i += kExamplesMarker.size();
            continue;
        }
        if (body[i] == '{') {
            auto close = body.find('}', i + 1);
            if (close != std::string_view::npos) {
                auto name = body.substr(i + 1, close - i - 1);
                if (is_placeholder(name)) {
                    auto it = bindings.find(std::string(name));
                    if (it == bindings.end()) throw MissingPlaceholder(std::string(name));
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out += body[i++];
    }
    return out;
}

}  // namespace tabgr
