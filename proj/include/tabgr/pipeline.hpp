#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgr/atg.hpp"
#include "tabgr/decompose.hpp"
#include "tabgr/llm.hpp"
#include "tabgr/qgppr.hpp"
#include "tabgr/reasoner.hpp"
#include "tabgr/table.hpp"

namespace tabgr {

enum class Mode { Full, Decomposed };
enum class Task { Qa, Fv };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);
std::string_view to_string(Task task);
Task task_from_string(std::string_view name);

/// Tuned QG-PPR defaults: alpha 0.35 / w_row 0.6 on the full graph;
/// alpha 0.15 on decomposed subgraphs with w_row 0.3 for QA and 0.7 for
/// fact verification.
PprConfig default_ppr_config(Mode mode, Task task);

struct PipelineConfig {
    Mode mode = Mode::Full;
    PprConfig ppr = default_ppr_config(Mode::Full, Task::Qa);
    DecomposeOptions decompose;
};

/// Evidence selection and salience for one question.
struct ScoredEvidence {
    /// Triple ids the salience was computed over, ascending.
    std::vector<std::size_t> evidence;
    KeySets keys;
    std::vector<double> personalization;
    SalienceVector salience;
    bool order_sensitive = false;
    /// Evidence positions in presentation order.
    std::vector<std::size_t> order;
    std::optional<Subgraph> subgraph;
    /// Decomposition produced no triples and the full graph was used.
    bool empty_subgraph_fallback = false;

    std::vector<Triple> ranked_triples(const AtgGraph& graph) const;
};

/// Key sets, optional decomposition, personalization, propagation, power
/// iteration and ranking. `llm` may be null for exact-match-only scoring.
ScoredEvidence score_question(const std::string& question, const Table& table,
                              const AtgGraph& graph, LlmSession* llm,
                              const PipelineConfig& config);

struct QuestionOutcome {
    ScoredEvidence scored;
    ReasoningResult result;
    PathGrounding grounding;
};

/// score_question followed by one answer-generation call.
QuestionOutcome answer_question(const std::string& question, const Table& table,
                                const AtgGraph& graph, LlmSession& llm,
                                const PipelineConfig& config);

/// Headers of the columns that appear in `evidence`, in table order.
std::vector<std::string> evidence_headers(const AtgGraph& graph,
                                          const std::vector<std::size_t>& evidence);

}  // namespace tabgr
