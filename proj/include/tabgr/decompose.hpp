#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgr/atg.hpp"
#include "tabgr/llm.hpp"
#include "tabgr/qgppr.hpp"
#include "tabgr/table.hpp"

namespace tabgr {

enum class Sufficiency { Unknown, Sufficient, BudgetExhausted };

std::string_view to_string(Sufficiency s);

/// One expansion round of the decomposition loop.
struct RoundTrace {
    int round = 0;
    /// Judge verdict before expanding; empty when the judge was skipped.
    std::optional<bool> verdict;
    bool judge_parse_error = false;
    std::vector<std::string> selected_relations;
    bool expand_parse_error = false;
    std::size_t added = 0;
};

struct Subgraph {
    /// Sorted, unique triple ids of the source graph.
    std::vector<std::size_t> triple_ids;
    /// Headers whose full columns were pulled in, in column order.
    std::vector<std::string> selected_headers;
    int expansion_rounds = 0;
    Sufficiency sufficiency = Sufficiency::Unknown;

    // Trace data.
    std::vector<std::size_t> anchors;
    std::vector<std::string> anchor_columns;
    std::vector<RoundTrace> rounds;
    /// Column selection behind the anchors, reused for the key sets.
    ColumnSelection anchor_selection;
    bool llm_degraded = false;
    bool fell_back_to_full_graph = false;
    std::vector<std::string> log;

    bool empty() const noexcept { return triple_ids.empty(); }
    nlohmann::json trace_json() const;
};

struct DecomposeOptions {
    int max_rounds = 3;
    /// Replace a budget-exhausted subgraph with the whole graph.
    bool full_graph_fallback = false;
    bool llm_selects_values = false;
};

/// Anchors: value exact matches plus every triple of each LLM-selected column.
Subgraph anchor_triples(const std::string& question, const Table& table, const AtgGraph& graph,
                        LlmSession* llm, const DecomposeOptions& options = {});

/// Parses the trailing "Finished:" token (or a bare True/False reply).
std::optional<bool> parse_sufficiency(const std::string& reply);

/// Parses "SELECTED_RELATIONS: [...]" (the prefix may be absent). Returns
/// nullopt when no list literal is present.
std::optional<std::vector<std::string>> parse_selected_relations(const std::string& reply);

/// One triple per line, in the given order.
std::string render_paths(const AtgGraph& graph, const std::vector<std::size_t>& ids);

/// Empty subgraphs are judged insufficient without an LLM call. Unparseable
/// replies count as insufficient and are noted in `subgraph.log`.
bool judge_sufficiency(const std::string& question, Subgraph& subgraph, const AtgGraph& graph,
                       LlmSession& llm, RoundTrace* trace = nullptr);

/// Merges every column the LLM names (and the table has) into the subgraph.
/// With no relations left to offer, makes no call and marks the subgraph
/// budget_exhausted.
void expand(const std::string& question, Subgraph& subgraph, const Table& table,
            const AtgGraph& graph, LlmSession& llm, RoundTrace* trace = nullptr);

/// Anchors followed by up to `max_rounds` judge/expand rounds. Uses at most
/// 1 + 2 * max_rounds LLM calls.
Subgraph decompose(const std::string& question, const Table& table, const AtgGraph& graph,
                   LlmSession* llm, const DecomposeOptions& options = {});

}  // namespace tabgr
