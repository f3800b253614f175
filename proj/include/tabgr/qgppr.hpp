#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgr/atg.hpp"
#include "tabgr/llm.hpp"
#include "tabgr/table.hpp"

namespace tabgr {

enum class OrderMode { Auto, AlwaysPreserve, NeverPreserve };

std::string_view to_string(OrderMode mode);
OrderMode order_mode_from_string(std::string_view name);

std::vector<std::string> default_order_triggers();

/// Question-guided PageRank hyperparameters.
struct PprConfig {
    double alpha = 0.35;
    int iterations = 20;
    double w_row = 0.6;
    double w_col = 0.4;
    double v_col = 1.0;
    double v_val = 2.0;
    bool use_idf = true;
    OrderMode order_mode = OrderMode::Auto;
    std::vector<std::string> order_triggers = default_order_triggers();
    /// Let LLM-selected items that name cell values join the key value set.
    bool llm_selects_values = false;

    /// Throws ConfigError on alpha outside (0,1), K < 1, negative weights or
    /// w_row + w_col != 1.
    void validate() const;

    nlohmann::json to_json() const;
    /// Missing fields keep the values already present in `base`.
    static PprConfig from_json(const nlohmann::json& j, PprConfig base);
    static PprConfig from_json(const nlohmann::json& j);
};

struct KeySets {
    std::set<std::string> headers;
    std::set<std::pair<std::size_t, std::string>> values;
    /// Columns named by the LLM selector, in table order.
    std::vector<std::string> llm_columns;
    /// Set when the LLM could not be reached and only exact matches were used.
    bool llm_degraded = false;

    nlohmann::json to_json() const;
};

/// Exact-match part of the key sets: headers whose normalized text occurs in
/// the normalized question, and cell values (normalized length >= 2) that do.
KeySets exact_match_key_sets(const std::string& question, const Table& table);

/// Result of the initial column-selection prompt.
struct ColumnSelection {
    std::vector<std::size_t> columns;
    std::set<std::pair<std::size_t, std::string>> values;
};

/// Renders the sample row (row 0) as "Header: value; ..." pairs.
std::string render_sample_row(const Table& table);

/// Asks the column-selection prompt and keeps only names present in the
/// table. With `accept_values`, items equal to a cell value are returned as
/// key values as well.
ColumnSelection select_columns(const std::string& question, const Table& table,
                               LlmSession& llm, bool accept_values = false);

/// Parses a comma separated column list against the table headers.
ColumnSelection parse_column_selection(const std::string& reply, const Table& table,
                                       bool accept_values = false);

/// Union of exact matches and LLM selections. An unreachable LLM degrades to
/// exact matches and sets `llm_degraded`.
KeySets build_key_sets(const std::string& question, const Table& table, LlmSession* llm,
                       const PprConfig& config);

/// Merges an LLM column selection into exact-match key sets.
KeySets merge_selection(KeySets exact, const ColumnSelection& selection, const Table& table);

/// log(1 + N / (1 + df)), natural log.
double idf(std::size_t df, std::size_t num_rows);

/// Restart distribution over the evidence triples (in `evidence` order).
/// Falls back to uniform when every raw score is zero.
std::vector<double> build_personalization(const AtgGraph& graph,
                                          const std::vector<std::size_t>& evidence,
                                          const KeySets& keys, const PprConfig& config);

/// Raw (unnormalized) personalization scores.
std::vector<double> raw_personalization(const AtgGraph& graph,
                                        const std::vector<std::size_t>& evidence,
                                        const KeySets& keys, const PprConfig& config);

/// Row-stochastic sparse matrix in CSR form. Indices are positions within
/// the evidence list, not triple ids.
struct PropagationMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> col_idx;
    std::vector<double> values;

    std::size_t nnz() const noexcept { return values.size(); }
    double row_sum(std::size_t row) const;
    /// Entry lookup by linear scan of the row; intended for tests.
    double at(std::size_t row, std::size_t col) const;
};

/// Weight from u to v: w_row/|row set| if they share a row plus
/// w_col/|column set| if they share a column (a triple shares both with
/// itself). Set sizes are counted within `evidence`. Throws EmptyGraph when
/// the evidence is empty.
PropagationMatrix build_propagation(const AtgGraph& graph, const std::vector<std::size_t>& evidence,
                                    const PprConfig& config);

/// Convenience overload over every triple of the graph.
PropagationMatrix build_propagation(const AtgGraph& graph, const PprConfig& config);

struct SalienceVector {
    std::vector<double> scores;
    /// Max-abs change over the last iteration.
    double residual = 0.0;
    int iterations = 0;
};

/// s0 uniform; s <- alpha * p0 + (1 - alpha) * A^T s, K times.
SalienceVector run_qgppr(const std::vector<double>& p0, const PropagationMatrix& matrix,
                         const PprConfig& config);

/// Evidence positions in final order. Order-preserving mode returns them as
/// given; otherwise rows sort by summed salience, triples within a row by
/// salience, both descending, ties by ascending triple id. Scores are
/// compared after rounding to 1e-12 so floating-point noise cannot reorder
/// tied entries.
std::vector<std::size_t> rank(const AtgGraph& graph, const std::vector<std::size_t>& evidence,
                              const std::vector<double>& scores, bool order_sensitive);

/// True iff the lowercased question contains one of the trigger terms as a
/// whole word or phrase.
bool detect_order_sensitive(const std::string& question, const std::vector<std::string>& triggers);
bool detect_order_sensitive(const std::string& question);

/// Resolves the configured order mode for a question.
bool is_order_sensitive(const std::string& question, const PprConfig& config);

std::vector<std::size_t> all_triple_ids(const AtgGraph& graph);

}  // namespace tabgr
