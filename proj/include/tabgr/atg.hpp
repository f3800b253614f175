#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgr/table.hpp"

namespace tabgr {

using NodeId = std::size_t;

enum class NodeKind { Root, RowAnchor, CellValue };

struct Node {
    NodeKind kind = NodeKind::Root;
    /// Row index for RowAnchor, column index for CellValue, 0 for Root.
    std::size_t index = 0;
    /// Table title for Root, "row{i+1}" for anchors, the raw value otherwise.
    std::string label;
    /// k: position of this value among the distinct values of its column.
    std::size_t ordinal = 0;
};

struct Edge {
    NodeId from = 0;
    NodeId to = 0;
    /// Column header for anchor-to-value edges; empty for root edges.
    std::optional<std::string> attribute;
};

/// One table cell viewed as <row anchor, header, value>. `id` is the
/// row-major position row * C + col.
struct Triple {
    std::size_t id = 0;
    std::size_t row = 0;
    std::size_t col = 0;
    std::string header;
    std::string value;

    friend bool operator==(const Triple&, const Triple&) = default;
};

/// Attributed Table Graph: a root, one anchor per row, and one value node per
/// distinct (column, value) pair. Immutable after `build_atg`.
class AtgGraph {
public:
    std::size_t num_rows() const noexcept { return rows_; }
    std::size_t num_cols() const noexcept { return cols_; }
    const std::string& title() const noexcept { return title_; }
    const std::vector<std::string>& headers() const noexcept { return headers_; }

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<Triple>& triples() const noexcept { return triples_; }

    static constexpr NodeId root() noexcept { return 0; }
    NodeId row_anchor(std::size_t row) const;
    /// Value node holding `value` in column `col`, if any.
    std::optional<NodeId> value_node(std::size_t col, std::string_view value) const;
    /// Value node of the cell behind triple `triple_id`.
    NodeId value_node_of(std::size_t triple_id) const;

    /// Number of rows whose column-`col` cell equals `value` exactly.
    std::size_t df(std::size_t col, std::string_view value) const;
    /// Document frequency of the value at triple `triple_id` within its column.
    std::size_t df_of(std::size_t triple_id) const;
    std::size_t distinct_values(std::size_t col) const;

    const Triple& triple(std::size_t id) const;
    const Triple& triple_at(std::size_t row, std::size_t col) const;

    friend AtgGraph build_atg(const Table& table);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::string title_;
    std::vector<std::string> headers_;
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<Triple> triples_;
    // Per column: value text -> value node id.
    std::vector<std::unordered_map<std::string, NodeId>> value_index_;
    // Per value node (indexed by node id): number of rows holding it.
    std::vector<std::size_t> node_df_;
    // Per triple: its value node.
    std::vector<NodeId> triple_value_node_;
};

/// Builds the graph in one row-major pass: O(R*C) expected time with hashed
/// value lookup, O(R*C) memory.
AtgGraph build_atg(const Table& table);

std::vector<Triple> triples_of_row(const AtgGraph& graph, std::size_t row);
std::vector<Triple> triples_of_col(const AtgGraph& graph, std::size_t col);

/// "(row{i+1}; {header}; {value})"
std::string render_triple(const Triple& triple);
std::string render_triple(std::size_t row, std::string_view header, std::string_view value);

struct RenderedTriple {
    std::size_t row = 0;  // 0-based
    std::string header;
    std::string value;

    friend bool operator==(const RenderedTriple&, const RenderedTriple&) = default;
};

/// Inverse of render_triple. Also accepts the reversed "(X; Col; rowK)" form.
/// The value is taken to follow the last "; " separator, so headers may
/// contain the separator but values may not.
std::optional<RenderedTriple> parse_rendered_triple(std::string_view text);

/// One line per edge: "(root → row1)" or "(row1 → 1999 [Year])".
std::string dump_edges(const AtgGraph& graph);

nlohmann::json triples_to_json(const AtgGraph& graph);

}  // namespace tabgr
