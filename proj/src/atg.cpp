#include "tabgr/atg.hpp"

#include <charconv>

#include "tabgr/error.hpp"
#include "tabgr/text.hpp"

namespace tabgr {

AtgGraph build_atg(const Table& table) {
    AtgGraph g;
    const auto rows = table.num_rows();
    const auto cols = table.num_cols();
    g.rows_ = rows;
    g.cols_ = cols;
    g.title_ = table.title();
    g.headers_ = table.headers();

    g.nodes_.reserve(1 + rows + rows * cols);
    g.edges_.reserve(rows + rows * cols);
    g.triples_.reserve(rows * cols);
    g.value_index_.resize(cols);
    g.triple_value_node_.reserve(rows * cols);
    g.node_df_.assign(1 + rows, 0);

    g.nodes_.push_back(Node{NodeKind::Root, 0, table.title(), 0});
    for (std::size_t i = 0; i < rows; ++i) {
        g.nodes_.push_back(Node{NodeKind::RowAnchor, i, "row" + std::to_string(i + 1), 0});
        g.edges_.push_back(Edge{AtgGraph::root(), 1 + i, std::nullopt});
    }

    for (std::size_t i = 0; i < rows; ++i) {
        const auto& row = table.rows()[i];
        for (std::size_t j = 0; j < cols; ++j) {
            const auto& value = row[j];
            auto& index = g.value_index_[j];
            auto [it, inserted] = index.try_emplace(value, g.nodes_.size());
            if (inserted) {
                g.nodes_.push_back(Node{NodeKind::CellValue, j, value, index.size() - 1});
                g.node_df_.push_back(0);
            }
            const NodeId value_node = it->second;
            ++g.node_df_[value_node];
            g.edges_.push_back(Edge{1 + i, value_node, table.headers()[j]});
            g.triples_.push_back(Triple{i * cols + j, i, j, table.headers()[j], value});
            g.triple_value_node_.push_back(value_node);
        }
    }
    return g;
}

NodeId AtgGraph::row_anchor(std::size_t row) const {
    if (row >= rows_) throw IndexOutOfRange("row " + std::to_string(row) + " out of range");
    return 1 + row;
}

std::optional<NodeId> AtgGraph::value_node(std::size_t col, std::string_view value) const {
    if (col >= cols_) throw IndexOutOfRange("column " + std::to_string(col) + " out of range");
    auto it = value_index_[col].find(std::string(value));
    if (it == value_index_[col].end()) return std::nullopt;
    return it->second;
}

NodeId AtgGraph::value_node_of(std::size_t triple_id) const {
    if (triple_id >= triples_.size()) {
        throw IndexOutOfRange("triple " + std::to_string(triple_id) + " out of range");
    }
    return triple_value_node_[triple_id];
}

std::size_t AtgGraph::df(std::size_t col, std::string_view value) const {
    auto node = value_node(col, value);
    return node ? node_df_[*node] : 0;
}

std::size_t AtgGraph::df_of(std::size_t triple_id) const {
    return node_df_[value_node_of(triple_id)];
}

std::size_t AtgGraph::distinct_values(std::size_t col) const {
    if (col >= cols_) throw IndexOutOfRange("column " + std::to_string(col) + " out of range");
    return value_index_[col].size();
}

const Triple& AtgGraph::triple(std::size_t id) const {
    if (id >= triples_.size()) {
        throw IndexOutOfRange("triple " + std::to_string(id) + " out of range");
    }
    return triples_[id];
}

const Triple& AtgGraph::triple_at(std::size_t row, std::size_t col) const {
    if (row >= rows_ || col >= cols_) {
        throw IndexOutOfRange("cell (" + std::to_string(row) + ", " + std::to_string(col) +
                              ") out of range");
    }
    return triples_[row * cols_ + col];
}

std::vector<Triple> triples_of_row(const AtgGraph& graph, std::size_t row) {
    if (row >= graph.num_rows()) {
        throw IndexOutOfRange("row " + std::to_string(row) + " out of range");
    }
    const auto cols = graph.num_cols();
    const auto first = graph.triples().begin() + static_cast<std::ptrdiff_t>(row * cols);
    return std::vector<Triple>(first, first + static_cast<std::ptrdiff_t>(cols));
}

std::vector<Triple> triples_of_col(const AtgGraph& graph, std::size_t col) {
    if (col >= graph.num_cols()) {
        throw IndexOutOfRange("column " + std::to_string(col) + " out of range");
    }
    std::vector<Triple> out;
    out.reserve(graph.num_rows());
    for (std::size_t i = 0; i < graph.num_rows(); ++i) out.push_back(graph.triple_at(i, col));
    return out;
}

std::string render_triple(std::size_t row, std::string_view header, std::string_view value) {
    std::string out = "(row";
    out += std::to_string(row + 1);
    out += "; ";
    out += header;
    out += "; ";
    out += value;
    out += ")";
    return out;
}

std::string render_triple(const Triple& triple) {
    return render_triple(triple.row, triple.header, triple.value);
}

namespace {

std::optional<std::size_t> parse_row_token(std::string_view tok) {
    tok = text::trim(tok);
    if (!text::starts_with(tok, "row")) return std::nullopt;
    tok.remove_prefix(3);
    if (tok.empty()) return std::nullopt;
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), n);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || n == 0) return std::nullopt;
    return n - 1;
}

}  // namespace

std::optional<RenderedTriple> parse_rendered_triple(std::string_view s) {
    s = text::trim(s);
    if (s.size() < 2 || s.front() != '(' || s.back() != ')') return std::nullopt;
    s = s.substr(1, s.size() - 2);

    // Canonical form: "rowK; header; value".
    auto first = s.find(';');
    if (first != std::string_view::npos) {
        if (auto row = parse_row_token(s.substr(0, first))) {
            auto rest = s.substr(first + 1);
            auto last = rest.rfind("; ");
            std::size_t sep_len = 2;
            if (last == std::string_view::npos) {
                last = rest.rfind(';');
                sep_len = 1;
            }
            if (last == std::string_view::npos) return std::nullopt;
            return RenderedTriple{*row, std::string(text::trim(rest.substr(0, last))),
                                  std::string(text::trim(rest.substr(last + sep_len)))};
        }
    }
    // Reversed form: "value; header; rowK".
    auto last = s.rfind(';');
    if (last == std::string_view::npos) return std::nullopt;
    auto row = parse_row_token(s.substr(last + 1));
    if (!row) return std::nullopt;
    auto rest = s.substr(0, last);
    auto mid = rest.find("; ");
    std::size_t sep_len = 2;
    if (mid == std::string_view::npos) {
        mid = rest.find(';');
        sep_len = 1;
    }
    if (mid == std::string_view::npos) return std::nullopt;
    return RenderedTriple{*row, std::string(text::trim(rest.substr(mid + sep_len))),
                          std::string(text::trim(rest.substr(0, mid)))};
}

std::string dump_edges(const AtgGraph& graph) {
    std::string out;
    for (const auto& e : graph.edges()) {
        const auto& from = graph.nodes()[e.from];
        const auto& to = graph.nodes()[e.to];
        out += "(";
        out += from.kind == NodeKind::Root ? std::string("root") : from.label;
        out += " → ";
        out += to.label;
        if (e.attribute) {
            out += " [";
            out += *e.attribute;
            out += "]";
        }
        out += ")\n";
    }
    return out;
}

nlohmann::json triples_to_json(const AtgGraph& graph) {
    auto arr = nlohmann::json::array();
    for (const auto& t : graph.triples()) {
        arr.push_back({{"id", t.id},
                       {"row", t.row},
                       {"col", t.col},
                       {"header", t.header},
                       {"value", t.value},
                       {"df", graph.df_of(t.id)}});
    }
    return nlohmann::json{{"title", graph.title()},
                          {"rows", graph.num_rows()},
                          {"cols", graph.num_cols()},
                          {"triples", std::move(arr)}};
}

}  // namespace tabgr
