#include "tabgr/qgppr.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "tabgr/error.hpp"
#include "tabgr/prompts.hpp"
#include "tabgr/text.hpp"

namespace tabgr {

std::string_view to_string(OrderMode mode) {
    switch (mode) {
        case OrderMode::Auto: return "auto";
        case OrderMode::AlwaysPreserve: return "always_preserve";
        case OrderMode::NeverPreserve: return "never_preserve";
    }
    return "auto";
}

OrderMode order_mode_from_string(std::string_view name) {
    if (name == "auto") return OrderMode::Auto;
    if (name == "always_preserve") return OrderMode::AlwaysPreserve;
    if (name == "never_preserve") return OrderMode::NeverPreserve;
    throw ConfigError("unknown order mode: " + std::string(name));
}

std::vector<std::string> default_order_triggers() {
    return {"first",  "last",           "previous",    "next",     "above",
            "below",  "top",            "bottom",      "earliest listed",
            "consecutive", "in order",  "before",      "after"};
}

void PprConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("alpha must lie in (0, 1), got " + std::to_string(alpha));
    }
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (w_row < 0.0 || w_col < 0.0) throw ConfigError("w_row and w_col must be nonnegative");
    if (std::abs(w_row + w_col - 1.0) > 1e-12) {
        throw ConfigError("w_row + w_col must equal 1, got " + std::to_string(w_row + w_col));
    }
    if (v_col < 0.0 || v_val < 0.0) throw ConfigError("v_col and v_val must be nonnegative");
}

nlohmann::json PprConfig::to_json() const {
    return nlohmann::json{{"alpha", alpha},
                          {"iterations", iterations},
                          {"w_row", w_row},
                          {"w_col", w_col},
                          {"v_col", v_col},
                          {"v_val", v_val},
                          {"use_idf", use_idf},
                          {"order_mode", std::string(to_string(order_mode))},
                          {"order_triggers", order_triggers},
                          {"llm_selects_values", llm_selects_values}};
}

PprConfig PprConfig::from_json(const nlohmann::json& j, PprConfig base) {
    try {
        base.alpha = j.value("alpha", base.alpha);
        base.iterations = j.value("iterations", base.iterations);
        if (j.contains("w_row") && !j.contains("w_col")) {
            base.w_row = j.at("w_row").get<double>();
            base.w_col = 1.0 - base.w_row;
        } else if (j.contains("w_col") && !j.contains("w_row")) {
            base.w_col = j.at("w_col").get<double>();
            base.w_row = 1.0 - base.w_col;
        } else {
            base.w_row = j.value("w_row", base.w_row);
            base.w_col = j.value("w_col", base.w_col);
        }
        base.v_col = j.value("v_col", base.v_col);
        base.v_val = j.value("v_val", base.v_val);
        base.use_idf = j.value("use_idf", base.use_idf);
        if (j.contains("order_mode")) {
            base.order_mode = order_mode_from_string(j.at("order_mode").get<std::string>());
        }
        if (j.contains("order_triggers")) {
            base.order_triggers = j.at("order_triggers").get<std::vector<std::string>>();
        }
        base.llm_selects_values = j.value("llm_selects_values", base.llm_selects_values);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid ppr config: ") + e.what());
    }
    return base;
}

PprConfig PprConfig::from_json(const nlohmann::json& j) { return from_json(j, PprConfig{}); }

nlohmann::json KeySets::to_json() const {
    auto vals = nlohmann::json::array();
    for (const auto& [col, v] : values) vals.push_back({{"col", col}, {"value", v}});
    return nlohmann::json{{"headers", headers},
                          {"values", std::move(vals)},
                          {"llm_columns", llm_columns},
                          {"llm_degraded", llm_degraded}};
}

KeySets exact_match_key_sets(const std::string& question, const Table& table) {
    KeySets keys;
    const std::string q = text::normalize_for_match(question);
    for (const auto& h : table.headers()) {
        const auto nh = text::normalize_for_match(h);
        if (!nh.empty() && q.find(nh) != std::string::npos) keys.headers.insert(h);
    }
    for (std::size_t j = 0; j < table.num_cols(); ++j) {
        std::set<std::string_view> seen;
        for (std::size_t i = 0; i < table.num_rows(); ++i) {
            const auto& v = table.rows()[i][j];
            if (!seen.insert(v).second) continue;
            const auto nv = text::normalize_for_match(v);
            if (text::utf8_length(nv) >= 2 && q.find(nv) != std::string::npos) {
                keys.values.emplace(j, v);
            }
        }
    }
    return keys;
}

std::string render_sample_row(const Table& table) {
    if (table.num_rows() == 0) return "(empty table)";
    std::vector<std::string> parts;
    for (std::size_t j = 0; j < table.num_cols(); ++j) {
        parts.push_back(table.headers()[j] + ": " + table.rows()[0][j]);
    }
    return text::join(parts, "; ");
}

namespace {

std::string strip_list_decoration(std::string_view item) {
    item = text::trim(item);
    while (!item.empty() && (item.front() == '[' || item.front() == '\'' || item.front() == '"' ||
                             item.front() == '`')) {
        item.remove_prefix(1);
    }
    while (!item.empty() && (item.back() == ']' || item.back() == '\'' || item.back() == '"' ||
                             item.back() == '`' || item.back() == '.')) {
        item.remove_suffix(1);
    }
    return std::string(text::trim(item));
}

}  // namespace

ColumnSelection parse_column_selection(const std::string& reply, const Table& table,
                                       bool accept_values) {
    std::string body(text::trim(reply));
    // Tolerate an echoed "Answer:" prefix.
    if (text::starts_with(body, "Answer:")) body = std::string(text::trim(body.substr(7)));
    const auto first_line_end = body.find('\n');
    if (first_line_end != std::string::npos) body = body.substr(0, first_line_end);

    std::set<std::string> items;
    for (const auto& raw : text::split(body, ",")) {
        auto item = text::normalize_for_match(strip_list_decoration(raw));
        if (!item.empty()) items.insert(item);
    }
    const auto whole = text::normalize_for_match(body);

    ColumnSelection out;
    for (std::size_t j = 0; j < table.num_cols(); ++j) {
        const auto nh = text::normalize_for_match(table.headers()[j]);
        if (nh.empty()) continue;
        bool hit = items.count(nh) > 0;
        // Headers that themselves contain commas cannot survive the split.
        if (!hit && nh.find(',') != std::string::npos) hit = whole.find(nh) != std::string::npos;
        if (hit) out.columns.push_back(j);
    }
    if (accept_values) {
        for (std::size_t j = 0; j < table.num_cols(); ++j) {
            for (const auto& row : table.rows()) {
                const auto nv = text::normalize_for_match(row[j]);
                if (text::utf8_length(nv) >= 2 && items.count(nv)) out.values.emplace(j, row[j]);
            }
        }
    }
    return out;
}

ColumnSelection select_columns(const std::string& question, const Table& table, LlmSession& llm,
                               bool accept_values) {
    const auto prompt = render(default_template(PromptKind::ColumnSelect),
                               {{"title", table.title()},
                                {"question", question},
                                {"candidate_col", text::join(table.headers(), ", ")},
                                {"sample_row", render_sample_row(table)}});
    const auto reply = llm.ask(PromptKind::ColumnSelect, prompt);
    return parse_column_selection(reply, table, accept_values);
}

KeySets merge_selection(KeySets keys, const ColumnSelection& selection, const Table& table) {
    for (auto j : selection.columns) {
        keys.headers.insert(table.headers()[j]);
        keys.llm_columns.push_back(table.headers()[j]);
    }
    keys.values.insert(selection.values.begin(), selection.values.end());
    return keys;
}

KeySets build_key_sets(const std::string& question, const Table& table, LlmSession* llm,
                       const PprConfig& config) {
    KeySets keys = exact_match_key_sets(question, table);
    if (!llm || !llm->available()) {
        keys.llm_degraded = llm != nullptr;
        return keys;
    }
    try {
        auto selection = select_columns(question, table, *llm, config.llm_selects_values);
        return merge_selection(std::move(keys), selection, table);
    } catch (const LlmUnavailable&) {
        keys.llm_degraded = true;
        return keys;
    } catch (const TimeoutError&) {
        keys.llm_degraded = true;
        return keys;
    }
}

double idf(std::size_t df, std::size_t num_rows) {
    const double n = static_cast<double>(num_rows);
    return std::log(1.0 + n / (1.0 + static_cast<double>(df)));
}

std::vector<double> raw_personalization(const AtgGraph& graph,
                                        const std::vector<std::size_t>& evidence,
                                        const KeySets& keys, const PprConfig& config) {
    std::vector<double> raw(evidence.size(), 0.0);
    for (std::size_t k = 0; k < evidence.size(); ++k) {
        const auto& t = graph.triple(evidence[k]);
        double score = 0.0;
        if (keys.headers.count(t.header)) score += config.v_col;
        if (keys.values.count({t.col, t.value})) {
            double weight = config.v_val;
            if (config.use_idf) weight *= idf(graph.df_of(t.id), graph.num_rows());
            score += weight;
        }
        raw[k] = score;
    }
    return raw;
}

std::vector<double> build_personalization(const AtgGraph& graph,
                                          const std::vector<std::size_t>& evidence,
                                          const KeySets& keys, const PprConfig& config) {
    auto p = raw_personalization(graph, evidence, keys, config);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (p.empty()) return p;
    if (total <= 0.0) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
        return p;
    }
    for (auto& x : p) x /= total;
    return p;
}

double PropagationMatrix::row_sum(std::size_t row) const {
    double s = 0.0;
    for (auto k = row_ptr[row]; k < row_ptr[row + 1]; ++k) s += values[k];
    return s;
}

double PropagationMatrix::at(std::size_t row, std::size_t col) const {
    for (auto k = row_ptr[row]; k < row_ptr[row + 1]; ++k) {
        if (col_idx[k] == col) return values[k];
    }
    return 0.0;
}

PropagationMatrix build_propagation(const AtgGraph& graph, const std::vector<std::size_t>& evidence,
                                    const PprConfig& config) {
    if (evidence.empty()) throw EmptyGraph();
    config.validate();

    std::map<std::size_t, std::vector<std::size_t>> by_row;
    std::map<std::size_t, std::vector<std::size_t>> by_col;
    for (std::size_t k = 0; k < evidence.size(); ++k) {
        const auto& t = graph.triple(evidence[k]);
        by_row[t.row].push_back(k);
        by_col[t.col].push_back(k);
    }

    PropagationMatrix m;
    m.n = evidence.size();
    m.row_ptr.reserve(m.n + 1);
    m.row_ptr.push_back(0);
    std::vector<std::pair<std::size_t, double>> entries;
    for (std::size_t u = 0; u < m.n; ++u) {
        const auto& t = graph.triple(evidence[u]);
        const auto& row_set = by_row[t.row];
        const auto& col_set = by_col[t.col];
        const double row_w = config.w_row / static_cast<double>(row_set.size());
        const double col_w = config.w_col / static_cast<double>(col_set.size());

        entries.clear();
        for (auto v : row_set) entries.emplace_back(v, row_w);
        for (auto v : col_set) entries.emplace_back(v, col_w);
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t k = 0; k < entries.size(); ++k) {
            // Only u itself appears in both sets; its two shares are summed.
            if (k + 1 < entries.size() && entries[k + 1].first == entries[k].first) {
                m.col_idx.push_back(entries[k].first);
                m.values.push_back(entries[k].second + entries[k + 1].second);
                ++k;
                continue;
            }
            m.col_idx.push_back(entries[k].first);
            m.values.push_back(entries[k].second);
        }
        m.row_ptr.push_back(m.col_idx.size());
    }
    return m;
}

PropagationMatrix build_propagation(const AtgGraph& graph, const PprConfig& config) {
    return build_propagation(graph, all_triple_ids(graph), config);
}

SalienceVector run_qgppr(const std::vector<double>& p0, const PropagationMatrix& matrix,
                         const PprConfig& config) {
    config.validate();
    if (p0.size() != matrix.n) {
        throw DimensionMismatch("personalization has " + std::to_string(p0.size()) +
                                " entries but the matrix is " + std::to_string(matrix.n) + "x" +
                                std::to_string(matrix.n));
    }
    if (matrix.n == 0) throw EmptyGraph();

    const auto n = matrix.n;
    const double alpha = config.alpha;
    std::vector<double> s(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    SalienceVector out;
    for (int it = 0; it < config.iterations; ++it) {
        for (std::size_t v = 0; v < n; ++v) next[v] = alpha * p0[v];
        // next += (1 - alpha) * A^T s, scattering each row u of A.
        for (std::size_t u = 0; u < n; ++u) {
            const double mass = (1.0 - alpha) * s[u];
            for (auto k = matrix.row_ptr[u]; k < matrix.row_ptr[u + 1]; ++k) {
                next[matrix.col_idx[k]] += matrix.values[k] * mass;
            }
        }
        double residual = 0.0;
        for (std::size_t v = 0; v < n; ++v) residual = std::max(residual, std::abs(next[v] - s[v]));
        s.swap(next);
        out.residual = residual;
        out.iterations = it + 1;
    }
    out.scores = std::move(s);
    return out;
}

namespace {

long long quantize(double x) { return std::llround(x * 1e12); }

}  // namespace

std::vector<std::size_t> rank(const AtgGraph& graph, const std::vector<std::size_t>& evidence,
                              const std::vector<double>& scores, bool order_sensitive) {
    if (scores.size() != evidence.size()) {
        throw DimensionMismatch("rank: " + std::to_string(scores.size()) + " scores for " +
                                std::to_string(evidence.size()) + " triples");
    }
    std::vector<std::size_t> order(evidence.size());
    std::iota(order.begin(), order.end(), 0);
    auto by_id = [&](std::size_t a, std::size_t b) { return evidence[a] < evidence[b]; };
    if (order_sensitive) {
        std::stable_sort(order.begin(), order.end(), by_id);
        return order;
    }

    struct RowGroup {
        std::size_t row;
        std::size_t min_id;
        double total = 0.0;
        std::vector<std::size_t> members;
    };
    std::map<std::size_t, RowGroup> groups;
    for (std::size_t k = 0; k < evidence.size(); ++k) {
        const auto& t = graph.triple(evidence[k]);
        auto [it, inserted] = groups.try_emplace(t.row, RowGroup{t.row, t.id, 0.0, {}});
        auto& g = it->second;
        g.min_id = std::min(g.min_id, t.id);
        g.members.push_back(k);
    }
    std::vector<RowGroup> rows;
    rows.reserve(groups.size());
    for (auto& [_, g] : groups) {
        std::sort(g.members.begin(), g.members.end(), by_id);
        for (auto k : g.members) g.total += scores[k];
        std::stable_sort(g.members.begin(), g.members.end(), [&](std::size_t a, std::size_t b) {
            const auto qa = quantize(scores[a]);
            const auto qb = quantize(scores[b]);
            if (qa != qb) return qa > qb;
            return evidence[a] < evidence[b];
        });
        rows.push_back(std::move(g));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const RowGroup& a, const RowGroup& b) {
        const auto qa = quantize(a.total);
        const auto qb = quantize(b.total);
        if (qa != qb) return qa > qb;
        return a.min_id < b.min_id;
    });

    order.clear();
    for (const auto& g : rows) order.insert(order.end(), g.members.begin(), g.members.end());
    return order;
}

bool detect_order_sensitive(const std::string& question, const std::vector<std::string>& triggers) {
    const auto q = text::collapse_whitespace(text::to_lower(question));
    for (const auto& term : triggers) {
        if (text::contains_term(q, text::to_lower(term))) return true;
    }
    return false;
}

bool detect_order_sensitive(const std::string& question) {
    static const auto triggers = default_order_triggers();
    return detect_order_sensitive(question, triggers);
}

bool is_order_sensitive(const std::string& question, const PprConfig& config) {
    switch (config.order_mode) {
        case OrderMode::AlwaysPreserve: return true;
        case OrderMode::NeverPreserve: return false;
        case OrderMode::Auto: return detect_order_sensitive(question, config.order_triggers);
    }
    return false;
}

std::vector<std::size_t> all_triple_ids(const AtgGraph& graph) {
    std::vector<std::size_t> ids(graph.triples().size());
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

}  // namespace tabgr
