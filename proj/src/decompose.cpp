#include "tabgr/decompose.hpp"

#include <algorithm>
#include <cctype>

#include "tabgr/error.hpp"
#include "tabgr/prompts.hpp"
#include "tabgr/text.hpp"

namespace tabgr {

std::string_view to_string(Sufficiency s) {
    switch (s) {
        case Sufficiency::Unknown: return "unknown";
        case Sufficiency::Sufficient: return "sufficient";
        case Sufficiency::BudgetExhausted: return "budget_exhausted";
    }
    return "unknown";
}

nlohmann::json Subgraph::trace_json() const {
    auto rounds_json = nlohmann::json::array();
    for (const auto& r : rounds) {
        nlohmann::json j{{"round", r.round},
                         {"verdict", r.verdict ? nlohmann::json(*r.verdict) : nlohmann::json()},
                         {"judge_parse_error", r.judge_parse_error},
                         {"selected_relations", r.selected_relations},
                         {"expand_parse_error", r.expand_parse_error},
                         {"added", r.added}};
        rounds_json.push_back(std::move(j));
    }
    return nlohmann::json{{"anchors", anchors},
                          {"anchor_columns", anchor_columns},
                          {"selected_headers", selected_headers},
                          {"rounds", std::move(rounds_json)},
                          {"expansion_rounds", expansion_rounds},
                          {"sufficiency", std::string(to_string(sufficiency))},
                          {"triples", triple_ids.size()},
                          {"llm_degraded", llm_degraded},
                          {"full_graph_fallback", fell_back_to_full_graph},
                          {"log", log}};
}

namespace {

void add_ids(Subgraph& sub, const std::vector<std::size_t>& ids) {
    std::vector<std::size_t> merged;
    merged.reserve(sub.triple_ids.size() + ids.size());
    std::set_union(sub.triple_ids.begin(), sub.triple_ids.end(), ids.begin(), ids.end(),
                   std::back_inserter(merged));
    sub.triple_ids = std::move(merged);
}

std::vector<std::size_t> column_ids(const AtgGraph& graph, std::size_t col) {
    std::vector<std::size_t> ids;
    ids.reserve(graph.num_rows());
    for (std::size_t i = 0; i < graph.num_rows(); ++i) ids.push_back(i * graph.num_cols() + col);
    return ids;
}

void select_header(Subgraph& sub, const AtgGraph& graph, std::size_t col) {
    const auto& h = graph.headers()[col];
    if (std::find(sub.selected_headers.begin(), sub.selected_headers.end(), h) ==
        sub.selected_headers.end()) {
        sub.selected_headers.push_back(h);
    }
    add_ids(sub, column_ids(graph, col));
}

void sort_selected(Subgraph& sub, const AtgGraph& graph) {
    const auto& headers = graph.headers();
    auto pos = [&](const std::string& h) {
        return std::find(headers.begin(), headers.end(), h) - headers.begin();
    };
    std::sort(sub.selected_headers.begin(), sub.selected_headers.end(),
              [&](const std::string& a, const std::string& b) { return pos(a) < pos(b); });
}

std::vector<std::string> available_relations(const Subgraph& sub, const AtgGraph& graph) {
    std::vector<std::string> out;
    for (const auto& h : graph.headers()) {
        if (std::find(sub.selected_headers.begin(), sub.selected_headers.end(), h) ==
            sub.selected_headers.end()) {
            out.push_back(h);
        }
    }
    return out;
}

std::optional<std::size_t> find_header(const AtgGraph& graph, const std::string& name) {
    const auto& headers = graph.headers();
    for (std::size_t j = 0; j < headers.size(); ++j) {
        if (headers[j] == name) return j;
    }
    const auto norm = text::normalize_for_match(name);
    if (norm.empty()) return std::nullopt;
    for (std::size_t j = 0; j < headers.size(); ++j) {
        if (text::normalize_for_match(headers[j]) == norm) return j;
    }
    return std::nullopt;
}

bool is_unreachable(const std::exception& e) {
    return dynamic_cast<const LlmUnavailable*>(&e) || dynamic_cast<const TimeoutError*>(&e);
}

}  // namespace

Subgraph anchor_triples(const std::string& question, const Table& table, const AtgGraph& graph,
                        LlmSession* llm, const DecomposeOptions& options) {
    Subgraph sub;
    const auto exact = exact_match_key_sets(question, table);
    std::vector<std::size_t> ids;
    for (const auto& t : graph.triples()) {
        if (exact.values.count({t.col, t.value})) ids.push_back(t.id);
    }
    add_ids(sub, ids);

    if (llm && llm->available()) {
        try {
            sub.anchor_selection = select_columns(question, table, *llm, options.llm_selects_values);
            for (auto j : sub.anchor_selection.columns) select_header(sub, graph, j);
            std::vector<std::size_t> value_ids;
            for (const auto& t : graph.triples()) {
                if (sub.anchor_selection.values.count({t.col, t.value})) value_ids.push_back(t.id);
            }
            add_ids(sub, value_ids);
        } catch (const Error& e) {
            if (!is_unreachable(e)) throw;
            sub.llm_degraded = true;
            sub.log.push_back(std::string("column selection unavailable: ") + e.what());
        }
    } else {
        sub.llm_degraded = true;
    }
    sort_selected(sub, graph);
    sub.anchors = sub.triple_ids;
    sub.anchor_columns = sub.selected_headers;
    return sub;
}

std::optional<bool> parse_sufficiency(const std::string& reply) {
    const auto lower = text::to_lower(reply);
    std::string_view tail = lower;
    auto pos = lower.rfind("finished:");
    if (pos != std::string::npos) tail = std::string_view(lower).substr(pos + 9);
    tail = text::trim(tail);
    std::size_t end = 0;
    while (end < tail.size() && std::isalpha(static_cast<unsigned char>(tail[end]))) ++end;
    const auto word = tail.substr(0, end);
    if (word == "true") return true;
    if (word == "false") return false;
    return std::nullopt;
}

std::optional<std::vector<std::string>> parse_selected_relations(const std::string& reply) {
    std::string_view body = reply;
    auto pos = reply.rfind("SELECTED_RELATIONS:");
    if (pos != std::string::npos) body = body.substr(pos + 19);
    auto open = body.find('[');
    if (open == std::string_view::npos) return std::nullopt;
    auto close = body.find(']', open);
    if (close == std::string_view::npos) return std::nullopt;
    auto inner = body.substr(open + 1, close - open - 1);

    std::vector<std::string> out;
    if (inner.find('\'') == std::string_view::npos && inner.find('"') == std::string_view::npos) {
        for (const auto& item : text::split(inner, ",")) {
            auto t = text::trim(item);
            if (!t.empty()) out.emplace_back(t);
        }
        return out;
    }
    std::size_t i = 0;
    while (i < inner.size()) {
        const char q = inner[i];
        if (q != '\'' && q != '"') {
            ++i;
            continue;
        }
        std::string item;
        ++i;
        bool closed = false;
        while (i < inner.size()) {
            if (inner[i] == '\\' && i + 1 < inner.size()) {
                item += inner[i + 1];
                i += 2;
                continue;
            }
            if (inner[i] == q) {
                closed = true;
                ++i;
                break;
            }
            item += inner[i++];
        }
        if (!closed) return std::nullopt;
        out.push_back(std::move(item));
    }
    return out;
}

std::string render_paths(const AtgGraph& graph, const std::vector<std::size_t>& ids) {
    std::string out;
    for (auto id : ids) {
        out += '\n';
        out += render_triple(graph.triple(id));
    }
    return out;
}

bool judge_sufficiency(const std::string& question, Subgraph& subgraph, const AtgGraph& graph,
                       LlmSession& llm, RoundTrace* trace) {
    if (subgraph.empty()) {
        if (trace) trace->verdict = false;
        return false;
    }
    const auto prompt = render(default_template(PromptKind::Sufficiency),
                               {{"title", graph.title()},
                                {"question", question},
                                {"reasoning_paths", render_paths(graph, subgraph.triple_ids)}});
    const auto reply = llm.ask(PromptKind::Sufficiency, prompt);
    auto verdict = parse_sufficiency(reply);
    if (!verdict) {
        subgraph.log.push_back("ParseError: sufficiency reply lacks True/False: " + reply);
        if (trace) {
            trace->judge_parse_error = true;
            trace->verdict = false;
        }
        return false;
    }
    if (trace) trace->verdict = *verdict;
    return *verdict;
}

void expand(const std::string& question, Subgraph& subgraph, const Table& table,
            const AtgGraph& graph, LlmSession& llm, RoundTrace* trace) {
    const auto available = available_relations(subgraph, graph);
    if (available.empty()) {
        subgraph.sufficiency = Sufficiency::BudgetExhausted;
        return;
    }
    const auto prompt = render(default_template(PromptKind::EdgeSelect),
                               {{"title", graph.title()},
                                {"question", question},
                                {"reasoning_paths", render_paths(graph, subgraph.triple_ids)},
                                {"available_relations", "\n" + text::join(available, "\n")},
                                {"sample_row", render_sample_row(table)}});
    ++subgraph.expansion_rounds;
    const auto reply = llm.ask(PromptKind::EdgeSelect, prompt);
    auto names = parse_selected_relations(reply);
    if (!names) {
        subgraph.log.push_back("ParseError: edge selection reply lacks a relation list: " + reply);
        if (trace) trace->expand_parse_error = true;
        return;
    }
    const auto before = subgraph.triple_ids.size();
    for (const auto& name : *names) {
        auto col = find_header(graph, name);
        if (!col) {
            subgraph.log.push_back("discarded unknown relation: " + name);
            continue;
        }
        if (std::find(available.begin(), available.end(), graph.headers()[*col]) == available.end()) {
            continue;
        }
        select_header(subgraph, graph, *col);
        if (trace) trace->selected_relations.push_back(graph.headers()[*col]);
    }
    sort_selected(subgraph, graph);
    if (trace) trace->added = subgraph.triple_ids.size() - before;
}

Subgraph decompose(const std::string& question, const Table& table, const AtgGraph& graph,
                   LlmSession* llm, const DecomposeOptions& options) {
    Subgraph sub = anchor_triples(question, table, graph, llm, options);
    if (sub.llm_degraded) {
        if (sub.empty()) {
            throw LlmUnavailable("no exact-match anchors and no reachable LLM for decomposition");
        }
        return sub;
    }

    auto run_round = [&](bool judge_first) -> bool {
        RoundTrace trace;
        trace.round = sub.expansion_rounds + 1;
        if (judge_first) {
            if (judge_sufficiency(question, sub, graph, *llm, &trace)) {
                sub.sufficiency = Sufficiency::Sufficient;
                sub.rounds.push_back(std::move(trace));
                return false;
            }
        }
        if (available_relations(sub, graph).empty()) {
            sub.sufficiency = Sufficiency::BudgetExhausted;
            sub.rounds.push_back(std::move(trace));
            return false;
        }
        expand(question, sub, table, graph, *llm, &trace);
        sub.rounds.push_back(std::move(trace));
        return true;
    };

    try {
        bool go_on = true;
        if (sub.empty() && options.max_rounds > 0) go_on = run_round(false);
        while (go_on && sub.expansion_rounds < options.max_rounds) go_on = run_round(true);
        if (sub.sufficiency == Sufficiency::Unknown) sub.sufficiency = Sufficiency::BudgetExhausted;
    } catch (const Error& e) {
        if (!is_unreachable(e)) throw;
        sub.llm_degraded = true;
        sub.log.push_back(std::string("decomposition stopped, LLM unavailable: ") + e.what());
        if (sub.empty()) throw;
    }

    if (options.full_graph_fallback && sub.sufficiency == Sufficiency::BudgetExhausted) {
        sub.triple_ids = all_triple_ids(graph);
        sub.fell_back_to_full_graph = true;
    }
    return sub;
}

}  // namespace tabgr
