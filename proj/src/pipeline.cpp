#include "tabgr/pipeline.hpp"

#include <set>

#include "tabgr/error.hpp"

namespace tabgr {

std::string_view to_string(Mode mode) {
    return mode == Mode::Full ? "full" : "decomposed";
}

Mode mode_from_string(std::string_view name) {
    if (name == "full") return Mode::Full;
    if (name == "decomposed") return Mode::Decomposed;
    throw ConfigError("unknown mode: " + std::string(name));
}

std::string_view to_string(Task task) { return task == Task::Qa ? "qa" : "fv"; }

Task task_from_string(std::string_view name) {
    if (name == "qa") return Task::Qa;
    if (name == "fv") return Task::Fv;
    throw ConfigError("unknown task: " + std::string(name));
}

PprConfig default_ppr_config(Mode mode, Task task) {
    PprConfig c;
    if (mode == Mode::Full) {
        c.alpha = 0.35;
        c.w_row = 0.6;
    } else {
        c.alpha = 0.15;
        c.w_row = task == Task::Qa ? 0.3 : 0.7;
    }
    c.w_col = 1.0 - c.w_row;
    return c;
}

std::vector<Triple> ScoredEvidence::ranked_triples(const AtgGraph& graph) const {
    std::vector<Triple> out;
    out.reserve(order.size());
    for (auto pos : order) out.push_back(graph.triple(evidence[pos]));
    return out;
}

ScoredEvidence score_question(const std::string& question, const Table& table,
                              const AtgGraph& graph, LlmSession* llm,
                              const PipelineConfig& config) {
    config.ppr.validate();
    ScoredEvidence out;
    if (config.mode == Mode::Decomposed) {
        auto options = config.decompose;
        options.llm_selects_values = config.ppr.llm_selects_values;
        auto sub = decompose(question, table, graph, llm, options);
        out.keys = merge_selection(exact_match_key_sets(question, table), sub.anchor_selection, table);
        out.keys.llm_degraded = sub.llm_degraded && llm != nullptr;
        out.evidence = sub.triple_ids;
        out.subgraph = std::move(sub);
        if (out.evidence.empty()) {
            out.evidence = all_triple_ids(graph);
            out.empty_subgraph_fallback = true;
        }
    } else {
        out.keys = build_key_sets(question, table, llm, config.ppr);
        out.evidence = all_triple_ids(graph);
    }
    if (out.evidence.empty()) throw EmptyGraph();

    out.personalization = build_personalization(graph, out.evidence, out.keys, config.ppr);
    const auto matrix = build_propagation(graph, out.evidence, config.ppr);
    out.salience = run_qgppr(out.personalization, matrix, config.ppr);
    out.order_sensitive = is_order_sensitive(question, config.ppr);
    out.order = rank(graph, out.evidence, out.salience.scores, out.order_sensitive);
    return out;
}

std::vector<std::string> evidence_headers(const AtgGraph& graph,
                                          const std::vector<std::size_t>& evidence) {
    std::set<std::size_t> cols;
    for (auto id : evidence) cols.insert(graph.triple(id).col);
    std::vector<std::string> out;
    for (auto c : cols) out.push_back(graph.headers()[c]);
    return out;
}

QuestionOutcome answer_question(const std::string& question, const Table& table,
                                const AtgGraph& graph, LlmSession& llm,
                                const PipelineConfig& config) {
    QuestionOutcome out;
    out.scored = score_question(question, table, graph, &llm, config);
    out.result = generate_answer(question, table.title(),
                                 evidence_headers(graph, out.scored.evidence),
                                 out.scored.ranked_triples(graph), llm);
    if (out.result.status != ParseStatus::Failed) {
        out.grounding = validate_path(out.result, graph, out.scored.evidence);
    }
    return out;
}

}  // namespace tabgr
