// Python bindings. Structured values cross the boundary as JSON text; the
// package's __init__ turns them into Python objects.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "tabgr/atg.hpp"
#include "tabgr/config.hpp"
#include "tabgr/error.hpp"
#include "tabgr/eval.hpp"
#include "tabgr/pipeline.hpp"
#include "tabgr/prompts.hpp"
#include "tabgr/reasoner.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

tabgr::RunConfig resolve(const std::string& config_json) {
    return tabgr::RunConfig::from_json(config_json.empty() ? json::object() : json::parse(config_json));
}

std::string build_graph(const std::string& table_json) {
    const auto table = tabgr::parse_table(json::parse(table_json));
    const auto graph = tabgr::build_atg(table);
    auto doc = tabgr::triples_to_json(graph);
    doc["num_nodes"] = graph.nodes().size();
    doc["num_triples"] = graph.triples().size();
    doc["num_edges"] = graph.edges().size();
    return doc.dump();
}

std::string score(const std::string& table_json, const std::string& question, const std::string& config_json) {
    const auto cfg = resolve(config_json);
    cfg.validate(false);
    const auto table = tabgr::parse_table(json::parse(table_json));
    const auto graph = tabgr::build_atg(table);
    auto client = tabgr::make_client(cfg.llm);
    tabgr::UsageLedger ledger;
    tabgr::LlmSession session(client.get(), &ledger, "score", cfg.llm.model, cfg.llm.temperature,
                              cfg.llm.max_output_tokens);
    tabgr::ScoredEvidence scored;
    {
        py::gil_scoped_release release;
        scored = tabgr::score_question(question, table, graph, client ? &session : nullptr, cfg.pipeline());
    }
    auto ranked = json::array();
    for (auto pos : scored.order) {
        const auto& t = graph.triple(scored.evidence[pos]);
        ranked.push_back({{"id", t.id},
                          {"row", t.row},
                          {"header", t.header},
                          {"value", t.value},
                          {"score", scored.salience.scores[pos]}});
    }
    return json{{"ranked", std::move(ranked)},
                {"order_sensitive", scored.order_sensitive},
                {"residual", scored.salience.residual},
                {"key_sets", scored.keys.to_json()}}
        .dump();
}

std::string answer(const std::string& table_json, const std::string& question, const std::string& config_json) {
    const auto cfg = resolve(config_json);
    cfg.validate(true);
    const auto table = tabgr::parse_table(json::parse(table_json));
    const auto graph = tabgr::build_atg(table);
    auto client = tabgr::make_client(cfg.llm);
    tabgr::UsageLedger ledger;
    tabgr::LlmSession session(client.get(), &ledger, "answer", cfg.llm.model, cfg.llm.temperature,
                              cfg.llm.max_output_tokens);
    tabgr::QuestionOutcome outcome;
    {
        py::gil_scoped_release release;
        outcome = tabgr::answer_question(question, table, graph, session, cfg.pipeline());
    }
    auto doc = outcome.result.to_json();
    doc["grounded"] = outcome.grounding.grounded;
    doc["grounded_fraction"] = outcome.grounding.fraction;
    doc["usage"] = ledger.aggregate().to_json();
    return doc.dump();
}

std::string evaluate(const std::string& config_json, const std::string& records_path) {
    const auto cfg = resolve(config_json);
    cfg.validate(true);
    const auto dataset = tabgr::load_dataset(cfg.questions_path, cfg.tables_path);
    auto client = tabgr::make_client(cfg.llm);
    tabgr::EvalOptions options;
    options.pipeline = cfg.pipeline();
    options.workers = cfg.workers;
    options.records_path = records_path;
    options.resume = cfg.resume;
    options.model = cfg.llm.model;
    options.temperature = cfg.llm.temperature;
    options.max_output_tokens = cfg.llm.max_output_tokens;
    options.config_snapshot = cfg.to_json();
    tabgr::EvalReport report;
    {
        py::gil_scoped_release release;
        report = tabgr::run_eval(dataset, options, client.get());
    }
    return report.summary_json().dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Table reasoning over attributed table graphs";

    // Translators registered later are tried first, so derived types follow
    // their base.
    auto& base_error = py::register_exception<tabgr::Error>(m, "TabgrError");
    auto& input_error = py::register_exception<tabgr::InputError>(m, "InputError", base_error.ptr());
    py::register_exception<tabgr::ConfigError>(m, "ConfigError", base_error.ptr());
    py::register_exception<tabgr::LlmError>(m, "LlmError", base_error.ptr());
    static py::handle json_error_type = input_error.ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const json::exception& e) {
            py::set_error(json_error_type, e.what());
        }
    });

    m.def("build_graph", &build_graph, py::arg("table_json"));
    m.def("score", &score, py::arg("table_json"), py::arg("question"), py::arg("config_json") = "");
    m.def("answer", &answer, py::arg("table_json"), py::arg("question"), py::arg("config_json"));
    m.def("evaluate", &evaluate, py::arg("config_json"), py::arg("records_path") = "");
    m.def("parse_output", [](const std::string& raw) { return tabgr::parse_output(raw).to_json().dump(); },
          py::arg("raw"));
    m.def("normalize_answer", [](const std::string& s) { return tabgr::normalize_answer(s); }, py::arg("text"));
    m.def("score_qa", &tabgr::score_qa, py::arg("predicted"), py::arg("gold"));
    m.def("map_fv_label", &tabgr::map_fv_label, py::arg("predicted"));
    m.def("idf", &tabgr::idf, py::arg("df"), py::arg("num_rows"));
    m.def("count_tokens", [](const std::string& s) { return tabgr::count_tokens(s); }, py::arg("text"));
    m.def("few_shot_version", [] { return std::string(tabgr::few_shot_version()); });
}
