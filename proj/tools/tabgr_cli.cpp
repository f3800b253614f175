// Command-line runner: graph inspection, salience scoring, single answers and
// dataset evaluations.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tabgr/atg.hpp"
#include "tabgr/config.hpp"
#include "tabgr/error.hpp"
#include "tabgr/eval.hpp"
#include "tabgr/pipeline.hpp"
#include "tabgr/table.hpp"
#include "tabgr/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitService = 3;
constexpr int kExitConfig = 4;

struct Flags {
    std::string config_path;
    std::string mode, task;
    std::optional<double> alpha, w_row;
    std::optional<int> iterations, workers;
    std::string dataset, tables, base_url, model, mock_script, out;
    std::vector<std::uint64_t> seeds;
    bool no_llm = false;
    bool resume = false;
};

void add_run_flags(CLI::App* cmd, Flags& f, bool dataset_flags) {
    cmd->add_option("--config", f.config_path, "JSON run configuration");
    cmd->add_option("--mode", f.mode, "full or decomposed")->check(CLI::IsMember({"full", "decomposed"}));
    cmd->add_option("--task", f.task, "qa or fv")->check(CLI::IsMember({"qa", "fv"}));
    cmd->add_option("--alpha", f.alpha, "restart probability");
    cmd->add_option("--w-row", f.w_row, "row share of the propagation weight");
    cmd->add_option("--iterations", f.iterations, "power iterations");
    cmd->add_option("--llm-base-url", f.base_url, "OpenAI-compatible endpoint");
    cmd->add_option("--llm-model", f.model, "model name for the remote endpoint");
    cmd->add_option("--mock-script", f.mock_script, "scripted mock responses (JSON)");
    cmd->add_flag("--no-llm", f.no_llm, "exact-match key sets only, no LLM calls");
    if (dataset_flags) {
        cmd->add_option("--dataset", f.dataset, "question records (JSON Lines)");
        cmd->add_option("--tables", f.tables, "table records (JSON Lines)");
        cmd->add_option("--workers", f.workers, "parallel questions");
        cmd->add_option("--out", f.out, "output directory");
        cmd->add_option("--seeds", f.seeds, "shuffle seeds");
        cmd->add_flag("--resume", f.resume, "skip questions already recorded in the output");
    }
}

tabgr::RunConfig resolve_config(const Flags& f) {
    auto j = tabgr::load_config_json(f.config_path);
    json patch = json::object();
    if (!f.mode.empty()) patch["mode"] = f.mode;
    if (!f.task.empty()) patch["task"] = f.task;
    if (f.alpha) patch["ppr"]["alpha"] = *f.alpha;
    if (f.w_row) {
        patch["ppr"]["w_row"] = *f.w_row;
        patch["ppr"]["w_col"] = 1.0 - *f.w_row;
    }
    if (f.iterations) patch["ppr"]["iterations"] = *f.iterations;
    if (!f.dataset.empty()) patch["dataset"]["questions"] = f.dataset;
    if (!f.tables.empty()) patch["dataset"]["tables"] = f.tables;
    if (!f.base_url.empty()) {
        patch["llm"]["base_url"] = f.base_url;
        patch["llm"]["mock_script"] = "";
        patch["llm"]["provider"] = "remote";
    }
    if (!f.model.empty()) patch["llm"]["model"] = f.model;
    if (!f.mock_script.empty()) {
        if (!f.base_url.empty()) {
            throw tabgr::ConfigError("--mock-script and --llm-base-url are mutually exclusive");
        }
        patch["llm"]["mock_script"] = f.mock_script;
        patch["llm"]["base_url"] = "";
        patch["llm"]["provider"] = "mock";
    }
    if (f.no_llm) patch["llm"]["provider"] = "none";
    if (f.workers) patch["workers"] = *f.workers;
    if (!f.out.empty()) patch["out"] = f.out;
    if (!f.seeds.empty()) patch["seeds"] = f.seeds;
    if (f.resume) patch["resume"] = true;
    tabgr::merge_json(j, patch);
    return tabgr::RunConfig::from_json(j);
}

/// A single table record, or a JSON Lines table store searched by id.
tabgr::Table load_table_file(const std::string& path, const std::string& table_id) {
    std::ifstream in(path);
    if (!in) throw tabgr::InputError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto content = ss.str();
    try {
        const auto doc = json::parse(content);
        auto table = tabgr::parse_table(doc);
        if (!table_id.empty() && table.source_id() != table_id) throw tabgr::MissingTable(table_id);
        return table;
    } catch (const json::parse_error&) {
        // Fall through to JSON Lines.
    }
    std::istringstream lines(content);
    std::string line;
    std::optional<tabgr::Table> first;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (tabgr::text::trim(line).empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::parse_error& e) {
            throw tabgr::MalformedRecord(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        auto table = tabgr::parse_table(doc);
        if (table_id.empty()) {
            if (first) throw tabgr::InputError(path + " holds several tables; pass --table-id");
            first = std::move(table);
        } else if (table.source_id() == table_id) {
            return table;
        }
    }
    if (first) return *first;
    if (!table_id.empty()) throw tabgr::MissingTable(table_id);
    throw tabgr::MalformedRecord(path + " holds no table record");
}

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw tabgr::InputError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

/// Config snapshot stored in reports: run logistics are left out so reports
/// compare equal across output directories.
json report_snapshot(const tabgr::RunConfig& cfg) {
    auto j = cfg.to_json();
    j.erase("out");
    j.erase("resume");
    j.erase("workers");
    return j;
}

tabgr::EvalOptions eval_options(const tabgr::RunConfig& cfg) {
    tabgr::EvalOptions o;
    o.pipeline = cfg.pipeline();
    o.workers = cfg.workers;
    o.resume = cfg.resume;
    o.model = cfg.llm.model;
    o.temperature = cfg.llm.temperature;
    o.max_output_tokens = cfg.llm.max_output_tokens;
    o.config_snapshot = report_snapshot(cfg);
    return o;
}

tabgr::Dataset load_config_dataset(const tabgr::RunConfig& cfg) {
    if (cfg.questions_path.empty() || cfg.tables_path.empty()) {
        throw tabgr::ConfigError("--dataset and --tables are required");
    }
    return tabgr::load_dataset(cfg.questions_path, cfg.tables_path);
}

int cmd_build_graph(const std::string& path, const std::string& table_id,
                    const std::string& export_path, bool edges) {
    const auto table = load_table_file(path, table_id);
    const auto t0 = std::chrono::steady_clock::now();
    const auto graph = tabgr::build_atg(table);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::printf("nodes=%zu triples=%zu edges=%zu build_ms=%.3f\n", graph.nodes().size(),
                graph.triples().size(), graph.edges().size(), ms);
    if (edges) std::cout << tabgr::dump_edges(graph);
    if (!export_path.empty()) write_json(export_path, tabgr::triples_to_json(graph));
    return kExitOk;
}

int cmd_score(const Flags& flags, const std::string& table_path, const std::string& table_id,
              const std::string& question) {
    const auto cfg = resolve_config(flags);
    cfg.validate(false);
    const auto table = load_table_file(table_path, table_id);
    const auto graph = tabgr::build_atg(table);
    auto client = tabgr::make_client(cfg.llm);
    tabgr::UsageLedger ledger;
    tabgr::LlmSession session(client.get(), &ledger, "score", cfg.llm.model, cfg.llm.temperature,
                              cfg.llm.max_output_tokens);
    const auto scored = tabgr::score_question(question, table, graph,
                                              client ? &session : nullptr, cfg.pipeline());
    std::printf("# order_sensitive=%s residual=%.3e llm_degraded=%s\n",
                scored.order_sensitive ? "true" : "false", scored.salience.residual,
                scored.keys.llm_degraded ? "true" : "false");
    std::size_t rank = 0;
    for (auto pos : scored.order) {
        const auto& t = graph.triple(scored.evidence[pos]);
        std::printf("%zu\t%.12f\t%s\n", ++rank, scored.salience.scores[pos],
                    tabgr::render_triple(t).c_str());
    }
    return kExitOk;
}

int cmd_answer(const Flags& flags, const std::string& table_path, const std::string& table_id,
               const std::string& question, const std::string& gold) {
    const auto cfg = resolve_config(flags);
    cfg.validate(true);
    const auto table = load_table_file(table_path, table_id);
    const auto graph = tabgr::build_atg(table);
    auto client = tabgr::make_client(cfg.llm);
    tabgr::UsageLedger ledger;
    tabgr::LlmSession session(client.get(), &ledger, "answer", cfg.llm.model, cfg.llm.temperature,
                              cfg.llm.max_output_tokens);
    const auto outcome = tabgr::answer_question(question, table, graph, session, cfg.pipeline());
    json record = outcome.result.to_json();
    record["question"] = question;
    record["mode"] = std::string(tabgr::to_string(cfg.mode));
    record["grounded"] = outcome.grounding.grounded;
    record["grounded_fraction"] = outcome.grounding.fraction;
    record["key_sets"] = outcome.scored.keys.to_json();
    record["usage"] = ledger.aggregate().to_json();
    if (outcome.scored.subgraph) record["decomposition"] = outcome.scored.subgraph->trace_json();
    if (!gold.empty()) {
        record["correct"] = outcome.result.status != tabgr::ParseStatus::Failed &&
                            tabgr::score_qa(outcome.result.answer, {gold});
    }
    std::cout << record.dump(2) << '\n';
    return kExitOk;
}

int cmd_eval(const Flags& flags) {
    const auto cfg = resolve_config(flags);
    cfg.validate(true);
    const auto dataset = load_config_dataset(cfg);
    auto client = tabgr::make_client(cfg.llm);
    const fs::path out = cfg.out_dir;
    fs::create_directories(out);
    write_json(out / "config.json", cfg.to_json());
    auto options = eval_options(cfg);
    options.records_path = (out / "records.jsonl").string();
    const auto report = tabgr::run_eval(dataset, options, client.get());
    write_json(out / "summary.json", report.summary_json());
    write_json(out / "timings.json", report.timings_json());
    std::printf("questions=%zu correct=%zu incorrect=%zu failed=%zu accuracy=%.4f\n",
                report.records.size(), report.correct, report.incorrect, report.failed,
                report.accuracy());
    return kExitOk;
}

int cmd_shuffle_eval(const Flags& flags) {
    const auto cfg = resolve_config(flags);
    cfg.validate(true);
    if (cfg.seeds.empty()) throw tabgr::ConfigError("shuffle-eval needs at least one seed");
    const auto dataset = load_config_dataset(cfg);
    auto client = tabgr::make_client(cfg.llm);
    const fs::path out = cfg.out_dir;
    fs::create_directories(out / "runs");
    write_json(out / "config.json", cfg.to_json());
    const auto report = tabgr::run_permutation_experiment(dataset, cfg.seeds, eval_options(cfg),
                                                          client.get(), (out / "runs").string());
    auto doc = report.to_json();
    doc["config"] = report_snapshot(cfg);
    write_json(out / "permutation.json", doc);
    for (const auto& [mode, delta] : report.mean_delta) {
        std::printf("mean_delta[%s]=%+.4f\n", std::string(tabgr::to_string(mode)).c_str(), delta);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Table reasoning over attributed table graphs"};
    app.require_subcommand(1);

    std::string table_path, table_id, export_path, question, gold;
    bool edges = false;
    Flags flags;

    auto* build = app.add_subcommand("build-graph", "Build the table graph and print its size");
    build->add_option("table", table_path, "table record (JSON) or table store (JSON Lines)")->required();
    build->add_option("--table-id", table_id, "table to pick from a store");
    build->add_option("--export", export_path, "write the triples as JSON");
    build->add_flag("--edges", edges, "print every edge");

    auto* score = app.add_subcommand("score", "Rank triples by question-guided salience");
    score->add_option("--table", table_path, "table file")->required();
    score->add_option("--table-id", table_id, "table to pick from a store");
    score->add_option("--question", question, "question text")->required();
    add_run_flags(score, flags, false);

    auto* answer = app.add_subcommand("answer", "Answer one question");
    answer->add_option("--table", table_path, "table file")->required();
    answer->add_option("--table-id", table_id, "table to pick from a store");
    answer->add_option("--question", question, "question text")->required();
    answer->add_option("--gold", gold, "gold answer to score against");
    add_run_flags(answer, flags, false);

    auto* eval = app.add_subcommand("eval", "Evaluate a dataset");
    add_run_flags(eval, flags, true);
    auto* shuffle = app.add_subcommand("shuffle-eval", "Permutation robustness experiment");
    add_run_flags(shuffle, flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*build) return cmd_build_graph(table_path, table_id, export_path, edges);
        if (*score) return cmd_score(flags, table_path, table_id, question);
        if (*answer) return cmd_answer(flags, table_path, table_id, question, gold);
        if (*eval) return cmd_eval(flags);
        if (*shuffle) return cmd_shuffle_eval(flags);
    } catch (const tabgr::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const tabgr::LlmError& e) {
        std::fprintf(stderr, "LLM error: %s\n", e.what());
        return kExitService;
    } catch (const tabgr::Error& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kExitInput;
    }
    return kExitOk;
}
