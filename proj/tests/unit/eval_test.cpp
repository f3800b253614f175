#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tabgr/error.hpp"
#include "tabgr/eval.hpp"
#include "test_support.hpp"

using namespace tabgr;
using testing_support::data_path;
namespace fs = std::filesystem;

namespace {

Dataset golden3() {
    return load_dataset(data_path("golden3/questions.jsonl"), data_path("golden3/tables.jsonl"));
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("tabgr_eval_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Echoes the first triple of the answer prompt's table content as the answer.
std::string answer_first_triple(const LlmRequest& r) {
    if (r.kind != PromptKind::AnswerGen) return "";
    auto pos = r.prompt.rfind("Table Content: \n");
    auto line = r.prompt.substr(pos + 16, r.prompt.find('\n', pos + 16) - pos - 16);
    auto value = line.substr(line.rfind("; ") + 2);
    value.pop_back();
    return line + "</paths>\nfirst\n</think>\n<answer>" + value + "</answer>";
}

}  // namespace

TEST(Dataset, LoadsAndLinksTables) {
    auto ds = golden3();
    ASSERT_EQ(ds.examples.size(), 3u);
    EXPECT_EQ(ds.examples[0].id, "q01");
    EXPECT_EQ(ds.table_of(ds.examples[1]).source_id(), "marathon");
    EXPECT_EQ(ds.examples[2].answers, std::vector<std::string>{"2000"});
}

TEST(Dataset, Errors) {
    const std::string table = R"({"id": "t", "header": ["A"], "rows": [["x"]]})";
    EXPECT_THROW(parse_dataset(R"({"id": "a", "table_id": "zz", "question": "?", "answers": ["x"]})", table),
                 MissingTable);
    EXPECT_THROW(parse_dataset("{not json", table), MalformedRecord);
    EXPECT_THROW(parse_dataset(R"({"id": "a", "table_id": "t", "answers": ["x"]})", table), MalformedRecord);
    EXPECT_THROW(parse_dataset(R"({"id": "a", "table_id": "t", "question": "?"})", table), MalformedRecord);
    EXPECT_THROW(parse_dataset(
                     "{\"id\": \"a\", \"table_id\": \"t\", \"question\": \"?\", \"answers\": [\"x\"]}\n"
                     "{\"id\": \"a\", \"table_id\": \"t\", \"question\": \"?\", \"answers\": [\"x\"]}",
                     table),
                 MalformedRecord);
    EXPECT_THROW(parse_dataset("", table + "\n" + table), MalformedRecord);
    EXPECT_THROW(parse_dataset(R"({"id": "a", "table_id": "t", "question": "?", "label": true})", table,
                               Task::Qa),
                 MalformedRecord);
    auto fv = parse_dataset(R"({"id": "a", "table_id": "t", "question": "?", "label": 1})", table);
    EXPECT_EQ(fv.examples[0].task, Task::Fv);
    EXPECT_TRUE(fv.examples[0].label);
    EXPECT_TRUE(parse_dataset("\n\n", table).examples.empty());
}

TEST(NormalizeAnswer, Rules) {
    EXPECT_EQ(normalize_answer("  The   Beatles "), "the beatles");
    EXPECT_EQ(normalize_answer("1982–1985"), "1982-1985");
    EXPECT_EQ(normalize_answer("\"Kenya\"."), "kenya");
    EXPECT_EQ(normalize_answer("Paris[1]"), "paris");
    EXPECT_EQ(normalize_answer("2,000"), "2000");
    EXPECT_EQ(normalize_answer("2000.0"), "2000");
    EXPECT_EQ(normalize_answer("3.50"), "3.5");
    EXPECT_EQ(normalize_answer("1,2"), "1,2");
    EXPECT_EQ(normalize_answer("12,345,678"), "12345678");
    EXPECT_EQ(normalize_answer("1,2345"), "1,2345");
    EXPECT_EQ(normalize_answer("-1,000.5"), "-1000.5");
    EXPECT_EQ(normalize_answer("’tis"), "'tis");
}

TEST(ScoreQa, Examples) {
    EXPECT_TRUE(score_qa("1982–1985", {"1982-1985"}));
    EXPECT_TRUE(score_qa("2,000", {"2000"}));
    EXPECT_TRUE(score_qa("b | a", {"a|b"}));
    EXPECT_FALSE(score_qa("a", {"a|b"}));
    EXPECT_FALSE(score_qa("a|a", {"a"}));
    EXPECT_TRUE(score_qa("USA", {"United States", "usa"}));
    EXPECT_FALSE(score_qa("", {""}));
    EXPECT_FALSE(score_qa("Kenyan", {"Kenya"}));
}

TEST(ScoreFv, Examples) {
    EXPECT_EQ(map_fv_label("True"), true);
    EXPECT_EQ(map_fv_label("Entailed."), true);
    EXPECT_EQ(map_fv_label("refuted"), false);
    EXPECT_EQ(map_fv_label("The statement is not supported"), false);
    EXPECT_EQ(map_fv_label("yes and no"), std::nullopt);
    EXPECT_EQ(map_fv_label("maybe"), std::nullopt);
    EXPECT_TRUE(score_fv("SUPPORTED", true).correct);
    EXPECT_FALSE(score_fv("false", true).correct);
    auto miss = score_fv("unclear", false);
    EXPECT_FALSE(miss.correct);
    EXPECT_TRUE(miss.parse_miss);
}

TEST(Buckets, Boundaries) {
    EXPECT_EQ(bucket_of_tokens(0), Bucket::Small);
    EXPECT_EQ(bucket_of_tokens(999), Bucket::Small);
    EXPECT_EQ(bucket_of_tokens(1000), Bucket::Medium);
    EXPECT_EQ(bucket_of_tokens(4000), Bucket::Medium);
    EXPECT_EQ(bucket_of_tokens(4001), Bucket::Large);
    auto t = testing_support::make_table({"A"}, {{"x"}});
    // "(row1; A; x)" is 12 code points.
    EXPECT_EQ(table_tokens(t), 3);
    EXPECT_EQ(bucket_of(t), Bucket::Small);
}

TEST(RunEval, GoldenAllCorrect) {
    ScriptedClient client(load_mock_script(data_path("golden3/mock_ok.json")));
    auto report = run_eval(golden3(), EvalOptions{}, &client);
    EXPECT_EQ(report.correct, 3u);
    EXPECT_EQ(report.parse_misses, 0u);
    EXPECT_DOUBLE_EQ(report.accuracy(), 1.0);
    for (const auto& r : report.records) {
        EXPECT_EQ(r.status, "ok");
        EXPECT_EQ(r.parse_status, "clean");
    }
}

TEST(RunEval, GoldenOneMalformed) {
    ScriptedClient client(load_mock_script(data_path("golden3/mock_malformed.json")));
    auto report = run_eval(golden3(), EvalOptions{}, &client);
    EXPECT_EQ(report.correct, 2u);
    EXPECT_EQ(report.incorrect, 1u);
    EXPECT_EQ(report.failed, 0u);
    EXPECT_EQ(report.parse_misses, 1u);
    EXPECT_NEAR(report.accuracy(), 2.0 / 3.0, 1e-12);
    EXPECT_EQ(report.records[1].id, "q05");
    EXPECT_TRUE(report.records[1].parse_miss);
    EXPECT_EQ(report.records[1].parse_status, "failed");
    EXPECT_FALSE(report.records[1].grounded_fraction.has_value());
}

TEST(RunEval, EmptyDataset) {
    auto report = run_eval(Dataset{}, EvalOptions{}, nullptr);
    EXPECT_EQ(report.records.size(), 0u);
    EXPECT_EQ(report.accuracy(), 0.0);
    auto s = report.summary_json();
    EXPECT_EQ(s["dataset_size"], 0);
    EXPECT_EQ(s["accuracy"], 0.0);
}

TEST(RunEval, NoClientFailsQuestionsButContinues) {
    auto report = run_eval(golden3(), EvalOptions{}, nullptr);
    EXPECT_EQ(report.failed, 3u);
    EXPECT_EQ(report.records[0].status, "error");
    EXPECT_TRUE(report.records[0].detail.contains("error"));
}

TEST(RunEval, WorkersDoNotChangeResults) {
    ScriptedClient c1(load_mock_script(data_path("golden3/mock_malformed.json")));
    ScriptedClient c4(load_mock_script(data_path("golden3/mock_malformed.json")));
    EvalOptions one, four;
    four.workers = 4;
    auto a = run_eval(golden3(), one, &c1);
    auto b = run_eval(golden3(), four, &c4);
    EXPECT_EQ(a.summary_json(), b.summary_json());
}

TEST(RunEval, ResumeSkipsFinishedAndTornRecords) {
    auto dir = scratch_dir("resume");
    const auto path = (dir / "records.jsonl").string();
    ScriptedClient first(load_mock_script(data_path("golden3/mock_ok.json")));
    EvalOptions opt;
    opt.records_path = path;
    auto full = run_eval(golden3(), opt, &first);
    ASSERT_EQ(full.correct, 3u);

    // Simulate a crash: keep the first record and a torn second line.
    auto contents = slurp(path);
    auto first_nl = contents.find('\n');
    {
        std::ofstream out(path, std::ios::trunc);
        out << contents.substr(0, first_nl + 1) << contents.substr(first_nl + 1, 25);
    }

    std::atomic<int> calls{0};
    ScriptedClient inner(load_mock_script(data_path("golden3/mock_ok.json")));
    FunctionClient counting([&](const LlmRequest& r) {
        ++calls;
        return inner.complete(r).text;
    });
    opt.resume = true;
    auto resumed = run_eval(golden3(), opt, &counting);
    EXPECT_EQ(resumed.resumed, 1u);
    EXPECT_EQ(resumed.correct, 3u);
    EXPECT_EQ(calls.load(), 4);  // two questions, two calls each
    EXPECT_EQ(resumed.summary_json(), full.summary_json());

    std::ifstream in(path);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        EXPECT_NO_THROW(QuestionRecord::from_json(nlohmann::json::parse(line)));
        ++n;
    }
    EXPECT_EQ(n, 3);
    fs::remove_all(dir);
}

TEST(QuestionRecord, JsonRoundTrip) {
    ScriptedClient client(load_mock_script(data_path("golden3/mock_ok.json")));
    auto report = run_eval(golden3(), EvalOptions{}, &client);
    for (const auto& r : report.records) {
        EXPECT_EQ(QuestionRecord::from_json(r.to_json()).to_json(), r.to_json());
    }
}

TEST(Permutation, TableSeedMixesId) {
    EXPECT_EQ(table_seed(1, "a"), table_seed(1, "a"));
    EXPECT_NE(table_seed(1, "a"), table_seed(1, "b"));
    EXPECT_NE(table_seed(1, "a"), table_seed(2, "a"));
}

TEST(Permutation, ShuffledDatasetKeepsOrderSensitiveQuestions) {
    const std::string tables = R"({"id": "t", "header": ["A", "B"], "rows": [["1", "x"], ["2", "y"], ["3", "z"]]})";
    const std::string questions =
        "{\"id\": \"a\", \"table_id\": \"t\", \"question\": \"what is the first value?\", \"answers\": [\"1\"]}\n"
        "{\"id\": \"b\", \"table_id\": \"t\", \"question\": \"what is B for 2?\", \"answers\": [\"y\"]}";
    auto ds = parse_dataset(questions, tables);
    std::size_t skipped = 0;
    auto sh = shuffled_dataset(ds, 7, ShuffleMode::RowsColumns, PprConfig{}, &skipped);
    EXPECT_EQ(skipped, 1u);
    EXPECT_EQ(sh.examples[0].table_id, "t");
    EXPECT_EQ(sh.examples[1].table_id, "t#shuffled");
    const auto& orig = ds.tables.at("t");
    const auto& shuf = sh.tables.at("t#shuffled");
    // Same facts, possibly different positions.
    std::multiset<std::pair<std::string, std::string>> a, b;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            a.emplace(orig.headers()[j], orig.cell(i, j));
            b.emplace(shuf.headers()[j], shuf.cell(i, j));
        }
    }
    EXPECT_EQ(a, b);
    auto rows_only = shuffled_dataset(ds, 7, ShuffleMode::Rows, PprConfig{});
    EXPECT_EQ(rows_only.tables.at("t#shuffled").headers(), orig.headers());
}

TEST(Permutation, SingleCellTablesHaveZeroDelta) {
    const std::string tables = R"({"id": "t", "header": ["A"], "rows": [["x"]]})";
    auto ds = parse_dataset(R"({"id": "a", "table_id": "t", "question": "value?", "answers": ["x"]})", tables);
    FunctionClient client(answer_first_triple);
    auto rep = run_permutation_experiment(ds, {1, 2, 3}, EvalOptions{}, &client);
    EXPECT_DOUBLE_EQ(rep.baseline_accuracy, 1.0);
    for (const auto& run : rep.runs) EXPECT_DOUBLE_EQ(run.delta, 0.0);
    EXPECT_EQ(rep.runs.size(), 6u);
}

TEST(Permutation, OrderIndependentAnswersHaveZeroDelta) {
    ScriptedClient client(load_mock_script(data_path("golden3/mock_ok.json")));
    auto rep = run_permutation_experiment(golden3(), {1, 2}, EvalOptions{}, &client);
    EXPECT_DOUBLE_EQ(rep.baseline_accuracy, 1.0);
    for (const auto& [mode, delta] : rep.mean_delta) EXPECT_DOUBLE_EQ(delta, 0.0);
}

TEST(Permutation, MeanDeltaAveragesSeeds) {
    // Answers depend on which triple ranks first, so shuffles can move accuracy.
    const std::string tables = R"({"id": "t", "header": ["A"], "rows": [["p"], ["q"], ["r"], ["s"]]})";
    std::string questions;
    for (int i = 0; i < 6; ++i) {
        questions += "{\"id\": \"q" + std::to_string(i) + "\", \"table_id\": \"t\", \"question\": \"pick " +
                     std::to_string(i) + "\", \"answers\": [\"p\"]}\n";
    }
    auto ds = parse_dataset(questions, tables);
    FunctionClient client(answer_first_triple);
    auto rep = run_permutation_experiment(ds, {1, 2}, EvalOptions{}, &client);
    EXPECT_DOUBLE_EQ(rep.baseline_accuracy, 1.0);
    for (auto mode : {ShuffleMode::Rows, ShuffleMode::RowsColumns}) {
        double sum = 0;
        int n = 0;
        for (const auto& run : rep.runs) {
            if (run.mode != mode) continue;
            EXPECT_DOUBLE_EQ(run.delta, run.accuracy - rep.baseline_accuracy);
            sum += run.delta;
            ++n;
        }
        ASSERT_EQ(n, 2);
        EXPECT_NEAR(rep.mean_delta.at(mode), sum / 2, 1e-12);
    }
    auto j = rep.to_json();
    EXPECT_EQ(j["dataset_size"], 6);
}
