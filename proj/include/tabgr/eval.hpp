#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabgr/llm.hpp"
#include "tabgr/pipeline.hpp"
#include "tabgr/table.hpp"

namespace tabgr {

struct Example {
    std::string id;
    std::string table_id;
    std::string question;
    Task task = Task::Qa;
    /// Accepted answers for QA; any one may match.
    std::vector<std::string> answers;
    /// Gold label for fact verification.
    bool label = false;
};

struct Dataset {
    std::vector<Example> examples;
    std::map<std::string, Table> tables;

    const Table& table_of(const Example& ex) const;
};

/// Question lines: {id, table_id, question, answers | label}. Table lines use
/// the parse_table format. Throws MalformedRecord or MissingTable. A `task`
/// rejects records of the other kind.
Dataset parse_dataset(const std::string& questions_jsonl, const std::string& tables_jsonl,
                      std::optional<Task> task = std::nullopt);
Dataset load_dataset(const std::string& questions_path, const std::string& tables_path,
                     std::optional<Task> task = std::nullopt);

/// Lowercase, trim, unify dashes and quotes, strip surrounding quotes, a
/// trailing period and citation marks, collapse whitespace, and print numbers
/// canonically ("2,000", "2000.0" and "2000" all become "2000").
std::string normalize_answer(std::string_view text);

/// True iff the prediction, split on "|" and normalized, equals one of the
/// gold entries as a multiset.
bool score_qa(const std::string& predicted, const std::vector<std::string>& gold);

/// Maps a verdict text to a label: {true, yes, entailed, supported} versus
/// {false, no, refuted}; "not" before a word flips it. Mixed or absent
/// signals yield nullopt.
std::optional<bool> map_fv_label(const std::string& predicted);

struct FvScore {
    bool correct = false;
    bool parse_miss = false;
};
FvScore score_fv(const std::string& predicted, bool gold);

enum class Bucket { Small, Medium, Large };
std::string_view to_string(Bucket b);

/// [0,1000) small, [1000,4000] medium, above large.
Bucket bucket_of_tokens(std::int64_t tokens);
/// Token count of the table's triple rendering, one triple per line.
std::int64_t table_tokens(const Table& table);
Bucket bucket_of(const Table& table);

struct QuestionRecord {
    std::string id;
    std::string table_id;
    Task task = Task::Qa;
    std::string mode;
    /// Answer list for QA, boolean for fact verification.
    nlohmann::json gold;
    /// "ok", or "error" when the pipeline raised.
    std::string status = "ok";
    bool correct = false;
    bool parse_miss = false;
    std::string parse_status;
    std::string answer;
    std::vector<std::string> path;
    Bucket bucket = Bucket::Small;
    std::int64_t table_tokens = 0;
    bool order_sensitive = false;
    std::optional<double> grounded_fraction;
    UsageTotals usage;
    double atg_build_s = 0.0;
    double total_s = 0.0;
    /// Reasoning, key sets, decomposition trace or error details.
    nlohmann::json detail = nlohmann::json::object();

    nlohmann::json to_json() const;
    static QuestionRecord from_json(const nlohmann::json& j);
};

struct EvalOptions {
    PipelineConfig pipeline;
    int workers = 1;
    /// Per-question JSON Lines output; empty disables it.
    std::string records_path;
    /// Keep valid records already in `records_path` and skip their ids.
    bool resume = false;
    /// Prefix for LLM session ids so repeated runs get fresh mock cursors.
    std::string run_tag;
    std::string model;
    double temperature = 0.0;
    int max_output_tokens = 512;
    nlohmann::json config_snapshot = nlohmann::json::object();
};

struct BucketStats {
    std::size_t count = 0;
    std::size_t correct = 0;
};

struct EvalReport {
    /// One per example, in dataset order.
    std::vector<QuestionRecord> records;
    std::size_t correct = 0;
    std::size_t incorrect = 0;
    std::size_t failed = 0;
    std::size_t parse_misses = 0;
    std::size_t resumed = 0;
    std::map<Bucket, BucketStats> buckets;
    UsageTotals usage;
    nlohmann::json config_snapshot;
    double wall_s = 0.0;

    double accuracy() const;
    /// Deterministic under a scripted client: no timings, no resume counts.
    nlohmann::json summary_json() const;
    nlohmann::json timings_json() const;
};

/// Aggregates already-computed records.
EvalReport aggregate(std::vector<QuestionRecord> records, nlohmann::json config_snapshot = {});

/// Runs the pipeline per question with `workers` threads. Question failures
/// are recorded and the run continues. `client` may be null (full mode,
/// exact matches only; answers then fail).
EvalReport run_eval(const Dataset& dataset, const EvalOptions& options, LlmClient* client);

/// Per-table seed: the run seed mixed with a hash of the table id.
std::uint64_t table_seed(std::uint64_t seed, const std::string& table_id);

enum class ShuffleMode { Rows, RowsColumns };
std::string_view to_string(ShuffleMode mode);

/// Copy of the dataset whose non-order-sensitive questions point at a
/// shuffled copy of their table. Returns the number of skipped questions
/// through `skipped`.
Dataset shuffled_dataset(const Dataset& dataset, std::uint64_t seed, ShuffleMode mode,
                         const PprConfig& ppr, std::size_t* skipped = nullptr);

struct PermutationRun {
    std::uint64_t seed = 0;
    ShuffleMode mode = ShuffleMode::Rows;
    double accuracy = 0.0;
    double delta = 0.0;
};

struct PermutationReport {
    double baseline_accuracy = 0.0;
    std::size_t num_questions = 0;
    std::size_t order_sensitive_skipped = 0;
    std::vector<PermutationRun> runs;
    /// Mean accuracy delta (shuffled minus baseline) per mode over seeds.
    std::map<ShuffleMode, double> mean_delta;

    nlohmann::json to_json() const;
};

/// Baseline run, then one run per (seed, mode). With a non-empty
/// `records_dir` each run writes its own JSON Lines file there.
PermutationReport run_permutation_experiment(const Dataset& dataset,
                                             const std::vector<std::uint64_t>& seeds,
                                             const EvalOptions& options, LlmClient* client,
                                             const std::string& records_dir = {});

}  // namespace tabgr
