#include "tabgr/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "tabgr/atg.hpp"
#include "tabgr/error.hpp"
#include "tabgr/prompts.hpp"
#include "tabgr/text.hpp"

namespace tabgr {

// ---------------------------------------------------------------------------
// Loading

const Table& Dataset::table_of(const Example& ex) const {
    auto it = tables.find(ex.table_id);
    if (it == tables.end()) throw MissingTable(ex.table_id);
    return it->second;
}

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename Fn>
void for_each_json_line(const std::string& jsonl, const char* what, Fn&& fn) {
    std::istringstream in(jsonl);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw MalformedRecord(std::string(what) + " line " + std::to_string(lineno) +
                                  ": " + e.what());
        }
        fn(j, lineno);
    }
}

std::string json_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_null()) return "";
    return v.dump();
}

Example parse_example(const nlohmann::json& j, std::size_t lineno) {
    auto fail = [&](const std::string& why) {
        return MalformedRecord("question line " + std::to_string(lineno) + ": " + why);
    };
    if (!j.is_object()) throw fail("not an object");
    for (const char* key : {"id", "table_id", "question"}) {
        if (!j.contains(key) || j[key].is_null()) throw fail(std::string("missing ") + key);
    }
    Example ex;
    ex.id = json_text(j["id"]);
    ex.table_id = json_text(j["table_id"]);
    ex.question = json_text(j["question"]);
    const bool has_answers = j.contains("answers");
    const bool has_label = j.contains("label");
    if (has_answers == has_label) throw fail("exactly one of answers / label is required");
    if (has_answers) {
        ex.task = Task::Qa;
        const auto& a = j["answers"];
        if (a.is_array()) {
            for (const auto& v : a) ex.answers.push_back(json_text(v));
        } else {
            ex.answers.push_back(json_text(a));
        }
        if (ex.answers.empty()) throw fail("empty answers");
    } else {
        ex.task = Task::Fv;
        const auto& l = j["label"];
        if (l.is_boolean()) {
            ex.label = l.get<bool>();
        } else if (l.is_number_integer() && (l.get<int>() == 0 || l.get<int>() == 1)) {
            ex.label = l.get<int>() == 1;
        } else {
            throw fail("label must be a boolean or 0/1");
        }
    }
    return ex;
}

}  // namespace

Dataset parse_dataset(const std::string& questions_jsonl, const std::string& tables_jsonl,
                      std::optional<Task> task) {
    Dataset ds;
    for_each_json_line(tables_jsonl, "table", [&](const nlohmann::json& j, std::size_t lineno) {
        Table t = [&] {
            try {
                return parse_table(j);
            } catch (const MalformedRecord& e) {
                throw MalformedRecord("table line " + std::to_string(lineno) + ": " + e.what());
            }
        }();
        const auto id = t.source_id();
        if (!ds.tables.emplace(id, std::move(t)).second) {
            throw MalformedRecord("duplicate table id: " + id);
        }
    });
    std::unordered_set<std::string> seen;
    for_each_json_line(questions_jsonl, "question", [&](const nlohmann::json& j, std::size_t lineno) {
        auto ex = parse_example(j, lineno);
        if (task && ex.task != *task) {
            throw MalformedRecord("question " + ex.id + " is not a " +
                                  std::string(to_string(*task)) + " record");
        }
        if (!seen.insert(ex.id).second) throw MalformedRecord("duplicate question id: " + ex.id);
        if (!ds.tables.count(ex.table_id)) throw MissingTable(ex.table_id);
        ds.examples.push_back(std::move(ex));
    });
    return ds;
}

Dataset load_dataset(const std::string& questions_path, const std::string& tables_path,
                     std::optional<Task> task) {
    return parse_dataset(read_file(questions_path), read_file(tables_path), task);
}

// ---------------------------------------------------------------------------
// Scoring

namespace {

std::optional<std::string> canonical_number(std::string_view s) {
    std::string digits;
    bool any_digit = false;
    // Thousands separators must split the integer part into groups of three.
    bool grouped = false;
    bool in_integer = true;
    std::size_t run = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (c >= '0' && c <= '9') {
            any_digit = true;
            digits += c;
            ++run;
        } else if (c == ',') {
            if (!in_integer || run == 0 || (grouped ? run != 3 : run > 3)) return std::nullopt;
            grouped = true;
            run = 0;
        } else if (c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E') {
            if (in_integer && grouped && run != 3) return std::nullopt;
            if (c != '-' && c != '+') in_integer = false;
            digits += c;
            run = 0;
        } else {
            return std::nullopt;
        }
    }
    if (in_integer && grouped && run != 3) return std::nullopt;
    if (!any_digit) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(digits.c_str(), &end);
    if (end != digits.c_str() + digits.size() || !std::isfinite(v)) return std::nullopt;
    char buf[64];
    if (v == std::floor(v) && std::fabs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v == 0.0 ? 0.0 : v);
    } else {
        std::snprintf(buf, sizeof buf, "%.12g", v);
    }
    return std::string(buf);
}

bool strip_wrapping(std::string& s, std::string_view open, std::string_view close) {
    if (s.size() >= open.size() + close.size() && text::starts_with(s, open) &&
        text::ends_with(s, close)) {
        s = std::string(text::trim(s.substr(open.size(), s.size() - open.size() - close.size())));
        return true;
    }
    return false;
}

}  // namespace

std::string normalize_answer(std::string_view input) {
    std::string s(input);
    for (auto dash : {"‐", "‑", "‒", "–", "—", "−"}) {
        s = text::replace_all(std::move(s), dash, "-");
    }
    for (auto q : {"‘", "’", "´", "`"}) s = text::replace_all(std::move(s), q, "'");
    for (auto q : {"“", "”"}) s = text::replace_all(std::move(s), q, "\"");
    s = text::collapse_whitespace(text::to_lower(s));

    // Trailing citation marks such as "[1]" or "*".
    for (bool changed = true; changed;) {
        changed = false;
        if (!s.empty() && s.back() == ']') {
            auto open = s.rfind('[');
            if (open != std::string::npos && open > 0) {
                s = std::string(text::trim(s.substr(0, open)));
                changed = true;
            }
        }
        if (!s.empty() && (s.back() == '*' || s.back() == '#' || s.back() == '.') && s.size() > 1) {
            s.pop_back();
            s = std::string(text::trim(s));
            changed = true;
        }
        changed = strip_wrapping(s, "\"", "\"") || strip_wrapping(s, "'", "'") || changed;
    }
    if (auto n = canonical_number(s)) return *n;
    return s;
}

namespace {

std::multiset<std::string> answer_parts(std::string_view text) {
    std::multiset<std::string> out;
    for (const auto& part : text::split(text, "|")) out.insert(normalize_answer(part));
    return out;
}

}  // namespace

bool score_qa(const std::string& predicted, const std::vector<std::string>& gold) {
    if (text::trim(predicted).empty()) return false;
    const auto pred = answer_parts(predicted);
    return std::any_of(gold.begin(), gold.end(),
                       [&](const std::string& g) { return answer_parts(g) == pred; });
}

std::optional<bool> map_fv_label(const std::string& predicted) {
    static const std::set<std::string> kTrue{"true", "yes", "entailed", "supported"};
    static const std::set<std::string> kFalse{"false", "no", "refuted"};
    std::vector<std::string> words;
    std::string cur;
    for (char c : text::to_lower(predicted)) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur += c;
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));

    std::optional<bool> verdict;
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::optional<bool> vote;
        if (kTrue.count(words[i])) vote = true;
        if (kFalse.count(words[i])) vote = false;
        if (!vote) continue;
        if (i > 0 && words[i - 1] == "not") vote = !*vote;
        if (verdict && *verdict != *vote) return std::nullopt;
        verdict = vote;
    }
    return verdict;
}

FvScore score_fv(const std::string& predicted, bool gold) {
    FvScore s;
    const auto mapped = map_fv_label(predicted);
    if (!mapped) {
        s.parse_miss = true;
        return s;
    }
    s.correct = *mapped == gold;
    return s;
}

std::string_view to_string(Bucket b) {
    switch (b) {
        case Bucket::Small: return "small";
        case Bucket::Medium: return "medium";
        case Bucket::Large: return "large";
    }
    return "small";
}

namespace {

Bucket bucket_from_string(const std::string& s) {
    if (s == "medium") return Bucket::Medium;
    if (s == "large") return Bucket::Large;
    return Bucket::Small;
}

}  // namespace

Bucket bucket_of_tokens(std::int64_t tokens) {
    if (tokens < 1000) return Bucket::Small;
    if (tokens <= 4000) return Bucket::Medium;
    return Bucket::Large;
}

std::int64_t table_tokens(const Table& table) {
    std::string rendered;
    for (std::size_t i = 0; i < table.num_rows(); ++i) {
        for (std::size_t j = 0; j < table.num_cols(); ++j) {
            if (!rendered.empty()) rendered += '\n';
            rendered += render_triple(i, table.headers()[j], table.cell(i, j));
        }
    }
    return count_tokens(rendered);
}

Bucket bucket_of(const Table& table) { return bucket_of_tokens(table_tokens(table)); }

// ---------------------------------------------------------------------------
// Records and aggregation

nlohmann::json QuestionRecord::to_json() const {
    return nlohmann::json{
        {"id", id},
        {"table_id", table_id},
        {"task", std::string(tabgr::to_string(task))},
        {"mode", mode},
        {"gold", gold},
        {"status", status},
        {"correct", correct},
        {"parse_miss", parse_miss},
        {"parse_status", parse_status},
        {"answer", answer},
        {"path", path},
        {"bucket", std::string(tabgr::to_string(bucket))},
        {"table_tokens", table_tokens},
        {"order_sensitive", order_sensitive},
        {"grounded_fraction", grounded_fraction ? nlohmann::json(*grounded_fraction) : nlohmann::json()},
        {"usage", usage.to_json()},
        {"atg_build_s", atg_build_s},
        {"total_s", total_s},
        {"detail", detail}};
}

QuestionRecord QuestionRecord::from_json(const nlohmann::json& j) {
    QuestionRecord r;
    r.id = j.at("id").get<std::string>();
    r.table_id = j.at("table_id").get<std::string>();
    r.task = task_from_string(j.at("task").get<std::string>());
    r.mode = j.at("mode").get<std::string>();
    r.gold = j.at("gold");
    r.status = j.at("status").get<std::string>();
    r.correct = j.at("correct").get<bool>();
    r.parse_miss = j.at("parse_miss").get<bool>();
    r.parse_status = j.at("parse_status").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    r.path = j.at("path").get<std::vector<std::string>>();
    r.bucket = bucket_from_string(j.at("bucket").get<std::string>());
    r.table_tokens = j.at("table_tokens").get<std::int64_t>();
    r.order_sensitive = j.at("order_sensitive").get<bool>();
    if (!j.at("grounded_fraction").is_null()) r.grounded_fraction = j["grounded_fraction"].get<double>();
    r.usage = UsageTotals::from_json(j.at("usage"));
    r.atg_build_s = j.at("atg_build_s").get<double>();
    r.total_s = j.at("total_s").get<double>();
    r.detail = j.value("detail", nlohmann::json::object());
    return r;
}

double EvalReport::accuracy() const {
    return records.empty() ? 0.0
                           : static_cast<double>(correct) / static_cast<double>(records.size());
}

EvalReport aggregate(std::vector<QuestionRecord> records, nlohmann::json config_snapshot) {
    EvalReport rep;
    rep.records = std::move(records);
    rep.config_snapshot = std::move(config_snapshot);
    for (auto b : {Bucket::Small, Bucket::Medium, Bucket::Large}) rep.buckets[b];
    for (const auto& r : rep.records) {
        if (r.status != "ok") {
            ++rep.failed;
        } else if (r.correct) {
            ++rep.correct;
        } else {
            ++rep.incorrect;
        }
        if (r.parse_miss) ++rep.parse_misses;
        auto& b = rep.buckets[r.bucket];
        ++b.count;
        if (r.correct) ++b.correct;
        rep.usage.merge(r.usage);
    }
    return rep;
}

nlohmann::json EvalReport::summary_json() const {
    const auto n = records.size();
    auto ratio = [](std::size_t a, std::size_t b) {
        return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
    };
    nlohmann::json buckets_json = nlohmann::json::object();
    for (const auto& [b, s] : buckets) {
        buckets_json[std::string(to_string(b))] = {
            {"count", s.count}, {"correct", s.correct}, {"accuracy", ratio(s.correct, s.count)}};
    }
    double grounded_sum = 0.0;
    std::size_t grounded_n = 0, order_sensitive = 0;
    std::map<std::string, std::size_t> parse_status;
    for (const auto& r : records) {
        if (r.grounded_fraction) {
            grounded_sum += *r.grounded_fraction;
            ++grounded_n;
        }
        if (r.order_sensitive) ++order_sensitive;
        ++parse_status[r.status == "ok" ? r.parse_status : "error"];
    }
    auto tokens = usage.to_json();
    tokens["mean_input_per_question"] =
        n == 0 ? 0.0 : static_cast<double>(usage.input_tokens) / static_cast<double>(n);
    tokens["mean_output_per_question"] =
        n == 0 ? 0.0 : static_cast<double>(usage.output_tokens) / static_cast<double>(n);
    return nlohmann::json{
        {"dataset_size", n},
        {"correct", correct},
        {"incorrect", incorrect},
        {"failed", failed},
        {"accuracy", accuracy()},
        {"parse_misses", parse_misses},
        {"parse_status", parse_status},
        {"buckets", buckets_json},
        {"tokens", tokens},
        {"grounded_path", {{"questions", grounded_n}, {"mean_fraction", grounded_n ? grounded_sum / grounded_n : 0.0}}},
        {"order_sensitive_questions", order_sensitive},
        {"few_shot_version", few_shot_version()},
        {"config", config_snapshot}};
}

nlohmann::json EvalReport::timings_json() const {
    double build_sum = 0.0, build_max = 0.0, total_sum = 0.0;
    for (const auto& r : records) {
        build_sum += r.atg_build_s;
        build_max = std::max(build_max, r.atg_build_s);
        total_sum += r.total_s;
    }
    const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
    return nlohmann::json{{"atg_build_mean_s", build_sum / n},
                          {"atg_build_max_s", build_max},
                          {"question_mean_s", total_sum / n},
                          {"wall_s", wall_s},
                          {"resumed_records", resumed}};
}

// ---------------------------------------------------------------------------
// Running

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

QuestionRecord evaluate_one(const Dataset& dataset, const Example& ex, const EvalOptions& options,
                            LlmClient* client) {
    const auto t0 = Clock::now();
    QuestionRecord rec;
    rec.id = ex.id;
    rec.table_id = ex.table_id;
    rec.task = ex.task;
    rec.mode = std::string(to_string(options.pipeline.mode));
    if (ex.task == Task::Qa) {
        rec.gold = ex.answers;
    } else {
        rec.gold = ex.label;
    }
    UsageLedger ledger;
    const auto session_id = options.run_tag + ex.id;
    try {
        const auto& table = dataset.table_of(ex);
        rec.table_tokens = table_tokens(table);
        rec.bucket = bucket_of_tokens(rec.table_tokens);
        rec.order_sensitive = is_order_sensitive(ex.question, options.pipeline.ppr);

        const auto tb = Clock::now();
        const auto graph = build_atg(table);
        rec.atg_build_s = seconds_since(tb);

        LlmSession session(client, &ledger, session_id, options.model, options.temperature,
                           options.max_output_tokens);
        const auto outcome = answer_question(ex.question, table, graph, session, options.pipeline);
        const auto& result = outcome.result;
        rec.answer = result.answer;
        rec.path = result.path;
        rec.parse_status = std::string(to_string(result.status));
        if (result.status == ParseStatus::Failed) {
            rec.parse_miss = true;
        } else if (ex.task == Task::Qa) {
            rec.correct = score_qa(result.answer, ex.answers);
        } else {
            const auto fv = score_fv(result.answer, ex.label);
            rec.correct = fv.correct;
            rec.parse_miss = fv.parse_miss;
        }
        if (result.status != ParseStatus::Failed) rec.grounded_fraction = outcome.grounding.fraction;

        rec.detail["reasoning"] = result.to_json();
        rec.detail["grounded"] = outcome.grounding.grounded;
        rec.detail["key_sets"] = outcome.scored.keys.to_json();
        rec.detail["evidence_triples"] = outcome.scored.evidence.size();
        if (outcome.scored.subgraph) {
            auto trace = outcome.scored.subgraph->trace_json();
            trace["empty_subgraph_fallback"] = outcome.scored.empty_subgraph_fallback;
            rec.detail["decomposition"] = std::move(trace);
        }
    } catch (const std::exception& e) {
        rec.status = "error";
        rec.correct = false;
        rec.parse_status.clear();
        rec.detail["error"] = e.what();
    }
    rec.usage = ledger.question(session_id);
    rec.total_s = seconds_since(t0);
    return rec;
}

/// Valid records from an earlier, possibly interrupted run.
std::map<std::string, QuestionRecord> read_existing(const std::string& path) {
    std::map<std::string, QuestionRecord> out;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        try {
            auto rec = QuestionRecord::from_json(nlohmann::json::parse(line));
            out.emplace(rec.id, std::move(rec));
        } catch (const std::exception&) {
            // A torn trailing write from an interrupted run.
        }
    }
    return out;
}

}  // namespace

EvalReport run_eval(const Dataset& dataset, const EvalOptions& options, LlmClient* client) {
    if (options.workers < 1) throw ConfigError("workers must be >= 1");
    const auto t0 = Clock::now();
    const auto n = dataset.examples.size();
    std::vector<std::optional<QuestionRecord>> slots(n);
    std::size_t resumed = 0;

    std::ofstream sink;
    if (!options.records_path.empty()) {
        const auto path = std::filesystem::path(options.records_path);
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::map<std::string, QuestionRecord> existing;
        if (options.resume && std::filesystem::exists(path)) existing = read_existing(path);
        for (std::size_t i = 0; i < n; ++i) {
            auto it = existing.find(dataset.examples[i].id);
            if (it != existing.end()) {
                slots[i] = it->second;
                ++resumed;
            }
        }
        // Rewrite the kept records so a torn line never sits mid-file.
        const auto tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            for (const auto& s : slots) {
                if (s) out << s->to_json().dump() << '\n';
            }
        }
        std::filesystem::rename(tmp, path);
        sink.open(path, std::ios::app);
        if (!sink) throw InputError("cannot write " + options.records_path);
    }

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < n; ++i) {
        if (!slots[i]) todo.push_back(i);
    }
    std::atomic<std::size_t> next{0};
    std::mutex sink_mu;
    auto worker = [&] {
        for (auto k = next.fetch_add(1); k < todo.size(); k = next.fetch_add(1)) {
            const auto i = todo[k];
            auto rec = evaluate_one(dataset, dataset.examples[i], options, client);
            if (sink.is_open()) {
                std::lock_guard lock(sink_mu);
                sink << rec.to_json().dump() << '\n';
                sink.flush();
            }
            slots[i] = std::move(rec);
        }
    };
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(options.workers),
                                               std::max<std::size_t>(todo.size(), 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<QuestionRecord> records;
    records.reserve(n);
    for (auto& s : slots) records.push_back(std::move(*s));
    auto rep = aggregate(std::move(records), options.config_snapshot);
    rep.resumed = resumed;
    rep.wall_s = seconds_since(t0);
    return rep;
}

// ---------------------------------------------------------------------------
// Permutation robustness

std::uint64_t table_seed(std::uint64_t seed, const std::string& table_id) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : table_id) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    // splitmix64 finalizer over the combination.
    std::uint64_t z = seed ^ h;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string_view to_string(ShuffleMode mode) {
    return mode == ShuffleMode::Rows ? "rows" : "rows_columns";
}

Dataset shuffled_dataset(const Dataset& dataset, std::uint64_t seed, ShuffleMode mode,
                         const PprConfig& ppr, std::size_t* skipped) {
    Dataset out;
    out.tables = dataset.tables;
    std::size_t skip = 0;
    for (auto ex : dataset.examples) {
        if (is_order_sensitive(ex.question, ppr)) {
            ++skip;
        } else {
            const auto shuffled_id = ex.table_id + "#shuffled";
            if (!out.tables.count(shuffled_id)) {
                const auto& table = dataset.table_of(ex);
                auto perm = random_swap_permutation(table.num_rows(), table.num_cols(),
                                                    table_seed(seed, ex.table_id));
                if (mode == ShuffleMode::Rows) {
                    perm.col_map = Permutation::identity(table.num_rows(), table.num_cols()).col_map;
                }
                out.tables.emplace(shuffled_id, permute(table, perm));
            }
            ex.table_id = shuffled_id;
        }
        out.examples.push_back(std::move(ex));
    }
    if (skipped) *skipped = skip;
    return out;
}

nlohmann::json PermutationReport::to_json() const {
    auto runs_json = nlohmann::json::array();
    for (const auto& r : runs) {
        runs_json.push_back({{"seed", r.seed},
                             {"mode", std::string(to_string(r.mode))},
                             {"accuracy", r.accuracy},
                             {"delta", r.delta}});
    }
    nlohmann::json means = nlohmann::json::object();
    for (const auto& [m, d] : mean_delta) means[std::string(to_string(m))] = d;
    return nlohmann::json{{"baseline_accuracy", baseline_accuracy},
                          {"dataset_size", num_questions},
                          {"order_sensitive_unshuffled", order_sensitive_skipped},
                          {"runs", std::move(runs_json)},
                          {"mean_delta", std::move(means)}};
}

PermutationReport run_permutation_experiment(const Dataset& dataset,
                                             const std::vector<std::uint64_t>& seeds,
                                             const EvalOptions& options, LlmClient* client,
                                             const std::string& records_dir) {
    if (seeds.empty()) throw ConfigError("permutation experiment needs at least one seed");
    auto run_options = [&](const std::string& tag) {
        auto o = options;
        o.run_tag = options.run_tag + tag + "/";
        o.resume = false;
        o.records_path = records_dir.empty()
                             ? std::string()
                             : (std::filesystem::path(records_dir) / (tag + ".jsonl")).string();
        return o;
    };

    PermutationReport rep;
    rep.num_questions = dataset.examples.size();
    rep.baseline_accuracy = run_eval(dataset, run_options("baseline"), client).accuracy();
    for (auto mode : {ShuffleMode::Rows, ShuffleMode::RowsColumns}) {
        double sum = 0.0;
        for (auto seed : seeds) {
            std::size_t skipped = 0;
            const auto shuffled = shuffled_dataset(dataset, seed, mode, options.pipeline.ppr, &skipped);
            rep.order_sensitive_skipped = skipped;
            const auto tag = "seed" + std::to_string(seed) + "_" + std::string(to_string(mode));
            PermutationRun run;
            run.seed = seed;
            run.mode = mode;
            run.accuracy = run_eval(shuffled, run_options(tag), client).accuracy();
            run.delta = run.accuracy - rep.baseline_accuracy;
            sum += run.delta;
            rep.runs.push_back(run);
        }
        rep.mean_delta[mode] = sum / static_cast<double>(seeds.size());
    }
    return rep;
}

}  // namespace tabgr
