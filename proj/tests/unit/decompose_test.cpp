#include <gtest/gtest.h>

#include "tabgr/decompose.hpp"
#include "tabgr/error.hpp"
#include "test_support.hpp"

using namespace tabgr;
using testing_support::make_table;

namespace {

Table kits() {
    return make_table({"Year", "Kit Manufacturer", "Shirt Sponsor", "Notes"},
                      {{"1976–1982", "Admiral", "Saab", "a"},
                       {"1982–1985", "Umbro", "", "b"},
                       {"1985–1990", "Umbro", "Sharp", "c"}},
                      "Football club kit history");
}

/// Answers each prompt kind from a fixed reply and counts the calls.
struct KindClient {
    std::string column_select = "Year";
    std::string sufficiency = "Finished: False";
    std::string edge_select = "SELECTED_RELATIONS: []";
    FunctionClient client{[this](const LlmRequest& r) {
        switch (r.kind) {
            case PromptKind::ColumnSelect: return column_select;
            case PromptKind::Sufficiency: return sufficiency;
            case PromptKind::EdgeSelect: return edge_select;
            default: return std::string();
        }
    }};
};

}  // namespace

TEST(ParseSufficiency, Variants) {
    EXPECT_EQ(parse_sufficiency("Finished: True"), true);
    EXPECT_EQ(parse_sufficiency("finished:false."), false);
    EXPECT_EQ(parse_sufficiency("reasoning...\nFinished: False\nFinished: True"), true);
    EXPECT_EQ(parse_sufficiency("True"), true);
    EXPECT_EQ(parse_sufficiency("Finished: maybe"), std::nullopt);
    EXPECT_EQ(parse_sufficiency(""), std::nullopt);
}

TEST(ParseSelectedRelations, Variants) {
    using V = std::vector<std::string>;
    EXPECT_EQ(parse_selected_relations("SELECTED_RELATIONS: ['Shirt Sponsor']"), V{"Shirt Sponsor"});
    EXPECT_EQ(parse_selected_relations("['a', \"b\"]"), (V{"a", "b"}));
    EXPECT_EQ(parse_selected_relations("SELECTED_RELATIONS: [a, b ]"), (V{"a", "b"}));
    EXPECT_EQ(parse_selected_relations("SELECTED_RELATIONS: []"), V{});
    EXPECT_EQ(parse_selected_relations("['it\\'s']"), V{"it's"});
    EXPECT_EQ(parse_selected_relations("Shirt Sponsor"), std::nullopt);
    EXPECT_EQ(parse_selected_relations("['open"), std::nullopt);
}

TEST(Anchors, ExactValueAndSelectedColumns) {
    auto t = kits();
    auto g = build_atg(t);
    KindClient k;
    k.column_select = "Shirt Sponsor";
    UsageLedger ledger;
    LlmSession s(&k.client, &ledger, "q");
    auto sub = anchor_triples("who made the kit in 1976–1982?", t, g, &s);
    // Exact value (row 0, Year) plus the Shirt Sponsor column.
    EXPECT_EQ(sub.triple_ids, (std::vector<std::size_t>{0, 2, 6, 10}));
    EXPECT_EQ(sub.selected_headers, std::vector<std::string>{"Shirt Sponsor"});
    EXPECT_EQ(sub.anchors, sub.triple_ids);
    EXPECT_EQ(s.calls(), 1);
}

TEST(Judge, EmptySubgraphNeedsNoCall) {
    auto t = kits();
    auto g = build_atg(t);
    KindClient k;
    LlmSession s(&k.client, nullptr, "q");
    Subgraph empty;
    EXPECT_FALSE(judge_sufficiency("q", empty, g, s));
    EXPECT_EQ(s.calls(), 0);
}

TEST(Judge, UnparseableCountsAsInsufficient) {
    auto t = kits();
    auto g = build_atg(t);
    KindClient k;
    k.sufficiency = "I am not sure";
    LlmSession s(&k.client, nullptr, "q");
    Subgraph sub;
    sub.triple_ids = {0};
    RoundTrace tr;
    EXPECT_FALSE(judge_sufficiency("q", sub, g, s, &tr));
    EXPECT_TRUE(tr.judge_parse_error);
    ASSERT_FALSE(sub.log.empty());
    EXPECT_NE(sub.log.back().find("ParseError"), std::string::npos);
}

TEST(Expand, MergesNamedColumnsAndDropsUnknown) {
    auto t = kits();
    auto g = build_atg(t);
    KindClient k;
    k.edge_select = "SELECTED_RELATIONS: ['shirt sponsor', 'Ghost', 'Year']";
    LlmSession s(&k.client, nullptr, "q");
    Subgraph sub;
    sub.triple_ids = {0, 4, 8};
    sub.selected_headers = {"Year"};
    RoundTrace tr;
    expand("q", sub, t, g, s, &tr);
    EXPECT_EQ(sub.triple_ids, (std::vector<std::size_t>{0, 2, 4, 6, 8, 10}));
    EXPECT_EQ(sub.selected_headers, (std::vector<std::string>{"Year", "Shirt Sponsor"}));
    EXPECT_EQ(tr.selected_relations, std::vector<std::string>{"Shirt Sponsor"});
    EXPECT_EQ(tr.added, 3u);
    EXPECT_EQ(sub.expansion_rounds, 1);
}

TEST(Expand, NothingLeftMakesNoCall) {
    auto t = make_table({"A"}, {{"x"}});
    auto g = build_atg(t);
    KindClient k;
    LlmSession s(&k.client, nullptr, "q");
    Subgraph sub;
    sub.triple_ids = {0};
    sub.selected_headers = {"A"};
    expand("q", sub, t, g, s);
    EXPECT_EQ(s.calls(), 0);
    EXPECT_EQ(sub.sufficiency, Sufficiency::BudgetExhausted);
}

TEST(Decompose, StopsWhenSufficient) {
    auto t = kits();
    auto g = build_atg(t);
    KindClient k;
    k.column_select = "Year, Shirt Sponsor";
    k.sufficiency = "Finished: True";
    LlmSession s(&k.client, nullptr, "q");
    auto sub = decompose("During what time period was there no shirt sponsors?", t, g, &s);
    EXPECT_EQ(sub.sufficiency, Sufficiency::Sufficient);
    EXPECT_EQ(sub.expansion_rounds, 0);
    EXPECT_EQ(sub.triple_ids, (std::vector<std::size_t>{0, 2, 4, 6, 8, 10}));
    EXPECT_EQ(s.calls(), 2);
}

TEST(Decompose, AlwaysInsufficientHitsRoundBudget) {
    auto t = make_table({"A", "B", "C", "D", "E"}, {{"1", "2", "3", "4", "5"}});
    auto g = build_atg(t);
    int next = 1;
    FunctionClient client([&](const LlmRequest& r) -> std::string {
        if (r.kind == PromptKind::ColumnSelect) return "A";
        if (r.kind == PromptKind::Sufficiency) return "Finished: False";
        return "SELECTED_RELATIONS: ['" + std::string(1, static_cast<char>('A' + next++)) + "']";
    });
    LlmSession s(&client, nullptr, "q");
    auto sub = decompose("what?", t, g, &s);
    EXPECT_EQ(sub.expansion_rounds, 3);
    EXPECT_EQ(sub.sufficiency, Sufficiency::BudgetExhausted);
    EXPECT_EQ(s.calls(), 7);
    EXPECT_LE(s.calls(), 1 + 2 * 3);
    EXPECT_EQ(s.calls_of(PromptKind::Sufficiency), 3);
    EXPECT_EQ(s.calls_of(PromptKind::EdgeSelect), 3);
    EXPECT_EQ(sub.selected_headers, (std::vector<std::string>{"A", "B", "C", "D"}));
    EXPECT_EQ(sub.rounds.size(), 3u);
}

TEST(Decompose, RoundBudgetIsConfigurable) {
    auto t = make_table({"A", "B", "C"}, {{"1", "2", "3"}});
    auto g = build_atg(t);
    KindClient k;
    k.column_select = "A";
    LlmSession s(&k.client, nullptr, "q");
    DecomposeOptions opt;
    opt.max_rounds = 0;
    auto sub = decompose("what?", t, g, &s, opt);
    EXPECT_EQ(s.calls(), 1);
    EXPECT_EQ(sub.sufficiency, Sufficiency::BudgetExhausted);
    opt.full_graph_fallback = true;
    LlmSession s2(&k.client, nullptr, "q");
    auto full = decompose("what?", t, g, &s2, opt);
    EXPECT_TRUE(full.fell_back_to_full_graph);
    EXPECT_EQ(full.triple_ids.size(), 3u);
}

TEST(Decompose, EmptyAnchorsExpandWithoutJudging) {
    auto t = kits();
    auto g = build_atg(t);
    KindClient k;
    k.column_select = "Nothing";
    k.edge_select = "SELECTED_RELATIONS: ['Notes']";
    k.sufficiency = "Finished: True";
    LlmSession s(&k.client, nullptr, "q");
    auto sub = decompose("what?", t, g, &s);
    ASSERT_FALSE(sub.rounds.empty());
    EXPECT_FALSE(sub.rounds[0].verdict.has_value());
    EXPECT_EQ(sub.selected_headers, std::vector<std::string>{"Notes"});
    EXPECT_EQ(sub.sufficiency, Sufficiency::Sufficient);
    EXPECT_EQ(s.calls(), 3);
}

TEST(Decompose, UnreachableLlm) {
    auto t = kits();
    auto g = build_atg(t);
    FunctionClient down([](const LlmRequest&) -> std::string { throw LlmUnavailable("down"); });
    LlmSession s(&down, nullptr, "q");
    auto sub = decompose("who sponsored in 1985–1990?", t, g, &s);
    EXPECT_TRUE(sub.llm_degraded);
    EXPECT_EQ(sub.triple_ids, std::vector<std::size_t>{8});
    LlmSession s2(&down, nullptr, "q");
    EXPECT_THROW(decompose("no match here", t, g, &s2), LlmUnavailable);
}

TEST(Decompose, TraceJson) {
    auto t = kits();
    auto g = build_atg(t);
    KindClient k;
    k.sufficiency = "Finished: True";
    LlmSession s(&k.client, nullptr, "q");
    auto j = decompose("q", t, g, &s).trace_json();
    EXPECT_EQ(j["sufficiency"], "sufficient");
    EXPECT_EQ(j["anchor_columns"], nlohmann::json::array({"Year"}));
    EXPECT_EQ(j["rounds"][0]["verdict"], true);
}
