import json
import math
import os
from pathlib import Path

import pytest

import tabgr

DATA = Path(os.environ.get("TABGR_TEST_DATA", Path(__file__).resolve().parents[1] / "data"))

KITS = {
    "id": "t",
    "title": "kits",
    "header": ["Year", "Shirt Sponsor"],
    "rows": [["1976–1982", "Saab"], ["1982–1985", ""], ["1985–1990", "Sharp"]],
}


def test_build_graph_counts():
    g = tabgr.build_graph({"id": "t", "header": ["A", "B"], "rows": [["1", "2"], ["3", "4"]]})
    assert g["num_nodes"] == 7
    assert g["num_triples"] == 4
    assert len(g["triples"]) == 4


def test_score_without_llm_ranks_every_triple():
    out = tabgr.score(KITS, "who sponsored the shirt in 1985–1990?")
    assert len(out["ranked"]) == 6
    assert math.isclose(sum(t["score"] for t in out["ranked"]), 1.0, abs_tol=1e-6)
    assert out["ranked"][0]["row"] == 2


def test_answer_with_mock_script():
    table = json.loads((DATA / "fig6" / "table.json").read_text())
    config = {"llm": {"mock_script": str(DATA / "fig6" / "mock.json")}}
    out = tabgr.answer(table, "During what time period was there no shirt sponsors?", config)
    assert out["answer"] == "1982–1985"
    assert out["parse_status"] == "clean"
    assert out["grounded"] == [True, True]


def test_evaluate_fixture():
    config = {
        "dataset": {
            "questions": str(DATA / "golden3" / "questions.jsonl"),
            "tables": str(DATA / "golden3" / "tables.jsonl"),
        },
        "llm": {"mock_script": str(DATA / "golden3" / "mock_ok.json")},
    }
    summary = tabgr.evaluate(config)
    assert summary["dataset_size"] == 3
    assert summary["accuracy"] == 1.0


def test_scoring_helpers():
    assert tabgr.normalize_answer("2,000") == "2000"
    assert tabgr.score_qa("1982–1985", ["1982-1985"])
    assert tabgr.map_fv_label("not supported") is False
    assert tabgr.map_fv_label("maybe") is None
    assert math.isclose(tabgr.idf(1, 25), math.log(13.5), abs_tol=1e-12)
    assert tabgr.count_tokens("abcdefgh") == 2
    assert tabgr.few_shot_version() == "fewshot-v1"


def test_parse_output():
    r = tabgr.parse_output("<think><paths>(row1; A; x)</paths>ok</think><answer>x</answer>")
    assert r["parse_status"] == "clean"
    assert r["path"] == ["(row1; A; x)"]
    assert tabgr.parse_output("no tags")["parse_status"] == "failed"


def test_errors_map_to_exception_types():
    with pytest.raises(tabgr.InputError):
        tabgr.build_graph({"header": [], "rows": []})
    with pytest.raises(tabgr.ConfigError):
        tabgr.score(KITS, "q", {"ppr": {"alpha": 2.0}})
    with pytest.raises(tabgr.ConfigError):
        tabgr.answer(KITS, "q", {})
    assert issubclass(tabgr.LlmError, tabgr.TabgrError)
