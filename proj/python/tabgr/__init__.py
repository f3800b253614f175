"""Table reasoning over attributed table graphs.

Thin wrappers around the compiled core. Tables are dicts in the same shape as
the JSON table records: {"id", "title"?, "header", "rows", "fill_columns"?}.
Configs are dicts in the same shape as the CLI's JSON run configuration.
"""

import json

from . import _core
from ._core import (
    ConfigError,
    InputError,
    LlmError,
    TabgrError,
    count_tokens,
    few_shot_version,
    idf,
    map_fv_label,
    normalize_answer,
    score_qa,
)

__all__ = [
    "ConfigError",
    "InputError",
    "LlmError",
    "TabgrError",
    "answer",
    "build_graph",
    "count_tokens",
    "evaluate",
    "few_shot_version",
    "idf",
    "map_fv_label",
    "normalize_answer",
    "parse_output",
    "score",
    "score_qa",
]


def _dump(obj):
    return "" if obj is None else json.dumps(obj)


def build_graph(table):
    """Node, triple and edge counts plus the triple list."""
    return json.loads(_core.build_graph(json.dumps(table)))


def score(table, question, config=None):
    """Triples in presentation order with their salience scores."""
    return json.loads(_core.score(json.dumps(table), question, _dump(config)))


def answer(table, question, config):
    """Runs the full pipeline for one question; the config must name an LLM."""
    return json.loads(_core.answer(json.dumps(table), question, _dump(config)))


def evaluate(config, records_path=""):
    """Evaluates the dataset named in config["dataset"] and returns the summary."""
    return json.loads(_core.evaluate(_dump(config), records_path))


def parse_output(raw):
    return json.loads(_core.parse_output(raw))
