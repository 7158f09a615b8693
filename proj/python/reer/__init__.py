# SPDX-License-Identifier: Apache-2.0
"""Perplexity-guided reasoning trajectory synthesis (Python bindings)."""

import json as _json

from ._reer import (  # noqa: F401
    ReerError,
    ReferenceLM,
    format_quality_prompt,
    join_trajectory,
    mix_counts,
    parse_training_text,
    perplexity,
    segment_trajectory,
)
from . import _reer

__all__ = [
    "ReerError",
    "ReferenceLM",
    "end_of_thinking_filter",
    "format_quality_prompt",
    "format_training_text",
    "join_trajectory",
    "mix_counts",
    "parse_quality_report",
    "parse_training_text",
    "perplexity",
    "repetition_filter",
    "run_demo",
    "run_search",
    "segment_trajectory",
]


def end_of_thinking_filter(text, tail_fraction=0.10):
    return _json.loads(_reer.end_of_thinking_filter_json(text, tail_fraction))


def repetition_filter(text, n=3, top_k=3, threshold=0.15):
    return _json.loads(_reer.repetition_filter_json(text, n, top_k, threshold))


def format_training_text(record):
    """record: dict with id, query, think, answer (category and origin optional)."""
    rec = {"schema_version": 1, "category": "other", "origin": "synthetic"}
    rec.update(record)
    return _reer.format_training_text_json(_json.dumps(rec))


def parse_quality_report(reply):
    return _json.loads(_reer.parse_quality_report_json(reply))


def run_search(pair, search_config=None, order=4):
    """Offline search with the procedural generator and in-context reference scorer."""
    return _json.loads(_reer.run_search_json(_json.dumps(pair), _json.dumps(search_config or {}), order))


def run_demo(output_dir, seed=0, workers=1):
    return _json.loads(_reer.run_demo_json(str(output_dir), seed, workers))
