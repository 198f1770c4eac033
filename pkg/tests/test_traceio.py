"""Trace CSV and metrics JSON."""

import dataclasses
import json
import math

from personfollow.config import builtin_scenario
from personfollow.pipeline import run_scenario
from personfollow.traceio import COLUMNS, format_float, metrics_to_json, read_trace_csv, trace_to_csv


def test_columns():
    assert COLUMNS[:7] == ("time", "robot_x", "robot_y", "robot_theta", "target_x", "target_y", "status")
    assert COLUMNS[-1] == "occlusion_fraction"


def test_format_float():
    assert format_float(None) == ""
    assert format_float(1 / 3) == "0.333333333"
    assert format_float(2.0) == "2"


def test_round_trip_to_emitted_precision():
    cfg = dataclasses.replace(builtin_scenario("full_occlusion_crossing"), duration=16)
    trace, _ = run_scenario(cfg)
    text = trace_to_csv(trace)
    back = read_trace_csv(text)
    assert len(back) == len(trace)
    for a, b in zip(trace, back):
        for name in COLUMNS:
            x, y = getattr(a, name), getattr(b, name)
            if isinstance(x, str) or x is None:
                assert x == y
            else:
                assert math.isclose(x, y, rel_tol=1e-8, abs_tol=1e-300)
    assert trace_to_csv(back) == text


def test_metrics_json_is_sorted_and_parseable():
    cfg = dataclasses.replace(builtin_scenario("static_target"), duration=1)
    _, m = run_scenario(cfg)
    text = metrics_to_json(m)
    data = json.loads(text)
    assert list(data) == sorted(data)
    assert data["steps_lost"] == m.steps_lost
