"""Golden traces: recorded runs of the shipped strategies must replay exactly."""
from __future__ import annotations

import json
from pathlib import Path

import pytest

from psgraph.engine import EvalSession, replay_trace
from psgraph.logic import goal_key, parse_goal
from psgraph.model import load_document

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "data" / "golden"
MANIFEST = json.loads((GOLDEN / "manifest.json").read_text())


@pytest.mark.parametrize("case", MANIFEST, ids=[c["file"] for c in MANIFEST])
def test_golden_replay(case):
    doc = load_document((ROOT / case["strategy"]).read_text())
    data = (GOLDEN / case["file"]).read_bytes()
    session = replay_trace(doc, [parse_goal(case["goal"])], data)
    assert session.status == case["status"]
    assert sorted(goal_key(r) for r in session.result_goals()) == case["results"]
    assert session.backtracks_used == case["backtracks"]
    # replay leaves the session byte-equivalent to the recording
    assert session.export_trace() == data


@pytest.mark.parametrize("case", MANIFEST, ids=[c["file"] for c in MANIFEST])
def test_golden_still_reproduced_by_fresh_run(case):
    doc = load_document((ROOT / case["strategy"]).read_text())
    s = EvalSession(doc, [parse_goal(case["goal"])])
    s.finish()
    assert s.export_trace() == (GOLDEN / case["file"]).read_bytes()
