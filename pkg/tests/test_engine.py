"""Evaluator semantics: placement, atomic steps, hierarchy, breakpoints,
backtracking, limits, outcome enumeration, and trace export/replay."""
from __future__ import annotations

import json

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gen import flat_dag_docs, one_nested_docs, prop_formulas
from gen import goals as goals_
from psgraph.engine import (
    AtTopLevel,
    EvalLimitError,
    EvalLimits,
    EvalSession,
    InvalidState,
    LintFailed,
    NoMatchingInputWire,
    NotAtNestedNode,
    TraceMismatch,
    UnknownGoalId,
    UnknownWireId,
    brute_force_outcomes,
    document_hash,
    enumerate_outcomes,
    replay_trace,
)
from psgraph.goaltypes import eval_goaltype, parse_goaltype
from psgraph.logic import Goal, fresh_const, goal_key, parse_goal
from psgraph.model import (
    AtomicNode,
    BreakpointNode,
    Document,
    Graph,
    IdentityNode,
    InputEnd,
    NestedNode,
    NodeEnd,
    OutputEnd,
    Wire,
)
from psgraph.tactics import GoalIds, apply_tactic, builtin_registry

IN0, IN1 = InputEnd(0), InputEnd(1)
OUT0, OUT1 = OutputEnd(0), OutputEnd(1)


def W(wid, src, dst, gt="any"):
    return Wire(wid, src, dst, parse_goaltype(gt))


def N(name):
    return NodeEnd(name)


def doc1(nodes, wires, n_inputs=1, n_outputs=1, main="g", **extra):
    graphs = {main: Graph(n_inputs, n_outputs, dict(nodes), tuple(wires))}
    graphs.update(extra)
    return Document(1, main, graphs)


def g(text):
    return parse_goal(text)


def events(session, *fields):
    if not fields:
        return [e["ev"] for e in session.trace]
    return [tuple(e.get(f) for f in ("ev",) + fields) for e in session.trace]


IDENTITY = doc1({}, [W("w0", IN0, OUT0)])
IDNODE = doc1({"i": IdentityNode()}, [W("w0", IN0, N("i")), W("w1", N("i"), OUT0)])
BPDOC = doc1({"b": BreakpointNode()}, [W("w0", IN0, N("b")), W("w1", N("b"), OUT0)])

CONJ_SPLIT = doc1(
    {"n": AtomicNode("conj_intro")},
    [
        W("w0", IN0, N("n")),
        W("w1", N("n"), OUT0, "concl_is(atom)"),
        W("w2", N("n"), OUT0, "concl_is(atom)"),
    ],
)

CONJ_STUCK = doc1(
    {"n": AtomicNode("conj_intro")},
    [W("w0", IN0, N("n")), W("w1", N("n"), OUT0, "concl_is(and)")],
)

DISJ_OUT = doc1(
    {"d": AtomicNode("disj_intro")},
    [W("w0", IN0, N("d")), W("w1", N("d"), OUT0, "concl_is(atom)")],
)

NESTED_ID = doc1(
    {"N": NestedNode("inner")},
    [W("w0", IN0, N("N")), W("w1", N("N"), OUT0)],
    main="main",
    inner=Graph(1, 1, {}, (W("v0", IN0, OUT0),)),
)


# --- session construction -------------------------------------------------------


def test_init_places_goal_and_runs():
    s = EvalSession(IDENTITY, [g("|- p")])
    assert s.status == "running"
    snap = s.state_snapshot()
    assert snap["frames"][0]["wires"] == [
        {"id": "w0", "goals": [{"id": "g1", "text": "|- p"}]}
    ]
    assert events(s) == ["goal_entered"]


def test_init_renames_goals_sequentially():
    s = EvalSession(IDENTITY, [parse_goal("|- p", "weird"), parse_goal("|- q", "x")])
    occupants = s.state_snapshot()["frames"][0]["wires"][0]["goals"]
    assert occupants == [{"id": "g1", "text": "|- p"}, {"id": "g2", "text": "|- q"}]


def test_init_rejects_goal_no_entry_wire():
    doc = doc1({}, [W("w0", IN0, OUT0, "concl_is(and)")])
    with pytest.raises(NoMatchingInputWire):
        EvalSession(doc, [g("|- p | q")])


def test_init_rejects_unlintable_document():
    doc = doc1({"n": AtomicNode("no_such_tac")}, [W("w0", IN0, N("n"))])
    with pytest.raises(LintFailed) as e:
        EvalSession(doc, [g("|- p")])
    assert any(d.code == "E001" for d in e.value.diagnostics)


def test_init_warning_diagnostics_do_not_block():
    doc = doc1({}, [W("w0", IN0, OUT0), W("w1", IN0, OUT0, "!any")])
    s = EvalSession(doc, [g("|- p")])
    assert s.finish() == "complete"


def test_init_multiple_matching_entry_wires_is_a_choice_point():
    doc = doc1({}, [W("w0", IN0, OUT0), W("w1", IN0, OUT0)])
    s = EvalSession(doc, [g("|- p")])
    assert s.state_snapshot()["choice_depth"] == 1
    assert s.state_snapshot()["frames"][0]["wires"][0]["id"] == "w0"


def test_init_rejects_unknown_policy():
    with pytest.raises(ValueError):
        EvalSession(IDENTITY, [g("|- p")], policy="bogus")


# --- single steps ----------------------------------------------------------------


def test_identity_pass_through_single_step():
    s = EvalSession(IDENTITY, [g("|- p")])
    assert s.step() == "complete"
    assert [goal_key(r) for r in s.result_goals()] == ["|- p"]
    assert events(s) == ["goal_entered", "goal_exited", "finished"]


def test_conj_split_routes_both_subgoals_in_one_step():
    s = EvalSession(CONJ_SPLIT, [g("|- p & q")])
    s.step()
    assert events(s) == ["goal_entered", "tactic_applied", "routed", "routed"]
    applied = s.trace[1]
    assert applied["node"] == "n" and applied["subgoals"] == ["g2", "g3"]
    assert s.finish() == "complete"
    assert sorted(goal_key(r) for r in s.result_goals()) == ["|- p", "|- q"]


def test_conj_with_unroutable_subgoal_fails():
    s = EvalSession(CONJ_STUCK, [g("|- p & q")])
    assert s.step() == "failed"
    assert s.failure is not None
    assert s.failure.node == "n"
    assert "no wire out of node 'n'" in s.failure.reason
    assert "routing_failed" in events(s)


def test_identity_node_routes_unchanged_goal():
    s = EvalSession(IDNODE, [g("|- p & q")])
    s.step()
    assert events(s, "goal", "wire") == [
        ("goal_entered", "g1", "w0"),
        ("routed", "g1", "w1"),
    ]
    assert s.status == "running"


def test_step_on_terminal_session_is_an_error():
    s = EvalSession(IDENTITY, [g("|- p")])
    s.finish()
    with pytest.raises(InvalidState):
        s.step()


def test_tactic_failure_without_choices_fails_session():
    doc = doc1(
        {"c": AtomicNode("conj_intro")},
        [W("w0", IN0, N("c")), W("w1", N("c"), OUT0)],
    )
    s = EvalSession(doc, [g("|- p")])
    assert s.step() == "failed"
    assert "tactic_failed" in events(s)
    assert s.failure.goal_id == "g1"
    assert "conj_intro" in s.failure.reason


def test_deepest_failure_reported():
    doc = doc1(
        {"d": AtomicNode("disj_intro"), "c": AtomicNode("conj_intro")},
        [
            W("w0", IN0, N("d")),
            W("w1", N("d"), N("c"), "concl_is(atom)"),
            W("w2", N("c"), OUT0, "concl_is(and)"),
        ],
    )
    s = EvalSession(doc, [g("|- p | q")])
    assert s.finish() == "failed"
    assert s.failure.node == "c"
    assert s.failure.goal == "|- q"
    assert events(s).count("backtracked") == 1


# --- hierarchy -------------------------------------------------------------------


def test_step_over_nested_identity():
    s = EvalSession(NESTED_ID, [g("|- p")])
    s.step_over()
    snap = s.state_snapshot()
    assert len(snap["frames"]) == 1
    assert snap["frames"][0]["wires"][0]["id"] == "w1"
    assert [x["text"] for x in snap["frames"][0]["wires"][0]["goals"]] == ["|- p"]
    assert "entered_nested" in events(s) and "exited_nested" in events(s)


def test_plain_step_at_nested_node_steps_over():
    a = EvalSession(NESTED_ID, [g("|- p")])
    b = EvalSession(NESTED_ID, [g("|- p")])
    a.step()
    b.step_over()
    assert a.state_snapshot() == b.state_snapshot()
    assert a.trace == b.trace


def test_step_into_pushes_frame():
    s = EvalSession(NESTED_ID, [g("|- p")])
    s.step_into()
    snap = s.state_snapshot()
    assert len(snap["frames"]) == 2
    assert snap["frames"][1]["graph"] == "inner"
    assert snap["frames"][1]["return_node"] == "N"
    assert snap["frames"][1]["wires"][0]["id"] == "v0"


def test_step_into_requires_nested_node():
    s = EvalSession(IDNODE, [g("|- p")])
    with pytest.raises(NotAtNestedNode):
        s.step_into()


def test_hierarchy_coherence_on_nested_identity():
    a = EvalSession(NESTED_ID, [g("|- p")])
    a.step_over()
    b = EvalSession(NESTED_ID, [g("|- p")])
    b.step_into()
    b.finish_node()
    assert a.state_snapshot()["frames"] == b.state_snapshot()["frames"]
    assert a.status == b.status == "running"


def test_finish_node_returns_goal_to_parent_wire():
    s = EvalSession(NESTED_ID, [g("|- p")])
    s.step_into()
    assert s.finish_node() == "running"
    snap = s.state_snapshot()
    assert len(snap["frames"]) == 1
    assert snap["frames"][0]["wires"][0]["id"] == "w1"


def test_finish_node_at_top_level_is_an_error():
    s = EvalSession(IDENTITY, [g("|- p")])
    with pytest.raises(AtTopLevel):
        s.finish_node()


def test_nested_failure_propagates_to_parent_choices():
    # entry has an escape wire; the nested attempt dead-ends and backtracks to it
    doc = doc1(
        {"N": NestedNode("bad")},
        [W("w0", IN0, N("N")), W("w1", IN0, OUT0), W("w2", N("N"), OUT0)],
        main="main",
        bad=Graph(
            1,
            1,
            {"c": AtomicNode("conj_intro")},
            (W("v0", IN0, N("c")), W("v1", N("c"), OUT0, "concl_is(and)")),
        ),
    )
    s = EvalSession(doc, [g("|- p & q")])
    s.step_into()
    assert len(s.state_snapshot()["frames"]) == 2
    s.finish_node()
    snap = s.state_snapshot()
    assert s.status == "running"
    assert len(snap["frames"]) == 1
    assert snap["frames"][0]["wires"][0]["id"] == "w1"
    assert "backtracked" in events(s)
    assert s.finish() == "complete"
    assert [goal_key(r) for r in s.result_goals()] == ["|- p & q"]


def test_nested_exit_routed_by_goal_type_on_parent_out_wires():
    doc = doc1(
        {"N": NestedNode("splitter")},
        [
            W("w0", IN0, N("N")),
            W("w1", N("N"), OUT0, "concl_is(atom)"),
            W("w2", N("N"), OUT1, "concl_is(true)"),
        ],
        n_outputs=2,
        main="main",
        splitter=Graph(
            1,
            1,
            {"c": AtomicNode("conj_intro")},
            (W("v0", IN0, N("c")), W("v1", N("c"), OUT0)),
        ),
    )
    s = EvalSession(doc, [g("|- p & true")])
    s.step_over()
    s.finish()
    assert s.status == "complete"
    exits = [(e["goal"], e["out"]) for e in s.trace if e["ev"] == "goal_exited" and e["depth"] == 0]
    assert ("g2", 0) in exits and ("g3", 1) in exits


# --- finish ----------------------------------------------------------------------


def test_finish_identity_completes_with_input_goal():
    s = EvalSession(IDENTITY, [g("|- p")])
    assert s.finish() == "complete"
    assert [goal_key(r) for r in s.result_goals()] == ["|- p"]
    assert s.trace[-1] == {"ev": "finished", "status": "complete", "results": ["g1"]}


def test_finish_failure_names_node_and_goal():
    s = EvalSession(CONJ_STUCK, [g("|- p")])
    assert s.finish() == "failed"
    assert s.failure.node == "n"
    assert s.failure.goal == "|- p"
    assert s.failure.graph == "g"


# --- breakpoints ------------------------------------------------------------------


def test_breakpoint_pauses_then_resumes():
    s = EvalSession(BPDOC, [g("|- p")])
    assert s.step() == "paused"
    assert s.trace[-1]["ev"] == "breakpoint_hit"
    assert s.state_snapshot()["paused_goal"] == "g1"
    # the goal has not moved
    assert s.state_snapshot()["frames"][0]["wires"][0]["id"] == "w0"
    assert s.step() == "running"
    assert s.trace[-1]["ev"] == "routed"
    assert s.finish() == "complete"


def test_finish_stops_at_breakpoint_unless_ignored():
    s = EvalSession(BPDOC, [g("|- p")])
    assert s.finish() == "paused"
    assert s.finish() == "complete"
    t = EvalSession(BPDOC, [g("|- p")])
    assert t.finish(ignore_breakpoints=True) == "complete"
    assert "breakpoint_hit" not in events(t)


def test_run_to_breakpoint_pauses():
    s = EvalSession(BPDOC, [g("|- p")])
    assert s.run_to_breakpoint() == "paused"


def test_run_to_breakpoint_without_breakpoints_equals_finish():
    a = EvalSession(IDNODE, [g("|- p")])
    b = EvalSession(IDNODE, [g("|- p")])
    assert a.run_to_breakpoint() == b.finish() == "complete"
    assert a.trace == b.trace
    assert a.state_snapshot() == b.state_snapshot()


def test_breakpoint_inside_nested_surfaces_with_frames():
    doc = doc1(
        {"N": NestedNode("inner")},
        [W("w0", IN0, N("N")), W("w1", N("N"), OUT0)],
        main="main",
        inner=Graph(
            1,
            1,
            {"b": BreakpointNode()},
            (W("v0", IN0, N("b")), W("v1", N("b"), OUT0)),
        ),
    )
    s = EvalSession(doc, [g("|- p")])
    assert s.step() == "paused"
    snap = s.state_snapshot()
    assert len(snap["frames"]) == 2
    assert snap["frames"][1]["graph"] == "inner"
    assert snap["paused_goal"] == "g1"
    assert s.finish() == "complete"


def test_toggle_breakpoint_twice_is_identity():
    s = EvalSession(IDENTITY, [g("|- p")])
    before = s.graphs["g"]
    s.toggle_breakpoint("w0")
    assert s.graphs["g"] != before
    s.toggle_breakpoint("w0")
    assert s.graphs["g"] == before


def test_toggle_on_occupied_wire_keeps_goal_upstream():
    s = EvalSession(IDENTITY, [g("|- p")])
    s.toggle_breakpoint("w0")
    snap = s.state_snapshot()
    assert snap["frames"][0]["wires"] == [
        {"id": "w0", "goals": [{"id": "g1", "text": "|- p"}]}
    ]
    assert s.step() == "paused"
    assert s.finish() == "complete"


def test_toggle_before_output_fires_before_exit():
    s = EvalSession(IDENTITY, [g("|- p")])
    s.toggle_breakpoint("w0")
    assert s.run_to_breakpoint() == "paused"
    assert s.result_goals() == []
    assert s.finish() == "complete"
    assert [goal_key(r) for r in s.result_goals()] == ["|- p"]


def test_toggle_unknown_wire():
    s = EvalSession(IDENTITY, [g("|- p")])
    with pytest.raises(UnknownWireId):
        s.toggle_breakpoint("nope")


def test_toggle_removal_merges_downstream_goals_ahead():
    s = EvalSession(IDENTITY, [g("|- p"), g("|- q")])
    s.toggle_breakpoint("w0")
    s.step()  # g1 pauses at the breakpoint
    s.step()  # g1 resumes onto the downstream half
    wires = {w["id"]: [x["id"] for x in w["goals"]] for w in s.state_snapshot()["frames"][0]["wires"]}
    assert wires == {"w0": ["g2"], "w0_bp": ["g1"]}
    s.toggle_breakpoint("w0")
    wires = {w["id"]: [x["id"] for x in w["goals"]] for w in s.state_snapshot()["frames"][0]["wires"]}
    assert wires == {"w0": ["g1", "g2"]}
    s.finish()
    assert [r.id for r in s.result_goals()] == ["g1", "g2"]


def test_toggle_while_paused_at_that_breakpoint_unpauses():
    s = EvalSession(IDENTITY, [g("|- p")])
    s.toggle_breakpoint("w0")
    assert s.step() == "paused"
    s.toggle_breakpoint("w0")
    assert s.status == "running"
    assert s.state_snapshot()["paused_goal"] is None
    assert s.finish() == "complete"


# --- goal selection ---------------------------------------------------------------


def test_select_goal_overrides_fifo():
    doc = doc1(
        {},
        [W("w0", IN0, OUT0, "concl_is(atom)"), W("w1", IN1, OUT0, "concl_is(and)")],
        n_inputs=2,
    )
    s = EvalSession(doc, [g("|- p"), g("|- q & r")])
    s.select_goal("g2")
    s.step()
    assert [goal_key(r) for r in s.result_goals()] == ["|- q & r"]
    s.step()
    assert [goal_key(r) for r in s.result_goals()] == ["|- q & r", "|- p"]


def test_selection_cleared_when_backtracking_past_creation():
    s = EvalSession(DISJ_OUT, [g("|- p | q")])
    s.step()
    s.select_goal("g2")
    assert s.state_snapshot()["selected_goal"] == "g2"
    assert s.backtrack() is True
    assert s.state_snapshot()["selected_goal"] is None
    s.finish()
    assert [goal_key(r) for r in s.result_goals()] == ["|- q"]


def test_select_unknown_goal():
    s = EvalSession(IDENTITY, [g("|- p")])
    with pytest.raises(UnknownGoalId):
        s.select_goal("g9")


def test_manual_policy_requires_selection():
    s = EvalSession(IDENTITY, [g("|- p")], policy="manual")
    with pytest.raises(InvalidState):
        s.step()
    s.select_goal("g1")
    assert s.step() == "complete"


# --- backtracking -----------------------------------------------------------------


def test_tactic_alternative_backtracking_recovers():
    doc = doc1(
        {"d": AtomicNode("disj_intro"), "a": AtomicNode("assumption")},
        [W("w0", IN0, N("d")), W("w1", N("d"), N("a"), "concl_is(atom)")],
    )
    s = EvalSession(doc, [g("q |- p | q")])
    assert s.finish() == "complete"
    assert s.result_goals() == []
    assert events(s).count("backtracked") == 1
    assert s.backtracks_used == 1


def test_routing_choice_backtracks_to_next_wire():
    doc = doc1(
        {"i": IdentityNode()},
        [W("w0", IN0, N("i")), W("w1", N("i"), OUT0), W("w2", N("i"), OUT1)],
        n_outputs=2,
    )
    s = EvalSession(doc, [g("|- p")])
    s.step()
    assert s.trace[-1] == {"ev": "routed", "goal": "g1", "wire": "w1", "depth": 0}
    assert s.finish() == "complete"
    assert s.backtrack() is True
    assert s.status == "running"
    assert s.state_snapshot()["frames"][0]["wires"][0]["id"] == "w2"
    assert s.finish() == "complete"
    assert s.backtrack() is False


def test_backtrack_on_empty_stack_reports_false():
    s = EvalSession(IDENTITY, [g("|- p")])
    assert s.backtrack() is False
    assert s.status == "running"


def test_backtrack_restores_occupancy_and_results():
    doc = doc1({}, [W("w0", IN0, OUT0), W("w1", IN0, OUT0)])
    s = EvalSession(doc, [g("|- p")])
    s.finish()
    assert s.status == "complete"
    assert [goal_key(r) for r in s.result_goals()] == ["|- p"]
    assert s.backtrack() is True
    assert s.result_goals() == []
    snap = s.state_snapshot()
    assert snap["status"] == "running"
    assert snap["frames"][0]["wires"][0]["id"] == "w1"


# --- limits -----------------------------------------------------------------------


def test_step_limit_boundary():
    ok = EvalSession(IDNODE, [g("|- p")], limits=EvalLimits(max_steps=2))
    assert ok.finish() == "complete"
    assert ok.steps_used == 2
    short = EvalSession(IDNODE, [g("|- p")], limits=EvalLimits(max_steps=1))
    assert short.finish() == "failed"
    assert short.failure.limit is True
    assert "max_steps=1" in short.failure.reason


def test_choice_stack_depth_limit():
    s = EvalSession(DISJ_OUT, [g("|- p | q")], limits=EvalLimits(max_choice_depth=0))
    assert s.finish() == "failed"
    assert s.failure.limit is True
    assert "choice stack depth" in s.failure.reason


EX3 = doc1(
    {"e": AtomicNode("exists_intro"), "a": AtomicNode("assumption")},
    [W("w0", IN0, N("e")), W("w1", N("e"), N("a"), "concl_is(atom)")],
)
EX3_GOAL = "p(a), p(b), p(c) |- exists x. q(x)"


def test_backtrack_count_limit_boundary():
    # three witness alternatives, all failing: two backtracks to exhaust
    free = EvalSession(EX3, [g(EX3_GOAL)], limits=EvalLimits(max_choice_depth=8))
    assert free.finish() == "failed"
    assert free.failure.limit is False
    assert free.backtracks_used == 2
    capped = EvalSession(EX3, [g(EX3_GOAL)], limits=EvalLimits(max_choice_depth=1))
    assert capped.finish() == "failed"
    assert capped.failure.limit is True
    assert "backtrack limit" in capped.failure.reason


def test_budgets_are_monotone_across_backtracking():
    # one exists_intro step, then one assumption step per witness alternative
    s = EvalSession(EX3, [g(EX3_GOAL)])
    s.finish()
    assert s.steps_used == 4
    assert s.backtracks_used == 2


# --- outcome enumeration ------------------------------------------------------------


def test_enumerate_identity():
    assert enumerate_outcomes(IDENTITY, [g("|- p")]) == ({("|- p",)}, False)


def test_enumerate_disjunction_two_branches():
    doc = doc1(
        {"d": AtomicNode("disj_intro")},
        [W("w0", IN0, N("d")), W("w1", N("d"), OUT0, "concl_is(atom)")],
    )
    got, truncated = enumerate_outcomes(doc, [g("|- p | q")])
    assert got == {("|- p",), ("|- q",)}
    assert truncated is False


def test_enumerate_truncation_flag():
    doc = doc1(
        {"d": AtomicNode("disj_intro")},
        [W("w0", IN0, N("d")), W("w1", N("d"), OUT0, "concl_is(atom)")],
    )
    got, truncated = enumerate_outcomes(doc, [g("|- p | q")], max_outcomes=1)
    assert len(got) == 1
    assert truncated is True


def test_enumerate_limit_error():
    with pytest.raises(EvalLimitError):
        enumerate_outcomes(IDNODE, [g("|- p")], limits=EvalLimits(max_steps=1))


def test_enumerate_collapses_alpha_equal_outcomes():
    doc = doc1({}, [W("w0", IN0, OUT0), W("w1", IN0, OUT0)])
    got, _ = enumerate_outcomes(doc, [g("|- forall x. p(x)")])
    assert got == {("|- forall $0. p($0)",)}


# --- brute-force oracle --------------------------------------------------------------


def test_brute_force_contains_conj_split():
    out = brute_force_outcomes([g("|- p & q")], depth=1)
    assert ("|- p", "|- q") in out


def test_brute_force_contains_discharge():
    out = brute_force_outcomes([g("p |- p")], depth=1)
    assert () in out


def test_brute_force_depth_zero_is_initial_state_only():
    assert brute_force_outcomes([g("|- p & q")], depth=0) == {("|- p & q",)}


def test_brute_force_quantified_conjunction():
    goal = g("|- forall x. p(x) & q(x)")
    c = fresh_const(goal, "x").name
    out = brute_force_outcomes([goal], depth=3)
    expected = tuple(sorted((goal_key(g(f"|- p({c})")), goal_key(g(f"|- q({c})")))))
    assert expected in out


# --- traces and replay ----------------------------------------------------------------


def test_export_trace_shape_and_hash():
    s = EvalSession(IDENTITY, [g("|- p")])
    s.finish()
    obj = json.loads(s.export_trace())
    assert obj["version"] == 1
    assert obj["doc_hash"] == document_hash(IDENTITY)
    assert [e["ev"] for e in obj["events"]] == ["goal_entered", "goal_exited", "finished"]


def test_determinism_byte_identical_traces():
    runs = []
    for _ in range(2):
        s = EvalSession(CONJ_SPLIT, [g("|- p & q")])
        s.finish()
        runs.append(s.export_trace())
    assert runs[0] == runs[1]


def test_replay_identity_run():
    s = EvalSession(IDENTITY, [g("|- p")])
    s.finish()
    r = replay_trace(IDENTITY, [g("|- p")], s.export_trace())
    assert r.status == "complete"
    assert r.trace == s.trace
    assert r.export_trace() == s.export_trace()
    assert r.state_snapshot() == s.state_snapshot()


def test_replay_accepts_renamed_alpha_equal_goals():
    s = EvalSession(IDENTITY, [g("|- forall x. p(x)")])
    s.finish()
    r = replay_trace(IDENTITY, [parse_goal("|- forall y. p(y)", "zz")], s.export_trace())
    assert r.status == "complete"


def test_replay_with_backtracking():
    doc = doc1(
        {"d": AtomicNode("disj_intro"), "a": AtomicNode("assumption")},
        [W("w0", IN0, N("d")), W("w1", N("d"), N("a"), "concl_is(atom)")],
    )
    s = EvalSession(doc, [g("q |- p | q")])
    s.finish()
    r = replay_trace(doc, [g("q |- p | q")], s.export_trace())
    assert r.status == "complete"
    assert r.trace == s.trace


def test_replay_nested_run():
    s = EvalSession(NESTED_ID, [g("|- p")])
    s.step_into()
    s.finish()
    r = replay_trace(NESTED_ID, [g("|- p")], s.export_trace())
    assert r.trace == s.trace
    assert r.status == "complete"


def test_replay_paused_and_resumed_run():
    s = EvalSession(BPDOC, [g("|- p")])
    s.finish()
    assert s.status == "paused"
    half = replay_trace(BPDOC, [g("|- p")], s.export_trace())
    assert half.status == "paused"
    s.finish()
    full = replay_trace(BPDOC, [g("|- p")], s.export_trace())
    assert full.status == "complete"
    assert full.trace == s.trace


def test_replay_ignored_breakpoint_run():
    s = EvalSession(BPDOC, [g("|- p")])
    s.finish(ignore_breakpoints=True)
    r = replay_trace(BPDOC, [g("|- p")], s.export_trace())
    assert r.status == "complete"
    assert r.trace == s.trace


def test_replay_against_edited_graph_mismatches_at_first_affected_event():
    s = EvalSession(CONJ_SPLIT, [g("|- p & q")])
    s.finish()
    edited = doc1(
        {"n": AtomicNode("conj_intro")},
        [
            W("w0", IN0, N("n")),
            W("w1", N("n"), OUT0, "concl_is(and)"),
            W("w2", N("n"), OUT0, "concl_is(atom)"),
        ],
    )
    with pytest.raises(TraceMismatch) as e:
        replay_trace(edited, [g("|- p & q")], s.export_trace())
    assert e.value.index == 2  # the first routed event lands on a different wire


def test_replay_rejects_garbage():
    with pytest.raises(TraceMismatch) as e:
        replay_trace(IDENTITY, [g("|- p")], b"not json")
    assert e.value.index == 0
    with pytest.raises(TraceMismatch):
        replay_trace(IDENTITY, [g("|- p")], b'{"version": 9, "events": []}')


def test_replay_of_prefix_stops_midway():
    s = EvalSession(BPDOC, [g("|- p")])
    s.finish()
    s.finish()
    assert s.status == "complete"
    obj = json.loads(s.export_trace())
    obj["events"] = obj["events"][:2]  # entered + paused only
    r = replay_trace(BPDOC, [g("|- p")], json.dumps(obj).encode())
    assert r.status == "paused"


# --- goal accounting against the event log --------------------------------------------


class OccModel:
    """Mirror of session occupancy driven purely by emitted trace events."""

    def __init__(self, session):
        self.resync(session)

    def resync(self, session):
        snap = session.state_snapshot()
        self.frames = [
            {w["id"]: [x["id"] for x in w["goals"]] for w in f["wires"]}
            for f in snap["frames"]
        ]
        self.results = [x["id"] for x in snap["results"]]
        self.pos = len(session.trace)

    def _drop(self, depth, gid):
        for wid, ids in list(self.frames[depth].items()):
            if gid in ids:
                ids.remove(gid)
                if not ids:
                    del self.frames[depth][wid]

    def check(self, session):
        for e in session.trace[self.pos:]:
            ev = e["ev"]
            if ev == "backtracked":
                # snapshot restore: not reconstructible from events alone
                self.resync(session)
                return self.check(session)
            if ev in ("goal_entered", "routed"):
                self._drop(e["depth"], e["goal"])
                self.frames[e["depth"]].setdefault(e["wire"], []).append(e["goal"])
            elif ev in ("tactic_applied", "tactic_failed"):
                self._drop(e["depth"], e["goal"])
            elif ev == "goal_exited":
                self._drop(e["depth"], e["goal"])
                if e["depth"] == 0:
                    self.results.append(e["goal"])
            elif ev == "entered_nested":
                self._drop(e["depth"], e["goal"])
                self.frames.append({})
            elif ev == "exited_nested":
                self.frames.pop()
            elif ev == "routing_failed":
                # a moving goal (identity/breakpoint pass-through) is consumed
                # before routing; subgoals and exited goals are already gone
                self._drop(e["depth"], e["goal"])
            elif ev in ("breakpoint_hit", "finished"):
                pass
        self.pos = len(session.trace)
        snap = session.state_snapshot()
        actual_frames = [
            {w["id"]: [x["id"] for x in w["goals"]] for w in f["wires"]}
            for f in snap["frames"]
        ]
        assert actual_frames == self.frames[: len(actual_frames)]
        assert self.frames[len(actual_frames):] == [{}] * (len(self.frames) - len(actual_frames))
        self.frames = self.frames[: len(actual_frames)] or [{}]
        assert [x["id"] for x in snap["results"]] == self.results


def drive_with_accounting(doc, goals, ops):
    s = EvalSession(doc, goals)
    model = OccModel(s)
    for op in ops:
        if s.status not in ("running", "paused"):
            break
        getattr(s, op)()
        model.check(s)
    return s


def test_goal_accounting_linear_runs():
    drive_with_accounting(CONJ_SPLIT, [g("|- p & q")], ["step"] * 5)
    drive_with_accounting(IDNODE, [g("|- p")], ["step"] * 3)
    drive_with_accounting(BPDOC, [g("|- p")], ["step"] * 4)
    drive_with_accounting(NESTED_ID, [g("|- p")], ["step_into", "step", "step", "step"])


def test_goal_accounting_with_backtracking():
    doc = doc1(
        {"d": AtomicNode("disj_intro"), "a": AtomicNode("assumption")},
        [W("w0", IN0, N("d")), W("w1", N("d"), N("a"), "concl_is(atom)")],
    )
    drive_with_accounting(doc, [g("q |- p | q")], ["finish"])


# --- an independent recursive choice-tree oracle ---------------------------------------


def oracle_outcomes(doc, goals, registry=None):
    """Leaf outcome set by plain recursion over the same choice definitions.

    Flat documents only.  No choice stack, no snapshots: every alternative
    and every matching wire assignment is explored as a separate branch."""
    reg = registry if registry is not None else builtin_registry()
    graph = doc.graphs[doc.main]
    out: set[tuple[str, ...]] = set()

    def route_each(occ, node_wires, pending, done):
        if not pending:
            done(occ)
            return
        head, rest = pending[0], pending[1:]
        for w in node_wires:
            if eval_goaltype(w.gt, head):
                occ2 = dict(occ)
                occ2[w.id] = occ2.get(w.id, ()) + (head,)
                route_each(occ2, node_wires, rest, done)

    def explore(occ, results):
        selected = None
        for wid in sorted(occ):
            if occ[wid]:
                selected = (occ[wid][0], wid)
                break
        if selected is None:
            out.add(tuple(sorted(goal_key(x) for x in results)))
            return
        goal, wid = selected
        occ2 = dict(occ)
        occ2[wid] = occ2[wid][1:]
        if not occ2[wid]:
            del occ2[wid]
        wire = graph.wire(wid)
        if isinstance(wire.dst, OutputEnd):
            explore(occ2, results + (goal,))
            return
        node = graph.nodes[wire.dst.node]
        outs = graph.out_wires(wire.dst.node)
        if isinstance(node, (IdentityNode, BreakpointNode)):
            route_each(occ2, outs, (goal,), lambda o: explore(o, results))
            return
        assert isinstance(node, AtomicNode)
        for alt in apply_tactic(reg, node.tactic, goal, GoalIds()):
            route_each(occ2, outs, alt.subgoals, lambda o: explore(o, results))

    route_each({}, graph.entry_wires(), tuple(goals), lambda o: explore(o, ()))
    return out


def test_oracle_agrees_on_fixed_examples():
    assert oracle_outcomes(IDENTITY, [g("|- p")]) == {("|- p",)}
    doc = doc1(
        {"d": AtomicNode("disj_intro")},
        [W("w0", IN0, N("d")), W("w1", N("d"), OUT0, "concl_is(atom)")],
    )
    assert oracle_outcomes(doc, [g("|- p | q")]) == {("|- p",), ("|- q",)}


@settings(max_examples=100, deadline=None)
@given(flat_dag_docs(), goals_(max_depth=2, max_hyps=2, formula=prop_formulas))
def test_enumerate_matches_recursive_oracle(doc, goal):
    try:
        got, truncated = enumerate_outcomes(doc, [goal])
    except NoMatchingInputWire:
        assume(False)
    assert truncated is False
    assert got == oracle_outcomes(doc, [goal])


# --- engine-wide properties -------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(flat_dag_docs(), goals_(max_depth=2, max_hyps=2, formula=prop_formulas))
def test_routing_soundness_debug_mode(doc, goal):
    try:
        s = EvalSession(doc, [goal], debug=True, limits=EvalLimits(max_steps=300, max_choice_depth=64))
    except NoMatchingInputWire:
        assume(False)
    while s.status in ("running", "paused"):
        s.step(ignore_breakpoints=True)  # every step re-checks all occupancy
    assert s.status in ("complete", "failed")


@settings(max_examples=80, deadline=None)
@given(one_nested_docs(), goals_(max_depth=2, max_hyps=1, formula=prop_formulas))
def test_hierarchy_coherence_property(doc, goal):
    limits = EvalLimits(max_steps=400, max_choice_depth=64)
    a = EvalSession(doc, [goal], limits=limits)
    a.step_over(ignore_breakpoints=True)
    b = EvalSession(doc, [goal], limits=limits)
    b.step_into()
    if len(b.frames) > 1:
        b.finish_node(ignore_breakpoints=True)
    assert a.status == b.status
    assert a.state_snapshot()["frames"] == b.state_snapshot()["frames"]
    assert [goal_key(x) for x in a.result_goals()] == [goal_key(x) for x in b.result_goals()]


@settings(max_examples=60, deadline=None)
@given(flat_dag_docs(), goals_(max_depth=2, max_hyps=1, formula=prop_formulas))
def test_goal_accounting_property(doc, goal):
    try:
        s = EvalSession(doc, [goal], limits=EvalLimits(max_steps=300, max_choice_depth=64))
    except NoMatchingInputWire:
        assume(False)
    model = OccModel(s)
    while s.status in ("running", "paused"):
        s.step(ignore_breakpoints=True)
        model.check(s)
