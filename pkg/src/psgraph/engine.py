"""The interactive evaluator: sessions, stepping, backtracking, traces.

Goals live on wires.  One atomic step takes the selected goal and lets
the destination of its wire act on it: an atomic node applies its tactic
and routes the subgoals out by goal type, an identity node passes the
goal through, a breakpoint node pauses the session, a nested node runs
its graph in a child frame, and an output boundary sends the goal out of
the frame (at top level, into the result list).

Every point where more than one thing could have happened (a tactic with
several alternatives, a subgoal accepted by several out-wires) pushes a
choice point holding a snapshot of the evaluation state.  A dead end
pops the most recent choice point with untried options, restores its
snapshot, and tries the next one; an empty stack makes the session fail
with a report naming the deepest dead end seen.

Budgets are session-global and monotone: backtracking never refunds
steps, and a nested evaluation spends from the same purse as its parent,
so deep nesting cannot multiply work.

The trace is an append-only log of everything that happened, dead ends
included.  Replaying a trace re-drives a fresh session through the same
decisions, verifying each regenerated event against the log, so a trace
plus the document and initial goals reproduces the exporter's final
state exactly.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

from .goaltypes import eval_goaltype, pretty_goaltype
from .logic import Goal, goal_key, goal_text
from .model import (
    AtomicNode,
    BreakpointNode,
    Diagnostic,
    Document,
    Graph,
    IdentityNode,
    NestedNode,
    NodeEnd,
    OutputEnd,
    Wire,
    lint,
    lint_errors,
    save_document,
)
from .tactics import Alternative, GoalIds, TacticRegistry, apply_tactic, builtin_registry


class EngineError(Exception):
    pass


class InvalidState(EngineError):
    pass


class LintFailed(EngineError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("document has lint errors: " + "; ".join(str(d) for d in diagnostics))


class NoMatchingInputWire(EngineError):
    def __init__(self, gid: str, text: str):
        self.goal_id = gid
        super().__init__(f"no input wire accepts goal {gid} ({text})")


class UnknownGoalId(EngineError):
    pass


class UnknownWireId(EngineError):
    pass


class NotAtNestedNode(InvalidState):
    pass


class AtTopLevel(InvalidState):
    pass


class RoutingViolation(EngineError):
    """Debug-mode check tripped: a goal sits on a wire whose type rejects it."""


class TraceMismatch(EngineError):
    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"trace diverges at event {index}: {message}")


class EvalLimitError(EngineError):
    """Outcome enumeration ran into the session limits before finishing."""


class _LimitStop(Exception):
    """Internal control flow: a budget ran out mid-operation."""


@dataclass(frozen=True)
class EvalLimits:
    max_steps: int = 10000
    max_choice_depth: int = 256


@dataclass(frozen=True)
class FailureReport:
    graph: str
    node: str
    goal_id: str
    goal: str
    reason: str
    limit: bool = False


@dataclass
class _Frame:
    graph: str
    occupancy: dict[str, tuple[Goal, ...]]  # wire id -> goals, absent means empty
    return_node: str | None  # Nested node id in the parent frame, None at top


@dataclass(frozen=True)
class _Snap:
    frames: tuple[_Frame, ...]
    results: tuple[Goal, ...]
    graphs: dict[str, Graph]


@dataclass(frozen=True)
class _RouteCtx:
    kind: str  # "node": out-wires of node in frames[depth]; "entry": input wires
    depth: int
    node: str | None = None


@dataclass(frozen=True)
class _TacticCP:
    snap: _Snap
    depth: int
    node: str
    goal: Goal
    options: tuple[tuple[int, Alternative], ...]  # untried (index, alternative)

    kind = "tactic"


@dataclass(frozen=True)
class _RoutingCP:
    snap: _Snap
    ctx: _RouteCtx
    pending: tuple[Goal, ...]  # pending[0] is the goal whose wire is being chosen
    options: tuple[str, ...]  # untried wire ids for pending[0]

    kind = "routing"


def document_hash(doc: Document) -> str:
    return hashlib.sha256(save_document(doc)).hexdigest()


class EvalSession:
    """One interactive evaluation of a document against some initial goals.

    The document must lint clean against the registry.  Initial goals are
    re-identified g1, g2, ... so ids are session-deterministic; each goal
    is placed on an input-boundary wire of the main graph whose goal type
    accepts it (a choice point when several do, an error when none does).
    """

    def __init__(
        self,
        doc: Document,
        goals: Sequence[Goal],
        registry: TacticRegistry | None = None,
        policy: str = "fifo",
        limits: EvalLimits | None = None,
        debug: bool = False,
    ):
        if policy not in ("fifo", "manual"):
            raise ValueError(f"unknown goal selection policy {policy!r}")
        self.registry = registry if registry is not None else builtin_registry()
        problems = lint_errors(lint(doc, self.registry))
        if problems:
            raise LintFailed(problems)
        self.doc = doc
        self.doc_hash = document_hash(doc)
        self.policy = policy
        self.limits = limits if limits is not None else EvalLimits()
        self.debug = debug
        self.graphs: dict[str, Graph] = dict(doc.graphs)
        self.frames: list[_Frame] = [_Frame(doc.main, {}, None)]
        self.results: list[Goal] = []
        self.choices: list[_TacticCP | _RoutingCP] = []
        self.trace: list[dict] = []
        self.status = "running"
        self.failure: FailureReport | None = None
        self.selected_goal: str | None = None
        self.paused_goal: str | None = None
        self.steps_used = 0
        self.backtracks_used = 0
        self._ids = GoalIds()
        self._best_failure: tuple[int, FailureReport] | None = None

        renamed = tuple(Goal(self._ids.fresh(), g.hyps, g.concl) for g in goals)
        ctx = _RouteCtx("entry", 0)
        for g in renamed:
            if not self._candidates(ctx, g):
                raise NoMatchingInputWire(g.id, goal_text(g))
        try:
            ok = self._route(ctx, renamed)
            assert ok, "initial placement cannot dead-end after the candidate check"
        except _LimitStop:
            pass
        self._normalize()
        self._debug_check()

    # --- tiny state helpers ---------------------------------------------

    def _graph_at(self, depth: int) -> Graph:
        return self.graphs[self.frames[depth].graph]

    def _find(self, frame: _Frame, gid: str) -> tuple[Goal, str] | None:
        for wid in sorted(frame.occupancy):
            for g in frame.occupancy[wid]:
                if g.id == gid:
                    return g, wid
        return None

    def _snapshot(self) -> _Snap:
        return _Snap(
            tuple(_Frame(f.graph, dict(f.occupancy), f.return_node) for f in self.frames),
            tuple(self.results),
            dict(self.graphs),
        )

    def _restore(self, snap: _Snap) -> None:
        self.frames = [_Frame(f.graph, dict(f.occupancy), f.return_node) for f in snap.frames]
        self.results = list(snap.results)
        self.graphs = dict(snap.graphs)
        self.status = "running"
        self.failure = None
        self.paused_goal = None

    def _emit(self, **ev: object) -> None:
        self.trace.append(dict(ev))

    def _consume(self, depth: int, wid: str, goal: Goal) -> None:
        occ = self.frames[depth].occupancy
        rest = tuple(g for g in occ[wid] if g.id != goal.id)
        if rest:
            occ[wid] = rest
        else:
            del occ[wid]

    def _push_cp(self, cp: "_TacticCP | _RoutingCP") -> None:
        if len(self.choices) >= self.limits.max_choice_depth:
            self._fail(
                FailureReport(
                    self.frames[-1].graph, "", "", "",
                    f"choice stack depth limit exceeded (max_choice_depth={self.limits.max_choice_depth})",
                    limit=True,
                )
            )
            raise _LimitStop()
        self.choices.append(cp)

    # --- routing ----------------------------------------------------------

    def _candidates(self, ctx: _RouteCtx, goal: Goal) -> tuple[str, ...]:
        graph = self._graph_at(ctx.depth)
        if ctx.kind == "entry":
            wires = graph.entry_wires()
        else:
            assert ctx.node is not None
            wires = graph.out_wires(ctx.node)
        return tuple(w.id for w in wires if eval_goaltype(w.gt, goal))

    def _place(self, ctx: _RouteCtx, goal: Goal, wid: str) -> None:
        frame = self.frames[ctx.depth]
        if self.debug:
            wire = self.graphs[frame.graph].wire(wid)
            if not eval_goaltype(wire.gt, goal):
                raise RoutingViolation(
                    f"goal {goal.id} placed on wire {wid} with unsatisfied type {pretty_goaltype(wire.gt)!r}"
                )
        frame.occupancy[wid] = frame.occupancy.get(wid, ()) + (goal,)
        kind = "goal_entered" if ctx.kind == "entry" else "routed"
        self._emit(ev=kind, goal=goal.id, wire=wid, depth=ctx.depth)

    def _route(self, ctx: _RouteCtx, goals: Sequence[Goal], first_options: tuple[str, ...] | None = None) -> bool:
        goals = tuple(goals)
        for i, g in enumerate(goals):
            cands = first_options if (i == 0 and first_options is not None) else self._candidates(ctx, g)
            if not cands:
                self._emit(ev="routing_failed", node=ctx.node or "", goal=g.id, depth=ctx.depth)
                where = "input boundary" if ctx.kind == "entry" else f"node {ctx.node!r}"
                self._note_failure(ctx.depth, ctx.node or "", g, f"no wire out of {where} accepts the goal")
                return False
            if len(cands) > 1:
                self._push_cp(_RoutingCP(self._snapshot(), ctx, goals[i:], tuple(cands[1:])))
            self._place(ctx, g, cands[0])
        return True

    # --- failure handling ---------------------------------------------------

    def _note_failure(self, depth: int, node: str, goal: Goal, reason: str) -> None:
        report = FailureReport(self.frames[depth].graph, node, goal.id, goal_text(goal), reason)
        key = len(self.trace)
        if self._best_failure is None or key >= self._best_failure[0]:
            self._best_failure = (key, report)

    def _fail(self, report: FailureReport) -> None:
        self.status = "failed"
        self.failure = report
        self._emit(ev="finished", status="failed", results=[])

    def _resolve_failure(self) -> None:
        while True:
            if not self.choices:
                report = self._best_failure[1] if self._best_failure else FailureReport(
                    self.doc.main, "", "", "", "no applicable step"
                )
                self._fail(report)
                return
            if self.backtracks_used >= self.limits.max_choice_depth:
                self._fail(
                    FailureReport(
                        self.frames[-1].graph, "", "", "",
                        f"backtrack limit exceeded (max_choice_depth={self.limits.max_choice_depth})",
                        limit=True,
                    )
                )
                return
            if self._backtrack_once():
                return

    def _backtrack_once(self) -> bool:
        cp = self.choices.pop()
        self.backtracks_used += 1
        self._emit(ev="backtracked", kind=cp.kind)
        self._restore(cp.snap)
        if isinstance(cp, _TacticCP):
            (idx, alt), rest = cp.options[0], cp.options[1:]
            if rest:
                self.choices.append(_TacticCP(cp.snap, cp.depth, cp.node, cp.goal, rest))
            return self._apply_alt(cp.depth, cp.node, cp.goal, idx, alt)
        wid, rest = cp.options[0], cp.options[1:]
        if rest:
            self.choices.append(_RoutingCP(cp.snap, cp.ctx, cp.pending, rest))
        self._place(cp.ctx, cp.pending[0], wid)
        if len(cp.pending) > 1:
            return self._route(cp.ctx, cp.pending[1:])
        return True

    def _apply_alt(self, depth: int, node_id: str, goal: Goal, idx: int, alt: Alternative) -> bool:
        self._emit(
            ev="tactic_applied",
            node=node_id,
            goal=goal.id,
            alt=idx,
            subgoals=[s.id for s in alt.subgoals],
            depth=depth,
        )
        if not alt.subgoals:
            return True
        return self._route(_RouteCtx("node", depth, node_id), alt.subgoals)

    # --- the atomic step ------------------------------------------------------

    def _guard_active(self) -> None:
        if self.status not in ("running", "paused"):
            raise InvalidState(f"session is {self.status}")

    def _select(self) -> tuple[Goal, str]:
        frame = self.frames[-1]
        if self.selected_goal is not None:
            found = self._find(frame, self.selected_goal)
            if found is not None:
                return found
            self.selected_goal = None
        if self.policy == "manual":
            raise InvalidState("manual goal selection policy: no goal selected")
        for wid in sorted(frame.occupancy):
            goals = frame.occupancy[wid]
            if goals:
                return goals[0], wid
        raise InvalidState("no goal to step")

    def _spend_step(self) -> None:
        if self.steps_used >= self.limits.max_steps:
            self._fail(
                FailureReport(
                    self.frames[-1].graph, "", "", "",
                    f"step limit exceeded (max_steps={self.limits.max_steps})",
                    limit=True,
                )
            )
            raise _LimitStop()
        self.steps_used += 1

    def _step_core(self, ignore_breakpoints: bool) -> None:
        resumed = False
        if self.status == "paused":
            found = self._find(self.frames[-1], self.paused_goal or "")
            self.paused_goal = None
            self.status = "running"
            if found is None:
                goal, wid = self._select()
            else:
                goal, wid = found
                resumed = True
        else:
            goal, wid = self._select()
        depth = len(self.frames) - 1
        graph = self._graph_at(depth)
        wire = graph.wire(wid)
        dst = wire.dst

        if isinstance(dst, OutputEnd):
            self._spend_step()
            self._consume(depth, wid, goal)
            self._emit(ev="goal_exited", goal=goal.id, out=dst.index, depth=depth)
            if depth == 0:
                self.results.append(goal)
            else:
                frame = self.frames[depth]
                assert frame.return_node is not None
                if not self._route(_RouteCtx("node", depth - 1, frame.return_node), (goal,)):
                    self._resolve_failure()
            return

        node = graph.nodes[dst.node]
        if isinstance(node, BreakpointNode) and not ignore_breakpoints and not resumed:
            self._spend_step()
            self.status = "paused"
            self.paused_goal = goal.id
            self._emit(ev="breakpoint_hit", wire=wid, goal=goal.id, depth=depth)
            return
        if isinstance(node, (IdentityNode, BreakpointNode)):
            self._spend_step()
            self._consume(depth, wid, goal)
            if not self._route(_RouteCtx("node", depth, dst.node), (goal,)):
                self._resolve_failure()
            return
        if isinstance(node, AtomicNode):
            self._spend_step()
            self._consume(depth, wid, goal)
            alts = apply_tactic(self.registry, node.tactic, goal, self._ids)
            if not alts:
                self._emit(ev="tactic_failed", node=dst.node, goal=goal.id, depth=depth)
                self._note_failure(depth, dst.node, goal, f"tactic {node.tactic!r} produced no alternatives")
                self._resolve_failure()
                return
            indexed = tuple(enumerate(alts))
            if len(indexed) > 1:
                self._push_cp(_TacticCP(self._snapshot(), depth, dst.node, goal, indexed[1:]))
            idx, alt = indexed[0]
            if not self._apply_alt(depth, dst.node, goal, idx, alt):
                self._resolve_failure()
            return
        if isinstance(node, NestedNode):
            here = len(self.frames)
            self._enter_nested(goal, wid, dst.node, node.graph)
            self._run_down(here, ignore_breakpoints)
            return
        raise TypeError(f"unknown node kind {node!r}")

    def _enter_nested(self, goal: Goal, wid: str, node_id: str, inner: str) -> None:
        depth = len(self.frames) - 1
        self._spend_step()
        self._consume(depth, wid, goal)
        self.frames.append(_Frame(inner, {}, node_id))
        self._emit(ev="entered_nested", node=node_id, goal=goal.id, depth=depth)
        if not self._route(_RouteCtx("entry", depth + 1), (goal,)):
            self._resolve_failure()

    def _run_down(self, above: int, ignore_breakpoints: bool) -> None:
        """Step until the frame stack is no taller than `above` frames."""
        while self.status == "running" and len(self.frames) > above:
            self._step_core(ignore_breakpoints)
            self._normalize()

    def _normalize(self) -> None:
        if self.status != "running":
            return
        while self.frames and not self.frames[-1].occupancy:
            frame = self.frames.pop()
            if frame.return_node is None:
                self.status = "complete"
                self._emit(ev="finished", status="complete", results=[g.id for g in self.results])
                return
            self._emit(ev="exited_nested", node=frame.return_node, depth=len(self.frames) - 1)

    def _debug_check(self) -> None:
        if not self.debug:
            return
        for depth, frame in enumerate(self.frames):
            graph = self.graphs[frame.graph]
            for wid, goals in frame.occupancy.items():
                wire = graph.wire(wid)
                for g in goals:
                    if not eval_goaltype(wire.gt, g):
                        raise RoutingViolation(
                            f"goal {g.id} on wire {wid} violates type {pretty_goaltype(wire.gt)!r}"
                        )

    # --- public operations ------------------------------------------------------

    def step(self, ignore_breakpoints: bool = False) -> str:
        """One atomic step; at a nested node this steps over the whole graph."""
        self._guard_active()
        try:
            self._step_core(ignore_breakpoints)
        except _LimitStop:
            pass
        self._normalize()
        self._debug_check()
        return self.status

    def step_into(self) -> str:
        """Push a frame for the nested graph the selected goal is about to enter."""
        self._guard_active()
        if self.status == "paused":
            raise InvalidState("session is paused at a breakpoint")
        goal, wid = self._select()
        graph = self._graph_at(len(self.frames) - 1)
        wire = graph.wire(wid)
        if not (isinstance(wire.dst, NodeEnd) and isinstance(graph.nodes[wire.dst.node], NestedNode)):
            raise NotAtNestedNode(f"goal {goal.id} is not at a nested node")
        node = graph.nodes[wire.dst.node]
        assert isinstance(node, NestedNode)
        try:
            self._enter_nested(goal, wid, wire.dst.node, node.graph)
        except _LimitStop:
            pass
        self._normalize()
        self._debug_check()
        return self.status

    def step_over(self, ignore_breakpoints: bool = False) -> str:
        """step_into followed by running the nested frame to completion."""
        before = len(self.frames)
        self.step_into()
        try:
            self._run_down(before, ignore_breakpoints)
        except _LimitStop:
            pass
        self._normalize()
        self._debug_check()
        return self.status

    def finish_node(self, ignore_breakpoints: bool = False) -> str:
        """Run the innermost nested frame to completion and return to the parent."""
        self._guard_active()
        if len(self.frames) < 2:
            raise AtTopLevel("not inside a nested frame")
        try:
            target = len(self.frames) - 1
            if self.status == "paused":
                self._step_core(ignore_breakpoints)
                self._normalize()
            self._run_down(target, ignore_breakpoints)
        except _LimitStop:
            pass
        self._normalize()
        self._debug_check()
        return self.status

    def finish(self, ignore_breakpoints: bool = False) -> str:
        """Run to Complete/Failed, stopping at breakpoints unless told not to."""
        self._guard_active()
        try:
            if self.status == "paused":
                self._step_core(ignore_breakpoints)
                self._normalize()
            while self.status == "running":
                self._step_core(ignore_breakpoints)
                self._normalize()
        except _LimitStop:
            pass
        self._normalize()
        self._debug_check()
        return self.status

    def run_to_breakpoint(self) -> str:
        """Run until any goal lands at a breakpoint node, or to the end."""
        return self.finish(ignore_breakpoints=False)

    def select_goal(self, gid: str) -> None:
        self._guard_active()
        if self._find(self.frames[-1], gid) is None:
            raise UnknownGoalId(f"goal {gid!r} is not in the current frame")
        self.selected_goal = gid

    def backtrack(self) -> bool:
        """Pop the newest choice point and take its next option.

        Returns False when there is nothing to backtrack to.  Allowed from
        terminal states so alternative outcomes can be explored."""
        if not self.choices:
            return False
        if self.backtracks_used >= self.limits.max_choice_depth:
            self._fail(
                FailureReport(
                    self.frames[-1].graph if self.frames else self.doc.main, "", "", "",
                    f"backtrack limit exceeded (max_choice_depth={self.limits.max_choice_depth})",
                    limit=True,
                )
            )
            return True
        try:
            if not self._backtrack_once():
                self._resolve_failure()
        except _LimitStop:
            pass
        self._normalize()
        self._debug_check()
        return True

    def toggle_breakpoint(self, wid: str) -> None:
        """Splice a breakpoint node into the wire, or remove an adjacent one.

        Toggling twice restores the graph value.  Goals on the wire stay
        where they are; removing a breakpoint merges the goals of the two
        half-wires, the downstream ones ahead.
        """
        self._guard_active()
        frame = self.frames[-1]
        graph = self.graphs[frame.graph]
        try:
            wire = graph.wire(wid)
        except KeyError:
            raise UnknownWireId(f"wire {wid!r} is not in the current graph") from None
        nodes = dict(graph.nodes)
        wires = {w.id: w for w in graph.wires}
        occ = frame.occupancy

        if isinstance(wire.dst, NodeEnd) and isinstance(nodes.get(wire.dst.node), BreakpointNode):
            bid = wire.dst.node
            outs = graph.out_wires(bid)
            if len(outs) == 1 and len(graph.in_wires(bid)) == 1:
                down = outs[0]
                del nodes[bid]
                del wires[down.id]
                wires[wid] = Wire(wid, wire.src, down.dst, wire.gt)
                moved = occ.pop(down.id, ()) + occ.pop(wid, ())
                if moved:
                    occ[wid] = moved
                if self.paused_goal is not None and any(g.id == self.paused_goal for g in moved):
                    self.paused_goal = None
                    self.status = "running"
                self._install_graph(frame.graph, graph, nodes, wires)
                return
        if isinstance(wire.src, NodeEnd) and isinstance(nodes.get(wire.src.node), BreakpointNode):
            bid = wire.src.node
            ins = graph.in_wires(bid)
            if len(ins) == 1 and len(graph.out_wires(bid)) == 1:
                up = ins[0]
                del nodes[bid]
                del wires[wid]
                wires[up.id] = Wire(up.id, up.src, wire.dst, up.gt)
                moved = occ.pop(wid, ()) + occ.pop(up.id, ())
                if moved:
                    occ[up.id] = moved
                if self.paused_goal is not None and any(g.id == self.paused_goal for g in moved):
                    self.paused_goal = None
                    self.status = "running"
                self._install_graph(frame.graph, graph, nodes, wires)
                return

        bid = f"bp_{wid}"
        while bid in nodes:
            bid += "_"
        wid2 = f"{wid}_bp"
        while wid2 in wires:
            wid2 += "_"
        nodes[bid] = BreakpointNode()
        wires[wid] = Wire(wid, wire.src, NodeEnd(bid), wire.gt)
        wires[wid2] = Wire(wid2, NodeEnd(bid), wire.dst, wire.gt)
        self._install_graph(frame.graph, graph, nodes, wires)

    def _install_graph(self, name: str, old: Graph, nodes: dict, wires: dict) -> None:
        self.graphs[name] = Graph(
            old.n_inputs, old.n_outputs, nodes, tuple(sorted(wires.values(), key=lambda w: w.id))
        )

    # --- reporting ---------------------------------------------------------------

    def result_goals(self) -> list[Goal]:
        return list(self.results)

    def state_snapshot(self) -> dict:
        """JSON-ready view of the whole session state."""
        frames = []
        for depth, frame in enumerate(self.frames):
            graph = self.graphs[frame.graph]
            frames.append(
                {
                    "graph": frame.graph,
                    "return_node": frame.return_node,
                    "wires": [
                        {
                            "id": wid,
                            "goals": [{"id": g.id, "text": goal_text(g)} for g in frame.occupancy[wid]],
                        }
                        for wid in sorted(frame.occupancy)
                    ],
                    "graph_def": _graph_json(graph),
                }
            )
        selected = self.selected_goal
        if selected is not None and (not self.frames or self._find(self.frames[-1], selected) is None):
            selected = None
        failure = None
        if self.failure is not None:
            failure = {
                "graph": self.failure.graph,
                "node": self.failure.node,
                "goal_id": self.failure.goal_id,
                "goal": self.failure.goal,
                "reason": self.failure.reason,
                "limit": self.failure.limit,
            }
        return {
            "status": self.status,
            "frames": frames,
            "selected_goal": selected,
            "paused_goal": self.paused_goal,
            "choice_depth": len(self.choices),
            "results": [{"id": g.id, "text": goal_text(g)} for g in self.results],
            "failure": failure,
            "steps_used": self.steps_used,
            "backtracks_used": self.backtracks_used,
        }

    def export_trace(self) -> bytes:
        obj = {"version": 1, "doc_hash": self.doc_hash, "events": self.trace}
        return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _graph_json(g: Graph) -> dict:
    from .model import document_to_json

    doc = Document(1, "g", {"g": g})
    return document_to_json(doc)["graphs"]["g"]


# --- trace replay ------------------------------------------------------------------

_STEP_EVENTS = {
    "tactic_applied",
    "tactic_failed",
    "routed",
    "routing_failed",
    "breakpoint_hit",
    "goal_exited",
}


def replay_trace(
    doc: Document,
    goals: Sequence[Goal],
    data: bytes | str,
    registry: TacticRegistry | None = None,
    limits: EvalLimits | None = None,
) -> EvalSession:
    """Re-drive a recorded evaluation, verifying every regenerated event.

    The document and the initial goals must be the ones the trace was
    recorded with (goals up to alpha-equality).  A divergence raises
    TraceMismatch with the index of the first event that differs.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as e:
        raise TraceMismatch(0, f"trace is not valid JSON: {e}") from None
    if not isinstance(obj, dict) or obj.get("version") != 1 or not isinstance(obj.get("events"), list):
        raise TraceMismatch(0, "trace must be a version-1 object with an events array")
    events: list[dict] = obj["events"]

    session = EvalSession(doc, goals, registry, limits=limits)
    pos = 0

    def check_prefix() -> None:
        nonlocal pos
        for i in range(pos, len(session.trace)):
            if i >= len(events):
                raise TraceMismatch(len(events), f"replay produced extra event {session.trace[i]}")
            if events[i] != session.trace[i]:
                raise TraceMismatch(i, f"expected {events[i]}, replay produced {session.trace[i]}")
        pos = len(session.trace)

    check_prefix()
    while pos < len(events):
        e = events[pos]
        kind = e.get("ev")
        before = len(session.trace)
        try:
            if kind == "backtracked":
                if not session.backtrack():
                    raise TraceMismatch(pos, "nothing to backtrack")
            elif kind == "entered_nested":
                _reselect(session, e, pos)
                session.step_into()
            elif kind in _STEP_EVENTS:
                if session.status == "paused":
                    session.step()
                else:
                    _reselect(session, e, pos)
                    session.step(ignore_breakpoints=_needs_bp_skip(session, kind))
            else:
                raise TraceMismatch(pos, f"event {kind!r} cannot begin a step")
        except EngineError as err:
            if isinstance(err, TraceMismatch):
                raise
            raise TraceMismatch(pos, f"replay operation failed: {err}") from None
        if len(session.trace) == before:
            raise TraceMismatch(pos, "replay made no progress")
        check_prefix()
    return session


def _reselect(session: EvalSession, e: dict, pos: int) -> None:
    gid = e.get("goal")
    if not isinstance(gid, str):
        raise TraceMismatch(pos, f"event lacks a goal id: {e}")
    try:
        session.select_goal(gid)
    except EngineError:
        raise TraceMismatch(pos, f"goal {gid!r} is not available") from None


def _needs_bp_skip(session: EvalSession, kind: str) -> bool:
    """A recorded plain route at a breakpoint means the run ignored breakpoints."""
    if kind != "routed":
        return False
    try:
        goal, wid = session._select()
    except EngineError:
        return False
    graph = session._graph_at(len(session.frames) - 1)
    wire = graph.wire(wid)
    return isinstance(wire.dst, NodeEnd) and isinstance(
        graph.nodes.get(wire.dst.node), BreakpointNode
    )


# --- outcome oracles -----------------------------------------------------------------


def enumerate_outcomes(
    doc: Document,
    goals: Sequence[Goal],
    registry: TacticRegistry | None = None,
    limits: EvalLimits | None = None,
    max_outcomes: int | None = None,
) -> tuple[set[tuple[str, ...]], bool]:
    """Every Complete result multiset the choice tree can reach.

    Result goals are keyed by alpha-equivalence class; a result is a sorted
    tuple of those keys.  Exploration walks the engine's own choice stack:
    run to a leaf, record it if Complete, backtrack, repeat.  Returns the
    outcome set and whether max_outcomes truncated it.  Hitting the session
    limits raises EvalLimitError.
    """
    if limits is None:
        limits = EvalLimits(max_steps=1_000_000, max_choice_depth=1_000_000)
    session = EvalSession(doc, goals, registry, limits=limits)
    outcomes: set[tuple[str, ...]] = set()
    while True:
        if session.status in ("running", "paused"):
            session.finish(ignore_breakpoints=True)
        if session.status == "failed" and session.failure is not None and session.failure.limit:
            raise EvalLimitError(session.failure.reason)
        if session.status == "complete":
            outcomes.add(tuple(sorted(goal_key(g) for g in session.results)))
            if max_outcomes is not None and len(outcomes) >= max_outcomes:
                return outcomes, bool(session.choices)
        if not session.backtrack():
            return outcomes, False


def brute_force_outcomes(
    goals: Sequence[Goal], registry: TacticRegistry | None = None, depth: int = 8
) -> set[tuple[str, ...]]:
    """All goal multisets reachable by at most `depth` tactic applications.

    Ignores graphs entirely: at every step any registered tactic may hit
    any goal, and every alternative counts.  States are keyed by sorted
    alpha-class keys, so permutations and renamings collapse.
    """
    reg = registry if registry is not None else builtin_registry()

    def key(state: tuple[Goal, ...]) -> tuple[str, ...]:
        return tuple(sorted(goal_key(g) for g in state))

    start = tuple(goals)
    seen: set[tuple[str, ...]] = {key(start)}
    frontier: list[tuple[Goal, ...]] = [start]
    for _ in range(depth):
        if not frontier:
            break
        next_frontier: list[tuple[Goal, ...]] = []
        for state in frontier:
            for i, g in enumerate(state):
                for name in reg.names():
                    for alt in apply_tactic(reg, name, g, GoalIds()):
                        new_state = state[:i] + alt.subgoals + state[i + 1 :]
                        k = key(new_state)
                        if k not in seen:
                            seen.add(k)
                            next_frontier.append(new_state)
        frontier = next_frontier
    return seen
