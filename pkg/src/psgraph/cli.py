"""Command-line front end: batch evaluation, an interactive stepper, linting,
and the session server.

Exit codes: 0 success/clean, 1 evaluation failed or paused, 2 usage or IO
error, 3 lint errors.
"""
from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .engine import (
    AtTopLevel,
    EvalLimitError,
    EvalLimits,
    EvalSession,
    InvalidState,
    LintFailed,
    NoMatchingInputWire,
    NotAtNestedNode,
    UnknownGoalId,
    UnknownWireId,
    enumerate_outcomes,
)
from .logic import Goal, ParseError, goal_text, parse_goal
from .tactics import builtin_registry
from .model import (
    BreakpointNode,
    Document,
    DocumentParseError,
    InvariantError,
    NodeEnd,
    SchemaError,
    lint,
    load_document,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_LINT = 3

ALL_CAP = 1000


def _fail(code: int, message: str) -> "click.exceptions.Exit":
    click.echo(message, err=True)
    return click.exceptions.Exit(code)


def _load(path: str) -> Document:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise _fail(EXIT_USAGE, f"cannot read {path}: {e.strerror or e}")
    try:
        return load_document(text)
    except (DocumentParseError, SchemaError) as e:
        raise _fail(EXIT_USAGE, f"{path}: {e}")
    except InvariantError as e:
        for d in e.diagnostics:
            click.echo(str(d), err=True)
        raise click.exceptions.Exit(EXIT_LINT)


def _parse_goals(texts: tuple[str, ...]) -> list[Goal]:
    if not texts:
        raise _fail(EXIT_USAGE, "at least one --goal is required")
    goals = []
    for t in texts:
        try:
            goals.append(parse_goal(t))
        except ParseError as e:
            raise _fail(EXIT_USAGE, f"goal {t!r}: {e}")
    return goals


def _limits(max_steps: int | None, max_choices: int | None) -> EvalLimits:
    defaults = EvalLimits()
    if max_steps is None:
        env = os.environ.get("PSG_MAX_STEPS")
        if env is not None:
            try:
                max_steps = int(env)
            except ValueError:
                raise _fail(EXIT_USAGE, f"PSG_MAX_STEPS must be an integer, got {env!r}")
    return EvalLimits(
        max_steps=defaults.max_steps if max_steps is None else max_steps,
        max_choice_depth=defaults.max_choice_depth if max_choices is None else max_choices,
    )


def _print_results(results: list[Goal]) -> None:
    if not results:
        click.echo("QED")
    elif len(results) == 1:
        click.echo(f"1 goal: {goal_text(results[0])}")
    else:
        click.echo(f"{len(results)} goals:")
        for r in results:
            click.echo(f"  {goal_text(r)}")


@click.group()
def main() -> None:
    """Evaluate, step, lint, and serve hierarchical proof-strategy graphs."""


@main.command("eval")
@click.argument("graph", type=str)
@click.option("--goal", "goal_texts", multiple=True, help="Initial goal, repeatable.")
@click.option("--all", "all_outcomes", is_flag=True, help="Enumerate every reachable outcome.")
@click.option("--ignore-breakpoints", is_flag=True, help="Run through breakpoints.")
@click.option("--max-steps", type=int, default=None, help="Step budget for the run.")
@click.option("--max-choices", type=int, default=None, help="Choice stack and backtrack budget.")
@click.option("--trace", "trace_path", type=str, default=None, help="Write the run's trace here.")
@click.option("--json", "as_json", is_flag=True, help="Emit a machine-readable report.")
def cmd_eval(graph, goal_texts, all_outcomes, ignore_breakpoints, max_steps, max_choices, trace_path, as_json):
    """Evaluate GRAPH on the given goals to completion."""
    doc = _load(graph)
    goals = _parse_goals(goal_texts)
    limits = _limits(max_steps, max_choices)

    if all_outcomes:
        try:
            outcomes, truncated = enumerate_outcomes(doc, goals, limits=limits, max_outcomes=ALL_CAP)
        except LintFailed as e:
            for d in e.diagnostics:
                click.echo(str(d), err=True)
            raise click.exceptions.Exit(EXIT_LINT)
        except (NoMatchingInputWire, EvalLimitError) as e:
            raise _fail(EXIT_FAILED, f"evaluation failed: {e}")
        ordered = sorted(outcomes)
        if as_json:
            click.echo(json.dumps(
                {"status": "enumerated", "outcomes": [list(o) for o in ordered], "truncated": truncated},
                sort_keys=True,
            ))
        else:
            click.echo(f"{len(ordered)} outcome{'s' if len(ordered) != 1 else ''}:")
            for o in ordered:
                click.echo("  QED" if not o else "  " + "; ".join(o))
            if truncated:
                click.echo(f"truncated at {ALL_CAP} outcomes")
        raise click.exceptions.Exit(EXIT_OK if ordered else EXIT_FAILED)

    try:
        session = EvalSession(doc, goals, limits=limits)
    except LintFailed as e:
        for d in e.diagnostics:
            click.echo(str(d), err=True)
        raise click.exceptions.Exit(EXIT_LINT)
    except NoMatchingInputWire as e:
        raise _fail(EXIT_FAILED, f"evaluation failed: {e}")
    status = session.finish(ignore_breakpoints=ignore_breakpoints)
    if trace_path:
        Path(trace_path).write_bytes(session.export_trace())

    failure = session.failure
    if as_json:
        report = {
            "status": status,
            "results": [goal_text(r) for r in session.result_goals()],
            "steps_used": session.steps_used,
            "backtracks_used": session.backtracks_used,
            "failure": None if failure is None else {
                "graph": failure.graph,
                "node": failure.node,
                "goal": failure.goal,
                "reason": failure.reason,
                "limit": failure.limit,
            },
        }
        click.echo(json.dumps(report, sort_keys=True))
    elif status == "complete":
        _print_results(session.result_goals())
    elif status == "paused":
        wid = _paused_wire(session)
        click.echo(f"paused at breakpoint on {wid}")
    else:
        assert failure is not None
        click.echo(
            f"failed at node {failure.node!r} in graph {failure.graph!r}"
            f" on goal {failure.goal!r}: {failure.reason}",
            err=True,
        )
    raise click.exceptions.Exit(EXIT_OK if status == "complete" else EXIT_FAILED)


def _paused_wire(session: EvalSession) -> str:
    snap = session.state_snapshot()
    paused = snap["paused_goal"]
    for wire in snap["frames"][-1]["wires"]:
        if any(g["id"] == paused for g in wire["goals"]):
            return wire["id"]
    return "?"


@main.command("lint")
@click.argument("graph", type=str)
@click.option("--json", "as_json", is_flag=True, help="Emit diagnostics as JSON.")
def cmd_lint(graph, as_json):
    """Check GRAPH and print diagnostics."""
    p = Path(graph)
    try:
        text = p.read_text()
    except OSError as e:
        raise _fail(EXIT_USAGE, f"cannot read {graph}: {e.strerror or e}")
    try:
        doc = load_document(text)
        diags = lint(doc, builtin_registry())
    except (DocumentParseError, SchemaError) as e:
        raise _fail(EXIT_USAGE, f"{graph}: {e}")
    except InvariantError as e:
        diags = e.diagnostics
    if as_json:
        click.echo(json.dumps(
            [{"code": d.code, "graph": d.graph, "loc": d.loc, "message": d.message} for d in diags],
            sort_keys=True,
        ))
    elif not diags:
        click.echo("no issues")
    else:
        for d in diags:
            click.echo(str(d))
    raise click.exceptions.Exit(EXIT_LINT if any(d.is_error for d in diags) else EXIT_OK)


REPL_USAGE = """commands:
  goals                list goals in the current frame
  select <id>          pick the goal the next step acts on
  step                 one atomic step (step over nested nodes)
  into                 descend into the nested node ahead
  over                 step over the node ahead
  finish-node          run the current nested graph to its boundary
  finish               run to completion, pausing at breakpoints
  continue             alias for finish
  break <wire>         toggle a breakpoint on a wire
  back                 undo to the most recent choice point
  trace <path>         write the trace recorded so far
  quit                 leave the stepper"""


@main.command("step")
@click.argument("graph", type=str)
@click.option("--goal", "goal_texts", multiple=True, help="Initial goal, repeatable.")
def cmd_step(graph, goal_texts):
    """Step through GRAPH interactively."""
    doc = _load(graph)
    goals = _parse_goals(goal_texts)
    try:
        session = EvalSession(doc, goals)
    except LintFailed as e:
        for d in e.diagnostics:
            click.echo(str(d), err=True)
        raise click.exceptions.Exit(EXIT_LINT)
    except NoMatchingInputWire as e:
        raise _fail(EXIT_FAILED, f"evaluation failed: {e}")
    _summary(session)
    while True:
        try:
            line = click.prompt("(psg)", prompt_suffix=" ", default="", show_default=False)
        except (click.exceptions.Abort, EOFError):
            break
        words = line.split()
        if not words:
            continue
        cmd, args = words[0], words[1:]
        if cmd == "quit":
            break
        if not _dispatch(session, cmd, args):
            continue
        _summary(session)
    raise click.exceptions.Exit(EXIT_FAILED if session.status == "failed" else EXIT_OK)


def _dispatch(session: EvalSession, cmd: str, args: list[str]) -> bool:
    """Run one REPL command; True when the state summary should follow."""
    try:
        if cmd == "goals":
            snap = session.state_snapshot()
            frame = snap["frames"][-1] if snap["frames"] else None
            if frame is None or not frame["wires"]:
                click.echo("no goals")
            else:
                for wire in frame["wires"]:
                    for g in wire["goals"]:
                        mark = "*" if g["id"] == snap["selected_goal"] else " "
                        click.echo(f"{mark} {g['id']} on {wire['id']}: {g['text']}")
            return False
        if cmd == "select":
            if len(args) != 1:
                click.echo("usage: select <goal-id>")
                return False
            session.select_goal(args[0])
            return True
        if cmd == "step":
            session.step()
            return True
        if cmd == "into":
            session.step_into()
            return True
        if cmd == "over":
            session.step_over()
            return True
        if cmd == "finish-node":
            session.finish_node()
            return True
        if cmd in ("finish", "continue"):
            session.run_to_breakpoint()
            return True
        if cmd == "break":
            if len(args) != 1:
                click.echo("usage: break <wire-id>")
                return False
            session.toggle_breakpoint(args[0])
            click.echo(_break_message(session, args[0]))
            return True
        if cmd == "back":
            if not session.backtrack():
                click.echo("nothing to backtrack")
                return False
            return True
        if cmd == "trace":
            if len(args) != 1:
                click.echo("usage: trace <path>")
                return False
            Path(args[0]).write_bytes(session.export_trace())
            click.echo(f"trace written to {args[0]}")
            return False
        click.echo(f"unknown command {cmd!r}")
        click.echo(REPL_USAGE)
        return False
    except (InvalidState, AtTopLevel, NotAtNestedNode, UnknownGoalId, UnknownWireId) as e:
        click.echo(f"error: {e}")
        return False


def _break_message(session: EvalSession, wid: str) -> str:
    graph = session.graphs[session.frames[-1].graph]
    try:
        wire = graph.wire(wid)
    except KeyError:
        return f"breakpoint removed from {wid}"
    dst = wire.dst
    if isinstance(dst, NodeEnd) and isinstance(graph.nodes.get(dst.node), BreakpointNode):
        return f"breakpoint set on {wid}"
    return f"breakpoint removed from {wid}"


def _summary(session: EvalSession) -> None:
    snap = session.state_snapshot()
    status = snap["status"]
    if status == "complete":
        results = session.result_goals()
        click.echo("== complete ==")
        _print_results(results)
        return
    if status == "failed":
        f = snap["failure"]
        click.echo(f"== failed at node {f['node']!r} on goal {f['goal']!r}: {f['reason']} ==")
        return
    frame = snap["frames"][-1]
    depth = len(snap["frames"])
    click.echo(f"[frame {depth}] graph {frame['graph']!r} | {status} | choices {snap['choice_depth']}")
    if status == "paused":
        click.echo(f"paused at breakpoint on {_paused_wire(session)}")
    for wire in frame["wires"]:
        for g in wire["goals"]:
            mark = "*" if g["id"] == snap["selected_goal"] else " "
            click.echo(f" {mark} {wire['id']}: {g['id']} {g['text']}")


@main.command("serve")
@click.option("--port", type=int, default=8471, help="Port to bind.")
@click.option("--root", type=str, default=".", help="Directory of .psg.json documents.")
@click.option("--cors-origin", type=str, default=None, help="Allow this origin on the API.")
def cmd_serve(port, root, cors_origin):
    """Serve the session API over HTTP until interrupted."""
    if not Path(root).is_dir():
        raise _fail(EXIT_USAGE, f"root {root!r} is not a directory")
    import uvicorn

    from .server import create_app

    app = create_app(root, cors_origin)
    try:
        uvicorn.run(app, host="127.0.0.1", port=port, log_level="info")
    except (OSError, SystemExit) as e:
        if isinstance(e, SystemExit) and not e.code:
            return
        raise _fail(EXIT_USAGE, f"cannot serve on port {port}: {e}")


if __name__ == "__main__":
    main()
