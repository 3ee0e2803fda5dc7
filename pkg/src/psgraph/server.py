"""HTTP front end: graph store plus live evaluation sessions over JSON/SSE."""
from __future__ import annotations

import json
import os
import re
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse

from .engine import (
    AtTopLevel,
    EvalLimits,
    EvalSession,
    InvalidState,
    LintFailed,
    NoMatchingInputWire,
    NotAtNestedNode,
    UnknownGoalId,
    UnknownWireId,
)
from .goaltypes import GoalTypeError
from .tactics import builtin_registry
from .logic import ParseError, parse_goal
from .model import (
    DocumentParseError,
    InvariantError,
    SchemaError,
    lint,
    load_document,
    save_document,
)

SESSION_IDLE_SECONDS = 30 * 60
STREAM_POLL_SECONDS = 0.025
_NAME_RE = re.compile(r"^[A-Za-z0-9_-]+$")

COMMANDS = (
    "step",
    "step_into",
    "step_over",
    "finish_node",
    "finish",
    "run_to_breakpoint",
    "select_goal",
    "toggle_breakpoint",
    "backtrack",
)


@dataclass
class _Entry:
    session: EvalSession
    lock: threading.Lock = field(default_factory=threading.Lock)
    events: list[dict] = field(default_factory=list)
    touched: float = field(default_factory=time.monotonic)


def _diag_json(diags) -> list[dict]:
    return [
        {"code": d.code, "graph": d.graph, "loc": d.loc, "message": d.message}
        for d in diags
    ]


def create_app(root: str | os.PathLike[str] = ".", cors_origin: str | None = None) -> FastAPI:
    """Build the API around a directory of `.psg.json` documents."""
    store = Path(root)
    app = FastAPI(title="psgraph session server", docs_url=None, redoc_url=None)
    sessions: dict[str, _Entry] = {}
    registry_lock = threading.Lock()

    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["*"],
            allow_headers=["*"],
        )

    def bad(status: int, detail: Any) -> JSONResponse:
        return JSONResponse({"detail": detail}, status_code=status)

    def fetch(sid: str) -> _Entry | JSONResponse:
        with registry_lock:
            entry = sessions.get(sid)
            if entry is None:
                return bad(404, f"no session {sid!r}")
            if time.monotonic() - entry.touched > SESSION_IDLE_SECONDS:
                del sessions[sid]
                return bad(410, f"session {sid!r} expired")
            entry.touched = time.monotonic()
            return entry

    def snapshot(entry: _Entry) -> dict:
        snap = entry.session.state_snapshot()
        snap["seq"] = len(entry.events)
        return snap

    def record(entry: _Entry, kind: str) -> None:
        entry.events.append(
            {"seq": len(entry.events) + 1, "kind": kind, "state": entry.session.state_snapshot()}
        )

    # --- health ---------------------------------------------------------------

    @app.get("/health")
    def health() -> dict:
        return {"ok": True}

    # --- graph store ------------------------------------------------------------

    @app.get("/graphs")
    def list_graphs() -> dict:
        names = sorted(p.name[: -len(".psg.json")] for p in store.glob("*.psg.json"))
        return {"graphs": names}

    @app.get("/graphs/{name}")
    def get_graph(name: str) -> Response:
        if not _NAME_RE.match(name):
            return bad(422, f"graph name {name!r} is not path-safe")
        path = store / f"{name}.psg.json"
        if not path.is_file():
            return bad(404, f"no graph {name!r}")
        return Response(path.read_bytes(), media_type="application/json")

    @app.put("/graphs/{name}")
    async def put_graph(name: str, request: Request) -> Response:
        if not _NAME_RE.match(name):
            return bad(422, f"graph name {name!r} is not path-safe")
        body = await request.body()
        try:
            doc = load_document(body.decode("utf-8", errors="replace"))
        except (DocumentParseError, SchemaError) as e:
            return bad(422, str(e))
        except InvariantError as e:
            return JSONResponse(
                {"detail": "document has structural errors", "diagnostics": _diag_json(e.diagnostics)},
                status_code=422,
            )
        errors = [d for d in lint(doc, builtin_registry()) if d.is_error]
        if errors:
            return JSONResponse(
                {"detail": "document has lint errors", "diagnostics": _diag_json(errors)},
                status_code=422,
            )
        data = save_document(doc)
        tmp = store / f".{name}.psg.json.tmp-{secrets.token_hex(8)}"
        tmp.write_bytes(data)
        os.replace(tmp, store / f"{name}.psg.json")
        return Response(status_code=204)

    # --- sessions ---------------------------------------------------------------

    @app.post("/sessions")
    def create_session(body: dict) -> Response:
        graph = body.get("graph")
        if isinstance(graph, str):
            if not _NAME_RE.match(graph):
                return bad(404, f"no graph {graph!r}")
            path = store / f"{graph}.psg.json"
            if not path.is_file():
                return bad(404, f"no graph {graph!r}")
            text = path.read_text()
        elif isinstance(graph, dict):
            text = json.dumps(graph)
        else:
            return bad(400, 'body needs "graph": name or inline document')
        try:
            doc = load_document(text)
        except (DocumentParseError, SchemaError) as e:
            return bad(400, str(e))
        except InvariantError as e:
            return JSONResponse(
                {"detail": "document has structural errors", "diagnostics": _diag_json(e.diagnostics)},
                status_code=400,
            )

        raw_goals = body.get("goals")
        if not isinstance(raw_goals, list) or not raw_goals or not all(isinstance(t, str) for t in raw_goals):
            return bad(400, 'body needs "goals": a non-empty list of goal texts')
        goals = []
        for i, text_ in enumerate(raw_goals):
            try:
                goals.append(parse_goal(text_))
            except ParseError as e:
                return bad(400, f"goals[{i}]: {e}")

        limits = None
        if "limits" in body and body["limits"] is not None:
            lim = body["limits"]
            if not isinstance(lim, dict) or not set(lim) <= {"max_steps", "max_choice_depth"}:
                return bad(400, 'limits allows "max_steps" and "max_choice_depth"')
            limits = EvalLimits(
                max_steps=lim.get("max_steps", EvalLimits().max_steps),
                max_choice_depth=lim.get("max_choice_depth", EvalLimits().max_choice_depth),
            )
        policy = body.get("policy", "fifo")
        try:
            session = EvalSession(doc, goals, policy=policy, limits=limits)
        except LintFailed as e:
            return JSONResponse(
                {"detail": "document has lint errors", "diagnostics": _diag_json(e.diagnostics)},
                status_code=400,
            )
        except (NoMatchingInputWire, GoalTypeError, ValueError) as e:
            return bad(400, str(e))

        sid = secrets.token_urlsafe(16)
        entry = _Entry(session)
        with registry_lock:
            sessions[sid] = entry
        return JSONResponse({"session_id": sid, "state": snapshot(entry)}, status_code=201)

    @app.get("/sessions/{sid}/state")
    def get_state(sid: str) -> Response:
        entry = fetch(sid)
        if isinstance(entry, JSONResponse):
            return entry
        with entry.lock:
            return JSONResponse(snapshot(entry))

    @app.get("/sessions/{sid}/trace")
    def get_trace(sid: str) -> Response:
        entry = fetch(sid)
        if isinstance(entry, JSONResponse):
            return entry
        with entry.lock:
            return Response(entry.session.export_trace(), media_type="application/json")

    @app.post("/sessions/{sid}/command")
    def post_command(sid: str, body: dict) -> Response:
        entry = fetch(sid)
        if isinstance(entry, JSONResponse):
            return entry
        cmd = body.get("cmd")
        if cmd not in COMMANDS:
            return bad(422, f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}")
        args = body.get("args") or {}
        if not isinstance(args, dict):
            return bad(422, '"args" must be an object')
        with entry.lock:
            s = entry.session
            was_paused = s.status == "paused"
            try:
                if cmd == "select_goal":
                    if "goal" not in args:
                        return bad(422, 'select_goal needs args {"goal": id}')
                    s.select_goal(args["goal"])
                elif cmd == "toggle_breakpoint":
                    if "wire" not in args:
                        return bad(422, 'toggle_breakpoint needs args {"wire": id}')
                    s.toggle_breakpoint(args["wire"])
                elif cmd == "backtrack":
                    s.backtrack()
                elif cmd == "step_into":
                    s.step_into()
                else:
                    ignore = bool(args.get("ignore_breakpoints", False))
                    getattr(s, cmd)(ignore_breakpoints=ignore)
            except (InvalidState, AtTopLevel, NotAtNestedNode) as e:
                return JSONResponse(
                    {"detail": str(e), "precondition": type(e).__name__}, status_code=409
                )
            except (UnknownGoalId, UnknownWireId) as e:
                return bad(422, str(e))
            record(entry, cmd)
            if s.status == "paused" and not was_paused:
                record(entry, "paused")
            return JSONResponse(snapshot(entry))

    @app.get("/sessions/{sid}/events")
    def stream_events(sid: str, request: Request, follow: bool = True) -> Response:
        entry = fetch(sid)
        if isinstance(entry, JSONResponse):
            return entry
        last = request.headers.get("last-event-id")
        try:
            start = int(last) if last is not None else 0
        except ValueError:
            start = 0

        def sse() -> Iterator[bytes]:
            pos = start
            idle = 0.0
            while True:
                with entry.lock:
                    pending = entry.events[pos:]
                for ev in pending:
                    pos = ev["seq"]
                    payload = json.dumps(ev, sort_keys=True)
                    yield f"id: {ev['seq']}\ndata: {payload}\n\n".encode()
                if not follow:
                    return
                if pending:
                    idle = 0.0
                time.sleep(STREAM_POLL_SECONDS)
                idle += STREAM_POLL_SECONDS
                if idle > SESSION_IDLE_SECONDS:
                    return

        return StreamingResponse(sse(), media_type="text/event-stream")

    return app
