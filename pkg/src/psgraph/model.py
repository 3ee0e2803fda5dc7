"""Strategy graph documents: nodes, goal-typed wires, load/save, lint.

A document is a named collection of graphs plus the name of the graph
evaluation starts in.  Graphs are boxes with numbered input and output
boundaries; wires run from a node or an input boundary to a node or an
output boundary and carry a goal type.  Wire cycles are allowed (loops
are how strategies iterate); the nests-inside relation between graphs
must be acyclic.

The on-disk form is JSON.  Saving is canonical: object keys sorted,
wires sorted by id, two-space indent, trailing newline, so equal
documents serialize to identical bytes.  An optional top-level "ui"
field is carried through untouched for editors to keep geometry in; the
evaluator never looks at it.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Union

from .goaltypes import (
    AnyGoal,
    ConclIs,
    GoalType,
    GoalTypeError,
    Lit,
    NumHyps,
    parse_goaltype,
    pretty_goaltype,
)
from .tactics import TacticRegistry


@dataclass(frozen=True)
class AtomicNode:
    tactic: str


@dataclass(frozen=True)
class NestedNode:
    graph: str


@dataclass(frozen=True)
class IdentityNode:
    pass


@dataclass(frozen=True)
class BreakpointNode:
    pass


Node = Union[AtomicNode, NestedNode, IdentityNode, BreakpointNode]


@dataclass(frozen=True)
class NodeEnd:
    node: str


@dataclass(frozen=True)
class InputEnd:
    index: int


@dataclass(frozen=True)
class OutputEnd:
    index: int


Src = Union[NodeEnd, InputEnd]
Dst = Union[NodeEnd, OutputEnd]


@dataclass(frozen=True)
class Wire:
    id: str
    src: Src
    dst: Dst
    gt: GoalType


@dataclass(frozen=True)
class Graph:
    n_inputs: int
    n_outputs: int
    nodes: dict[str, Node]
    wires: tuple[Wire, ...]  # kept sorted by wire id

    def wire(self, wid: str) -> Wire:
        for w in self.wires:
            if w.id == wid:
                return w
        raise KeyError(wid)

    def out_wires(self, node_id: str) -> tuple[Wire, ...]:
        return tuple(w for w in self.wires if isinstance(w.src, NodeEnd) and w.src.node == node_id)

    def in_wires(self, node_id: str) -> tuple[Wire, ...]:
        return tuple(w for w in self.wires if isinstance(w.dst, NodeEnd) and w.dst.node == node_id)

    def entry_wires(self) -> tuple[Wire, ...]:
        return tuple(w for w in self.wires if isinstance(w.src, InputEnd))


@dataclass(frozen=True)
class Document:
    version: int
    main: str
    graphs: dict[str, Graph]
    ui: Any = None  # opaque editor payload, preserved verbatim


GRAPH_NAME_RE = re.compile(r"^[A-Za-z0-9_-]+$")


class DocumentError(ValueError):
    pass


class DocumentParseError(DocumentError):
    """The bytes are not JSON at all."""


class SchemaError(DocumentError):
    """JSON is shaped wrong; path is a JSON pointer to the offender."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Diagnostic:
    code: str  # E001..E005, W001
    graph: str
    loc: str  # node id, wire id, or "" for graph-level findings
    message: str

    @property
    def is_error(self) -> bool:
        return self.code.startswith("E")

    def __str__(self) -> str:
        where = f"{self.graph}/{self.loc}" if self.loc else self.graph
        return f"{self.code} {where}: {self.message}"


class InvariantError(DocumentError):
    """Structural violations found while loading, as lint-style diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


def _want(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise SchemaError(path, message)


def _node_from_json(obj: Any, path: str) -> Node:
    _want(isinstance(obj, dict), path, "node must be an object")
    k = obj.get("k")
    if k == "atomic":
        _want(set(obj) == {"k", "tactic"}, path, 'atomic node needs exactly "k" and "tactic"')
        _want(isinstance(obj["tactic"], str) and obj["tactic"] != "", path + "/tactic", "tactic must be a nonempty string")
        return AtomicNode(obj["tactic"])
    if k == "nested":
        _want(set(obj) == {"k", "graph"}, path, 'nested node needs exactly "k" and "graph"')
        _want(isinstance(obj["graph"], str) and obj["graph"] != "", path + "/graph", "graph must be a nonempty string")
        return NestedNode(obj["graph"])
    if k == "identity":
        _want(set(obj) == {"k"}, path, 'identity node needs exactly "k"')
        return IdentityNode()
    if k == "breakpoint":
        _want(set(obj) == {"k"}, path, 'breakpoint node needs exactly "k"')
        return BreakpointNode()
    raise SchemaError(path + "/k", f"unknown node kind {k!r}")


def _src_from_json(obj: Any, path: str) -> Src:
    _want(isinstance(obj, dict), path, "wire endpoint must be an object")
    if set(obj) == {"node"}:
        _want(isinstance(obj["node"], str) and obj["node"] != "", path + "/node", "node id must be a nonempty string")
        return NodeEnd(obj["node"])
    if set(obj) == {"in"}:
        _want(isinstance(obj["in"], int) and not isinstance(obj["in"], bool) and obj["in"] >= 0, path + "/in", "boundary index must be a nonnegative integer")
        return InputEnd(obj["in"])
    raise SchemaError(path, 'wire source must be {"node": id} or {"in": index}')


def _dst_from_json(obj: Any, path: str) -> Dst:
    _want(isinstance(obj, dict), path, "wire endpoint must be an object")
    if set(obj) == {"node"}:
        _want(isinstance(obj["node"], str) and obj["node"] != "", path + "/node", "node id must be a nonempty string")
        return NodeEnd(obj["node"])
    if set(obj) == {"out"}:
        _want(isinstance(obj["out"], int) and not isinstance(obj["out"], bool) and obj["out"] >= 0, path + "/out", "boundary index must be a nonnegative integer")
        return OutputEnd(obj["out"])
    raise SchemaError(path, 'wire destination must be {"node": id} or {"out": index}')


def _graph_from_json(obj: Any, path: str) -> Graph:
    _want(isinstance(obj, dict), path, "graph must be an object")
    _want(set(obj) == {"n_inputs", "n_outputs", "nodes", "wires"}, path,
          'graph needs exactly "n_inputs", "n_outputs", "nodes", "wires"')
    for key in ("n_inputs", "n_outputs"):
        v = obj[key]
        _want(isinstance(v, int) and not isinstance(v, bool) and v >= 0, f"{path}/{key}", "must be a nonnegative integer")
    _want(isinstance(obj["nodes"], dict), path + "/nodes", "nodes must be an object")
    nodes: dict[str, Node] = {}
    for nid, nobj in obj["nodes"].items():
        _want(nid != "", path + "/nodes", "node id must be nonempty")
        nodes[nid] = _node_from_json(nobj, f"{path}/nodes/{nid}")
    _want(isinstance(obj["wires"], list), path + "/wires", "wires must be an array")
    wires: list[Wire] = []
    seen: set[str] = set()
    for i, wobj in enumerate(obj["wires"]):
        wpath = f"{path}/wires/{i}"
        _want(isinstance(wobj, dict), wpath, "wire must be an object")
        _want(set(wobj) == {"id", "src", "dst", "gt"}, wpath, 'wire needs exactly "id", "src", "dst", "gt"')
        wid = wobj["id"]
        _want(isinstance(wid, str) and wid != "", wpath + "/id", "wire id must be a nonempty string")
        _want(wid not in seen, wpath + "/id", f"duplicate wire id {wid!r}")
        seen.add(wid)
        _want(isinstance(wobj["gt"], str), wpath + "/gt", "goal type must be a string")
        try:
            gt = parse_goaltype(wobj["gt"])
        except GoalTypeError as e:
            raise SchemaError(wpath + "/gt", str(e)) from None
        wires.append(Wire(wid, _src_from_json(wobj["src"], wpath + "/src"), _dst_from_json(wobj["dst"], wpath + "/dst"), gt))
    wires.sort(key=lambda w: w.id)
    return Graph(obj["n_inputs"], obj["n_outputs"], nodes, tuple(wires))


def _structural_diagnostics(doc: Document) -> list[Diagnostic]:
    """E002 dangling references, E003 nesting cycles, E004 bad boundary indexes."""
    out: list[Diagnostic] = []
    for gname in sorted(doc.graphs):
        g = doc.graphs[gname]
        for nid in sorted(g.nodes):
            node = g.nodes[nid]
            if isinstance(node, NestedNode) and node.graph not in doc.graphs:
                out.append(Diagnostic("E002", gname, nid, f"nested node refers to missing graph {node.graph!r}"))
        for w in g.wires:
            for end in (w.src, w.dst):
                if isinstance(end, NodeEnd) and end.node not in g.nodes:
                    out.append(Diagnostic("E002", gname, w.id, f"wire endpoint refers to missing node {end.node!r}"))
            if isinstance(w.src, InputEnd) and w.src.index >= g.n_inputs:
                out.append(Diagnostic("E004", gname, w.id, f"input boundary {w.src.index} out of range (n_inputs={g.n_inputs})"))
            if isinstance(w.dst, OutputEnd) and w.dst.index >= g.n_outputs:
                out.append(Diagnostic("E004", gname, w.id, f"output boundary {w.dst.index} out of range (n_outputs={g.n_outputs})"))
    if doc.main not in doc.graphs:
        out.append(Diagnostic("E002", doc.main, "", "main graph is missing"))
    # nesting must be acyclic
    color: dict[str, int] = {}

    def visit(name: str, trail: tuple[str, ...]) -> None:
        state = color.get(name, 0)
        if state == 1:
            cycle = trail[trail.index(name):] + (name,)
            out.append(Diagnostic("E003", name, "", "nesting cycle: " + " -> ".join(cycle)))
            return
        if state == 2 or name not in doc.graphs:
            return
        color[name] = 1
        for nid in sorted(doc.graphs[name].nodes):
            node = doc.graphs[name].nodes[nid]
            if isinstance(node, NestedNode) and node.graph in doc.graphs:
                visit(node.graph, trail + (name,))
        color[name] = 2

    for name in sorted(doc.graphs):
        visit(name, ())
    return _sorted_diagnostics(out)


def _sorted_diagnostics(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    return sorted(diags, key=lambda d: (d.graph, d.code, d.loc))


def load_document(data: bytes | str) -> Document:
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentParseError(f"not valid JSON: {e}") from None
    _want(isinstance(obj, dict), "", "document must be an object")
    keys = set(obj)
    _want({"main", "graphs"} <= keys <= {"version", "main", "graphs", "ui"},
          "", 'document needs "main" and "graphs", optionally "version" and "ui"')
    _want(obj.get("version", 1) == 1, "/version", f"unsupported version {obj.get('version')!r}")
    _want(isinstance(obj["main"], str), "/main", "main must be a string")
    _want(isinstance(obj["graphs"], dict), "/graphs", "graphs must be an object")
    graphs: dict[str, Graph] = {}
    for name, gobj in obj["graphs"].items():
        _want(bool(GRAPH_NAME_RE.match(name)), f"/graphs/{name}", "graph name must match [A-Za-z0-9_-]+")
        graphs[name] = _graph_from_json(gobj, f"/graphs/{name}")
    doc = Document(1, obj["main"], {k: graphs[k] for k in sorted(graphs)}, obj.get("ui"))
    problems = _structural_diagnostics(doc)
    if problems:
        raise InvariantError(problems)
    return doc


def _gt_text(gt: GoalType) -> str:
    return pretty_goaltype(gt)


def document_to_json(doc: Document) -> dict:
    graphs: dict[str, Any] = {}
    for name in sorted(doc.graphs):
        g = doc.graphs[name]
        graphs[name] = {
            "n_inputs": g.n_inputs,
            "n_outputs": g.n_outputs,
            "nodes": {
                nid: (
                    {"k": "atomic", "tactic": n.tactic}
                    if isinstance(n, AtomicNode)
                    else {"k": "nested", "graph": n.graph}
                    if isinstance(n, NestedNode)
                    else {"k": "identity"}
                    if isinstance(n, IdentityNode)
                    else {"k": "breakpoint"}
                )
                for nid, n in sorted(g.nodes.items())
            },
            "wires": [
                {
                    "id": w.id,
                    "src": {"node": w.src.node} if isinstance(w.src, NodeEnd) else {"in": w.src.index},
                    "dst": {"node": w.dst.node} if isinstance(w.dst, NodeEnd) else {"out": w.dst.index},
                    "gt": _gt_text(w.gt),
                }
                for w in sorted(g.wires, key=lambda w: w.id)
            ],
        }
    out: dict[str, Any] = {"version": 1, "main": doc.main, "graphs": graphs}
    if doc.ui is not None:
        out["ui"] = doc.ui
    return out


def save_document(doc: Document) -> bytes:
    """Canonical bytes: sorted keys, wires by id, 2-space indent, final newline."""
    text = json.dumps(document_to_json(doc), indent=2, sort_keys=True, ensure_ascii=True)
    return (text + "\n").encode("utf-8")


def canonicalize(data: bytes | str) -> bytes:
    return save_document(load_document(data))


# --- lint ---------------------------------------------------------------------


def _reachable_nodes(g: Graph) -> set[str]:
    seen: set[str] = set()
    frontier = [w.dst.node for w in g.entry_wires() if isinstance(w.dst, NodeEnd)]
    while frontier:
        nid = frontier.pop()
        if nid in seen:
            continue
        seen.add(nid)
        for w in g.out_wires(nid):
            if isinstance(w.dst, NodeEnd) and w.dst.node not in seen:
                frontier.append(w.dst.node)
    return seen


def _hyp_count_sets(lits: tuple[Lit, ...]) -> bool:
    """True when the num_hyps literals admit no hypothesis count at all.

    Each literal carves out a subset of the naturals; intersect them over a
    window comfortably past every mentioned bound."""
    counts = [l for l in lits if isinstance(l.atom, NumHyps)]
    if not counts:
        return False
    hi = max(l.atom.n for l in counts) + 2
    feasible = set(range(hi + 1))
    for l in counts:
        a = l.atom
        if a.cmp == "eq":
            ok = {a.n}
        elif a.cmp == "le":
            ok = set(range(min(a.n, hi) + 1))
        else:
            ok = set(range(a.n, hi + 1))
        if l.neg:
            ok = set(range(hi + 1)) - ok
        feasible &= ok
    # anything above hi behaves like hi for every literal here, so an empty
    # window means an empty solution set
    return not feasible


def _gt_unsatisfiable(gt: GoalType) -> bool:
    lits = set(gt.lits)
    for l in lits:
        if Lit(not l.neg, l.atom) in lits:
            return True
    pos_concl = {l.atom.sym for l in lits if isinstance(l.atom, ConclIs) and not l.neg}
    if len(pos_concl) > 1:
        return True
    if any(l.neg and isinstance(l.atom, AnyGoal) for l in lits):
        return True
    return _hyp_count_sets(gt.lits)


def lint(doc: Document, registry: TacticRegistry) -> list[Diagnostic]:
    """Static diagnostics, E-codes are errors and W-codes warnings.

    E001 atomic node names a tactic the registry lacks; E002/E003/E004
    re-check the structural invariants the loader enforces; E005 flags
    nodes no goal can ever reach; W001 flags goal types that cannot accept
    any goal as probably unintended.
    """
    out = list(_structural_diagnostics(doc))
    for gname in sorted(doc.graphs):
        g = doc.graphs[gname]
        for nid in sorted(g.nodes):
            node = g.nodes[nid]
            if isinstance(node, AtomicNode) and node.tactic not in registry:
                out.append(Diagnostic("E001", gname, nid, f"unknown tactic {node.tactic!r}"))
        reach = _reachable_nodes(g)
        for nid in sorted(g.nodes):
            if nid not in reach:
                out.append(Diagnostic("E005", gname, nid, "node is unreachable from the input boundaries"))
        for w in g.wires:
            if _gt_unsatisfiable(w.gt):
                out.append(Diagnostic("W001", gname, w.id, f"goal type {pretty_goaltype(w.gt)!r} accepts no goal"))
    return _sorted_diagnostics(out)


def lint_errors(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.is_error]
