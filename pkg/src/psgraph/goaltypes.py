"""Goal types: wire-level predicates over sequent goals.

A goal type is a conjunction of possibly-negated atomic checks; the empty
conjunction accepts everything and is spelled `any`.  Concrete syntax:

    GT   ::= lit (',' lit)* | 'any'
    lit  ::= '!'? atom
    atom ::= 'any' | 'concl_is' '(' sym ')' | 'hyp_is' '(' sym ')'
           | 'concl_in_hyps' | 'num_hyps' '(' cmp ',' int ')' | 'closed'
    sym  ::= 'atom' | 'true' | 'false' | 'not' | 'and' | 'or' | 'imp'
           | 'forall' | 'exists'
    cmp  ::= 'eq' | 'le' | 'ge'

There is no disjunction; route a union of cases with multiple wires.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .logic import Goal, TOP_SYMBOLS, alpha_equal, free_vars, top_symbol


@dataclass(frozen=True)
class AnyGoal:
    pass


@dataclass(frozen=True)
class ConclIs:
    sym: str


@dataclass(frozen=True)
class HypIs:
    sym: str


@dataclass(frozen=True)
class ConclInHyps:
    pass


@dataclass(frozen=True)
class NumHyps:
    cmp: str  # eq | le | ge
    n: int


@dataclass(frozen=True)
class Closed:
    pass


GTAtom = Union[AnyGoal, ConclIs, HypIs, ConclInHyps, NumHyps, Closed]


@dataclass(frozen=True)
class Lit:
    neg: bool
    atom: GTAtom


@dataclass(frozen=True)
class GoalType:
    lits: tuple[Lit, ...] = ()


ANY = GoalType(())

_CMPS = ("eq", "le", "ge")


class GoalTypeError(ValueError):
    def __init__(self, offset: int, message: str):
        self.offset = offset
        super().__init__(f"offset {offset}: {message}")


_TOKEN = re.compile(r"\s*([a-zA-Z_][a-zA-Z0-9_]*|\d+|[(),!])")


def _tokens(text: str) -> list[tuple[str, int]]:
    out: list[tuple[str, int]] = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            if text[i:].strip() == "":
                break
            raise GoalTypeError(i + len(text[i:]) - len(text[i:].lstrip()), f"bad character {text[i:].lstrip()[0]!r}")
        out.append((m.group(1), m.start(1)))
        i = m.end()
    out.append(("", len(text)))
    return out


def parse_goaltype(text: str) -> GoalType:
    toks = _tokens(text)
    pos = 0

    def peek() -> tuple[str, int]:
        return toks[pos]

    def take() -> tuple[str, int]:
        nonlocal pos
        t = toks[pos]
        pos += 1
        return t

    def expect(word: str) -> None:
        t, off = take()
        if t != word:
            raise GoalTypeError(off, f"expected {word!r}, found {t!r}")

    def atom() -> GTAtom:
        t, off = take()
        if t == "any":
            return AnyGoal()
        if t == "concl_in_hyps":
            return ConclInHyps()
        if t == "closed":
            return Closed()
        if t in ("concl_is", "hyp_is"):
            expect("(")
            sym, soff = take()
            if sym not in TOP_SYMBOLS:
                raise GoalTypeError(
                    soff,
                    f"unknown top symbol {sym!r}; one of " + ", ".join(TOP_SYMBOLS),
                )
            expect(")")
            return ConclIs(sym) if t == "concl_is" else HypIs(sym)
        if t == "num_hyps":
            expect("(")
            cmp, coff = take()
            if cmp not in _CMPS:
                raise GoalTypeError(
                    coff, f"unknown comparison {cmp!r}; one of " + ", ".join(_CMPS)
                )
            expect(",")
            num, noff = take()
            if not num.isdigit():
                raise GoalTypeError(noff, f"expected a count, found {num!r}")
            expect(")")
            return NumHyps(cmp, int(num))
        raise GoalTypeError(
            off,
            f"unknown goal type atom {t!r}; one of any, concl_is, hyp_is, "
            "concl_in_hyps, num_hyps, closed",
        )

    def lit() -> Lit:
        if peek()[0] == "!":
            take()
            return Lit(True, atom())
        return Lit(False, atom())

    first = lit()
    lits = [first]
    while peek()[0] == ",":
        take()
        lits.append(lit())
    t, off = peek()
    if t != "":
        raise GoalTypeError(off, f"trailing input {t!r}")
    # a bare positive `any` is the empty conjunction
    if lits == [Lit(False, AnyGoal())]:
        return ANY
    return GoalType(tuple(lits))


def _pp_atom(a: GTAtom) -> str:
    if isinstance(a, AnyGoal):
        return "any"
    if isinstance(a, ConclIs):
        return f"concl_is({a.sym})"
    if isinstance(a, HypIs):
        return f"hyp_is({a.sym})"
    if isinstance(a, ConclInHyps):
        return "concl_in_hyps"
    if isinstance(a, NumHyps):
        return f"num_hyps({a.cmp}, {a.n})"
    if isinstance(a, Closed):
        return "closed"
    raise TypeError(f"not a goal type atom: {a!r}")


def pretty_goaltype(gt: GoalType) -> str:
    if not gt.lits:
        return "any"
    return ", ".join(("!" if l.neg else "") + _pp_atom(l.atom) for l in gt.lits)


def _eval_atom(a: GTAtom, g: Goal) -> bool:
    if isinstance(a, AnyGoal):
        return True
    if isinstance(a, ConclIs):
        return top_symbol(g.concl) == a.sym
    if isinstance(a, HypIs):
        return any(top_symbol(h) == a.sym for h in g.hyps)
    if isinstance(a, ConclInHyps):
        return any(alpha_equal(h, g.concl) for h in g.hyps)
    if isinstance(a, NumHyps):
        n = len(g.hyps)
        if a.cmp == "eq":
            return n == a.n
        if a.cmp == "le":
            return n <= a.n
        return n >= a.n
    if isinstance(a, Closed):
        return all(not free_vars(f) for f in g.hyps + (g.concl,))
    raise TypeError(f"not a goal type atom: {a!r}")


def eval_goaltype(gt: GoalType, g: Goal) -> bool:
    return all(_eval_atom(l.atom, g) != l.neg for l in gt.lits)


# --- JSON encoding ----------------------------------------------------------


def _atom_to_json(a: GTAtom) -> dict:
    if isinstance(a, AnyGoal):
        return {"k": "any"}
    if isinstance(a, ConclIs):
        return {"k": "concl_is", "sym": a.sym}
    if isinstance(a, HypIs):
        return {"k": "hyp_is", "sym": a.sym}
    if isinstance(a, ConclInHyps):
        return {"k": "concl_in_hyps"}
    if isinstance(a, NumHyps):
        return {"k": "num_hyps", "cmp": a.cmp, "n": a.n}
    if isinstance(a, Closed):
        return {"k": "closed"}
    raise TypeError(f"not a goal type atom: {a!r}")


def _atom_from_json(obj: dict) -> GTAtom:
    k = obj.get("k")
    if k == "any":
        return AnyGoal()
    if k == "concl_is":
        return ConclIs(obj["sym"])
    if k == "hyp_is":
        return HypIs(obj["sym"])
    if k == "concl_in_hyps":
        return ConclInHyps()
    if k == "num_hyps":
        return NumHyps(obj["cmp"], int(obj["n"]))
    if k == "closed":
        return Closed()
    raise ValueError(f"bad goal type atom object: {obj!r}")


def goaltype_to_json(gt: GoalType) -> dict:
    return {"lits": [{"neg": l.neg, "atom": _atom_to_json(l.atom)} for l in gt.lits]}


def goaltype_from_json(obj: dict) -> GoalType:
    lits = tuple(Lit(bool(l["neg"]), _atom_from_json(l["atom"])) for l in obj["lits"])
    return GoalType(lits)
