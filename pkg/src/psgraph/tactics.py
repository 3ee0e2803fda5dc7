"""Tactic registry and the built-in sequent rules.

A tactic maps a goal to an ordered sequence of alternatives; each
alternative is an ordered list of subgoals that together suffice for the
input goal.  The empty sequence of alternatives means the tactic does not
apply.  An alternative with no subgoals discharges the goal outright.

Tactics are pure apart from drawing fresh goal identifiers from the
allocator they are handed, so concurrent sessions each use their own
allocator and never race.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

from .logic import (
    And,
    Const,
    Exists,
    Falsity,
    Forall,
    Goal,
    Imp,
    Or,
    Truth,
    alpha_equal,
    fresh_const,
    goal_constants,
    substitute,
)


@dataclass(frozen=True)
class Alternative:
    subgoals: tuple[Goal, ...]


class GoalIds:
    """Sequential goal id source: g1, g2, ..."""

    def __init__(self, start: int = 1):
        self._next = start

    def fresh(self) -> str:
        gid = f"g{self._next}"
        self._next += 1
        return gid


TacticFn = Callable[[Goal, GoalIds], list[Alternative]]


class TacticError(ValueError):
    pass


class UnknownTactic(TacticError):
    """Asked to apply a name the registry has never seen.

    Distinct from a tactic that applies and produces no alternatives."""


class DuplicateTactic(TacticError):
    pass


class TacticRegistry:
    def __init__(self) -> None:
        self._tactics: dict[str, TacticFn] = {}

    def register(self, name: str, fn: TacticFn) -> None:
        if name in self._tactics:
            raise DuplicateTactic(f"tactic {name!r} is already registered")
        self._tactics[name] = fn

    def __contains__(self, name: str) -> bool:
        return name in self._tactics

    def get(self, name: str) -> TacticFn:
        try:
            return self._tactics[name]
        except KeyError:
            raise UnknownTactic(f"unknown tactic {name!r}") from None

    def names(self) -> list[str]:
        return sorted(self._tactics)


def apply_tactic(
    reg: TacticRegistry, name: str, goal: Goal, ids: GoalIds | None = None
) -> list[Alternative]:
    fn = reg.get(name)
    return fn(goal, ids if ids is not None else GoalIds())


def list_tactics(reg: TacticRegistry) -> list[str]:
    return reg.names()


# --- built-in rules ----------------------------------------------------------


def _conj_intro(g: Goal, ids: GoalIds) -> list[Alternative]:
    if not isinstance(g.concl, And):
        return []
    left = Goal(ids.fresh(), g.hyps, g.concl.left)
    right = Goal(ids.fresh(), g.hyps, g.concl.right)
    return [Alternative((left, right))]


def _imp_intro(g: Goal, ids: GoalIds) -> list[Alternative]:
    if not isinstance(g.concl, Imp):
        return []
    return [Alternative((Goal(ids.fresh(), g.hyps + (g.concl.left,), g.concl.right),))]


def _all_intro(g: Goal, ids: GoalIds) -> list[Alternative]:
    if not isinstance(g.concl, Forall):
        return []
    c = fresh_const(g, g.concl.var)
    return [Alternative((Goal(ids.fresh(), g.hyps, substitute(g.concl.body, g.concl.var, c)),))]


def _exists_elim(g: Goal, ids: GoalIds) -> list[Alternative]:
    # one alternative per existential hypothesis, in hypothesis order
    alts = []
    for i, h in enumerate(g.hyps):
        if isinstance(h, Exists):
            c = fresh_const(g, h.var)
            hyps = g.hyps[:i] + (substitute(h.body, h.var, c),) + g.hyps[i + 1 :]
            alts.append(Alternative((Goal(ids.fresh(), hyps, g.concl),)))
    return alts


def _exists_intro(g: Goal, ids: GoalIds) -> list[Alternative]:
    if not isinstance(g.concl, Exists):
        return []
    # one alternative per constant in the goal, by name; no constants, no witness
    alts = []
    for name in sorted(goal_constants(g)):
        body = substitute(g.concl.body, g.concl.var, Const(name))
        alts.append(Alternative((Goal(ids.fresh(), g.hyps, body),)))
    return alts


def _conj_elim(g: Goal, ids: GoalIds) -> list[Alternative]:
    alts = []
    for i, h in enumerate(g.hyps):
        if isinstance(h, And):
            hyps = g.hyps[:i] + (h.left, h.right) + g.hyps[i + 1 :]
            alts.append(Alternative((Goal(ids.fresh(), hyps, g.concl),)))
    return alts


def _disj_intro(g: Goal, ids: GoalIds) -> list[Alternative]:
    if not isinstance(g.concl, Or):
        return []
    return [
        Alternative((Goal(ids.fresh(), g.hyps, g.concl.left),)),
        Alternative((Goal(ids.fresh(), g.hyps, g.concl.right),)),
    ]


def _disj_elim(g: Goal, ids: GoalIds) -> list[Alternative]:
    alts = []
    for i, h in enumerate(g.hyps):
        if isinstance(h, Or):
            rest_l = g.hyps[:i] + (h.left,) + g.hyps[i + 1 :]
            rest_r = g.hyps[:i] + (h.right,) + g.hyps[i + 1 :]
            alts.append(
                Alternative(
                    (
                        Goal(ids.fresh(), rest_l, g.concl),
                        Goal(ids.fresh(), rest_r, g.concl),
                    )
                )
            )
    return alts


def _assumption(g: Goal, ids: GoalIds) -> list[Alternative]:
    if any(alpha_equal(h, g.concl) for h in g.hyps):
        return [Alternative(())]
    return []


def _true_intro(g: Goal, ids: GoalIds) -> list[Alternative]:
    if isinstance(g.concl, Truth):
        return [Alternative(())]
    return []


def _false_elim(g: Goal, ids: GoalIds) -> list[Alternative]:
    if any(isinstance(h, Falsity) for h in g.hyps):
        return [Alternative(())]
    return []


BUILTINS: dict[str, TacticFn] = {
    "conj_intro": _conj_intro,
    "imp_intro": _imp_intro,
    "all_intro": _all_intro,
    "exists_elim": _exists_elim,
    "exists_intro": _exists_intro,
    "conj_elim": _conj_elim,
    "disj_intro": _disj_intro,
    "disj_elim": _disj_elim,
    "assumption": _assumption,
    "true_intro": _true_intro,
    "false_elim": _false_elim,
}


def builtin_registry() -> TacticRegistry:
    reg = TacticRegistry()
    for name, fn in BUILTINS.items():
        reg.register(name, fn)
    return reg
