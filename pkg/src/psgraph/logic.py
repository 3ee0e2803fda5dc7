"""A small first-order object logic: terms, formulas and sequent goals.

Terms are variables or constants (no function symbols).  Formulas are
built from predicate atoms, the two truth constants, negation, the three
binary connectives and the two quantifiers.  A goal is a sequent: an
ordered list of hypotheses and one conclusion, plus an identifier that
the evaluator uses for bookkeeping.  Goal equality is alpha-equality of
the content; identifiers are deliberately excluded.

Concrete syntax accepted by the parser:

    F ::= ident ( '(' term (',' term)* ')' )?
        | 'true' | 'false'
        | '!' F
        | F '&' F | F '|' F | F '->' F
        | 'forall' ident '.' F
        | 'exists' ident '.' F
        | '(' F ')'

Precedence: ! > & > | > ->, with -> right-associative and the two other
binary connectives left-associative.  A quantifier body extends as far
right as possible.  Identifiers in term position denote bound variables
when an enclosing quantifier binds the name, and constants otherwise,
so a parsed formula never has free variables.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


Term = Union[Var, Const]


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()


@dataclass(frozen=True)
class Truth:
    pass


@dataclass(frozen=True)
class Falsity:
    pass


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Imp:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


Formula = Union[Atom, Truth, Falsity, Not, And, Or, Imp, Forall, Exists]

TOP_SYMBOLS = ("atom", "true", "false", "not", "and", "or", "imp", "forall", "exists")


def top_symbol(f: Formula) -> str:
    if isinstance(f, Atom):
        return "atom"
    if isinstance(f, Truth):
        return "true"
    if isinstance(f, Falsity):
        return "false"
    if isinstance(f, Not):
        return "not"
    if isinstance(f, And):
        return "and"
    if isinstance(f, Or):
        return "or"
    if isinstance(f, Imp):
        return "imp"
    if isinstance(f, Exists):
        return "exists"
    if isinstance(f, Forall):
        return "forall"
    raise TypeError(f"not a formula: {f!r}")


def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset(t.name for t in f.args if isinstance(t, Var))
    if isinstance(f, (Truth, Falsity)):
        return frozenset()
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, (And, Or, Imp)):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, (Forall, Exists)):
        return free_vars(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def constants(f: Formula) -> frozenset[str]:
    if isinstance(f, Atom):
        return frozenset(t.name for t in f.args if isinstance(t, Const))
    if isinstance(f, (Truth, Falsity)):
        return frozenset()
    if isinstance(f, Not):
        return constants(f.body)
    if isinstance(f, (And, Or, Imp)):
        return constants(f.left) | constants(f.right)
    if isinstance(f, (Forall, Exists)):
        return constants(f.body)
    raise TypeError(f"not a formula: {f!r}")


def all_names(f: Formula) -> frozenset[str]:
    """Every identifier in f: predicates, constants, free and bound variables."""
    if isinstance(f, Atom):
        return frozenset({f.pred}) | frozenset(t.name for t in f.args)
    if isinstance(f, (Truth, Falsity)):
        return frozenset()
    if isinstance(f, Not):
        return all_names(f.body)
    if isinstance(f, (And, Or, Imp)):
        return all_names(f.left) | all_names(f.right)
    if isinstance(f, (Forall, Exists)):
        return all_names(f.body) | {f.var}
    raise TypeError(f"not a formula: {f!r}")


def _term_subst(t: Term, var: str, repl: Term) -> Term:
    if isinstance(t, Var) and t.name == var:
        return repl
    return t


def substitute(f: Formula, var: str, repl: Term) -> Formula:
    """Capture-avoiding substitution of repl for the free variable var.

    A binder whose bound name would capture repl is renamed first; the
    fresh name is the old one with primes appended until it clashes with
    nothing in sight.
    """
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(_term_subst(t, var, repl) for t in f.args))
    if isinstance(f, (Truth, Falsity)):
        return f
    if isinstance(f, Not):
        return Not(substitute(f.body, var, repl))
    if isinstance(f, (And, Or, Imp)):
        return type(f)(substitute(f.left, var, repl), substitute(f.right, var, repl))
    if isinstance(f, (Forall, Exists)):
        if f.var == var:
            return f  # var is shadowed, nothing free to replace
        repl_free = {repl.name} if isinstance(repl, Var) else frozenset()
        if f.var in repl_free and var in free_vars(f.body):
            avoid = free_vars(f.body) | repl_free | {var}
            fresh = f.var + "'"
            while fresh in avoid:
                fresh += "'"
            body = substitute(f.body, f.var, Var(fresh))
            return type(f)(fresh, substitute(body, var, repl))
        return type(f)(f.var, substitute(f.body, var, repl))
    raise TypeError(f"not a formula: {f!r}")


def alpha_equal(a: Formula, b: Formula, _env: tuple[tuple[str, str], ...] = ()) -> bool:
    """Structural equality up to consistent renaming of bound variables."""
    if type(a) is not type(b):
        return False
    if isinstance(a, Atom):
        if a.pred != b.pred or len(a.args) != len(b.args):
            return False
        for ta, tb in zip(a.args, b.args):
            if type(ta) is not type(tb):
                return False
            if isinstance(ta, Const):
                if ta.name != tb.name:
                    return False
            else:
                ia = next((i for i, (n, _) in enumerate(reversed(_env)) if n == ta.name), None)
                ib = next((i for i, (_, n) in enumerate(reversed(_env)) if n == tb.name), None)
                if ia != ib:
                    return False
                if ia is None and ta.name != tb.name:
                    return False
        return True
    if isinstance(a, (Truth, Falsity)):
        return True
    if isinstance(a, Not):
        return alpha_equal(a.body, b.body, _env)
    if isinstance(a, (And, Or, Imp)):
        return alpha_equal(a.left, b.left, _env) and alpha_equal(a.right, b.right, _env)
    if isinstance(a, (Forall, Exists)):
        return alpha_equal(a.body, b.body, _env + ((a.var, b.var),))
    raise TypeError(f"not a formula: {a!r}")


# --- parsing ---------------------------------------------------------------

_IDENT = re.compile(r"[a-zA-Z_][a-zA-Z0-9_']*")
_KEYWORDS = {"true", "false", "forall", "exists"}

# token kinds: ident, true, false, forall, exists, ( ) , . ! & | -> |- end


class ParseError(ValueError):
    """Syntax error with the byte offset and the token kinds expected there."""

    def __init__(self, offset: int, expected: set[str], found: str):
        self.offset = offset
        self.expected = frozenset(expected)
        self.found = found
        want = ", ".join(sorted(expected))
        super().__init__(f"offset {offset}: expected one of {want}, found {found}")


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c.isalpha() or c == "_":
            m = _IDENT.match(text, i)
            assert m is not None
            word = m.group(0)
            kind = word if word in _KEYWORDS else "ident"
            toks.append(_Tok(kind, word, i))
            i = m.end()
            continue
        if text.startswith("->", i):
            toks.append(_Tok("->", "->", i))
            i += 2
            continue
        if text.startswith("|-", i):
            toks.append(_Tok("|-", "|-", i))
            i += 2
            continue
        if c in "(),.!&|":
            toks.append(_Tok(c, c, i))
            i += 1
            continue
        raise ParseError(i, {"token"}, repr(c))
    toks.append(_Tok("end", "", n))
    return toks


_FORMULA_START = {"ident", "true", "false", "!", "forall", "exists", "("}


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str) -> _Tok:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(t.pos, {kind}, t.kind)
        return self.take()

    # precedence: imp < or < and < unary
    def formula(self, bound: tuple[str, ...]) -> Formula:
        left = self.or_level(bound)
        if self.peek().kind == "->":
            self.take()
            return Imp(left, self.formula(bound))
        return left

    def or_level(self, bound: tuple[str, ...]) -> Formula:
        f = self.and_level(bound)
        while self.peek().kind == "|":
            self.take()
            f = Or(f, self.and_level(bound))
        return f

    def and_level(self, bound: tuple[str, ...]) -> Formula:
        f = self.unary(bound)
        while self.peek().kind == "&":
            self.take()
            f = And(f, self.unary(bound))
        return f

    def unary(self, bound: tuple[str, ...]) -> Formula:
        t = self.peek()
        if t.kind == "!":
            self.take()
            return Not(self.unary(bound))
        if t.kind in ("forall", "exists"):
            # The body runs through & and | but stops at ->, so
            # "exists y. r(y) -> exists y. r(y)" is an implication between
            # two closed existentials, not one big existential.
            self.take()
            name = self.expect("ident").text
            self.expect(".")
            body = self.or_level(bound + (name,))
            return Forall(name, body) if t.kind == "forall" else Exists(name, body)
        if t.kind == "true":
            self.take()
            return Truth()
        if t.kind == "false":
            self.take()
            return Falsity()
        if t.kind == "(":
            self.take()
            f = self.formula(bound)
            self.expect(")")
            return f
        if t.kind == "ident":
            self.take()
            args: list[Term] = []
            if self.peek().kind == "(":
                self.take()
                args.append(self.term(bound))
                while self.peek().kind == ",":
                    self.take()
                    args.append(self.term(bound))
                self.expect(")")
            return Atom(t.text, tuple(args))
        raise ParseError(t.pos, set(_FORMULA_START), t.kind)

    def term(self, bound: tuple[str, ...]) -> Term:
        t = self.expect("ident")
        return Var(t.text) if t.text in bound else Const(t.text)


def parse_formula(text: str) -> Formula:
    p = _Parser(_tokenize(text))
    f = p.formula(())
    t = p.peek()
    if t.kind != "end":
        raise ParseError(t.pos, {"end"}, t.kind)
    return f


# --- pretty printing --------------------------------------------------------

_PREC_IMP, _PREC_OR, _PREC_AND, _PREC_UNARY = 1, 2, 3, 4


def _pp(f: Formula, ctx: int, hazard: bool) -> str:
    """ctx is the loosest precedence printable bare.  hazard means the next
    token after this subformula (inside the nearest parentheses) is & or |,
    which a bare quantifier body would swallow, so quantifiers parenthesise
    exactly when hazard is set."""
    if isinstance(f, Atom):
        if not f.args:
            return f.pred
        return f.pred + "(" + ", ".join(str(t) for t in f.args) + ")"
    if isinstance(f, Truth):
        return "true"
    if isinstance(f, Falsity):
        return "false"
    if isinstance(f, (Forall, Exists)):
        kw = "forall" if isinstance(f, Forall) else "exists"
        body = _pp(f.body, _PREC_OR, False)
        s = f"{kw} {f.var}. {body}"
        return "(" + s + ")" if hazard else s
    if isinstance(f, Not):
        return "!" + _pp(f.body, _PREC_UNARY, hazard)
    if isinstance(f, (And, Or, Imp)):
        prec = {And: _PREC_AND, Or: _PREC_OR, Imp: _PREC_IMP}[type(f)]
        op = {And: " & ", Or: " | ", Imp: " -> "}[type(f)]
        wrap = prec < ctx
        # Imp is right-associative, the others left-associative.
        lctx = prec + 1 if isinstance(f, Imp) else prec
        rctx = prec if isinstance(f, Imp) else prec + 1
        left = _pp(f.left, lctx, not isinstance(f, Imp))
        right = _pp(f.right, rctx, False if wrap else hazard)
        s = left + op + right
        return "(" + s + ")" if wrap else s
    raise TypeError(f"not a formula: {f!r}")


def pretty(f: Formula) -> str:
    """Minimal-parenthesis rendering; parse(pretty(f)) is alpha-equal to f."""
    return _pp(f, _PREC_IMP, False)


# --- goals ------------------------------------------------------------------


@dataclass(frozen=True)
class Goal:
    """A sequent with an evaluator-facing identifier.

    Identifiers are unique within an evaluation session; equality of goal
    content is alpha-equality, which id-bearing == does not implement, so
    use goal_alpha_equal / goal_key for content comparisons.
    """

    id: str
    hyps: tuple[Formula, ...]
    concl: Formula


def goal_text(g: Goal) -> str:
    concl = pretty(g.concl)
    if not g.hyps:
        return "|- " + concl
    return ", ".join(pretty(h) for h in g.hyps) + " |- " + concl


def parse_sequent(text: str) -> tuple[tuple[Formula, ...], Formula]:
    """Parse `hyp (',' hyp)* '|-' concl` or `'|-' concl`."""
    p = _Parser(_tokenize(text))
    hyps: list[Formula] = []
    if p.peek().kind != "|-":
        hyps.append(p.formula(()))
        while p.peek().kind == ",":
            p.take()
            hyps.append(p.formula(()))
    p.expect("|-")
    concl = p.formula(())
    t = p.peek()
    if t.kind != "end":
        raise ParseError(t.pos, {"end"}, t.kind)
    return tuple(hyps), concl


def parse_goal(text: str, gid: str = "g0") -> Goal:
    hyps, concl = parse_sequent(text)
    return Goal(gid, hyps, concl)


def goal_alpha_equal(a: Goal, b: Goal) -> bool:
    if len(a.hyps) != len(b.hyps):
        return False
    return all(alpha_equal(x, y) for x, y in zip(a.hyps, b.hyps)) and alpha_equal(
        a.concl, b.concl
    )


def _canon(f: Formula, env: tuple[str, ...]) -> Formula:
    """Rename bound variables to position-derived names for canonical output."""
    if isinstance(f, Atom):
        args: list[Term] = []
        for t in f.args:
            if isinstance(t, Var) and t.name in env:
                depth = len(env) - 1 - tuple(reversed(env)).index(t.name)
                args.append(Var(f"${depth}"))
            else:
                args.append(t)
        return Atom(f.pred, tuple(args))
    if isinstance(f, (Truth, Falsity)):
        return f
    if isinstance(f, Not):
        return Not(_canon(f.body, env))
    if isinstance(f, (And, Or, Imp)):
        return type(f)(_canon(f.left, env), _canon(f.right, env))
    if isinstance(f, (Forall, Exists)):
        inner = _canon(f.body, env + (f.var,))
        return type(f)(f"${len(env)}", inner)
    raise TypeError(f"not a formula: {f!r}")


def formula_key(f: Formula) -> str:
    return pretty(_canon(f, ()))


def goal_key(g: Goal) -> str:
    """Canonical text for the goal's alpha-equivalence class."""
    concl = formula_key(g.concl)
    if not g.hyps:
        return "|- " + concl
    return ", ".join(formula_key(h) for h in g.hyps) + " |- " + concl


def goal_names(g: Goal) -> frozenset[str]:
    names: frozenset[str] = frozenset()
    for f in g.hyps + (g.concl,):
        names |= all_names(f)
    return names


def goal_constants(g: Goal) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    for f in g.hyps + (g.concl,):
        out |= constants(f)
    return out


def fresh_const(g: Goal, hint: str) -> Const:
    """Deterministic fresh constant: hint, then hint_1, hint_2, ...

    Fresh means the name occurs nowhere in the goal, counting predicate
    names, constants, and variables whether free or bound.
    """
    taken = goal_names(g)
    if hint not in taken:
        return Const(hint)
    k = 1
    while f"{hint}_{k}" in taken:
        k += 1
    return Const(f"{hint}_{k}")


# --- JSON encoding ----------------------------------------------------------


def term_to_json(t: Term) -> dict:
    if isinstance(t, Var):
        return {"k": "var", "name": t.name}
    return {"k": "const", "name": t.name}


def term_from_json(obj: dict) -> Term:
    if obj.get("k") == "var":
        return Var(obj["name"])
    if obj.get("k") == "const":
        return Const(obj["name"])
    raise ValueError(f"bad term object: {obj!r}")


def formula_to_json(f: Formula) -> dict:
    if isinstance(f, Atom):
        return {"k": "atom", "pred": f.pred, "args": [term_to_json(t) for t in f.args]}
    if isinstance(f, Truth):
        return {"k": "true"}
    if isinstance(f, Falsity):
        return {"k": "false"}
    if isinstance(f, Not):
        return {"k": "not", "f": formula_to_json(f.body)}
    if isinstance(f, And):
        return {"k": "and", "l": formula_to_json(f.left), "r": formula_to_json(f.right)}
    if isinstance(f, Or):
        return {"k": "or", "l": formula_to_json(f.left), "r": formula_to_json(f.right)}
    if isinstance(f, Imp):
        return {"k": "imp", "l": formula_to_json(f.left), "r": formula_to_json(f.right)}
    if isinstance(f, Forall):
        return {"k": "forall", "v": f.var, "body": formula_to_json(f.body)}
    if isinstance(f, Exists):
        return {"k": "exists", "v": f.var, "body": formula_to_json(f.body)}
    raise TypeError(f"not a formula: {f!r}")


def formula_from_json(obj: dict) -> Formula:
    k = obj.get("k")
    if k == "atom":
        return Atom(obj["pred"], tuple(term_from_json(t) for t in obj.get("args", [])))
    if k == "true":
        return Truth()
    if k == "false":
        return Falsity()
    if k == "not":
        return Not(formula_from_json(obj["f"]))
    if k in ("and", "or", "imp"):
        cls = {"and": And, "or": Or, "imp": Imp}[k]
        return cls(formula_from_json(obj["l"]), formula_from_json(obj["r"]))
    if k == "forall":
        return Forall(obj["v"], formula_from_json(obj["body"]))
    if k == "exists":
        return Exists(obj["v"], formula_from_json(obj["body"]))
    raise ValueError(f"bad formula object: {obj!r}")
