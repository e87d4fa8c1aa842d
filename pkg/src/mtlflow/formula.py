"""Bounded-time MTL formulas: AST, text syntax, semantics, horizons.

Formulas are immutable dataclasses.  Time is measured in discrete steps and
every temporal operator carries a closed interval ``(t1, t2)`` with
``0 <= t1 <= t2``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence, Union

import numpy as np

__all__ = [
    "Formula", "TrueF", "Atom", "Not", "And", "Or", "Until", "Eventually",
    "Always", "FormulaSyntaxError", "IntervalError", "HorizonError",
    "parse", "to_text", "horizon", "evaluate", "in_convex_fragment",
    "subformulas", "atoms", "size", "random_formula",
]


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class IntervalError(ValueError):
    pass


class HorizonError(ValueError):
    pass


def _check_interval(interval) -> tuple[int, int]:
    t1, t2 = interval
    if int(t1) != t1 or int(t2) != t2:
        raise IntervalError(f"interval bounds must be integers, got {interval}")
    t1, t2 = int(t1), int(t2)
    if t1 < 0 or t2 < 0:
        raise IntervalError(f"negative interval bound in [{t1},{t2}]")
    if t1 > t2:
        raise IntervalError(f"empty interval [{t1},{t2}]")
    return t1, t2


class Formula:
    """Base class of all formula nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("And needs at least two children")


@dataclass(frozen=True)
class Or(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("Or needs at least two children")


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula
    interval: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "interval", _check_interval(self.interval))


@dataclass(frozen=True)
class Eventually(Formula):
    child: Formula
    interval: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "interval", _check_interval(self.interval))


@dataclass(frozen=True)
class Always(Formula):
    child: Formula
    interval: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "interval", _check_interval(self.interval))


Trace = Sequence[Union[set, frozenset]]


def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (TrueF, Atom)):
        return ()
    if isinstance(f, (Not, Eventually, Always)):
        return (f.child,)
    if isinstance(f, (And, Or)):
        return f.children
    if isinstance(f, Until):
        return (f.left, f.right)
    raise TypeError(f"not a formula: {f!r}")


def subformulas(f: Formula) -> Iterator[Formula]:
    """Pre-order traversal over all nodes (repeated subtrees repeat)."""
    yield f
    for c in children(f):
        yield from subformulas(c)


def size(f: Formula) -> int:
    return sum(1 for _ in subformulas(f))


def atoms(f: Formula) -> frozenset[str]:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Atom))


# --------------------------------------------------------------------------
# text syntax

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<temporal>[UFG])\s*\[\s*(?P<t1>-?\d+)\s*,\s*(?P<t2>-?\d+)\s*\]"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[!&|()])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(f"unexpected character {text[start]!r}", start)
        start = m.start() + len(m.group(0)) - len(m.group(0).lstrip())
        if m.group("temporal"):
            t1, t2 = int(m.group("t1")), int(m.group("t2"))
            try:
                _check_interval((t1, t2))
            except IntervalError as e:
                raise IntervalError(f"{e} at position {start}") from None
            tokens.append((m.group("temporal"), (t1, t2), start))
        elif m.group("ident"):
            name = m.group("ident")
            tokens.append(("true" if name == "true" else "ident", name, start))
        else:
            tokens.append((m.group("op"), None, start))
        pos = m.end()
    tokens.append(("eof", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind=None):
        tok = self.tokens[self.i]
        if kind is not None and tok[0] != kind:
            found = "end of input" if tok[0] == "eof" else repr(tok[1] or tok[0])
            raise FormulaSyntaxError(f"expected {kind!r}, found {found}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.disjunction()
        self.take("eof")
        return f

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.peek()[0] == "|":
            self.take()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.until()]
        while self.peek()[0] == "&":
            self.take()
            parts.append(self.until())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def until(self) -> Formula:
        left = self.unary()
        if self.peek()[0] == "U":
            _, interval, _ = self.take()
            right = self.unary()
            if self.peek()[0] == "U":
                raise FormulaSyntaxError("chained U is ambiguous; add parentheses",
                                         self.peek()[2])
            return Until(left, right, interval)
        return left

    def unary(self) -> Formula:
        kind, value, pos = self.peek()
        if kind == "!":
            self.take()
            return Not(self.unary())
        if kind in ("F", "G"):
            self.take()
            child = self.unary()
            return Eventually(child, value) if kind == "F" else Always(child, value)
        if kind == "true":
            self.take()
            return TrueF()
        if kind == "ident":
            self.take()
            return Atom(value)
        if kind == "(":
            self.take()
            f = self.disjunction()
            self.take(")")
            return f
        found = "end of input" if kind == "eof" else repr(value or kind)
        raise FormulaSyntaxError(f"unexpected {found}", pos)


def parse(text: str) -> Formula:
    """Parse a formula such as ``"(!obstacle) U[0,15] goal"``.

    Precedence from tightest: ``!``, the prefix operators ``F[a,b]`` and
    ``G[a,b]``, binary ``U[a,b]`` (non-associative), ``&``, ``|``.
    """
    return _Parser(text).parse()


def _interval_text(interval) -> str:
    return f"[{interval[0]},{interval[1]}]"


def to_text(f: Formula) -> str:
    """Render ``f`` in the syntax accepted by :func:`parse`."""

    def operand(g: Formula) -> str:
        # operands of prefix operators and U must be atomic in the grammar
        if isinstance(g, (TrueF, Atom, Not, Eventually, Always)):
            return to_text(g)
        return f"({to_text(g)})"

    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return "!" + operand(f.child)
    if isinstance(f, Eventually):
        return "F" + _interval_text(f.interval) + " " + operand(f.child)
    if isinstance(f, Always):
        return "G" + _interval_text(f.interval) + " " + operand(f.child)
    if isinstance(f, Until):
        return (operand(f.left) + " U" + _interval_text(f.interval) + " "
                + operand(f.right))
    if isinstance(f, And):
        return " & ".join(
            f"({to_text(c)})" if isinstance(c, (And, Or)) else to_text(c)
            for c in f.children)
    if isinstance(f, Or):
        return " | ".join(
            f"({to_text(c)})" if isinstance(c, Or) else to_text(c)
            for c in f.children)
    raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# horizon and semantics

@lru_cache(maxsize=None)
def horizon(f: Formula) -> int:
    """Number of steps past ``t`` needed to decide ``f`` at ``t``."""
    if isinstance(f, (TrueF, Atom)):
        return 0
    if isinstance(f, Not):
        return horizon(f.child)
    if isinstance(f, (And, Or)):
        return max(horizon(c) for c in f.children)
    if isinstance(f, Until):
        return f.interval[1] + max(horizon(f.left), horizon(f.right))
    if isinstance(f, (Eventually, Always)):
        return f.interval[1] + horizon(f.child)
    raise TypeError(f"not a formula: {f!r}")


def evaluate(f: Formula, trace: Trace, t: int = 0) -> bool:
    """Return whether ``trace`` satisfies ``f`` at step ``t``.

    Raises :class:`HorizonError` when the trace is too short to decide.
    """
    last = len(trace) - 1
    if t < 0 or t + horizon(f) > last:
        raise HorizonError(
            f"formula needs steps up to {t + horizon(f)}, trace ends at {last}")
    memo: dict[tuple[int, int], bool] = {}

    def sat(g: Formula, k: int) -> bool:
        key = (id(g), k)
        if key in memo:
            return memo[key]
        if isinstance(g, TrueF):
            v = True
        elif isinstance(g, Atom):
            v = g.name in trace[k]
        elif isinstance(g, Not):
            v = not sat(g.child, k)
        elif isinstance(g, And):
            v = all(sat(c, k) for c in g.children)
        elif isinstance(g, Or):
            v = any(sat(c, k) for c in g.children)
        elif isinstance(g, Until):
            t1, t2 = g.interval
            v = False
            for tp in range(k + t1, k + t2 + 1):
                if sat(g.right, tp) and all(sat(g.left, tpp) for tpp in range(k, tp)):
                    v = True
                    break
        elif isinstance(g, Eventually):
            t1, t2 = g.interval
            v = any(sat(g.child, tp) for tp in range(k + t1, k + t2 + 1))
        elif isinstance(g, Always):
            t1, t2 = g.interval
            v = all(sat(g.child, tp) for tp in range(k + t1, k + t2 + 1))
        else:
            raise TypeError(f"not a formula: {g!r}")
        memo[key] = v
        return v

    return sat(f, t)


# --------------------------------------------------------------------------
# fragment with an exact LP relaxation under the flow encoding

def _is_state_formula(f: Formula, allow_negated_atoms: bool) -> bool:
    if isinstance(f, Atom):
        return True
    if allow_negated_atoms and isinstance(f, Not) and isinstance(f.child, Atom):
        return True
    if isinstance(f, (And, Or)):
        return all(_is_state_formula(c, allow_negated_atoms) for c in f.children)
    return False


def in_convex_fragment(f: Formula, allow_negated_atoms: bool = False) -> bool:
    """Check membership in the fragment

        psi := atom | psi & psi | psi | psi
        phi := G[a,b] psi | F[t,t] psi | psi U[t,t] psi | phi & phi

    With ``allow_negated_atoms`` the state formulas may also contain ``!atom``.
    """
    state = lambda g: _is_state_formula(g, allow_negated_atoms)  # noqa: E731
    if isinstance(f, And):
        return all(in_convex_fragment(c, allow_negated_atoms) for c in f.children)
    if isinstance(f, Always):
        return state(f.child)
    if isinstance(f, Eventually):
        return f.interval[0] == f.interval[1] and state(f.child)
    if isinstance(f, Until):
        return (f.interval[0] == f.interval[1]
                and state(f.left) and state(f.right))
    return False


# --------------------------------------------------------------------------
# random generation (tests and benchmarks)

DEFAULT_WEIGHTS = {
    "atom": 3.0, "true": 0.3, "not": 1.0, "and": 1.0, "or": 1.0,
    "until": 1.0, "eventually": 1.0, "always": 1.0,
}


def random_formula(rng: np.random.Generator, names: Sequence[str], depth: int,
                   max_bound: int = 3, weights: dict | None = None,
                   max_arity: int = 3) -> Formula:
    """Draw a formula of nesting depth at most ``depth``.

    ``weights`` maps operator kinds (see ``DEFAULT_WEIGHTS``) to relative
    probabilities; interval bounds are drawn from ``[0, max_bound]``.
    """
    w = dict(DEFAULT_WEIGHTS if weights is None else weights)
    kinds = [k for k in w if w[k] > 0]
    leaf_kinds = [k for k in kinds if k in ("atom", "true")] or ["atom"]

    def interval():
        a, b = sorted(int(x) for x in rng.integers(0, max_bound + 1, size=2))
        return a, b

    def draw(d: int) -> Formula:
        pool = kinds if d > 0 else leaf_kinds
        p = np.array([w[k] for k in pool], dtype=float)
        kind = pool[int(rng.choice(len(pool), p=p / p.sum()))]
        if kind == "atom":
            return Atom(names[int(rng.integers(len(names)))])
        if kind == "true":
            return TrueF()
        if kind == "not":
            return Not(draw(d - 1))
        if kind in ("and", "or"):
            n = int(rng.integers(2, max_arity + 1))
            parts = tuple(draw(d - 1) for _ in range(n))
            return And(parts) if kind == "and" else Or(parts)
        if kind == "until":
            return Until(draw(d - 1), draw(d - 1), interval())
        if kind == "eventually":
            return Eventually(draw(d - 1), interval())
        return Always(draw(d - 1), interval())

    return draw(depth)


def random_fragment_formula(rng: np.random.Generator, names: Sequence[str],
                            max_time: int, n_conjuncts: int = 2,
                            state_depth: int = 2, distinct_atoms: bool = False
                            ) -> Formula:
    """Draw a formula inside the convex fragment, with horizon <= max_time.

    With ``distinct_atoms`` no atom occurs twice within one state formula
    (each operand of a temporal operator).  Together with at most one label
    per state this is what makes the flow relaxation exact: a repeated atom
    under a disjunction, as in ``a | a``, is counted twice by the linear
    disjunction constraint and lets half a unit of flow satisfy it.
    """

    def shape(d: int) -> Formula:
        if d == 0 or rng.random() < 0.4:
            return Atom(names[int(rng.integers(len(names)))])
        n = int(rng.integers(2, 4))
        parts = tuple(shape(d - 1) for _ in range(n))
        return And(parts) if rng.random() < 0.4 else Or(parts)

    def relabel(f: Formula, pool: list[str]) -> Formula:
        if isinstance(f, Atom):
            return Atom(pool.pop())
        return type(f)(tuple(relabel(c, pool) for c in f.children))

    def state(d: int) -> Formula:
        if not distinct_atoms:
            return shape(d)
        while True:
            f = shape(d)
            leaves = sum(1 for g in subformulas(f) if isinstance(g, Atom))
            if leaves <= len(names):
                return relabel(f, [str(x) for x in rng.permutation(list(names))])

    parts = []
    for _ in range(n_conjuncts):
        kind = int(rng.integers(3))
        if kind == 0:
            a, b = sorted(int(x) for x in rng.integers(0, max_time + 1, size=2))
            parts.append(Always(state(state_depth), (a, b)))
        elif kind == 1:
            t = int(rng.integers(0, max_time + 1))
            parts.append(Eventually(state(state_depth), (t, t)))
        else:
            t = int(rng.integers(0, max_time + 1))
            parts.append(Until(state(state_depth), state(state_depth), (t, t)))
    return parts[0] if len(parts) == 1 else And(tuple(parts))
