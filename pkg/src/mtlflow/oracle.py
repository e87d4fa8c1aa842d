"""Exhaustive path enumeration: ground truth for small instances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .formula import (Always, And, Atom, Eventually, Formula, HorizonError, Not,
                      Or, TrueF, Until, atoms, evaluate, horizon)
from .system import TransitionSystem, trace_of

DEFAULT_BUDGET = 5_000_000


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class OracleResult:
    path: list[int] | None
    cost: float
    paths_checked: int

    @property
    def feasible(self) -> bool:
        return self.path is not None


def oracle_solve(ts: TransitionSystem, f: Formula, T: int,
                 budget: int = DEFAULT_BUDGET, method: str = "dfs") -> OracleResult:
    """Minimum-cost length-``T`` path from the start that satisfies ``f``.

    ``method="dfs"`` walks paths depth first, cheapest successor first, and
    cuts a branch once its accumulated cost reaches the best found so far.
    ``method="batch"`` enumerates every path layer by layer with numpy and
    evaluates the formula on all of them at once.
    """
    if horizon(f) > T:
        raise HorizonError(f"formula horizon {horizon(f)} exceeds T={T}")
    if method == "dfs":
        return _dfs(ts, f, T, budget)
    if method == "batch":
        return _batch(ts, f, T, budget)
    raise ValueError(f"unknown method {method!r}")


def _dfs(ts, f, T, budget) -> OracleResult:
    best_cost = math.inf
    best_path = None
    checked = 0
    succ = [sorted(ts.successors(s), key=lambda sp, s=s: (ts.costs[(s, sp)], sp))
            for s in range(ts.n_states)]
    path = [ts.initial]

    def walk(cost: float) -> None:
        nonlocal best_cost, best_path, checked
        if cost >= best_cost:
            return
        if len(path) == T + 1:
            checked += 1
            if checked > budget:
                raise BudgetExceeded(f"more than {budget} paths")
            if evaluate(f, trace_of(ts, path), 0):
                best_cost, best_path = cost, list(path)
            return
        s = path[-1]
        for sp in succ[s]:
            path.append(sp)
            walk(cost + ts.costs[(s, sp)])
            path.pop()

    walk(0.0)
    return OracleResult(best_path, best_cost, checked)


def _batch(ts, f, T, budget) -> OracleResult:
    trans = ts.transitions
    src = np.array([s for s, _ in trans], dtype=np.int64)
    dst = np.array([sp for _, sp in trans], dtype=np.int64)
    cst = np.array([ts.costs[e] for e in trans])
    order = np.argsort(src, kind="stable")
    src, dst, cst = src[order], dst[order], cst[order]
    start = np.searchsorted(src, np.arange(ts.n_states))
    count = np.bincount(src, minlength=ts.n_states)

    paths = np.array([[ts.initial]], dtype=np.int64)
    cost = np.zeros(1)
    for _ in range(T):
        last = paths[:, -1]
        reps = count[last]
        total = int(reps.sum())
        if total > budget:
            raise BudgetExceeded(f"more than {budget} paths")
        rows = np.repeat(np.arange(len(paths)), reps)
        # position of each new row among its parent's successors
        offs = np.arange(total) - np.repeat(np.cumsum(reps) - reps, reps)
        edge = start[last[rows]] + offs
        paths = np.column_stack([paths[rows], dst[edge]])
        cost = cost[rows] + cst[edge]

    truth = {}
    for name in ts.alphabet | _atom_names(f):
        has = np.array([name in ts.labels[s] for s in range(ts.n_states)])
        truth[name] = has[paths]
    sat = evaluate_batch(f, truth, len(paths), T + 1)[:, 0]
    idx = np.flatnonzero(sat)
    if idx.size == 0:
        return OracleResult(None, math.inf, len(paths))
    k = int(idx[np.argmin(cost[idx])])
    return OracleResult([int(s) for s in paths[k]], float(cost[k]), len(paths))


def _atom_names(f: Formula) -> set[str]:
    return set(atoms(f))


# --------------------------------------------------------------------------
# reach-avoid formulas: exact dynamic programming instead of enumeration

class UnsupportedFormula(ValueError):
    pass


def _is_state(f: Formula) -> bool:
    if isinstance(f, (Atom, TrueF)):
        return True
    if isinstance(f, Not):
        return _is_state(f.child)
    if isinstance(f, (And, Or)):
        return all(_is_state(c) for c in f.children)
    return False


def split_reach_avoid(f: Formula, T: int) -> tuple[list[Formula], list[Formula]]:
    """Split ``G[0,T] safe & F[0,T] goal_1 & ...`` into (safe parts, goals).

    Every conjunct must be ``G[0,T] psi`` or ``F[0,T] psi`` with ``psi`` free of
    temporal operators; anything else raises :class:`UnsupportedFormula`.
    """
    parts = f.children if isinstance(f, And) else (f,)
    safe, goals = [], []
    for g in parts:
        if isinstance(g, (Always, Eventually)) and g.interval == (0, T) and _is_state(g.child):
            (safe if isinstance(g, Always) else goals).append(g.child)
        else:
            raise UnsupportedFormula(f"{g} is not G[0,{T}] or F[0,{T}] over a state formula")
    return safe, goals


def reach_avoid_oracle(ts: TransitionSystem, f: Formula, T: int) -> OracleResult:
    """Minimum-cost path for a reach-avoid formula (see :func:`split_reach_avoid`).

    Dynamic programming over (state, step, set of goals already reached); exact
    for nonnegative costs and polynomial in the horizon.
    """
    safe, goals = split_reach_avoid(f, T)
    k = len(goals)
    ok = [all(evaluate(p, [ts.labels[s]]) for p in safe) for s in range(ts.n_states)]
    hit = [sum(1 << i for i, g in enumerate(goals) if evaluate(g, [ts.labels[s]]))
           for s in range(ts.n_states)]
    full = (1 << k) - 1
    s0 = ts.initial
    if not ok[s0]:
        return OracleResult(None, math.inf, 0)
    # layer t: (state, mask) -> (cost, parent key)
    layers = [{(s0, hit[s0]): (0.0, None)}]
    for _ in range(T):
        nxt: dict[tuple[int, int], tuple[float, tuple[int, int]]] = {}
        for (s, mask), (cost, _) in sorted(layers[-1].items()):
            for sp in ts.successors(s):
                if not ok[sp]:
                    continue
                key = (sp, mask | hit[sp])
                c = cost + ts.costs[(s, sp)]
                if key not in nxt or c < nxt[key][0]:
                    nxt[key] = (c, (s, mask))
        layers.append(nxt)
    ends = [(c, key) for key, (c, _) in layers[-1].items() if key[1] == full]
    if not ends:
        return OracleResult(None, math.inf, sum(len(l) for l in layers))
    cost, key = min(ends)
    path = []
    for t in range(T, -1, -1):
        path.append(key[0])
        key = layers[t][key][1]
    return OracleResult(path[::-1], cost, sum(len(l) for l in layers))


def evaluate_batch(f: Formula, truth: dict[str, np.ndarray], n: int, length: int
                   ) -> np.ndarray:
    """Truth of ``f`` on many traces at once.

    ``truth[name]`` is a boolean array (traces x steps).  Returns a boolean
    array of the same shape whose column ``t`` is defined wherever
    ``t + horizon(f) < length`` (later columns are False).
    """
    memo: dict[int, np.ndarray] = {}

    def sat(g: Formula) -> np.ndarray:
        key = id(g)
        if key in memo:
            return memo[key]
        valid = length - horizon(g)
        out = np.zeros((n, length), dtype=bool)
        if isinstance(g, TrueF):
            out[:, :valid] = True
        elif isinstance(g, Atom):
            if g.name in truth:
                out[:] = truth[g.name]
        elif isinstance(g, Not):
            out[:, :valid] = ~sat(g.child)[:, :valid]
        elif isinstance(g, And):
            out[:, :valid] = True
            for c in g.children:
                out[:, :valid] &= sat(c)[:, :valid]
        elif isinstance(g, Or):
            for c in g.children:
                out[:, :valid] |= sat(c)[:, :valid]
        elif isinstance(g, Eventually):
            a, b = g.interval
            child = sat(g.child)
            for k in range(a, b + 1):
                out[:, :valid] |= child[:, k:k + valid]
        elif isinstance(g, Always):
            a, b = g.interval
            child = sat(g.child)
            out[:, :valid] = True
            for k in range(a, b + 1):
                out[:, :valid] &= child[:, k:k + valid]
        elif isinstance(g, Until):
            a, b = g.interval
            left, right = sat(g.left), sat(g.right)
            # prefix[:, t, j]: left holds on steps t .. t+j-1
            held = np.ones((n, valid), dtype=bool)
            for k in range(0, b + 1):
                if k >= a:
                    out[:, :valid] |= held & right[:, k:k + valid]
                held &= left[:, k:k + valid]
        else:
            raise TypeError(f"not a formula: {g!r}")
        memo[key] = out
        return out

    return sat(f)
