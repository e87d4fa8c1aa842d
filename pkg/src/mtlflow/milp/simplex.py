"""Bounded-variable revised primal simplex.

Solves ``min c @ x  s.t.  row_lo <= A @ x <= row_hi,  lb <= x <= ub``.

Each row gets a logical variable ``r_i = a_i @ x`` carrying the row bounds, so
the working system is ``[A  -I  S] @ (x, r, art) = 0`` with every column boxed.
Rows whose activity at the starting point violates the row bounds receive an
artificial column; phase one drives the artificials to zero, phase two
optimises the true objective with the artificials fixed at zero.

The basis inverse is an LU factorisation (SuperLU) followed by an eta file in
product form; it is refactorised every ``refactor_every`` pivots.  Pricing is
Dantzig's rule.  After ``bland_after`` consecutive degenerate pivots the
leaving row is the tied one with the smallest variable index (as in Bland's
rule) and the entering column is drawn uniformly from the eligible ones.  Pure
Bland cannot cycle but can stall for tens of thousands of pivots on the
heavily degenerate flow models; the random draw picks Bland's own column with
positive probability, so the stall still ends almost surely, and in practice
within a few hundred pivots.  The draw is seeded, so solves are repeatable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_BASIC, _AT_LB, _AT_UB, _FREE = 0, 1, 2, 3


class NumericalFailure(RuntimeError):
    pass


@dataclass
class SimplexOptions:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    pivot_tol: float = 1e-11
    phase1_tol: float = 1e-7
    bland_after: int = 50
    refactor_every: int = 64
    max_iter: int | None = None


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray | None
    objective: float
    iterations: int
    reduced_costs: np.ndarray | None = None
    # nonbasic position of each structural: "basic", "lower", "upper", "free"
    position: list[str] | None = None
    bland_pivots: int = 0


class _Basis:
    def __init__(self, M: sp.csc_matrix, basis: np.ndarray):
        self.M = M
        self.basis = basis
        self.m = M.shape[0]
        self.factor()

    def factor(self) -> None:
        B = self.M[:, self.basis].tocsc()
        try:
            self.lu = spla.splu(B, permc_spec="COLAMD",
                                options={"SymmetricMode": False})
        except RuntimeError as e:
            raise NumericalFailure(f"singular basis: {e}") from None
        self.etas: list[tuple[int, np.ndarray]] = []

    def ftran(self, a: np.ndarray) -> np.ndarray:
        x = self.lu.solve(a)
        for r, w in self.etas:
            xr = x[r] / w[r]
            x -= w * xr
            x[r] = xr
        return x

    def btran(self, c: np.ndarray) -> np.ndarray:
        v = np.array(c, dtype=float)
        for r, w in reversed(self.etas):
            v[r] = (v[r] - (v @ w - v[r] * w[r])) / w[r]
        return self.lu.solve(v, trans="T")

    def pivot(self, r: int, w: np.ndarray) -> None:
        self.etas.append((r, w))


def _column(M: sp.csc_matrix, j: int) -> np.ndarray:
    col = np.zeros(M.shape[0])
    lo, hi = M.indptr[j], M.indptr[j + 1]
    col[M.indices[lo:hi]] = M.data[lo:hi]
    return col


def _trivial(c, lb, ub, opts: SimplexOptions) -> SimplexResult:
    x = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    pos = []
    for j in range(len(c)):
        if c[j] < -opts.opt_tol:
            if not np.isfinite(ub[j]):
                return SimplexResult(UNBOUNDED, None, -math.inf, 0)
            x[j] = ub[j]
        elif c[j] > opts.opt_tol:
            if not np.isfinite(lb[j]):
                return SimplexResult(UNBOUNDED, None, -math.inf, 0)
            x[j] = lb[j]
        pos.append("lower" if x[j] == lb[j] else "upper" if x[j] == ub[j] else "free")
    return SimplexResult(OPTIMAL, x, float(c @ x), 0, np.array(c, dtype=float), pos)


def solve(c, A, row_lo, row_hi, lb, ub,
          options: SimplexOptions | None = None) -> SimplexResult:
    opts = options or SimplexOptions()
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    row_lo = np.asarray(row_lo, dtype=float)
    row_hi = np.asarray(row_hi, dtype=float)
    A = sp.csc_matrix(A, dtype=float)
    m, n = A.shape
    if np.any(lb > ub) or np.any(row_lo > row_hi):
        return SimplexResult(INFEASIBLE, None, math.inf, 0)
    if m == 0:
        return _trivial(c, lb, ub, opts)

    # starting point: structurals at a finite bound (or 0 when free)
    x0 = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    act = A @ x0
    below = act < row_lo - opts.feas_tol
    above = act > row_hi + opts.feas_tol
    bad = np.flatnonzero(below | above)
    k = len(bad)

    target = np.where(below, row_lo, np.where(above, row_hi, act))
    sign = np.sign(target[bad] - act[bad])
    S = sp.csc_matrix((sign, (bad, np.arange(k))), shape=(m, k))
    M = sp.hstack([A, -sp.identity(m, format="csc"), S], format="csc")
    N = n + m + k

    lo = np.concatenate([lb, row_lo, np.zeros(k)])
    hi = np.concatenate([ub, row_hi, np.full(k, math.inf)])
    x = np.concatenate([x0, target, np.abs(target[bad] - act[bad])])

    state = np.empty(N, dtype=np.int8)
    for j in range(n):
        if np.isfinite(lb[j]):
            state[j] = _AT_LB
        elif np.isfinite(ub[j]):
            state[j] = _AT_UB
        else:
            state[j] = _FREE
    basis = np.arange(n, n + m)
    state[n:n + m] = _BASIC
    state[n + m:] = _BASIC
    for q, i in enumerate(bad):
        # the logical leaves the basis at the bound it violated
        basis[i] = n + m + q
        state[n + i] = _AT_LB if below[i] else _AT_UB

    solver = _Solver(M, lo, hi, x, state, basis, opts)
    if k:
        cost1 = np.zeros(N)
        cost1[n + m:] = 1.0
        solver.art_start = n + m
        solver.optimize(cost1)
        if solver.x[n + m:].sum() > opts.phase1_tol:
            return SimplexResult(INFEASIBLE, None, math.inf, solver.iterations,
                                 bland_pivots=solver.bland_pivots)
        solver.hi[n + m:] = 0.0
        for j in range(n + m, N):
            if state[j] != _BASIC:
                solver.x[j] = 0.0
                state[j] = _AT_LB

    cost2 = np.zeros(N)
    cost2[:n] = c
    status = solver.optimize(cost2)
    if status == UNBOUNDED:
        return SimplexResult(UNBOUNDED, None, -math.inf, solver.iterations,
                             bland_pivots=solver.bland_pivots)

    solver.refresh()
    xs = solver.x[:n].copy()
    d = solver.reduced_costs(cost2)[:n]
    names = {_BASIC: "basic", _AT_LB: "lower", _AT_UB: "upper", _FREE: "free"}
    pos = [names[int(s)] for s in solver.state[:n]]
    return SimplexResult(OPTIMAL, xs, float(c @ xs), solver.iterations, d, pos,
                         solver.bland_pivots)


class _Solver:
    def __init__(self, M, lo, hi, x, state, basis, opts: SimplexOptions):
        self.M = M
        self.MT = M.T.tocsr()
        self.lo = lo
        self.hi = hi
        self.x = x
        self.state = state
        self.basis = basis
        self.opts = opts
        self.B = _Basis(M, basis)
        self.iterations = 0
        self.bland_pivots = 0
        self.rng = np.random.default_rng(0)
        self.art_start = M.shape[1]
        m = M.shape[0]
        self.max_iter = opts.max_iter or max(10000, 50 * (m + M.shape[1]))

    def refresh(self) -> None:
        """Refactorise and recompute basic values from the nonbasic ones."""
        self.B.factor()
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.B.ftran(-(self.M @ xn))

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        y = self.B.btran(cost[self.basis])
        d = cost - self.MT @ y
        d[self.basis] = 0.0
        return d

    def optimize(self, cost: np.ndarray) -> str:
        opts = self.opts
        lo, hi, x, state, basis = self.lo, self.hi, self.x, self.state, self.basis
        degenerate = 0
        self.refresh()
        since_refactor = 0
        while True:
            if since_refactor >= opts.refactor_every:
                self.refresh()
                since_refactor = 0
            d = self.reduced_costs(cost)
            movable = hi > lo
            elig = (((state == _AT_LB) & (d < -opts.opt_tol))
                    | ((state == _AT_UB) & (d > opts.opt_tol))
                    | ((state == _FREE) & (np.abs(d) > opts.opt_tol))) & movable
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return OPTIMAL
            bland = degenerate >= opts.bland_after
            if bland:
                j = int(cand[self.rng.integers(cand.size)])
                self.bland_pivots += 1
            else:
                j = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[j] < 0 else -1.0

            w = self.B.ftran(_column(self.M, j))
            alpha = direction * w
            xb = x[basis]
            lob, hib = lo[basis], hi[basis]
            ratios = np.full(len(basis), math.inf)
            dec = alpha > opts.pivot_tol
            inc = alpha < -opts.pivot_tol
            fin = dec & np.isfinite(lob)
            ratios[fin] = np.maximum(xb[fin] - lob[fin], 0.0) / alpha[fin]
            fin = inc & np.isfinite(hib)
            ratios[fin] = np.maximum(hib[fin] - xb[fin], 0.0) / -alpha[fin]
            theta = ratios.min() if len(ratios) else math.inf
            flip = hi[j] - lo[j]

            self.iterations += 1
            if self.iterations > self.max_iter:
                raise NumericalFailure("simplex iteration limit reached")

            if not math.isfinite(theta) and not math.isfinite(flip):
                return UNBOUNDED
            if flip <= theta:
                # entering variable runs to its opposite bound; basis unchanged
                x[basis] = xb - direction * flip * w
                if state[j] == _AT_LB:
                    x[j] = hi[j]
                    state[j] = _AT_UB
                else:
                    x[j] = lo[j]
                    state[j] = _AT_LB
                degenerate = 0
                continue
            if not math.isfinite(theta):
                return UNBOUNDED

            ties = np.flatnonzero(ratios <= theta + 1e-12)
            if bland:
                r = int(ties[np.argmin(basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            leaving = int(basis[r])

            x[basis] = xb - direction * theta * w
            x[j] = x[j] + direction * theta
            if alpha[r] > 0:
                x[leaving] = lo[leaving]
                state[leaving] = _AT_LB
            else:
                x[leaving] = hi[leaving]
                state[leaving] = _AT_UB
            if leaving >= self.art_start:
                # artificials never re-enter
                hi[leaving] = 0.0
                x[leaving] = 0.0
                state[leaving] = _AT_LB
            basis[r] = j
            state[j] = _BASIC
            self.B.pivot(r, w)
            since_refactor += 1
            degenerate = degenerate + 1 if theta <= 1e-12 else 0
