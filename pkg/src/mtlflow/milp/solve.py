"""LP solving and branch-and-bound over :class:`MilpModel`."""
from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from . import simplex
from .model import ArrayForm, MilpModel, relax

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NODE_LIMIT = "node_limit"
TIME_LIMIT = "time_limit"


class SolverError(RuntimeError):
    pass


@dataclass
class SolverOptions:
    """Tolerances and limits shared by the LP and branch-and-bound layers.

    ``engine`` selects the LP algorithm: ``"simplex"`` is the bundled revised
    simplex, ``"highs"`` calls HiGHS' dual simplex through SciPy (used for
    benchmark-sized models), ``"auto"`` picks ``"simplex"`` for models with
    at most ``auto_limit`` rows+columns and HiGHS otherwise.

    ``integral_objective`` lets branch and bound round node bounds up when
    every objective term is an integer multiple of a binary (so every
    integer-feasible objective is an integer); ``"auto"`` detects this.
    """

    engine: str = "auto"
    auto_limit: int = 3000
    feas_tol: float = 1e-9
    int_tol: float = 1e-6
    mip_gap: float = 0.0
    max_nodes: int | None = None
    max_seconds: float | None = None
    branching: str = "most_fractional"
    bland_after: int = 50
    integral_objective: str | bool = "auto"


@dataclass
class LpSolution:
    status: str
    assignment: np.ndarray | None
    objective: float
    iterations: int = 0
    reduced_costs: np.ndarray | None = None


@dataclass
class MilpSolution:
    status: str
    assignment: np.ndarray | None
    objective: float
    node_count: int = 0
    wall_time: float = 0.0
    bound: float = -math.inf
    lp_iterations: int = 0
    history: list = field(default_factory=list, repr=False)

    @property
    def has_solution(self) -> bool:
        return self.assignment is not None


def _engine_for(form: ArrayForm, opts: SolverOptions) -> str:
    if opts.engine != "auto":
        return opts.engine
    size = form.A.shape[0] + form.A.shape[1]
    return "simplex" if size <= opts.auto_limit else "highs"


def _lp_arrays(form: ArrayForm, lb: np.ndarray, ub: np.ndarray,
               opts: SolverOptions, engine: str) -> LpSolution:
    if engine == "simplex":
        r = simplex.solve(form.c, form.A, form.row_lo, form.row_hi, lb, ub,
                          simplex.SimplexOptions(feas_tol=opts.feas_tol,
                                                 opt_tol=opts.feas_tol,
                                                 bland_after=opts.bland_after))
        obj = r.objective + form.c0 if r.status == OPTIMAL else r.objective
        return LpSolution(r.status, r.x, obj, r.iterations, r.reduced_costs)
    if engine == "highs":
        return _highs(form, lb, ub, opts)
    raise SolverError(f"unknown LP engine {engine!r}")


def _highs(form: ArrayForm, lb, ub, opts: SolverOptions) -> LpSolution:
    A = form.A
    has_lo = np.isfinite(form.row_lo)
    has_hi = np.isfinite(form.row_hi)
    eq = has_lo & has_hi & (form.row_lo == form.row_hi)
    ub_rows = has_hi & ~eq
    lb_rows = has_lo & ~eq
    A_ub = sp.vstack([A[ub_rows], -A[lb_rows]], format="csr")
    b_ub = np.concatenate([form.row_hi[ub_rows], -form.row_lo[lb_rows]])
    bounds = np.column_stack([lb, ub])
    res = linprog(form.c, A_ub=A_ub if A_ub.shape[0] else None,
                  b_ub=b_ub if A_ub.shape[0] else None,
                  A_eq=A[eq] if eq.any() else None,
                  b_eq=form.row_lo[eq] if eq.any() else None,
                  bounds=bounds, method="highs-ds",
                  options={"primal_feasibility_tolerance": max(opts.feas_tol, 1e-10),
                           "dual_feasibility_tolerance": max(opts.feas_tol, 1e-10),
                           "presolve": True})
    if res.status == 0:
        return LpSolution(OPTIMAL, np.asarray(res.x), float(res.fun) + form.c0,
                          int(getattr(res, "nit", 0)))
    if res.status == 2:
        return LpSolution(INFEASIBLE, None, math.inf)
    if res.status == 3:
        return LpSolution(UNBOUNDED, None, -math.inf)
    raise SolverError(f"HiGHS failed: {res.message}")


def solve_lp(m: MilpModel, options: SolverOptions | None = None) -> LpSolution:
    """Solve a model with no binary variables."""
    if m.n_binary:
        raise SolverError("solve_lp needs a model without binary variables; relax() it first")
    opts = options or SolverOptions()
    form = m.to_arrays()
    return _lp_arrays(form, form.lb, form.ub, opts, _engine_for(form, opts))


# --------------------------------------------------------------------------
# branch and bound

def objective_is_integral(form: ArrayForm) -> bool:
    """Every integer-feasible point has an integer objective value."""
    nz = np.flatnonzero(form.c)
    if not np.all(form.integer[nz]):
        return False
    vals = np.append(form.c[nz], form.c0)
    return bool(np.all(vals == np.round(vals)))


def _fractional(x: np.ndarray, idx: np.ndarray, tol: float) -> np.ndarray:
    f = np.abs(x[idx] - np.round(x[idx]))
    return idx[f > tol]


def _pick_branch(x, frac_idx, rule: str) -> int:
    if rule == "first_fractional":
        return int(frac_idx.min())
    if rule != "most_fractional":
        raise SolverError(f"unknown branching rule {rule!r}")
    dist = np.abs(x[frac_idx] - np.floor(x[frac_idx]) - 0.5)
    best = dist.min()
    # ties broken by lowest index
    return int(frac_idx[dist <= best + 1e-12].min())


@dataclass(order=True)
class _Node:
    bound: float
    neg_depth: int     # equal bounds: deeper node first
    seq: int
    fixes: dict = field(compare=False)

    @property
    def depth(self) -> int:
        return -self.neg_depth


def solve_micp(m: MilpModel, options: SolverOptions | None = None,
               on_node: Callable[[int, float, float], None] | None = None
               ) -> MilpSolution:
    """Globally optimal solution of ``m`` by LP-based branch and bound.

    Nodes are explored depth first until the first integer-feasible solution
    is found, then best first on the LP bound.  A node is discarded when its
    LP relaxation is infeasible or its bound cannot beat the incumbent.
    """
    opts = options or SolverOptions()
    start = time.perf_counter()
    form = m.to_arrays()
    engine = _engine_for(form, opts)
    int_idx = np.flatnonzero(form.integer)
    # relaxation bounds for binaries are [0,1]; fixes override them per node
    base_lb = form.lb.copy()
    base_ub = form.ub.copy()

    incumbent_x: np.ndarray | None = None
    incumbent = math.inf
    nodes = 0
    lp_iters = 0
    seq = 0
    history = []

    if opts.integral_objective == "auto":
        integral = objective_is_integral(form)
    else:
        integral = bool(opts.integral_objective)

    def prunable(bound: float) -> bool:
        if incumbent_x is None:
            return False
        if integral:
            # no integer value in [bound, incumbent) is left to find
            bound = math.ceil(bound - 1e-6)
        slack = opts.mip_gap * abs(incumbent)
        return bound >= incumbent - max(slack, 1e-9)

    def limits_hit() -> str | None:
        if opts.max_nodes is not None and nodes >= opts.max_nodes:
            return NODE_LIMIT
        if opts.max_seconds is not None and time.perf_counter() - start > opts.max_seconds:
            return TIME_LIMIT
        return None

    dive: list[_Node] = [_Node(-math.inf, 0, 0, {})]
    heap: list[_Node] = []
    best_open = -math.inf
    status = None
    while dive or heap:
        hit = limits_hit()
        if hit:
            status = hit
            break
        node = dive.pop() if incumbent_x is None and dive else None
        if node is None:
            for n in dive:
                heapq.heappush(heap, n)
            dive = []
            node = heapq.heappop(heap)
        if prunable(node.bound):
            continue
        lb = base_lb.copy()
        ub = base_ub.copy()
        for j, v in node.fixes.items():
            lb[j] = ub[j] = v
        lp = _lp_arrays(form, lb, ub, opts, engine)
        nodes += 1
        lp_iters += lp.iterations
        if lp.status == UNBOUNDED:
            if not node.fixes and int_idx.size == 0:
                return MilpSolution(UNBOUNDED, None, -math.inf, nodes,
                                    time.perf_counter() - start, -math.inf, lp_iters)
            raise SolverError("unbounded LP relaxation inside branch and bound")
        if lp.status != OPTIMAL:
            continue
        if on_node is not None:
            on_node(nodes, lp.objective, incumbent)
        if prunable(lp.objective):
            continue
        frac = _fractional(lp.assignment, int_idx, opts.int_tol)
        if frac.size == 0:
            x = lp.assignment.copy()
            x[int_idx] = np.round(x[int_idx])
            incumbent_x, incumbent = x, lp.objective
            history.append((nodes, time.perf_counter() - start, incumbent))
            continue
        j = _pick_branch(lp.assignment, frac, opts.branching)
        up_first = lp.assignment[j] >= 0.5
        children = []
        for v in (0.0, 1.0):
            seq += 1
            fixes = dict(node.fixes)
            fixes[j] = v
            children.append(_Node(lp.objective, node.neg_depth - 1, seq, fixes))
        if incumbent_x is None:
            # the dive continues with the child nearest the LP value
            if up_first:
                children.reverse()
            dive.extend(reversed(children))
        else:
            for ch in children:
                heapq.heappush(heap, ch)

    wall = time.perf_counter() - start
    open_bounds = [n.bound for n in heap] + [n.bound for n in dive]
    if status is None:
        best_open = incumbent
        if incumbent_x is None:
            return MilpSolution(INFEASIBLE, None, math.inf, nodes, wall, math.inf,
                                lp_iters, history)
        return MilpSolution(OPTIMAL, incumbent_x, incumbent, nodes, wall, best_open,
                            lp_iters, history)
    best_open = min(open_bounds + [incumbent]) if open_bounds else incumbent
    return MilpSolution(status, incumbent_x, incumbent, nodes, wall, best_open,
                        lp_iters, history)


# --------------------------------------------------------------------------
# relaxation gap

@dataclass
class RelaxationStats:
    j_star: float
    j_tilde_star: float
    r_gap: float | None  # None marks an undefined gap (J* = 0 and J~* < 0)
    milp: MilpSolution | None = None
    lp: LpSolution | None = None


def gap(j_star: float, j_tilde: float, tol: float = 1e-9) -> float | None:
    """``(J* - J~*) / J*`` with the conventions for ``J* = 0``."""
    if abs(j_star) <= tol:
        return 0.0 if abs(j_tilde) <= tol else None
    return (j_star - j_tilde) / j_star


def relaxation_stats(m: MilpModel, options: SolverOptions | None = None
                     ) -> RelaxationStats:
    sol = solve_micp(m, options)
    if sol.status != OPTIMAL:
        raise SolverError(f"integer problem not solved to optimality: {sol.status}")
    lp = solve_lp(relax(m), options)
    if lp.status != OPTIMAL:
        raise SolverError(f"relaxation not solved: {lp.status}")
    return RelaxationStats(sol.objective, lp.objective, gap(sol.objective, lp.objective),
                           sol, lp)
