"""Edge-flow encoding on the time-expanded graph: one binary per edge."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import Affine, FormulaEncoder, encode_formula
from .formula import Formula, HorizonError, evaluate, horizon, in_convex_fragment
from .milp import (BINARY, EQ, OPTIMAL, LpSolution, MilpModel, MilpSolution,
                   SolverOptions, relax, solve_lp, solve_micp)
from .system import TransitionSystem, is_path, path_cost, trace_of


class BrokenFlowError(ValueError):
    pass


@dataclass
class TimeGraph:
    n_states: int
    T: int
    # edge k joins (edges[k][0], edges[k][2]) -> (edges[k][1], edges[k][2] + 1)
    edges: list[tuple[int, int, int]]
    inputs: dict[tuple[int, int], list[int]]
    outputs: dict[tuple[int, int], list[int]]

    @property
    def nodes(self) -> list[tuple[int, int]]:
        return [(s, t) for t in range(self.T + 1) for s in range(self.n_states)]


def build_time_graph(ts: TransitionSystem, T: int) -> TimeGraph:
    if T < 0:
        raise ValueError("horizon must be nonnegative")
    edges = []
    inputs = {(s, t): [] for t in range(T + 1) for s in range(ts.n_states)}
    outputs = {(s, t): [] for t in range(T + 1) for s in range(ts.n_states)}
    for t in range(T):
        for s, sp in ts.transitions:
            k = len(edges)
            edges.append((s, sp, t))
            outputs[(s, t)].append(k)
            inputs[(sp, t + 1)].append(k)
    return TimeGraph(ts.n_states, T, edges, inputs, outputs)


@dataclass
class FlowEncoding:
    ts: TransitionSystem
    formula: Formula
    T: int
    graph: TimeGraph
    model: MilpModel
    a: list[int]                                # edge index -> binary variable
    occupancy: dict[tuple[int, int], Affine]    # b_s(t) as flow sums
    sat: FormulaEncoder
    root: int


def encode_flow(ts: TransitionSystem, f: Formula, T: int, binary_z: bool = False,
                one_hot_check: bool = False) -> FlowEncoding:
    """Build the flow program.

    ``one_hot_check`` adds the implied constraints ``sum_s b_s(t) = 1``; they
    are redundant and only serve to test the implication.
    """
    if horizon(f) > T:
        raise HorizonError(f"formula horizon {horizon(f)} exceeds T={T}")
    G = build_time_graph(ts, T)
    m = MilpModel()
    a = [m.add_var(f"a_s{s}_s{sp}_t{t}", BINARY) for s, sp, t in G.edges]

    for t in range(T):
        for s in range(ts.n_states):
            coefs: dict[int, float] = {}
            for k in G.outputs[(s, t)]:
                coefs[a[k]] = coefs.get(a[k], 0.0) + 1.0
            for k in G.inputs[(s, t)]:
                coefs[a[k]] = coefs.get(a[k], 0.0) - 1.0
            rhs = 1.0 if (s, t) == (ts.initial, 0) else 0.0
            m.add_constr(coefs, EQ, rhs, f"flow_s{s}_t{t}")

    occ: dict[tuple[int, int], Affine] = {}
    for s in range(ts.n_states):
        if T == 0:
            # no edges: the start is occupied by definition
            occ[(s, 0)] = Affine({}, 1.0 if s == ts.initial else 0.0)
        else:
            occ[(s, 0)] = Affine({a[k]: 1.0 for k in G.outputs[(s, 0)]})
        for t in range(1, T + 1):
            occ[(s, t)] = Affine({a[k]: 1.0 for k in G.inputs[(s, t)]})
    if one_hot_check:
        for t in range(T + 1):
            coefs = {}
            const = 0.0
            for s in range(ts.n_states):
                for j, c in occ[(s, t)].coefs.items():
                    coefs[j] = coefs.get(j, 0.0) + c
                const += occ[(s, t)].const
            if coefs:
                m.add_constr(coefs, EQ, 1.0 - const, f"onehot_t{t}")

    m.set_objective({a[k]: ts.costs[(s, sp)] for k, (s, sp, t) in enumerate(G.edges)})
    enc = encode_formula(m, f, occ, ts.labels, T, binary_z)
    root = enc.sat[(f, 0)]
    m.add_constr({root: 1.0}, EQ, 1.0, "spec")
    return FlowEncoding(ts, f, T, G, m, a, occ, enc, root)


def decode_flow(enc: FlowEncoding, sol: MilpSolution | np.ndarray,
                int_tol: float = 1e-6) -> list[int]:
    """Follow the unit flow from the start node through every layer."""
    x = sol.assignment if isinstance(sol, MilpSolution) else sol
    if x is None:
        raise ValueError("solution carries no assignment")
    vals = np.asarray([x[v] for v in enc.a])
    frac = np.flatnonzero((vals > int_tol) & (vals < 1 - int_tol))
    if frac.size:
        s, sp, t = enc.graph.edges[int(frac[0])]
        raise BrokenFlowError(f"fractional flow {vals[frac[0]]:.4g} on edge ({s},{t})->({sp},{t + 1})")
    s = enc.ts.initial
    path = [s]
    for t in range(enc.T):
        active = [k for k in enc.graph.outputs[(s, t)] if vals[k] >= 1 - int_tol]
        if len(active) != 1:
            raise BrokenFlowError(f"{len(active)} active edges leave ({s},{t})")
        s = enc.graph.edges[active[0]][1]
        path.append(s)
    if not is_path(enc.ts, path):
        raise BrokenFlowError(f"decoded sequence {path} is not a path")
    return path


def relaxed_occupancy(enc: FlowEncoding, lp: LpSolution | np.ndarray
                      ) -> dict[tuple[int, int], float]:
    x = lp.assignment if isinstance(lp, LpSolution) else lp
    return {k: float(sum(c * x[j] for j, c in e.coefs.items()) + e.const)
            for k, e in enc.occupancy.items()}


def extract_path(enc: FlowEncoding, x: np.ndarray) -> list[int]:
    """Follow the largest outgoing flow per layer (lowest edge index on ties)."""
    s = enc.ts.initial
    path = [s]
    for t in range(enc.T):
        out = enc.graph.outputs[(s, t)]
        k = max(out, key=lambda e: (x[enc.a[e]], -e))
        s = enc.graph.edges[k][1]
        path.append(s)
    return path


def solve_flow(enc: FlowEncoding, options: SolverOptions | None = None,
               fragment_fast_path: bool = True) -> tuple[MilpSolution, list[int] | None]:
    """Solve the encoding, returning the solution and the decoded path.

    For formulas in the convex fragment the LP relaxation is tried first; a
    path extracted from it is accepted when it satisfies the formula and its
    cost matches the LP bound, which certifies optimality without branching.
    """
    opts = options or SolverOptions()
    if fragment_fast_path and in_convex_fragment(enc.formula):
        lp = solve_lp(relax(enc.model), opts)
        if lp.status != OPTIMAL:
            return MilpSolution(lp.status, None, lp.objective, 1), None
        path = extract_path(enc, lp.assignment)
        cost = path_cost(enc.ts, path)
        if (evaluate(enc.formula, trace_of(enc.ts, path), 0)
                and abs(cost - lp.objective) <= 1e-6):
            x = path_assignment(enc, path)
            return MilpSolution(OPTIMAL, x, cost, 1, 0.0, lp.objective,
                                lp.iterations), path
    sol = solve_micp(enc.model, opts)
    path = decode_flow(enc, sol, opts.int_tol) if sol.status == OPTIMAL else None
    return sol, path


def path_assignment(enc: FlowEncoding, path: list[int]) -> np.ndarray:
    """Full variable assignment induced by ``path`` (edges plus satisfaction)."""
    x = np.zeros(enc.model.n_vars)
    for t in range(enc.T):
        for k in enc.graph.outputs[(path[t], t)]:
            if enc.graph.edges[k][1] == path[t + 1]:
                x[enc.a[k]] = 1.0
    enc.sat.assign(trace_of(enc.ts, path), x)
    return x
