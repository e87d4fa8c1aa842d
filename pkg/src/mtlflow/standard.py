"""Node-occupancy encoding: one binary per (state, step)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import Affine, FormulaEncoder, encode_formula
from .formula import Formula, HorizonError, horizon
from .milp import BINARY, CONTINUOUS, EQ, GE, MilpModel, MilpSolution
from .system import InvalidPathError, TransitionSystem, is_path


class EncodingError(ValueError):
    pass


class NonOneHotError(ValueError):
    pass


@dataclass
class StandardEncoding:
    ts: TransitionSystem
    formula: Formula
    T: int
    model: MilpModel
    b: dict[tuple[int, int], int]      # (state, step) -> binary variable
    cost_vars: list[int]               # one epigraph variable per step
    sat: FormulaEncoder
    root: int

    @property
    def occupancy(self) -> dict[tuple[int, int], Affine]:
        return {k: Affine({v: 1.0}) for k, v in self.b.items()}


def encode_standard(ts: TransitionSystem, f: Formula, T: int,
                    binary_z: bool = False) -> StandardEncoding:
    if T < 0:
        raise ValueError("horizon must be nonnegative")
    if horizon(f) > T:
        raise HorizonError(f"formula horizon {horizon(f)} exceeds T={T}")
    for s in range(ts.n_states):
        if not ts.successors(s):
            raise EncodingError(f"state {s} has no outgoing transition")

    m = MilpModel()
    S = range(ts.n_states)
    b = {(s, t): m.add_var(f"b_s{s}_t{t}", BINARY) for t in range(T + 1) for s in S}

    m.add_constr({b[(ts.initial, 0)]: 1.0}, EQ, 1.0, "init")
    for t in range(T + 1):
        m.add_constr({b[(s, t)]: 1.0 for s in S}, EQ, 1.0, f"onehot_t{t}")
    for t in range(T):
        for s in S:
            coefs = {b[(sp, t + 1)]: 1.0 for sp in ts.successors(s)}
            coefs[b[(s, t)]] = coefs.get(b[(s, t)], 0.0) - 1.0
            m.add_constr(coefs, GE, 0.0, f"trans_s{s}_t{t}")

    # c_t >= C(s,s') (b_s(t) + b_s'(t+1) - 1); zero-cost pairs only restate c_t >= 0
    cost_vars = []
    for t in range(T):
        c = m.add_var(f"cost_t{t}", CONTINUOUS, 0.0)
        cost_vars.append(c)
        for (s, sp), cost in sorted(ts.costs.items()):
            if cost == 0:
                continue
            m.add_constr({c: 1.0, b[(s, t)]: -cost, b[(sp, t + 1)]: -cost},
                         GE, -cost, f"epi_s{s}_s{sp}_t{t}")
    m.set_objective({c: 1.0 for c in cost_vars})

    occ = {k: Affine({v: 1.0}) for k, v in b.items()}
    enc = encode_formula(m, f, occ, ts.labels, T, binary_z)
    root = enc.sat[(f, 0)]
    m.add_constr({root: 1.0}, EQ, 1.0, "spec")
    return StandardEncoding(ts, f, T, m, b, cost_vars, enc, root)


def decode_standard(enc: StandardEncoding, sol: MilpSolution | np.ndarray,
                    int_tol: float = 1e-6) -> list[int]:
    """Read the visited state at every step off the occupancy binaries."""
    x = sol.assignment if isinstance(sol, MilpSolution) else sol
    if x is None:
        raise ValueError("solution carries no assignment")
    path = []
    for t in range(enc.T + 1):
        on = [s for s in range(enc.ts.n_states) if x[enc.b[(s, t)]] >= 1 - int_tol]
        off = all(x[enc.b[(s, t)]] <= int_tol for s in range(enc.ts.n_states) if s not in on)
        if len(on) != 1 or not off:
            raise NonOneHotError(f"occupancy at step {t} is not one-hot")
        path.append(on[0])
    if not is_path(enc.ts, path):
        raise InvalidPathError(f"decoded sequence {path} is not a path")
    return path
