"""Compile an MTL formula into linear constraints over occupancy expressions.

Both encodings describe where the system is at each step by an affine
expression ``b_s(t)`` in their own decision variables.  This module adds one
satisfaction variable ``z[f, t]`` per (subformula, step) pair reachable from
``(root, 0)``, tied to its children by the standard and/or linearisation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .formula import (Always, And, Atom, Eventually, Formula, HorizonError, Not,
                      Or, TrueF, Until, evaluate, horizon)
from .milp import BINARY, CONTINUOUS, EQ, GE, LE, MilpModel


@dataclass(frozen=True)
class Affine:
    """``sum(coefs[j] * x_j) + const``."""

    coefs: Mapping[int, float]
    const: float = 0.0


# (state, step) -> occupancy expression
OccupancyHandle = Mapping[tuple[int, int], Affine]


def encode_and(model: MilpModel, z: int, zs: Sequence[int]) -> None:
    """``z <= z_i`` for all i and ``z >= 1 - n + sum(z_i)``."""
    if not zs:
        raise ValueError("conjunction of nothing")
    for zi in zs:
        model.add_constr({z: 1.0, zi: -1.0}, LE, 0.0)
    coefs = {z: 1.0}
    for zi in zs:
        coefs[zi] = coefs.get(zi, 0.0) - 1.0
    model.add_constr(coefs, GE, 1.0 - len(zs))


def encode_or(model: MilpModel, z: int, zs: Sequence[int]) -> None:
    """``z <= sum(z_i)`` and ``z >= z_i`` for all i."""
    if not zs:
        raise ValueError("disjunction of nothing")
    coefs = {z: 1.0}
    for zi in zs:
        coefs[zi] = coefs.get(zi, 0.0) - 1.0
    model.add_constr(coefs, LE, 0.0)
    for zi in zs:
        model.add_constr({z: 1.0, zi: -1.0}, GE, 0.0)


@dataclass
class FormulaEncoder:
    model: MilpModel
    occupancy: OccupancyHandle
    labels: Sequence[frozenset[str]]
    horizon: int
    binary_z: bool = False
    prefix: str = "z"
    # (subformula, step) -> variable
    sat: dict[tuple[Formula, int], int] = field(default_factory=dict)
    node_ids: dict[Formula, int] = field(default_factory=dict)
    # Until auxiliaries: (variable, conjunct variables)
    aux: list[tuple[int, list[int]]] = field(default_factory=list)

    def _new(self, tag: str) -> int:
        kind = BINARY if self.binary_z else CONTINUOUS
        return self.model.add_var(f"{self.prefix}_{tag}", kind, 0.0, 1.0)

    def _node_id(self, f: Formula) -> int:
        if f not in self.node_ids:
            self.node_ids[f] = len(self.node_ids)
        return self.node_ids[f]

    def _aux(self, t: int, conj: list[int]) -> int:
        w = self._new(f"w{len(self.aux)}_t{t}")
        self.aux.append((w, conj))
        return w

    def encode(self, f: Formula, t: int = 0) -> int:
        """Variable for ``z[f, t]``, creating it and its constraints on demand."""
        if t + horizon(f) > self.horizon:
            raise HorizonError(f"{f} at step {t} needs steps beyond T={self.horizon}")
        key = (f, t)
        if key in self.sat:
            return self.sat[key]
        z = self._new(f"n{self._node_id(f)}_t{t}")
        self.sat[key] = z
        m = self.model
        if isinstance(f, TrueF):
            m.add_constr({z: 1.0}, EQ, 1.0)
        elif isinstance(f, Atom):
            coefs: dict[int, float] = {z: 1.0}
            const = 0.0
            for s, lab in enumerate(self.labels):
                if f.name in lab:
                    b = self.occupancy[(s, t)]
                    for j, a in b.coefs.items():
                        coefs[j] = coefs.get(j, 0.0) - a
                    const += b.const
            m.add_constr(coefs, EQ, const)
        elif isinstance(f, Not):
            zc = self.encode(f.child, t)
            m.add_constr({z: 1.0, zc: 1.0}, EQ, 1.0)
        elif isinstance(f, And):
            encode_and(m, z, [self.encode(c, t) for c in f.children])
        elif isinstance(f, Or):
            encode_or(m, z, [self.encode(c, t) for c in f.children])
        elif isinstance(f, Eventually):
            t1, t2 = f.interval
            encode_or(m, z, [self.encode(f.child, k) for k in range(t + t1, t + t2 + 1)])
        elif isinstance(f, Always):
            t1, t2 = f.interval
            encode_and(m, z, [self.encode(f.child, k) for k in range(t + t1, t + t2 + 1)])
        elif isinstance(f, Until):
            t1, t2 = f.interval
            ws = []
            for tp in range(t + t1, t + t2 + 1):
                conj = [self.encode(f.right, tp)]
                conj += [self.encode(f.left, tpp) for tpp in range(t, tp)]
                w = self._aux(tp, conj)
                encode_and(m, w, conj)
                ws.append(w)
            encode_or(m, z, ws)
        else:
            raise TypeError(f"not a formula: {f!r}")
        return z

    def assign(self, trace, x) -> None:
        """Write the truth value of every encoded (subformula, step) into ``x``."""
        for (g, t), z in self.sat.items():
            x[z] = 1.0 if evaluate(g, trace, t) else 0.0
        for w, conj in self.aux:
            x[w] = min(x[c] for c in conj)


def encode_formula(model: MilpModel, f: Formula, occupancy: OccupancyHandle,
                   labels: Sequence[frozenset[str]], T: int,
                   binary_z: bool = False) -> FormulaEncoder:
    """Encode ``f`` from step 0; the returned encoder holds the satisfaction map."""
    if horizon(f) > T:
        raise HorizonError(f"formula horizon {horizon(f)} exceeds T={T}")
    enc = FormulaEncoder(model, occupancy, labels, T, binary_z)
    enc.encode(f, 0)
    return enc
