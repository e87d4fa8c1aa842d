"""Linear models over continuous and binary variables (minimisation only)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

CONTINUOUS = "continuous"
BINARY = "binary"

LE, EQ, GE = "<=", "==", ">="

# a linear expression: variable index -> coefficient
Expr = Mapping[int, float]


class ModelError(ValueError):
    pass


@dataclass
class Variable:
    name: str
    kind: str = CONTINUOUS
    lb: float = 0.0
    ub: float = math.inf


@dataclass
class Constraint:
    coefs: dict[int, float]
    sense: str
    rhs: float
    name: str | None = None


@dataclass
class MilpModel:
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    objective_constant: float = 0.0
    _names: dict[str, int] = field(default_factory=dict, repr=False)

    # -- construction -----------------------------------------------------
    def add_var(self, name: str, kind: str = CONTINUOUS, lb: float = 0.0,
                ub: float = math.inf) -> int:
        if kind not in (CONTINUOUS, BINARY):
            raise ModelError(f"unknown variable kind {kind!r}")
        if name in self._names:
            raise ModelError(f"duplicate variable name {name!r}")
        if kind == BINARY:
            lb, ub = 0.0, 1.0
        if lb > ub:
            raise ModelError(f"empty bounds for {name!r}: [{lb}, {ub}]")
        self.variables.append(Variable(name, kind, float(lb), float(ub)))
        self._names[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def add_constr(self, coefs: Expr, sense: str, rhs: float,
                   name: str | None = None) -> int:
        if sense not in (LE, EQ, GE):
            raise ModelError(f"unknown relation {sense!r}")
        clean = {}
        for j, a in coefs.items():
            if not 0 <= j < len(self.variables):
                raise ModelError(f"constraint references undeclared variable {j}")
            if a != 0:
                clean[j] = clean.get(j, 0.0) + float(a)
        self.constraints.append(Constraint(clean, sense, float(rhs), name))
        return len(self.constraints) - 1

    def set_objective(self, coefs: Expr, constant: float = 0.0) -> None:
        for j in coefs:
            if not 0 <= j < len(self.variables):
                raise ModelError(f"objective references undeclared variable {j}")
        self.objective = {j: float(a) for j, a in coefs.items() if a != 0}
        self.objective_constant = float(constant)

    def var_index(self, name: str) -> int:
        return self._names[name]

    # -- queries ------------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    @property
    def binaries(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.kind == BINARY]

    @property
    def n_binary(self) -> int:
        return sum(v.kind == BINARY for v in self.variables)

    def evaluate(self, x: Mapping[int, float] | np.ndarray, coefs: Expr) -> float:
        return float(sum(a * x[j] for j, a in coefs.items()))

    def objective_value(self, x) -> float:
        return self.evaluate(x, self.objective) + self.objective_constant

    def max_violation(self, x) -> float:
        """Largest violation of any bound or constraint at ``x``."""
        worst = 0.0
        for j, v in enumerate(self.variables):
            worst = max(worst, v.lb - x[j], x[j] - v.ub)
        for c in self.constraints:
            lhs = self.evaluate(x, c.coefs)
            if c.sense == LE:
                worst = max(worst, lhs - c.rhs)
            elif c.sense == GE:
                worst = max(worst, c.rhs - lhs)
            else:
                worst = max(worst, abs(lhs - c.rhs))
        return worst

    def copy(self) -> "MilpModel":
        return MilpModel(
            [Variable(v.name, v.kind, v.lb, v.ub) for v in self.variables],
            [Constraint(dict(c.coefs), c.sense, c.rhs, c.name) for c in self.constraints],
            dict(self.objective), self.objective_constant, dict(self._names))

    def to_arrays(self) -> "ArrayForm":
        return ArrayForm.from_model(self)


def relax(m: MilpModel) -> MilpModel:
    """Copy of ``m`` with every binary variable made continuous on [0, 1]."""
    r = m.copy()
    for v in r.variables:
        if v.kind == BINARY:
            v.kind = CONTINUOUS
            v.lb, v.ub = 0.0, 1.0
    return r


@dataclass
class ArrayForm:
    """``min c @ x  s.t.  row_lo <= A @ x <= row_hi,  lb <= x <= ub``."""

    c: np.ndarray
    c0: float
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray  # bool mask of binary variables

    @classmethod
    def from_model(cls, m: MilpModel) -> "ArrayForm":
        n = m.n_vars
        c = np.zeros(n)
        for j, a in m.objective.items():
            c[j] = a
        rows, cols, vals = [], [], []
        lo = np.empty(m.n_constraints)
        hi = np.empty(m.n_constraints)
        for i, con in enumerate(m.constraints):
            for j, a in con.coefs.items():
                rows.append(i)
                cols.append(j)
                vals.append(a)
            lo[i] = -math.inf if con.sense == LE else con.rhs
            hi[i] = math.inf if con.sense == GE else con.rhs
        A = sp.csr_matrix((vals, (rows, cols)), shape=(m.n_constraints, n))
        lb = np.array([v.lb for v in m.variables], dtype=float)
        ub = np.array([v.ub for v in m.variables], dtype=float)
        integer = np.array([v.kind == BINARY for v in m.variables], dtype=bool)
        return cls(c, m.objective_constant, A, lo, hi, lb, ub, integer)


def expr_sum(exprs: Iterable[Expr]) -> dict[int, float]:
    out: dict[int, float] = {}
    for e in exprs:
        for j, a in e.items():
            out[j] = out.get(j, 0.0) + a
    return out
