"""Labeled, weighted finite transition systems and grid-world scenarios."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .formula import Always, And, Atom, Eventually, Formula, Not, Or

__all__ = [
    "TransitionSystem", "ScenarioParams", "Scenario", "UnknownStateError",
    "InvalidPathError", "PlacementError", "adjacent", "is_path", "path_cost",
    "trace_of", "grid_world", "random_layout", "random_scenario", "scenario_formula",
    "RNG_NAME",
]

# recorded in reports so that scenario streams can be reproduced
RNG_NAME = f"numpy-{np.__version__}/PCG64"


class UnknownStateError(KeyError):
    pass


class InvalidPathError(ValueError):
    pass


class PlacementError(ValueError):
    pass


@dataclass(frozen=True)
class TransitionSystem:
    """States are ``0..n_states-1``; ``costs`` maps each transition to its cost."""

    n_states: int
    initial: int
    costs: Mapping[tuple[int, int], float]
    labels: tuple[frozenset[str], ...]
    alphabet: frozenset[str]
    names: tuple[str, ...] | None = None
    _succ: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.initial < self.n_states:
            raise UnknownStateError(f"initial state {self.initial} out of range")
        if len(self.labels) != self.n_states:
            raise ValueError("one label set per state is required")
        labels = tuple(frozenset(l) for l in self.labels)
        alphabet = frozenset(self.alphabet)
        for s, l in enumerate(labels):
            if not l <= alphabet:
                raise ValueError(f"state {s} has labels outside the alphabet: {set(l - alphabet)}")
        succ: list[list[int]] = [[] for _ in range(self.n_states)]
        costs = {}
        for (s, sp), c in self.costs.items():
            if not (0 <= s < self.n_states and 0 <= sp < self.n_states):
                raise UnknownStateError(f"transition ({s}, {sp}) leaves the state set")
            if c < 0:
                raise ValueError(f"negative cost on transition ({s}, {sp})")
            costs[(int(s), int(sp))] = float(c)
            succ[s].append(int(sp))
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "_succ", tuple(tuple(sorted(x)) for x in succ))

    @property
    def transitions(self) -> list[tuple[int, int]]:
        return sorted(self.costs)

    def successors(self, s: int) -> tuple[int, ...]:
        self._check(s)
        return self._succ[s]

    def _check(self, s: int) -> None:
        if not 0 <= s < self.n_states:
            raise UnknownStateError(f"unknown state {s}")


def adjacent(ts: TransitionSystem, s: int) -> set[int]:
    return set(ts.successors(s))


def is_path(ts: TransitionSystem, seq: Sequence[int]) -> bool:
    for s in seq:
        ts._check(s)
    return all((a, b) in ts.costs for a, b in zip(seq, seq[1:]))


def _require_path(ts: TransitionSystem, seq: Sequence[int]) -> None:
    if len(seq) == 0:
        raise InvalidPathError("a path has at least one state")
    for t, (a, b) in enumerate(zip(seq, seq[1:])):
        ts._check(a)
        ts._check(b)
        if (a, b) not in ts.costs:
            raise InvalidPathError(f"step {t}: ({a}, {b}) is not a transition")
    ts._check(seq[-1])


def path_cost(ts: TransitionSystem, seq: Sequence[int]) -> float:
    _require_path(ts, seq)
    return float(sum(ts.costs[(a, b)] for a, b in zip(seq, seq[1:])))


def trace_of(ts: TransitionSystem, seq: Sequence[int]) -> list[frozenset[str]]:
    _require_path(ts, seq)
    return [ts.labels[s] for s in seq]


# --------------------------------------------------------------------------
# grid worlds

def cell_index(n: int, cell: Sequence[int]) -> int:
    r, c = int(cell[0]), int(cell[1])
    if not (0 <= r < n and 0 <= c < n):
        raise UnknownStateError(f"cell {(r, c)} outside the {n}x{n} grid")
    return r * n + c


def grid_world(n: int, cells: Mapping[tuple[int, int], Iterable[str]],
               start: Sequence[int], alphabet: Iterable[str] | None = None
               ) -> TransitionSystem:
    """King-move grid: unit cost to each of the <=8 neighbours, 0 to stay."""
    if n < 1:
        raise ValueError("grid side must be positive")
    labels = [set() for _ in range(n * n)]
    for cell, names in cells.items():
        labels[cell_index(n, cell)].update(names)
    if alphabet is None:
        alphabet = set().union(*labels) if labels else set()
    costs = {}
    for r in range(n):
        for c in range(n):
            s = r * n + c
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < n and 0 <= cc < n:
                        costs[(s, rr * n + cc)] = 0.0 if dr == dc == 0 else 1.0
    names = tuple(f"r{r}c{c}" for r in range(n) for c in range(n))
    return TransitionSystem(n * n, cell_index(n, start), costs,
                            tuple(frozenset(l) for l in labels),
                            frozenset(alphabet), names)


# --------------------------------------------------------------------------
# scenarios

@dataclass(frozen=True)
class ScenarioParams:
    n: int
    n_groups: int
    n_targets: int
    n_obstacles: int
    horizon: int
    seed: int = 0

    def __post_init__(self):
        for name in ("n", "n_groups", "n_targets", "n_obstacles", "horizon"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.n_groups * self.n_targets + self.n_obstacles + 1 > self.n * self.n:
            raise PlacementError("too many special cells for the grid")


@dataclass(frozen=True)
class Scenario:
    """A grid layout plus horizon; the on-disk JSON form of a problem."""

    n: int
    start: tuple[int, int]
    cells: tuple[tuple[tuple[int, int], tuple[str, ...]], ...]
    horizon: int
    seed: int | None = None
    spec: str | None = None
    description: str | None = None

    def system(self) -> TransitionSystem:
        cells: dict[tuple[int, int], set[str]] = {}
        for cell, names in self.cells:
            cells.setdefault(cell, set()).update(names)
        return grid_world(self.n, cells, self.start)

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "start": list(self.start),
            "cells": [{"cell": list(c), "labels": list(l)} for c, l in self.cells],
            "horizon": self.horizon,
        }
        for key in ("seed", "spec", "description"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            cells = tuple((tuple(int(v) for v in e["cell"]), tuple(e["labels"]))
                          for e in d["cells"])
            sc = cls(int(d["n"]), tuple(int(v) for v in d["start"]), cells,
                     int(d["horizon"]), d.get("seed"), d.get("spec"),
                     d.get("description"))
        except (KeyError, TypeError) as e:
            raise ValueError(f"malformed scenario: {e}") from None
        cell_index(sc.n, sc.start)
        for cell, _ in sc.cells:
            cell_index(sc.n, cell)
        return sc

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def target_name(group: int, index: int) -> str:
    return f"target_{group}_{index}"


def scenario_formula(n_groups: int, n_targets: int, horizon: int) -> Formula:
    """G[0,T] !obstacle & F[0,T](target_1_1 | ...) & ... (one F per group)."""
    parts: list[Formula] = [Always(Not(Atom("obstacle")), (0, horizon))]
    for k in range(1, n_groups + 1):
        group = [Atom(target_name(k, l)) for l in range(1, n_targets + 1)]
        body = group[0] if len(group) == 1 else Or(tuple(group))
        parts.append(Eventually(body, (0, horizon)))
    return And(tuple(parts))


def random_layout(params: ScenarioParams) -> Scenario:
    """Place obstacles and target groups uniformly without overlap.

    The start is the corner (0, 0) and never receives a label.  Feasibility
    of the resulting problem is not checked.
    """
    n = params.n
    rng = np.random.default_rng(params.seed)
    need = params.n_obstacles + params.n_groups * params.n_targets
    free = np.arange(1, n * n)  # cell 0 is the start
    if need > len(free):
        raise PlacementError("not enough free cells")
    picked = rng.choice(free, size=need, replace=False)
    cells = []
    for i in range(params.n_obstacles):
        s = int(picked[i])
        cells.append(((s // n, s % n), ("obstacle",)))
    i = params.n_obstacles
    for k in range(1, params.n_groups + 1):
        for l in range(1, params.n_targets + 1):
            s = int(picked[i])
            i += 1
            cells.append(((s // n, s % n), (target_name(k, l),)))
    return Scenario(n, (0, 0), tuple(cells), params.horizon, params.seed)


def random_scenario(params: ScenarioParams) -> tuple[TransitionSystem, Formula]:
    """Random grid world plus its multi-target reach-avoid formula."""
    ts = random_layout(params).system()
    f = scenario_formula(params.n_groups, params.n_targets, params.horizon)
    # every proposition of the formula is declared even if no cell carries it
    ts = TransitionSystem(ts.n_states, ts.initial, ts.costs, ts.labels,
                          ts.alphabet | {"obstacle"} | {target_name(k, l)
                          for k in range(1, params.n_groups + 1)
                          for l in range(1, params.n_targets + 1)}, ts.names)
    return ts, f
