"""Experiment harness: single instances, scenario sweeps, reports."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np

from .flow import decode_flow, encode_flow, solve_flow
from .formula import Formula, evaluate
from .milp import (INFEASIBLE, NODE_LIMIT, OPTIMAL, TIME_LIMIT, SolverOptions, gap,
                   relax, solve_lp, solve_micp)
from .oracle import reach_avoid_oracle
from .standard import decode_standard, encode_standard
from .system import (RNG_NAME, ScenarioParams, TransitionSystem, path_cost,
                     random_scenario, trace_of)

log = logging.getLogger(__name__)

CSV_COLUMNS = ["scenario_id", "seed", "encoding", "status", "objective",
               "relaxed_objective", "r_gap", "n_binary", "n_constraints",
               "bb_nodes", "wall_time_s"]

ENCODINGS = ("standard", "flow")


class VerificationError(AssertionError):
    """A decoded plan violates the formula or disagrees with the objective."""


@dataclass
class BenchRecord:
    scenario_id: str
    seed: int | None
    encoding: str
    status: str
    objective: float | None
    relaxed_objective: float | None
    r_gap: float | None
    n_binary: int
    n_constraints: int
    bb_nodes: int
    wall_time_s: float
    # not part of the CSV columns
    encode_time_s: float = 0.0
    path: list[int] | None = None
    mode_value: int | None = None
    trial: int | None = None
    oracle_objective: float | None = None

    def csv_row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


def encode(ts: TransitionSystem, f: Formula, T: int, encoding: str,
           binary_z: bool = False):
    if encoding == "standard":
        return encode_standard(ts, f, T, binary_z)
    if encoding == "flow":
        return encode_flow(ts, f, T, binary_z)
    raise ValueError(f"unknown encoding {encoding!r}")


def decode(enc, x, encoding: str, int_tol: float = 1e-6) -> list[int]:
    return decode_standard(enc, x, int_tol) if encoding == "standard" else decode_flow(enc, x, int_tol)


def run_instance(ts: TransitionSystem, f: Formula, T: int, encoding: str,
                 options: SolverOptions | None = None, scenario_id: str = "instance",
                 seed: int | None = None, relaxation: bool = True,
                 fragment_fast_path: bool = False, binary_z: bool = False
                 ) -> BenchRecord:
    """Encode, solve, relax, decode and verify one instance."""
    opts = options or SolverOptions()
    t0 = time.perf_counter()
    enc = encode(ts, f, T, encoding, binary_z)
    t1 = time.perf_counter()
    if encoding == "flow" and fragment_fast_path:
        sol, path = solve_flow(enc, opts)
    else:
        sol = solve_micp(enc.model, opts)
        path = None
    solve_time = time.perf_counter() - t1

    relaxed = None
    if relaxation:
        lp = solve_lp(relax(enc.model), opts)
        relaxed = lp.objective if lp.status == OPTIMAL else None

    objective = sol.objective if sol.has_solution else None
    # incumbents of interrupted solves are verified as well
    if sol.has_solution:
        if path is None:
            path = decode(enc, sol.assignment, encoding, opts.int_tol)
        if not evaluate(f, trace_of(ts, path), 0):
            raise VerificationError(f"{encoding}: decoded path {path} violates {f}")
        cost = path_cost(ts, path)
        if abs(cost - sol.objective) > 1e-6:
            raise VerificationError(
                f"{encoding}: path cost {cost} differs from objective {sol.objective}")
    r = None
    if sol.status == OPTIMAL and relaxed is not None:
        r = gap(sol.objective, relaxed)
    return BenchRecord(scenario_id, seed, encoding, sol.status, objective, relaxed, r,
                       enc.model.n_binary, enc.model.n_constraints, sol.node_count,
                       solve_time, t1 - t0, path)


# --------------------------------------------------------------------------
# sweeps

def sweep_params(mode: str, value: int, seed: int) -> ScenarioParams:
    if mode == "complexity":
        return ScenarioParams(n=5 + value, n_groups=value, n_targets=2,
                              n_obstacles=2 * value, horizon=15, seed=seed)
    if mode == "length":
        return ScenarioParams(n=10, n_groups=3, n_targets=2, n_obstacles=3,
                              horizon=value, seed=seed)
    raise ValueError(f"unknown sweep mode {mode!r}")


def trial_seed(master: int, value: int, trial: int) -> int:
    return int(np.random.SeedSequence([master, value, trial]).generate_state(1)[0])


@dataclass
class SweepResult:
    mode: str
    records: list[BenchRecord]
    metadata: dict = field(default_factory=dict)


def _run_trial(args) -> list[BenchRecord]:
    mode, value, trial, seed, opts, encodings = args
    params = sweep_params(mode, value, seed)
    ts, f = random_scenario(params)
    sid = f"{mode}-{value}-{trial}"
    truth = reach_avoid_oracle(ts, f, params.horizon)
    j_star = truth.cost if truth.feasible else None
    out = []
    for e in encodings:
        rec = run_instance(ts, f, params.horizon, e, opts, sid, seed)
        rec.mode_value, rec.trial, rec.oracle_objective = value, trial, j_star
        log.info("%s %s status=%s obj=%s nodes=%d time=%.2fs", sid, e, rec.status,
                 rec.objective, rec.bb_nodes, rec.wall_time_s)
        check_against_oracle(rec, j_star)
        out.append(rec)
    return out


def check_against_oracle(rec: BenchRecord, j_star: float | None) -> None:
    """Optimal and infeasible outcomes must match the oracle; incumbents may not beat it."""
    where = f"{rec.scenario_id} {rec.encoding}"
    if rec.status == INFEASIBLE and j_star is not None:
        raise VerificationError(f"{where}: infeasible but the oracle found cost {j_star}")
    if rec.status == OPTIMAL:
        if j_star is None:
            raise VerificationError(f"{where}: optimal but the oracle found no path")
        if abs(rec.objective - j_star) > 1e-6:
            raise VerificationError(f"{where}: optimum {rec.objective} != oracle {j_star}")
    if rec.status in (NODE_LIMIT, TIME_LIMIT) and rec.objective is not None:
        if j_star is None or rec.objective < j_star - 1e-6:
            raise VerificationError(f"{where}: incumbent {rec.objective} beats the oracle")


def run_sweep(mode: str, values: Sequence[int], trials: int, seed: int,
              options: SolverOptions | None = None, sequential: bool = True,
              workers: int | None = None,
              encodings: Sequence[str] = ENCODINGS) -> SweepResult:
    """Random scenarios for each value and trial, solved with every encoding."""
    if not values:
        raise ValueError("no sweep values")
    opts = options or SolverOptions()
    jobs = [(mode, v, k, trial_seed(seed, v, k), opts, tuple(encodings))
            for v in values for k in range(trials)]
    if sequential:
        chunks = [_run_trial(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_trial, jobs))
    records = [r for c in chunks for r in c]
    order = {e: i for i, e in enumerate(encodings)}
    records.sort(key=lambda r: (r.mode_value, r.trial, order[r.encoding]))
    meta = {"mode": mode, "values": list(values), "trials": trials, "seed": seed,
            "rng": RNG_NAME, "concurrent": not sequential,
            "engine": opts.engine, "max_seconds": opts.max_seconds,
            "max_nodes": opts.max_nodes}
    return SweepResult(mode, records, meta)


def summarize(records: Iterable[BenchRecord], key: str = "wall_time_s") -> dict:
    """Median, quartiles and range of ``key`` per (mode value, encoding)."""
    groups: dict[tuple, list[float]] = {}
    for r in records:
        groups.setdefault((r.mode_value, r.encoding), []).append(getattr(r, key))
    out = {}
    for k, vals in sorted(groups.items(), key=lambda kv: (kv[0][0] is None, kv[0])):
        q1, med, q3 = np.percentile(vals, [25, 50, 75])
        out[k] = {"n": len(vals), "min": min(vals), "q1": float(q1),
                  "median": float(med), "q3": float(q3), "max": max(vals)}
    return out


# --------------------------------------------------------------------------
# reports

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def emit_report(records: Sequence[BenchRecord], fmt: str = "csv",
                metadata: dict | None = None) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt(v) for v in r.csv_row()])
        return buf.getvalue()
    if fmt == "json":
        doc = {"metadata": metadata or {}, "records": [asdict(r) for r in records]}
        return json.dumps(doc, indent=2, allow_nan=False, default=_json_default)
    raise ValueError(f"unknown report format {fmt!r}")


def _json_default(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    raise TypeError(f"cannot serialise {type(v).__name__}")


_TYPES = {f.name: f.type for f in fields(BenchRecord)}


def _parse(col: str, text: str):
    if text == "":
        return None
    t = _TYPES[col]
    if "int" in t and "float" not in t:
        return int(text)
    if "float" in t:
        return float(text)
    return text


def read_csv_report(text: str) -> list[BenchRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_COLUMNS:
        raise ValueError("not a benchmark CSV report")
    return [BenchRecord(**{c: _parse(c, v) for c, v in zip(CSV_COLUMNS, row)})
            for row in rows[1:]]


def read_json_report(text: str) -> list[BenchRecord]:
    doc = json.loads(text)
    return [BenchRecord(**r) for r in doc["records"]]
