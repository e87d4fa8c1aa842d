import json
import math

import numpy as np
import pytest

from mtlflow import bench, load_scenario
from mtlflow.bench import (CSV_COLUMNS, BenchRecord, VerificationError, check_against_oracle,
                           emit_report, read_csv_report, read_json_report, run_instance,
                           run_sweep, summarize, sweep_params, trial_seed)
from mtlflow.formula import evaluate, parse
from mtlflow.milp import INFEASIBLE, OPTIMAL, SolverOptions
from mtlflow.oracle import oracle_solve, reach_avoid_oracle
from mtlflow.system import grid_world, path_cost, random_scenario, trace_of


def _rec(**kw):
    base = dict(scenario_id="s", seed=1, encoding="flow", status="optimal", objective=3.0,
                relaxed_objective=1.5, r_gap=0.5, n_binary=10, n_constraints=20,
                bb_nodes=4, wall_time_s=0.25)
    base.update(kw)
    return BenchRecord(**base)


# single instances

@pytest.fixture(scope="module")
def multitarget():
    sc = load_scenario("multitarget")
    return sc.system(), parse(sc.spec), sc.horizon


@pytest.mark.parametrize("encoding", ["standard", "flow"])
def test_run_instance_matches_oracle(multitarget, encoding):
    ts, f, T = multitarget
    truth = oracle_solve(ts, f, T)
    rec = run_instance(ts, f, T, encoding)
    assert rec.status == OPTIMAL and rec.objective == truth.cost
    assert evaluate(f, trace_of(ts, rec.path)) and path_cost(ts, rec.path) == rec.objective
    assert rec.r_gap == pytest.approx((rec.objective - rec.relaxed_objective) / rec.objective)
    assert rec.encode_time_s >= 0 and rec.wall_time_s >= 0


def test_gap_ordering_on_bundled_instance(multitarget):
    ts, f, T = multitarget
    std = run_instance(ts, f, T, "standard")
    flow = run_instance(ts, f, T, "flow")
    assert flow.r_gap <= std.r_gap + 1e-6
    assert flow.n_binary > std.n_binary


def test_fragment_instance_has_no_gap():
    ts = grid_world(3, {(0, 2): {"t1"}, (2, 0): {"t2"}}, (0, 0))
    rec = run_instance(ts, parse("F[2,2] (t1 | t2)"), 3, "flow")
    assert rec.status == OPTIMAL and rec.r_gap <= 1e-6


def test_infeasible_instance_agrees_everywhere():
    ts = grid_world(4, {(3, 3): {"goal"}}, (0, 0))
    f = parse("F[0,2] goal")
    assert not oracle_solve(ts, f, 2).feasible
    for e in ("standard", "flow"):
        rec = run_instance(ts, f, 2, e)
        assert rec.status == INFEASIBLE and rec.objective is None and rec.r_gap is None


def test_verification_failure_is_fatal(monkeypatch, multitarget):
    ts, f, T = multitarget
    # a decoder that returns the stay-put path, which violates the formula
    monkeypatch.setattr(bench, "decode", lambda *a, **k: [ts.initial] * (T + 1))
    with pytest.raises(VerificationError):
        run_instance(ts, f, T, "flow")


def test_check_against_oracle():
    check_against_oracle(_rec(), 3.0)
    with pytest.raises(VerificationError):
        check_against_oracle(_rec(objective=4.0), 3.0)
    with pytest.raises(VerificationError):
        check_against_oracle(_rec(status="infeasible", objective=None), 3.0)
    with pytest.raises(VerificationError):
        check_against_oracle(_rec(status="time_limit", objective=2.0), 3.0)
    check_against_oracle(_rec(status="time_limit", objective=5.0), 3.0)
    check_against_oracle(_rec(status="infeasible", objective=None), None)


def test_unknown_encoding():
    with pytest.raises(ValueError):
        run_instance(grid_world(2, {}, (0, 0)), parse("true"), 1, "nodes")


# sweeps

def test_sweep_params():
    p = sweep_params("complexity", 3, 0)
    assert (p.n, p.n_groups, p.n_targets, p.n_obstacles, p.horizon) == (8, 3, 2, 6, 15)
    p = sweep_params("length", 20, 0)
    assert (p.n, p.n_groups, p.n_targets, p.n_obstacles, p.horizon) == (10, 3, 2, 3, 20)
    with pytest.raises(ValueError):
        sweep_params("width", 1, 0)


def test_trial_seeds_are_distinct_and_stable():
    seeds = {trial_seed(0, v, k) for v in range(1, 5) for k in range(10)}
    assert len(seeds) == 40
    assert trial_seed(0, 2, 3) == trial_seed(0, 2, 3)
    assert trial_seed(1, 2, 3) != trial_seed(0, 2, 3)


def test_same_master_seed_same_scenarios():
    for mode, v in (("complexity", 2), ("length", 10)):
        a = [random_scenario(sweep_params(mode, v, trial_seed(5, v, k))) for k in range(3)]
        b = [random_scenario(sweep_params(mode, v, trial_seed(5, v, k))) for k in range(3)]
        assert a == b


@pytest.fixture(scope="module")
def small_sweep():
    # one node per solve keeps this quick; statuses are node limits
    return run_sweep("complexity", [1, 2, 3, 4], 5, 7, SolverOptions(max_nodes=1))


def test_sweep_record_count_and_order(small_sweep):
    recs = small_sweep.records
    assert len(recs) == 40
    keys = [(r.mode_value, r.trial, r.encoding) for r in recs]
    assert keys == [(v, k, e) for v in range(1, 5) for k in range(5) for e in ("standard", "flow")]
    assert small_sweep.metadata["concurrent"] is False
    assert all(r.seed == trial_seed(7, r.mode_value, r.trial) for r in recs)
    # oracle values are attached for later analysis
    for r in recs[::2]:
        p = sweep_params("complexity", r.mode_value, r.seed)
        ts, f = random_scenario(p)
        truth = reach_avoid_oracle(ts, f, p.horizon)
        assert r.oracle_objective == (truth.cost if truth.feasible else None)


def test_sweep_is_deterministic_apart_from_timing(small_sweep):
    again = run_sweep("complexity", [1, 2, 3, 4], 5, 7, SolverOptions(max_nodes=1))
    strip = lambda r: (r.scenario_id, r.seed, r.encoding, r.status, r.objective,
                       r.relaxed_objective, r.n_binary, r.n_constraints, r.bb_nodes)
    assert [strip(r) for r in again.records] == [strip(r) for r in small_sweep.records]


def test_concurrent_sweep_is_flagged_and_merged():
    opts = SolverOptions(max_nodes=1)
    seq = run_sweep("complexity", [1], 2, 3, opts)
    par = run_sweep("complexity", [1], 2, 3, opts, sequential=False, workers=2)
    assert par.metadata["concurrent"] is True
    assert [(r.scenario_id, r.encoding, r.objective) for r in par.records] == \
        [(r.scenario_id, r.encoding, r.objective) for r in seq.records]


def test_sweep_requires_values():
    with pytest.raises(ValueError):
        run_sweep("complexity", [], 1, 0)


def test_summarize_quartiles():
    times = [0.1, 0.4, 0.2, 0.8, 0.3]
    recs = [_rec(mode_value=2, wall_time_s=t) for t in times]
    recs += [_rec(mode_value=2, encoding="standard", wall_time_s=t) for t in (1.0, 3.0)]
    s = summarize(recs)
    assert list(s) == [(2, "flow"), (2, "standard")]
    flow = s[(2, "flow")]
    # sorted 0.1 0.2 0.3 0.4 0.8, linear interpolation between order statistics
    assert flow["median"] == pytest.approx(0.3)
    assert flow["q1"] == pytest.approx(0.2) and flow["q3"] == pytest.approx(0.4)
    assert (flow["min"], flow["max"], flow["n"]) == (0.1, 0.8, 5)
    assert s[(2, "standard")]["median"] == pytest.approx(2.0)


# reports

def test_empty_report_is_header_only():
    assert emit_report([], "csv") == ",".join(CSV_COLUMNS) + "\n"


def test_one_record_two_lines():
    lines = emit_report([_rec()], "csv").splitlines()
    assert len(lines) == 2
    assert lines[1].split(",") == ["s", "1", "flow", "optimal", "3.0", "1.5", "0.5", "10",
                                   "20", "4", "0.25"]


def test_missing_values_are_empty_cells():
    row = emit_report([_rec(status="infeasible", objective=None, r_gap=None)], "csv")
    assert row.splitlines()[1].split(",")[4] == ""


def test_json_csv_json_round_trip():
    recs = [_rec(), _rec(seed=None, status="time_limit", r_gap=None, wall_time_s=1 / 3),
            _rec(objective=None, relaxed_objective=None, r_gap=None, status="infeasible")]
    doc = emit_report(recs, "json", {"mode": "x"})
    first = read_json_report(doc)
    back = read_json_report(emit_report(read_csv_report(emit_report(first, "csv")), "json"))
    for a, b in zip(first, back):
        assert a.csv_row() == b.csv_row()
    assert json.loads(doc)["metadata"] == {"mode": "x"}


def test_json_mirrors_csv_fields():
    d = json.loads(emit_report([_rec(path=[0, 1])], "json"))["records"][0]
    assert set(CSV_COLUMNS) <= set(d)
    assert d["path"] == [0, 1]


def test_report_rejects_nan_and_unknown_format():
    with pytest.raises(ValueError):
        emit_report([_rec(r_gap=math.nan)], "json")
    with pytest.raises(ValueError):
        emit_report([], "xml")
    with pytest.raises(ValueError):
        read_csv_report("a,b\n1,2\n")


def test_numpy_scalars_serialise():
    d = json.loads(emit_report([_rec(n_binary=np.int64(3), objective=np.float64(2.5))], "json"))
    assert d["records"][0]["n_binary"] == 3 and d["records"][0]["objective"] == 2.5
