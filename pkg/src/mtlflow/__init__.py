"""Minimum-cost path synthesis for bounded MTL specifications on labelled
transition systems, with a node-occupancy and a flow-based MILP encoding."""
from importlib import resources

from .bench import (BenchRecord, VerificationError, emit_report, read_csv_report,
                    read_json_report, run_instance, run_sweep, summarize)
from .encoder import Affine, FormulaEncoder, encode_formula
from .flow import (BrokenFlowError, FlowEncoding, TimeGraph, build_time_graph,
                   decode_flow, encode_flow, extract_path, relaxed_occupancy, solve_flow)
from .formula import (Always, And, Atom, Eventually, Formula, FormulaSyntaxError,
                      HorizonError, IntervalError, Not, Or, TrueF, Until, evaluate,
                      horizon, in_convex_fragment, parse, random_formula,
                      random_fragment_formula, to_text)
from .oracle import (BudgetExceeded, OracleResult, UnsupportedFormula, oracle_solve,
                     reach_avoid_oracle)
from .standard import (EncodingError, NonOneHotError, StandardEncoding,
                       decode_standard, encode_standard)
from .system import (InvalidPathError, PlacementError, Scenario, ScenarioParams,
                     TransitionSystem, UnknownStateError, adjacent, grid_world, is_path,
                     path_cost, random_layout, random_scenario, trace_of)

__version__ = "0.1.0"

__all__ = [
    "BenchRecord", "VerificationError", "emit_report", "read_csv_report",
    "read_json_report", "run_instance", "run_sweep", "summarize", "Affine",
    "FormulaEncoder", "encode_formula", "BrokenFlowError", "FlowEncoding", "TimeGraph",
    "build_time_graph", "decode_flow", "encode_flow", "extract_path",
    "relaxed_occupancy", "solve_flow", "Always", "And", "Atom", "Eventually", "Formula",
    "FormulaSyntaxError", "HorizonError", "IntervalError", "Not", "Or", "TrueF",
    "Until", "evaluate", "horizon", "in_convex_fragment", "parse", "random_formula",
    "random_fragment_formula", "to_text", "BudgetExceeded", "OracleResult",
    "UnsupportedFormula", "oracle_solve", "reach_avoid_oracle", "EncodingError",
    "NonOneHotError", "StandardEncoding", "decode_standard", "encode_standard",
    "InvalidPathError", "PlacementError", "Scenario", "ScenarioParams",
    "TransitionSystem", "UnknownStateError", "adjacent", "grid_world", "is_path",
    "path_cost", "random_layout", "random_scenario", "trace_of", "BUNDLED_SCENARIOS",
    "load_scenario", "__version__",
]

BUNDLED_SCENARIOS = ("reach_avoid", "either_or", "multitarget")


def load_scenario(name: str) -> Scenario:
    """One of the example scenarios shipped with the package."""
    if name not in BUNDLED_SCENARIOS:
        raise KeyError(f"no bundled scenario {name!r}")
    text = resources.files(__package__).joinpath("scenarios", f"{name}.json").read_text()
    return Scenario.from_json(text)
