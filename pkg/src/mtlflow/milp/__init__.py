"""Mixed-integer linear models, a revised simplex LP solver and branch and bound."""
from .lpformat import LpNameError, export_lp
from .model import (BINARY, CONTINUOUS, EQ, GE, LE, ArrayForm, Constraint,
                    MilpModel, ModelError, Variable, expr_sum, relax)
from .simplex import NumericalFailure
from .solve import (INFEASIBLE, NODE_LIMIT, OPTIMAL, TIME_LIMIT, UNBOUNDED,
                    LpSolution, MilpSolution, RelaxationStats, SolverError,
                    SolverOptions, gap, relaxation_stats, solve_lp, solve_micp)

__all__ = [
    "BINARY", "CONTINUOUS", "EQ", "GE", "LE", "ArrayForm", "Constraint",
    "MilpModel", "ModelError", "Variable", "expr_sum", "relax", "export_lp",
    "LpNameError", "NumericalFailure", "INFEASIBLE", "NODE_LIMIT", "OPTIMAL",
    "TIME_LIMIT", "UNBOUNDED", "LpSolution", "MilpSolution", "RelaxationStats",
    "SolverError", "SolverOptions", "gap", "relaxation_stats", "solve_lp",
    "solve_micp",
]
