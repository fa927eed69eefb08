"""MILP solver: dual simplex LP core, branch-and-bound, MPS interchange."""
from .bnb import BranchAndBound, Solution, SolverOptions, branch_and_bound, solve_lp_relaxation
from .mps import export_mps, parse_mps, read_mps, write_mps
from .program import INF, Constraint, MathProgram, Variable

__all__ = [
    "BranchAndBound", "Solution", "SolverOptions", "branch_and_bound", "solve_lp_relaxation",
    "export_mps", "parse_mps", "read_mps", "write_mps",
    "INF", "Constraint", "MathProgram", "Variable",
]
