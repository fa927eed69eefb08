"""Multimodal traffic assignment with shared mobility, PT and intermodal trips.

User equilibrium (Beckmann form) and system optimum as mixed-integer linear
programs, an internal branch-and-bound solver, and post-solution analysis:
modal shares, price of anarchy and an equilibrium audit.
"""
__version__ = "0.1.0"

from .analysis import (EquilibriumReport, modal_share, poa_upper_bound, price_of_anarchy,
                       total_system_cost, verify_equilibrium)
from .conservation import check_conservation
from .model import ModelOptions, build_program
from .network import Scenario, load_scenario, read_scenario, validate_scenario
from .oracle import brute_force_solve
from .paths import build_catalog, enumerate_paths
from .pipeline import Assignment, solve
from .solver import SolverOptions, branch_and_bound, export_mps, solve_lp_relaxation

__all__ = [
    "__version__", "Scenario", "load_scenario", "read_scenario", "validate_scenario",
    "build_catalog", "enumerate_paths", "build_program", "ModelOptions",
    "SolverOptions", "branch_and_bound", "solve_lp_relaxation", "export_mps",
    "Assignment", "solve", "check_conservation", "brute_force_solve",
    "EquilibriumReport", "modal_share", "poa_upper_bound", "price_of_anarchy",
    "total_system_cost", "verify_equilibrium",
]
