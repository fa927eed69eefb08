"""Scenario -> catalog -> program -> solution, kept together."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import BuiltModel, ModelOptions, build_program
from .network import Scenario
from .paths import PathCatalog, build_catalog
from .solver import Solution, SolverOptions, branch_and_bound, solve_lp_relaxation


@dataclass
class Assignment:
    """A solved program together with the model it came from."""

    model: BuiltModel
    solution: Solution

    @property
    def scenario(self) -> Scenario:
        return self.model.scenario

    @property
    def catalog(self) -> PathCatalog:
        return self.model.catalog

    @property
    def principle(self) -> str:
        return self.model.principle

    @property
    def solved(self) -> bool:
        return self.solution.values is not None

    def option_flows(self):
        """(Option, flow) for every path option, in catalog order."""
        v = self.solution.values
        return [(o, float(v[o.var])) for o in self.model.options]

    def values(self) -> dict:
        return self.solution.as_dict()


def solve(s: Scenario, principle: str = "UE", solver_opts: SolverOptions | None = None,
          model_opts: ModelOptions | None = None, catalog: PathCatalog | None = None) -> Assignment:
    catalog = catalog or build_catalog(s)
    bm = build_program(s, catalog, principle, model_opts)
    integer = any(v.integer for v in bm.program.variables)
    if integer or not bm.program.variables:
        sol = branch_and_bound(bm.program, solver_opts)
    else:
        sol = solve_lp_relaxation(bm.program, solver_opts)
    return Assignment(bm, sol)


def zero_assignment(bm: BuiltModel) -> Assignment:
    """Assignment with every variable at its lower bound (used for empty demand)."""
    lo = np.array([v.lb for v in bm.program.variables])
    names = [v.name for v in bm.program.variables]
    obj = float(bm.program.c_vector() @ lo) + bm.program.obj_constant if len(lo) else bm.program.obj_constant
    return Assignment(bm, Solution("Optimal", lo, obj, obj, 0.0, 0, 0.0, names))
