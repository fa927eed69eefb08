import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmassign.conservation import check_conservation
from mmassign.model import check_solution
from mmassign.oracle import CapExceeded, brute_force_solve, compositions, n_compositions, program_values

from conftest import MICRO, catalog, scenario, solved


def oracle(name, principle="UE"):
    return brute_force_solve(scenario(name), principle, catalog=catalog(name))


def test_parallel_links_system_optimum_has_two_optima():
    r = oracle("parallel_links", "SO")
    assert r.objective == pytest.approx(1.0)
    assert len(r.optima) == 2
    # one traveller on link a in one optimum, on link b in the other
    used = [tuple(k for k, v in o.flows.items() if v) for o in r.optima]
    assert all(len(u) == 1 and r.optima[i].flows[u[0]] == 1 for i, u in enumerate(used))
    assert used[0] != used[1]


def test_empty_demand_single_zero_optimum():
    r = oracle("empty")
    assert r.objective == 0.0
    assert len(r.optima) == 1
    assert not any(r.optima[0].flows.values())


def test_cap_is_enforced():
    with pytest.raises(CapExceeded):
        brute_force_solve(scenario("micro_all_sms"), "UE", cap=5, catalog=catalog("micro_all_sms"))


def test_unknown_principle_rejected():
    with pytest.raises(ValueError):
        brute_force_solve(scenario("micro_car_walk"), "NE")


@pytest.mark.parametrize("principle", ["UE", "SO"])
@pytest.mark.parametrize("name", MICRO)
def test_solver_matches_enumeration(name, principle):
    r = oracle(name, principle)
    a = solved(name, principle)
    bound = a.model.pwl_error_bound
    assert a.solution.status == "Optimal"
    assert r.objective <= a.solution.objective + bound + 1e-6
    assert r.objective >= a.solution.bound - 1e-6
    assert a.solution.objective == pytest.approx(r.objective, abs=bound + 1e-6)


@pytest.mark.parametrize("name", MICRO)
def test_oracle_optimum_satisfies_the_program(name):
    a = solved(name)
    r = oracle(name)
    for opt in r.optima:
        vals = program_values(a.model, opt)
        x = np.array([vals[n] for n in a.solution.names])
        assert check_solution(a.model, x) == []
        assert a.model.program.objective_value(x) == pytest.approx(opt.objective, abs=a.model.pwl_error_bound + 1e-6)
        assert check_conservation(vals, a.scenario, a.catalog).ok


def test_carpool_micro_uses_every_matching_family():
    modes = set()
    for name in MICRO:
        a = solved(name)
        modes |= {leg.mode for o, f in a.option_flows() if f for leg in o.path.legs}
    assert {"CP", "CD", "RS", "EH"} <= modes


@given(st.integers(0, 7), st.integers(0, 4))
def test_composition_count_matches_formula(n, k):
    got = list(compositions(n, k))
    assert len(got) == n_compositions(n, k)
    assert len(set(got)) == len(got)
    assert all(sum(c) == n and len(c) == k and min(c, default=0) >= 0 for c in got)


def test_composition_count_known_value():
    assert n_compositions(5, 3) == math.comb(7, 2) == 21
