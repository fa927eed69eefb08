import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmassign import analysis as A
from mmassign.costs import link_travel_time
from mmassign.model import build_program
from mmassign.network import load_scenario
from mmassign.pipeline import solve, zero_assignment

from conftest import MICRO, SOLVABLE, catalog, fixture_path, scenario, solved


def solve_with_demand(name, q):
    doc = json.loads(fixture_path(name).read_text())
    doc["demand"][0]["q"] = q
    return solve(load_scenario(json.dumps(doc)))


def test_zero_solution_loads_only_scheduled_pt():
    s = scenario("synth_s1")
    z = zero_assignment(build_program(s, catalog("synth_s1")))
    lf = A.aggregate_link_flows(z)
    scheduled = A.pt_unit_load(s, {})
    assert lf.x == {l.id: float(scheduled.get(l.id, 0.0)) for l in s.links}
    assert not lf.xm


def test_zero_demand_with_pt_costs_pt_travel_only():
    s = scenario("synth_s1")
    z = zero_assignment(build_program(s, catalog("synth_s1")))
    load = A.pt_unit_load(s, {})
    want = sum(s.params.alpha * link_travel_time(s.link(l), x, s.params) * x for l, x in load.items())
    assert A.total_system_cost(z) == pytest.approx(want)
    assert A.total_system_cost(solved("empty")) == 0.0


def test_carpool_driver_is_the_only_vehicle():
    a = solve_with_demand("micro_carpool", 2)
    used = sorted((o.path.mode, f) for o, f in a.option_flows() if f)
    assert used == [("CD", 1.0), ("CP", 1.0)]
    lf = A.aggregate_link_flows(a)
    assert lf.x["1-2"] == 1.0
    assert lf.xm[("1-2", "CP")] == 1.0 and lf.xm[("1-2", "CD")] == 1.0


def test_rideshare_vehicle_counts_once():
    a = solve_with_demand("micro_rideshare", 2)
    lf = A.aggregate_link_flows(a)
    assert lf.xm[("1-2", "RS")] == 2.0
    assert lf.x["1-2"] == 1.0


@pytest.mark.parametrize("name", ["synth_s2", "synth_s3", "micro_park_ride", "micro_bus_elastic"])
def test_rebuilt_loads_match_solver_link_totals(name):
    a = solved(name)
    lf = A.aggregate_link_flows(a)
    v = a.values()
    for lid, xa in lf.x.items():
        if f"x[{lid}]" in v:
            assert xa == pytest.approx(v[f"x[{lid}]"], abs=1e-7)


def test_so_never_costs_more_than_ue():
    for name in ("synth_congested", "micro_car_walk", "synth_s2"):
        assert A.total_system_cost(solved(name, "SO")) <= A.total_system_cost(solved(name, "UE")) + 1e-6


def test_identical_solutions_have_unit_ratio():
    a = solved("synth_s1")
    assert A.price_of_anarchy(a, a) == 1.0


def test_ratio_undefined_without_cost():
    e = solved("empty")
    assert A.price_of_anarchy(e, e) is None


def test_ratio_needs_optimal_solves():
    from dataclasses import replace
    a = solved("synth_s1")
    bad = A.Assignment(a.model, replace(a.solution, status="Feasible"))
    with pytest.raises(ValueError):
        A.price_of_anarchy(bad, a)


def test_affine_bound_factor():
    assert A.bpr_poa_factor(1.0) == pytest.approx(4 / 3)
    assert A.poa_upper_bound(1.0, 0, 3, 10) == pytest.approx(4 / 3)


def test_quartic_bound_factor():
    assert A.bpr_poa_factor(4.0) == pytest.approx(2.1505, abs=1e-3)


def test_bound_by_substitution():
    assert A.poa_upper_bound(1.0, 2, 1, 1) == pytest.approx(16 / 3)


def test_bound_rejects_small_beta():
    with pytest.raises(ValueError):
        A.bpr_poa_factor(0.5)


@pytest.mark.parametrize("name", [n for n in SOLVABLE if n != "empty"] + MICRO)
def test_poa_within_one_and_the_bound(name):
    poa = A.price_of_anarchy(solved(name, "UE"), solved(name, "SO"))
    assert 1 - 1e-6 <= poa <= A.scenario_poa_bound(scenario(name))
    # ratios above 2.5 are flagged in the output, not failed
    print(name, "poa", round(poa, 6), "observed-above-2.5" if poa > 2.5 else "")


def test_pt_takes_two_thirds_in_scenario_one():
    share = A.modal_share(solved("synth_s1"))
    assert share.get("bus", 0) + share.get("M", 0) == pytest.approx(2 / 3)


def test_all_walk_share():
    doc = json.loads(fixture_path("micro_car_walk").read_text())
    doc["toggles"]["modes"] = ["W"]
    assert A.modal_share(solve(load_scenario(json.dumps(doc)))) == {"W": 1.0}


def test_share_undefined_without_demand():
    with pytest.raises(ValueError):
        A.modal_share(solved("empty"))


@pytest.mark.parametrize("name", [n for n in SOLVABLE if n != "empty"] + MICRO)
def test_shares_partition_demand(name):
    assert sum(A.modal_share(solved(name)).values()) == pytest.approx(1.0, abs=1e-9)


def test_bus_split_survives_one_passenger_moving():
    rep = A.verify_equilibrium(solved("synth_b1"))
    assert rep.passed
    _, new = rep.deviations[((1, 2), "bus:1-3-2", "bus:1-2")]
    assert new == pytest.approx(14.668, abs=1e-3)


def test_single_path_scenario_is_trivially_stable():
    doc = json.loads(fixture_path("micro_car_walk").read_text())
    doc["toggles"]["modes"] = ["car"]
    doc["toggles"]["max_paths"] = 1
    rep = A.verify_equilibrium(solve(load_scenario(json.dumps(doc))))
    assert rep.passed and not rep.deviations


def test_so_on_congested_fixture_invites_deviation():
    # base demand is uncongested enough that UE == SO; at 10x the two differ
    s = scenario("synth_congested").with_demand_scale(10)
    so, ue = solve(s, "SO"), solve(s, "UE")
    assert A.price_of_anarchy(ue, so) > 1.0 + 1e-6
    rep = A.verify_equilibrium(so)
    assert not rep.passed
    assert any(r.verdict == "deviation" and r.best_gain > 1e-6 for r in rep.rows)


@pytest.mark.parametrize("name", [n for n in SOLVABLE if n != "empty"] + MICRO)
def test_every_ue_solve_passes_the_audit(name):
    a = solved(name)
    assert a.solution.status == "Optimal"
    rep = A.verify_equilibrium(a)
    assert rep.passed, [r for r in rep.rows if r.verdict == "deviation"]


@given(st.floats(1.0, 8.0), st.integers(0, 50), st.integers(0, 12), st.floats(0, 1e4))
def test_bound_is_at_least_the_beta_factor(beta, links, modes, Q):
    b = A.poa_upper_bound(beta, links, modes, Q)
    assert b >= A.bpr_poa_factor(beta) >= 1.0
    assert math.isfinite(b)


@given(st.floats(1.0, 8.0), st.floats(1.0, 8.0))
def test_beta_factor_grows_with_beta(b1, b2):
    lo, hi = sorted((b1, b2))
    assert A.bpr_poa_factor(lo) <= A.bpr_poa_factor(hi) + 1e-12
