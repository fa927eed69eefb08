import itertools
import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmassign.costs import congestion_term
from mmassign.model import (CORE_FAMILIES, FAMILIES, ModelOptions, build_program, check_solution,
                            linearize_bilinear_product, linearize_bpr_integral, provenance_families)
from mmassign.network import Link, ModeParams, _merge_params, load_scenario
from mmassign.paths import build_catalog
from mmassign.pipeline import solve
from mmassign.solver import MathProgram, SolverOptions, branch_and_bound, solve_lp_relaxation

from conftest import catalog, fixture_path, scenario, solved

P = ModeParams(**_merge_params({}))
ROAD = Link("r", 1, 2, 10.0, "RN", t0=1.0, capacity=100.0)
MATCHING = ("cd_stops", "cp_seats", "cd_passengers", "eh_vehicles", "rs_vehicles", "rs_seats",
            "rs_passengers", "rs_no_solo", "occupied_rs", "occupied", "empty", "fleet_balance",
            "pickup_availability", "fleet_size")


def build(name, principle="UE", **kw):
    return build_program(scenario(name), catalog(name), principle, ModelOptions(**kw) if kw else None)


def test_private_and_pt_only_scenario_has_no_fleet_block():
    prog = build("synth_s1").program
    fams = provenance_families(prog)
    assert not fams & set(MATCHING)
    assert "sign_vehicles" not in fams and "sign_rs_patterns" not in fams
    # y[link] is the chord epigraph, the only y-variable left
    assert all(v.family == "pwl_epigraph" for v in prog.variables if v.name.startswith("y"))
    assert not any(v.name.startswith("q") for v in prog.variables)


def test_empty_demand_solves_to_zero():
    a = solved("empty")
    assert a.solution.status == "Optimal"
    assert a.solution.objective == 0.0
    assert not np.any(a.solution.values)


def test_full_scenario_covers_every_core_family():
    fams = provenance_families(build("synth_s3").program)
    missing = set(CORE_FAMILIES) - fams
    assert not missing
    assert fams <= set(FAMILIES)


def test_every_row_carries_a_known_family():
    for name in ("synth_s2", "synth_s3", "micro_park_ride"):
        for con in build(name).program.constraints:
            assert con.family in FAMILIES, con.name


def test_variable_bounds_are_finite_and_tight():
    s = scenario("synth_s3")
    prog = build("synth_s3").program
    for v in prog.variables:
        assert np.isfinite(v.lb) and np.isfinite(v.ub)
        if v.name.startswith("f["):
            assert v.ub <= s.Q
        if v.family == "sign_vehicles":
            assert v.ub <= max(s.Q, s.fleet_size)


def test_pwl_matches_exact_at_breakpoints():
    pw = linearize_bpr_integral(ROAD, P, 8, 200.0, integral=False)
    for x, g in zip(pw.breakpoints, pw.values):
        assert g == pytest.approx(congestion_term(ROAD, x, P, "UE"))
        k = min(int(x // 25.0), 7)
        assert pw.slopes[k] * x + pw.intercepts[k] == pytest.approx(g, abs=1e-9)


def test_eight_segments_stay_within_two_percent():
    pw = linearize_bpr_integral(ROAD, P, 8, 200.0, integral=False)
    xs = np.linspace(1e-3, 200.0, 20001)
    seg = np.minimum((xs // 25.0).astype(int), 7)
    approx = ROAD.t0 * xs + pw.slopes[seg] * xs + pw.intercepts[seg]
    exact = np.array([ROAD.t0 * x + congestion_term(ROAD, x, P, "UE") for x in xs])
    assert np.max((approx - exact) / exact) < 0.02
    # reported bound dominates the scanned gap
    assert np.max(approx - exact) <= pw.max_gap + 1e-9


def test_integer_spacing_is_exact_with_unit_segments():
    pw = linearize_bpr_integral(ROAD, P, 16, 16.0, integral=True)
    assert pw.max_gap == pytest.approx(0.0, abs=1e-12)


def test_no_delay_means_no_curvature():
    p = replace(P, eta=0.0)
    pw = linearize_bpr_integral(ROAD, p, 8, 200.0)
    assert not np.any(pw.slopes) and not np.any(pw.intercepts)
    assert pw.max_gap == 0.0


def test_fewer_than_two_segments_rejected():
    with pytest.raises(ValueError):
        linearize_bpr_integral(ROAD, P, 1, 200.0)


def _product_program(q_fixed, x_fixed, U=7):
    prog = MathProgram()
    q = prog.add_var("q", q_fixed, q_fixed, True)
    x = prog.add_var("x", x_fixed, x_fixed, True)
    z = linearize_bilinear_product(prog, q, x, U, U, "t")
    return prog, z


def test_product_of_five_and_three_is_fifteen():
    prog, z = _product_program(5, 3)
    bits = [k for k, v in enumerate(prog.variables) if v.family == "wait_bits"]
    assert len(bits) == 3
    feasible = []
    for pattern in itertools.product((0, 1), repeat=3):
        p2 = MathProgram(variables=[replace(v) for v in prog.variables], constraints=prog.constraints)
        for b, val in zip(bits, pattern):
            p2.variables[b].lb = p2.variables[b].ub = float(val)
        for sign in (1.0, -1.0):
            p2.objective = {z: sign}
            sol = solve_lp_relaxation(p2)
            if sol.status == "Optimal":
                feasible.append(pattern)
                assert sol.values[z] == pytest.approx(15.0)
    assert set(feasible) == {(1, 0, 1)}


def test_zero_demand_annihilates_product():
    for x in range(8):
        prog, z = _product_program(0, x)
        for sign in (1.0, -1.0):
            prog.objective = {z: sign}
            assert branch_and_bound(prog).values[z] == pytest.approx(0.0)


@given(st.integers(0, 7), st.integers(0, 7))
@settings(max_examples=30)
def test_product_is_exact_on_the_whole_grid(q, x):
    prog, z = _product_program(q, x)
    for sign in (1.0, -1.0):
        prog.objective = {z: sign}
        assert branch_and_bound(prog).values[z] == pytest.approx(q * x, abs=1e-6)


def test_unbounded_factor_rejected():
    prog = MathProgram()
    q = prog.add_var("q", 0, 3, True)
    x = prog.add_var("x", 0, 3, True)
    with pytest.raises(ValueError):
        linearize_bilinear_product(prog, q, x, 3, float("inf"), "t")


def test_continuous_build_declares_the_waiting_product():
    prog = build("synth_s2", integer=False).program
    assert prog.quad
    assert "wait_bits" not in prog.families() and "wait_product" not in prog.families()
    assert not any(v.integer for v in prog.variables)
    with pytest.raises(ValueError):
        solve_lp_relaxation(prog)


@pytest.mark.parametrize("name", ["synth_s2", "synth_s3", "micro_all_sms", "micro_park_ride"])
def test_ue_and_so_share_constraints(name):
    ue, so = build(name, "UE").program, build(name, "SO").program
    assert [c.name for c in ue.constraints] == [c.name for c in so.constraints]
    # chord cuts and their epigraph variables encode the objective, so only they may differ
    def sig(v):
        return (v.name, v.integer) if v.family == "pwl_epigraph" else (v.name, v.lb, v.ub, v.integer)
    assert [sig(v) for v in ue.variables] == [sig(v) for v in so.variables]
    for a, b in zip(ue.constraints, so.constraints):
        if a.family != "pwl_epigraph":
            assert (a.coefs, a.lo, a.hi) == (b.coefs, b.lo, b.hi)


@pytest.mark.parametrize("name", ["synth_s2", "synth_s3"])
def test_solution_satisfies_demand_and_fleet(name):
    a = solved(name)
    s = a.scenario
    assert check_solution(a.model, a.solution.values) == []
    by_od = {}
    for opt, f in a.option_flows():
        by_od[opt.od] = by_od.get(opt.od, 0.0) + f
    for o, d, q in s.demand:
        assert by_od[(o, d)] == pytest.approx(q)
    vals = a.values()
    fleet = sum(v for n, v in vals.items() if n.startswith(("qo[", "qe[")))
    assert fleet == pytest.approx(s.fleet_size)


def test_catalog_scenario_mismatch_rejected():
    with pytest.raises(ValueError):
        build_program(scenario("synth_s1"), catalog("synth_s2"))


# slow-ish: each draw solves a micro program
@given(st.sets(st.sampled_from(["car", "CD", "CP", "EH", "RS"])))
@settings(max_examples=12)
def test_dropping_modes_keeps_walkable_program_feasible(keep):
    doc = json.loads(fixture_path("micro_all_sms").read_text())
    modes = sorted(keep) + ["W"]
    if "CP" in modes and "CD" not in modes:
        modes.remove("CP")
    doc["toggles"]["modes"] = modes
    s = load_scenario(json.dumps(doc))
    a = solve(s, "UE", SolverOptions(time_limit=60))
    assert a.solution.status == "Optimal"
