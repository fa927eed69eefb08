import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmassign import analysis as A
from mmassign.costs import (FlowState, generalized_path_cost, link_travel_time, monetary_cost, service_time,
                            waiting_time)
from mmassign.network import Link, ModeParams, _merge_params
from mmassign.paths import Leg, Path, compose_intermodal, enumerate_paths

from conftest import scenario, solved


def params(**kw):
    doc = _merge_params({})
    doc.update(kw)
    return ModeParams(**doc)


P = params()
ROAD = Link("r", 1, 2, 10.0, "RN", t0=1.0, capacity=100.0)


def test_bpr_at_free_flow():
    assert link_travel_time(ROAD, 0.0, P) == 1.0


def test_bpr_at_capacity():
    assert link_travel_time(ROAD, 100.0, P) == pytest.approx(1.15, abs=1e-12)


def test_metro_time_is_length_over_speed():
    assert link_travel_time(Link("m", 1, 2, 60.0, "MN"), 0.0, P) == pytest.approx(1.0)


def test_explicit_delay_coefficient_replaces_eta_t0():
    road = Link("r", 1, 2, 10.0, "RN", t0=1.0, capacity=100.0, delay_coef=2.0)
    assert link_travel_time(road, 100.0, P) == pytest.approx(3.0)


def test_car_never_waits():
    assert waiting_time("car", True) == 0.0
    assert waiting_time("car", False) == 0.0


def test_bus_waits_half_the_headway():
    assert waiting_time("bus", True, freq=3.0, params=P) == pytest.approx(1 / 6)
    assert waiting_time("bus", False, freq=3.0, params=P) == 0.0


def test_carpool_wait_grows_with_demand():
    p = params(R={"CP": 100.0, "RS": 200.0, "EH": 200.0})
    assert waiting_time("CP", True, q_m=50, params=p) == pytest.approx(0.5)


def test_walking_has_no_service_time():
    assert service_time("W", True, True, P) == 0.0


def test_driver_service_at_destination():
    assert service_time("CD", False, True, P) == pytest.approx(0.21)


def test_bus_service_on_every_link():
    assert service_time("bus", False, False, P) == pytest.approx(0.04)


def test_walking_is_free():
    assert monetary_cost("W", Link("w", 1, 2, 5.0, "WN"), True, P) == 0.0


def test_car_money_at_destination():
    road = Link("r", 1, 2, 100.0, "RN", t0=1.0, capacity=10.0)
    assert monetary_cost("car", road, True, P) == pytest.approx(26.0)


def test_driver_money_mid_path_nets_the_fare():
    road = Link("r", 1, 2, 10.0, "RN", t0=1.0, capacity=10.0)
    assert monetary_cost("CD", road, False, P) == pytest.approx(1.8)


def test_driver_money_can_go_negative():
    road = Link("r", 1, 2, 1.0, "RN", t0=1.0, capacity=10.0)
    assert monetary_cost("CD", road, False, P) < 0


def _walk_path_scenario():
    from dataclasses import replace
    s = scenario("synth_s1")
    links = tuple(replace(l, length=3.0) if l.subnetwork == "WN" else l for l in s.links)
    return replace(s, links=links)


def test_two_link_walk_path():
    s = _walk_path_scenario()
    p = Path("W", (Leg("W", ("w1-2", "w2-3"), (1, 2, 3)),))
    for lid in p.links:
        assert s.link(lid).subnetwork == "WN"
    assert generalized_path_cost(p, s).total == pytest.approx(10.0)


def test_zero_alpha_leaves_money_only():
    from dataclasses import replace
    s = scenario("synth_s2")
    s = replace(s, params=replace(s.params, alpha=0.0))
    for (i, j, m), ps in _catalog_paths(s):
        for p in ps:
            g = generalized_path_cost(p, s)
            assert g.total == pytest.approx(g.money)


def _catalog_paths(s):
    from mmassign.paths import build_catalog
    return build_catalog(s).paths.items()


def test_one_extra_bus_rider_on_the_direct_line():
    a = solved("synth_b1", "UE")
    rep = A.verify_equilibrium(a)
    old, new = rep.deviations[((1, 2), "bus:1-3-2", "bus:1-2")]
    assert new == pytest.approx(14.668, abs=1e-3)


def test_sms_delay_term_only_under_ue():
    s = scenario("synth_s2")
    p = enumerate_paths(s, (1, 2), "RS")[0]
    st_ = FlowState(x={l.id: 0.0 for l in s.links if l.subnetwork == "RN"}, q={"RS": 40.0})
    ue = generalized_path_cost(p, s, st_, "UE")
    so = generalized_path_cost(p, s, st_, "SO")
    assert ue.delay == pytest.approx(s.params.alpha * 40.0 / s.params.R["RS"])
    assert so.delay == 0.0
    assert ue.total - so.total == pytest.approx(ue.delay)


def test_missing_road_flow_is_an_error():
    s = scenario("synth_s1")
    p = enumerate_paths(s, (1, 2), "car")[0]
    with pytest.raises(KeyError):
        generalized_path_cost(p, s, FlowState(x={"nothing": 1.0}))


# dx >= 1 keeps the increment above double resolution near free flow
@given(st.floats(0.0, 1e4), st.floats(1.0, 1e3))
def test_bpr_strictly_increasing(x, dx):
    assert link_travel_time(ROAD, x + dx, P) > link_travel_time(ROAD, x, P)


@given(st.floats(0.0, 1e4), st.sampled_from(["MN", "WN", "BN"]))
def test_non_road_time_ignores_flow(x, sub):
    link = Link("l", 1, 2, 7.0, sub)
    assert link_travel_time(link, x, P) == link_travel_time(link, x + 1, P)


def _road_state(s, seed):
    import random
    rnd = random.Random(seed)
    return {l.id: rnd.uniform(0, 300) for l in s.links if l.subnetwork == "RN"}


@given(st.integers(0, 10**6))
def test_intermodal_cost_is_sum_of_leg_costs(seed):
    s = scenario("synth_s3")
    state = FlowState(x=_road_state(s, seed), q={"RS": seed % 50})
    l1 = enumerate_paths(s, (2, 3), "car")[0]
    l2 = enumerate_paths(s, (3, 4), "M")[0]
    whole = generalized_path_cost(compose_intermodal(s, l1, "car", l2, "M"), s, state)
    parts = generalized_path_cost(l1, s, state).total + generalized_path_cost(l2, s, state).total
    assert whole.total == pytest.approx(parts)
    l3 = enumerate_paths(s, (4, 3), "M")[0]
    l4 = enumerate_paths(s, (3, 2), "RS")[0]
    whole = generalized_path_cost(compose_intermodal(s, l3, "M", l4, "RS"), s, state)
    parts = generalized_path_cost(l3, s, state).total + generalized_path_cost(l4, s, state).total
    assert whole.total == pytest.approx(parts)


@given(st.integers(0, 10**6), st.floats(0, 500), st.sampled_from(["car", "bus", "W", "B", "CD", "M"]))
def test_non_sms_cost_ignores_sms_demand(seed, qm, mode):
    s = scenario("synth_s2")
    x = _road_state(s, seed)
    for od in s.od_pairs:
        for p in enumerate_paths(s, od, mode):
            a = generalized_path_cost(p, s, FlowState(x=x, q={}))
            b = generalized_path_cost(p, s, FlowState(x=x, q={m: qm for m in ("CP", "RS", "EH", mode)}))
            assert a.total == b.total


@given(st.integers(0, 10**6))
def test_total_matches_its_components(seed):
    s = scenario("synth_s2")
    state = FlowState(x=_road_state(s, seed), q={"CP": 10, "RS": 20, "EH": 5})
    for od in s.od_pairs[:4]:
        for m in s.toggles.modes:
            for p in enumerate_paths(s, od, m):
                g = generalized_path_cost(p, s, state)
                rebuilt = sum(s.params.alpha * (c.travel_time + c.waiting + c.service) + c.money
                              for c in g.components) + g.delay
                assert g.total == pytest.approx(rebuilt)
                assert all(c.travel_time >= 0 and c.waiting >= 0 and c.service >= 0 for c in g.components)
