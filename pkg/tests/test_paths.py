import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmassign.network import load_scenario
from mmassign.paths import (Leg, Path, build_catalog, build_incidence, compose_intermodal, enumerate_paths,
                            is_subsequence, subpaths_of, superpaths_containing)

from conftest import catalog, fixture_path, scenario


def labels(paths):
    return [p.label() for p in paths]


def test_bus_paths_between_one_and_two():
    assert labels(enumerate_paths(scenario("synth_s1"), (1, 2), "bus")) == ["1-2", "1-4-3-2"]


def test_same_origin_and_destination_is_rejected():
    with pytest.raises(ValueError):
        enumerate_paths(scenario("synth_s1"), (2, 2), "car")


def test_no_metro_between_two_and_three():
    assert enumerate_paths(scenario("synth_s1"), (2, 3), "M") == []


def test_enumeration_respects_max_paths():
    s = scenario("siouxfalls_30od")
    for k in (1, 2, 4):
        assert len(enumerate_paths(s, (1, 20), "car", (k, 1))) == k


def _leg_path(s, mode, od):
    return enumerate_paths(s, od, mode)[0]


def test_car_then_metro_composition():
    s = scenario("synth_s3")
    p = compose_intermodal(s, _leg_path(s, "car", (2, 3)), "car", _leg_path(s, "M", (3, 4)), "M")
    assert p.label() == "2-3-4"
    assert p.mode == "car&M"
    assert p.transfer_node == 3
    assert p.leg_modes == ("car", "M")


def test_metro_then_ridesharing_composition():
    s = scenario("synth_s3")
    p = compose_intermodal(s, _leg_path(s, "M", (4, 3)), "M", _leg_path(s, "RS", (3, 2)), "RS")
    assert p.label() == "4-3-2"
    assert p.mode == "M&RS"


def test_junction_must_be_a_transfer_node():
    s = scenario("synth_s3")
    with pytest.raises(ValueError, match="transfer"):
        compose_intermodal(s, _leg_path(s, "car", (1, 2)), "car", _leg_path(s, "car", (2, 3)), "car")


def test_leg_mode_must_fit_its_subnetwork():
    s = scenario("synth_s3")
    with pytest.raises(ValueError, match="cannot use"):
        compose_intermodal(s, _leg_path(s, "car", (2, 3)), "car", _leg_path(s, "car", (3, 4)), "M")


def test_superpaths_of_a_middle_link():
    cat = catalog("synth_s1")
    found = superpaths_containing(cat, ("2-3",), 1, 4, "car")
    assert labels(found) == ["1-2-3-4"]


def test_path_is_its_own_superpath():
    cat = catalog("synth_s1")
    p = cat.paths[(1, 2, "car")][0]
    assert p in superpaths_containing(cat, p, 1, 2, "car")


def test_superpaths_empty_when_nothing_passes():
    cat = catalog("synth_s1")
    assert superpaths_containing(cat, ("3-4",), 2, 3, "car") == []


def test_subpaths_of_long_path():
    cat = catalog("synth_s1")
    long = cat.paths[(1, 4, "car")][1]
    assert long.label() == "1-2-3-4"
    assert labels(subpaths_of(cat, long, 2, 3, "car")) == ["2-3"]
    assert long in subpaths_of(cat, long, 1, 4, "car")
    assert subpaths_of(cat, long, 4, 1, "car") == []


def test_incidence_membership_and_positions():
    cat = catalog("synth_s3")
    delta, pos = build_incidence(cat)
    key = next(k for k in delta if k[:3] == (1, 3, "car") and delta[k].keys() == {"1-2", "2-3"})
    assert delta[key].get("2-3") == 1
    assert delta[key].get("3-4", 0) == 0
    im = next(k for k, ps in cat.paths.items() if k[2] == "car&M" and k[:2] == (2, 4))
    p = cat.paths[im][0]
    assert p.label() == "2-3-4"
    k = (2, 4, "car&M", 0)
    # the metro leg starts (waiting, boarding) on its own first link
    assert pos[k] == (("2-3", "2-3"), ("m3-4", "m3-4"))


def test_carpool_threshold_drops_short_paths():
    doc = json.loads(fixture_path("synth_s3").read_text())
    doc["toggles"]["carpool_min_distance"] = 250
    s = load_scenario(json.dumps(doc))
    for od in [(1, 2), (2, 3), (1, 3)]:
        for m in ("CP", "CD"):
            for p in enumerate_paths(s, od, m):
                assert sum(s.link(l).length for l in p.links) >= 250
    # other modes keep their short paths
    assert labels(enumerate_paths(s, (1, 2), "car"))[0] == "1-2"


@pytest.mark.parametrize("name", ["synth_s3", "siouxfalls_30od", "micro_park_ride"])
def test_paths_are_simple_connected_and_legal(name):
    s = scenario(name)
    cat = catalog(name)
    for (i, j, m), ps in cat.paths.items():
        for p in ps:
            assert p.origin == i and p.destination == j
            assert len(set(p.nodes)) == len(p.nodes)
            for leg in p.legs:
                for a, b in zip(leg.links, leg.links[1:]):
                    assert s.link(a).head == s.link(b).tail
                assert s.link(leg.links[0]).tail == leg.origin
            for t in p.transfer_nodes:
                assert t in s.transfer_nodes


@pytest.mark.parametrize("name", ["synth_s3", "micro_carpool_nested"])
def test_sub_and_superpath_relations_are_dual(name):
    cat = catalog(name)
    paths = [(k, p) for k, ps in cat.paths.items() for p in ps if "&" not in k[2]]
    for (ki, p) in paths:
        for (kj, l) in paths:
            r, s_, m = kj
            if l in superpaths_containing(cat, p, r, s_, m):
                assert p in subpaths_of(cat, l, ki[0], ki[1], ki[2])


def test_incidence_row_sums_equal_link_counts():
    cat = catalog("synth_s3")
    delta, _ = build_incidence(cat)
    for (i, j, m, k), row in delta.items():
        assert sum(row.values()) == len(cat.paths[(i, j, m)][k].links)


def test_catalog_is_deterministic():
    s = scenario("synth_s3")
    assert build_catalog(s).paths == build_catalog(s).paths


@given(st.lists(st.integers(0, 4), min_size=1, max_size=6), st.lists(st.integers(0, 4), min_size=1, max_size=8))
def test_subsequence_agrees_with_brute_force(short, long):
    short, long = tuple(short), tuple(long)
    brute = any(long[i:i + len(short)] == short for i in range(len(long) - len(short) + 1))
    assert is_subsequence(short, long) == brute


def test_empty_sequence_is_never_a_subpath():
    assert not is_subsequence((), ("a",))


@given(st.integers(1, 24), st.integers(1, 24), st.sampled_from(["car", "W", "bus"]))
def test_sioux_paths_sorted_by_free_flow_cost(i, j, mode):
    from mmassign.costs import free_flow_cost
    s = scenario("siouxfalls_30od")
    if i == j:
        return
    ps = enumerate_paths(s, (i, j), mode, (3, 1))
    costs = [free_flow_cost(p, s) for p in ps]
    assert costs == sorted(costs)


def test_leg_and_path_views():
    leg1 = Leg("car", ("a", "b"), (1, 2, 3))
    leg2 = Leg("M", ("m",), (3, 4))
    p = Path("car&M", (leg1, leg2))
    assert p.links == ("a", "b", "m")
    assert p.nodes == (1, 2, 3, 4)
    assert p.intermodal and p.transfer_node == 3
