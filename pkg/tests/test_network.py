import copy
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmassign.network import (DEFAULT_PARAMS, ScenarioError, apply_override, load_scenario, scenario_to_doc,
                              serialize_scenario, validate_scenario)

from conftest import ALL_FIXTURES, MICRO, fixture_path, scenario


def doc_of(name):
    return json.loads(fixture_path(name).read_text())


def test_four_node_document_has_twelve_pairs_of_one_hundred():
    s = scenario("synth_s1")
    assert len(s.nodes) == 4
    assert len(s.demand) == 12
    assert all(q == 100 for _, _, q in s.demand)
    assert s.Q == 1200


def test_empty_demand_table_gives_zero_total():
    assert scenario("empty").Q == 0


def test_sioux_falls_nodes_and_transfer_set():
    s = scenario("siouxfalls_30od")
    assert len(s.nodes) == 24
    assert set(s.transfer_nodes) == {4, 6, 15, 19}
    assert len(s.demand) == 30
    assert sum(1 for l in s.links if l.subnetwork == "RN") == 76


def test_table_defaults_fill_absent_parameters():
    s = scenario("parallel_links")
    p = s.params
    assert p.S["bus"] == DEFAULT_PARAMS["S"]["bus"]
    assert p.eta == 0.15
    assert p.bus_pce == 3.0
    # the document's own values win over defaults
    assert p.alpha == 1.0 and p.beta == 1.0


@pytest.mark.parametrize("name", [n for n in ALL_FIXTURES] + MICRO)
def test_shipped_fixtures_validate_clean(name):
    assert validate_scenario(scenario(name)) == []


def test_transfer_node_without_metro_is_reported():
    doc = doc_of("synth_s1")
    doc["nodes"][0]["transfer"] = True  # node 1 has no metro link
    viol = validate_scenario(load_scenario(json.dumps(doc)))
    assert [v.code for v in viol] == ["transfer_no_metro"]
    assert "unreachable by metro" in viol[0].message


def test_carpool_without_driver_mode_is_reported():
    doc = doc_of("synth_s2")
    doc["toggles"]["modes"] = [m for m in doc["toggles"]["modes"] if m != "CD"]
    viol = validate_scenario(load_scenario(json.dumps(doc)))
    assert [v.code for v in viol] == ["carpool_pair"]


def test_disconnected_pair_is_reported():
    doc = doc_of("parallel_links")
    doc["demand"].append({"o": 2, "d": 1, "q": 1})
    viol = validate_scenario(load_scenario(json.dumps(doc)))
    assert [v.code for v in viol] == ["disconnected"]


def test_zero_capacity_road_is_reported():
    doc = doc_of("parallel_links")
    doc["links"][0]["capacity"] = 0
    viol = validate_scenario(load_scenario(json.dumps(doc)))
    assert [v.code for v in viol] == ["zero_capacity"]


def test_unknown_node_reference_names_the_field():
    doc = doc_of("parallel_links")
    doc["links"][1]["head"] = 99
    with pytest.raises(ScenarioError) as exc:
        load_scenario(json.dumps(doc))
    assert exc.value.path == "links[1].head"


def test_negative_parameter_rejected():
    doc = doc_of("parallel_links")
    doc.setdefault("params", {})["gamma"] = -1
    with pytest.raises(ScenarioError, match="params"):
        load_scenario(json.dumps(doc))


def test_malformed_text_reports_line():
    with pytest.raises(ScenarioError, match="line 1"):
        load_scenario("{not json")


def test_override_reaches_nested_parameter():
    doc = doc_of("synth_s2")
    apply_override(doc, "params.TF.RS", 0.5)
    assert load_scenario(json.dumps(doc)).params.TF["RS"] == 0.5


@pytest.mark.parametrize("name", ["synth_s3", "siouxfalls_30od", "micro_park_ride", "empty"])
def test_serialize_then_load_is_identity(name):
    s = scenario(name)
    again = load_scenario(serialize_scenario(s))
    assert again == s
    assert scenario_to_doc(again) == scenario_to_doc(s)


@given(st.lists(st.integers(0, 50), min_size=1, max_size=12), st.integers(0, 3))
def test_total_demand_is_the_sum_over_pairs(qs, shift):
    doc = doc_of("synth_s1")
    pairs = [(r["o"], r["d"]) for r in doc["demand"]]
    doc["demand"] = [{"o": o, "d": d, "q": q} for (o, d), q in zip(pairs[shift:], qs)]
    s = load_scenario(json.dumps(doc))
    assert s.Q == sum(q for _, _, q in s.demand) == sum(qs[:len(pairs) - shift])


@given(st.floats(0.01, 100), st.floats(1.0, 6.0), st.integers(1, 5000), st.booleans())
def test_round_trip_on_perturbed_parameters(alpha, beta, fleet, inter):
    doc = copy.deepcopy(doc_of("synth_s3"))
    doc["params"]["alpha"] = alpha
    doc["params"]["beta"] = beta
    doc["fleet_size"] = fleet
    doc["toggles"]["intermodality"] = inter
    s = load_scenario(json.dumps(doc))
    assert load_scenario(serialize_scenario(s)) == s
