import functools
import pathlib

import pytest
from hypothesis import HealthCheck, settings

from mmassign.network import read_scenario
from mmassign.paths import build_catalog
from mmassign.pipeline import solve

DATA = pathlib.Path(__file__).resolve().parents[1] / "src" / "mmassign" / "data"
MICRO = sorted(p.stem for p in (DATA / "micro").glob("*.json"))
# fixtures the internal solver handles to optimality in seconds
SOLVABLE = ["synth_s1", "synth_s2", "synth_s3", "synth_b1", "parallel_links", "empty", "synth_congested"]
ALL_FIXTURES = sorted(p.stem for p in DATA.glob("*.json"))

# criterion number -> PASS/FAIL line, filled by test_acceptance
ACCEPTANCE = {}

settings.register_profile("ci", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def fixture_path(name):
    p = DATA / f"{name}.json"
    return p if p.exists() else DATA / "micro" / f"{name}.json"


@functools.lru_cache(maxsize=None)
def scenario(name):
    return read_scenario(fixture_path(name))


@functools.lru_cache(maxsize=None)
def catalog(name):
    return build_catalog(scenario(name))


@functools.lru_cache(maxsize=None)
def solved(name, principle="UE"):
    return solve(scenario(name), principle, catalog=catalog(name))


@pytest.fixture
def load():
    return scenario


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
