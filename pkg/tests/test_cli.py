import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from mmassign.cli import main
from mmassign.model import build_program
from mmassign.paths import build_catalog
from mmassign.solver import read_mps

from conftest import fixture_path, scenario


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_validate_clean_fixture(capsys):
    code, out, _ = run(capsys, "validate", "--scenario", "synth_s3")
    assert code == 0
    assert json.loads(out)["valid"] is True


def test_validate_reports_violations_with_exit_one(capsys, tmp_path):
    doc = json.loads(fixture_path("synth_s1").read_text())
    doc["nodes"][0]["transfer"] = True
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "validate", "--scenario", p)
    assert code == 1
    assert json.loads(out)["violations"][0]["code"] == "transfer_no_metro"


def test_paths_filtered_by_pair_and_mode(capsys):
    code, out, _ = run(capsys, "paths", "--scenario", "synth_s1", "--od", "1,2", "--mode", "bus")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "od,mode,path_links,length,transfer_node"
    assert len(lines) == 3


def test_solve_scenario_one_writes_every_report(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "--scenario", "synth_s1", "--principle", "ue", "--out", tmp_path)
    assert code == 0
    assert json.loads(out)["status"] == "Optimal"
    for f in ("solution.json", "link_flows.csv", "modal_share.csv", "paths_used.csv", "manifest.json"):
        assert (tmp_path / f).exists()
    man = json.loads((tmp_path / "manifest.json").read_text())
    share = {r["mode"]: float(r["share"]) for r in rows(tmp_path / "modal_share.csv")}
    assert share.get("bus", 0) + share.get("M", 0) >= 0.6
    for f in ("link_flows.csv", "modal_share.csv", "paths_used.csv"):
        assert {r["manifest"] for r in rows(tmp_path / f)} == {man["hash"]}
    assert set(rows(tmp_path / "paths_used.csv")[0]) == {"od", "mode", "path", "flow", "generalized_cost", "manifest"}


def test_solution_file_revalidates_against_the_program(capsys, tmp_path):
    run(capsys, "solve", "--scenario", "synth_s2", "--out", tmp_path)
    sol = json.loads((tmp_path / "solution.json").read_text())
    s = scenario("synth_s2")
    bm = build_program(s, build_catalog(s))
    x = np.array([sol["values"][v.name] for v in bm.program.variables])
    assert bm.program.violations(x) == []
    flows = rows(tmp_path / "paths_used.csv")
    assert sum(float(r["flow"]) for r in flows) == pytest.approx(s.Q)


def test_empty_scenario_gives_header_only_tables(capsys, tmp_path):
    code, _, _ = run(capsys, "solve", "--scenario", "empty", "--out", tmp_path)
    assert code == 0
    assert rows(tmp_path / "paths_used.csv") == []
    assert (tmp_path / "paths_used.csv").read_text().startswith("od,mode,path,flow,generalized_cost,manifest")


def test_same_manifest_same_bytes(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(capsys, "solve", "--scenario", "synth_s3", "--principle", "so", "--out", d)[0] == 0
    for f in ("link_flows.csv", "modal_share.csv", "paths_used.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    assert ma["hash"] == mb["hash"]


def test_override_changes_the_manifest(capsys, tmp_path):
    run(capsys, "solve", "--scenario", "synth_s1", "--out", tmp_path / "a")
    run(capsys, "solve", "--scenario", "synth_s1", "--set", "params.TF.bus=0.5", "--out", tmp_path / "b")
    ha = json.loads((tmp_path / "a" / "manifest.json").read_text())["hash"]
    hb = json.loads((tmp_path / "b" / "manifest.json").read_text())["hash"]
    assert ha != hb


def test_solve_with_mps_export(capsys, tmp_path):
    mps = tmp_path / "m.mps"
    dump = tmp_path / "prov.csv"
    code, out, _ = run(capsys, "solve", "--scenario", "synth_s3", "--principle", "so",
                       "--export-mps", mps, "--dump-model", dump, "--out", tmp_path / "o")
    assert code == 0 and json.loads(out)["status"] == "Optimal"
    s = scenario("synth_s3")
    prog = build_program(s, build_catalog(s), "SO").program
    assert read_mps(mps).content_hash() == prog.content_hash()
    fams = {r["family"] for r in rows(dump)}
    assert "demand" in fams and "parking" in fams


def test_compare_uncongested_ratio_is_one(capsys, tmp_path):
    code, out, _ = run(capsys, "compare", "--scenario", "synth_s1", "--out", tmp_path)
    assert code == 0
    poa = json.loads((tmp_path / "poa.json").read_text())
    assert poa["poa"] == pytest.approx(1.0, abs=1e-6)
    assert set(poa) >= {"poa", "bound", "C_ue", "C_so"}
    assert {r["principle"] for r in rows(tmp_path / "modal_share.csv")} == {"UE", "SO"}


def test_compare_sweep_writes_one_row_per_multiplier(capsys, tmp_path):
    code, _, _ = run(capsys, "compare", "--scenario", "synth_congested", "--sweep", "demand:1,5,10",
                     "--out", tmp_path)
    assert code == 0
    sweep = rows(tmp_path / "poa_sweep.csv")
    assert [float(r["multiplier"]) for r in sweep] == [1, 5, 10]
    poas = [float(r["poa"]) for r in sweep]
    assert poas == sorted(poas)


@pytest.mark.parametrize("spec", ["demand:0..3", "demand:0", "demand:-1,2", "speed:1..2", "demand"])
def test_bad_sweep_rejected(capsys, tmp_path, spec):
    code, _, err = run(capsys, "compare", "--scenario", "synth_s1", "--sweep", spec, "--out", tmp_path)
    assert code == 2
    assert json.loads(err)["error"] == "usage"


def test_verify_writes_equilibrium_table(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--scenario", "synth_b1", "--out", tmp_path)
    assert code == 0
    assert json.loads(out)["passed"] is True
    table = rows(tmp_path / "equilibrium.csv")
    assert {r["verdict"] for r in table} <= {"ok", "unused", "kkt_gap"}


def test_oracle_prints_objective_and_optima(capsys):
    code, out, _ = run(capsys, "oracle", "--scenario", "parallel_links", "--principle", "so")
    assert code == 0
    res = json.loads(out)
    assert res["objective"] == pytest.approx(1.0) and res["optima"] == 2


def test_oracle_cap_exceeded(capsys):
    code, _, err = run(capsys, "oracle", "--scenario", "micro_all_sms", "--cap", "3")
    assert code == 2
    assert json.loads(err)["error"] == "cap_exceeded"


def test_missing_scenario_is_a_json_error(capsys):
    code, _, err = run(capsys, "solve", "--scenario", "no_such_thing")
    assert code == 2
    assert json.loads(err)["error"] == "not_found"


def test_malformed_document_reports_position(capsys, tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{\n  oops")
    code, _, err = run(capsys, "validate", "--scenario", p)
    assert code == 2
    e = json.loads(err)
    assert e["error"] == "parse" and "line 2" in e["message"]


def test_bad_override_syntax(capsys):
    code, _, err = run(capsys, "validate", "--scenario", "synth_s1", "--set", "params.alpha")
    assert code == 2 and json.loads(err)["error"] == "usage"


def test_schema_error_names_the_field(capsys):
    code, _, err = run(capsys, "validate", "--scenario", "synth_s1", "--set", "params.gamma=-1")
    assert code == 2
    e = json.loads(err)
    assert e["error"] == "scenario" and e["path"].startswith("params")


def test_time_limit_without_incumbent_exits_three(capsys, tmp_path):
    import time
    t0 = time.perf_counter()
    # the Sioux Falls root relaxation alone takes far longer than the limit
    code, _, err = run(capsys, "solve", "--scenario", "siouxfalls_30od", "--time-limit", "0.2", "--out", tmp_path)
    assert code == 3
    assert json.loads(err)["error"]
    assert time.perf_counter() - t0 < 30


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "mmassign", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
