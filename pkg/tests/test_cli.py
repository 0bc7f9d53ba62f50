"""Command line contract: exit codes, formats, round trips, determinism."""

import json
import os
import re
import subprocess
import sys

import numpy as np
import pytest

from qre.cli import main
from qre.solver import SolveReport

_NINE_SIG = re.compile(r"^-?(\d+\.?\d*|\.\d+)(e[+-]?\d+)?$")


@pytest.fixture()
def files(tmp_path):
    sample = {"points": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0],
                         [2.0, 2.0]],
              "values": [0.0, 0.5, 0.4, 1.0, 1.6],
              "lipschitz": 1.0, "monotone": True}
    sp = tmp_path / "s.json"
    sp.write_text(json.dumps(sample))
    pp = tmp_path / "p.csv"
    pp.write_text("x1,x2\n0.5,0.5\n2.0,2.0\n-1.0,-1.0\n")
    prob = {"T": 2, "A": [[1.0, 0.0], [0.0, 1.0]], "b": [1.5, 1.5],
            "lo": [-5.0, -5.0], "hi": [5.0, 5.0], "G": "identity"}
    pr = tmp_path / "prob.json"
    pr.write_text(json.dumps(prob))
    return tmp_path, str(sp), str(pp), str(pr)


def test_eval_csv_values_and_determinism(files):
    td, sp, pp, _ = files
    out1, out2 = str(td / "a.csv"), str(td / "b.csv")
    assert main(["eval", "--sample", sp, "--points", pp, "--out", out1]) == 0
    assert main(["eval", "--sample", sp, "--points", pp, "--out", out2]) == 0
    body = open(out1).read()
    assert body == open(out2).read()
    lines = body.strip().split("\n")
    assert lines[0] == "psi"
    assert [float(v) for v in lines[1:]] == pytest.approx([0.5, 1.6, -1.0])
    for tok in lines[1:]:
        assert _NINE_SIG.match(tok)


def test_eval_milp_json_and_groups(files):
    td, sp, pp, _ = files
    outj = str(td / "e.json")
    assert main(["eval", "--sample", sp, "--points", pp, "--milp", "--json",
                 "--out", outj]) == 0
    rows = json.load(open(outj))
    assert [r["psi"] for r in rows] == pytest.approx([0.5, 1.6, -1.0], abs=1e-9)
    outg = str(td / "g.csv")
    assert main(["eval", "--sample", sp, "--points", pp, "--groups", "2",
                 "--out", outg]) == 0
    vals = [float(v) for v in open(outg).read().strip().split("\n")[1:]]
    assert vals == pytest.approx([0.5, 1.6, -1.0])  # symmetric sample already


def test_levelset_membership_and_hrep(files):
    td, sp, pp, _ = files
    outc = str(td / "c.csv")
    assert main(["levelset", "--sample", sp, "--level", "0.9", "--points", pp,
                 "--out", outc]) == 0
    assert open(outc).read().strip().split("\n") == ["contains", "0", "1", "0"]
    outh = str(td / "h.json")
    assert main(["levelset", "--sample", sp, "--level", "0.9", "--hrep",
                 "--out", outh]) == 0
    h = json.load(open(outh))
    assert h["level"] == 0.9 and h["index"] == 2
    assert len(h["generators"]) == 2 and h["boundary"] is not None
    assert main(["levelset", "--sample", sp, "--level", "0.9"]) == 2


def test_solve_binary_report_round_trip(files):
    td, sp, _, pr = files
    outs = str(td / "rep.json")
    assert main(["solve", "--sample", sp, "--problem", pr, "--out", outs]) == 0
    obj = json.load(open(outs))
    assert obj.pop("method") == "binary"
    assert obj["psi_star"] == pytest.approx(1.1, abs=1e-8)
    assert obj["z_star"] == pytest.approx([1.5, 1.5], abs=1e-7)
    back = SolveReport.from_dict(obj)
    assert back.to_dict() == obj


def test_solve_level_function_and_groups(files):
    td, sp, _, pr = files
    outl = str(td / "lf.json")
    assert main(["solve", "--sample", sp, "--problem", pr, "--method",
                 "level-function", "--out", outl]) == 0
    lf = json.load(open(outl))
    assert lf["method"] == "level-function" and lf["converged"]
    assert lf["psi_star"] == pytest.approx(1.1, abs=2e-5)
    outg = str(td / "pg.json")
    assert main(["solve", "--sample", sp, "--problem", pr, "--groups", "2",
                 "--out", outg]) == 0
    assert json.load(open(outg))["psi_star"] >= 1.1 - 1e-9


def test_aspirational_values_and_export(files):
    td, sp, pp, _ = files
    outa, expf = str(td / "asp.csv"), str(td / "target.json")
    assert main(["aspirational", "--sample", sp, "--points", pp,
                 "--export", expf, "--out", outa]) == 0
    vals = [float(v) for v in open(outa).read().strip().split("\n")[1:]]
    assert vals == pytest.approx([0.5, 1.6, -1.0], abs=1e-5)
    t = json.load(open(expf))
    assert t["top_value"] == 1.6
    sizes = [seg["family_size"] for seg in t["segments"]]
    assert sizes == sorted(sizes, reverse=True)
    assert main(["aspirational", "--sample", sp]) == 2


def test_usage_exit_codes(files):
    td, sp, pp, _ = files
    assert main(["eval", "--sample", str(td / "missing.json"),
                 "--points", pp]) == 2
    assert main(["eval", "--sample", sp, "--points", pp, "--bogus"]) == 2
    assert main(["nonsense"]) == 2
    bad = td / "bad.json"
    bad.write_text(json.dumps({"points": [[0.0, 0.0]], "values": [1.0, 2.0],
                               "lipschitz": 1.0}))
    assert main(["eval", "--sample", str(bad), "--points", pp]) == 2
    notjson = td / "notjson.json"
    notjson.write_text("{")
    assert main(["eval", "--sample", str(notjson), "--points", pp]) == 2


def test_infeasible_and_failure_exit_codes(files):
    td, sp, pp, pr = files
    bad = dict(json.load(open(pr)), A=[[1.0, 0.0], [-1.0, 0.0]], b=[0.0, -1.0])
    badp = td / "infeasible.json"
    badp.write_text(json.dumps(bad))
    assert main(["solve", "--sample", sp, "--problem", str(badp)]) == 3
    assert main(["eval", "--sample", sp, "--points", pp, "--milp",
                 "--bigm", "1e-9"]) == 4


def test_csv_sample_requires_lipschitz(files, tmp_path):
    _, _, pp, _ = files
    sc = tmp_path / "s.csv"
    sc.write_text("0.0,0.0,0.0\n2.0,2.0,1.6\n")
    assert main(["eval", "--sample", str(sc), "--points", pp]) == 2
    out = str(tmp_path / "o.csv")
    assert main(["eval", "--sample", str(sc), "--points", pp,
                 "--lipschitz", "1.0", "--monotone", "--out", out]) == 0


def test_console_entry_point(files):
    _, sp, pp, _ = files
    env = dict(os.environ)
    env["PYTHONPATH"] = os.pathsep.join(
        [p for p in (os.path.join(os.path.dirname(__file__), "..", "src"),
                     env.get("PYTHONPATH", "")) if p])
    r = subprocess.run([sys.executable, "-m", "qre.cli", "eval", "--sample", sp,
                        "--points", pp], capture_output=True, text=True, env=env)
    assert r.returncode == 0
    assert r.stdout.strip().split("\n")[0] == "psi"
    r2 = subprocess.run([sys.executable, "-m", "qre.cli", "--version"],
                        capture_output=True, text=True, env=env)
    assert r2.returncode == 0 and r2.stdout.strip()


def test_bench_outputs_and_pool_invariance(files, monkeypatch):
    td, _, _, _ = files
    args = ["bench", "cobb-douglas", "--J", "8", "--reps", "2", "--seed", "0",
            "--density", "12", "--contour-density", "10"]
    d1, d2 = str(td / "b1"), str(td / "b2")
    monkeypatch.delenv("QRE_THREADS", raising=False)
    assert main(args + ["--workers", "1", "--out", d1]) == 0
    monkeypatch.setenv("QRE_THREADS", "2")
    assert main(args + ["--out", d2]) == 0
    names = {"gaps.csv", "l1.csv", "runtime.csv", "meta.json",
             "contours_true.csv", "contours_envelope.csv",
             "contours_piecewise_constant.csv",
             "contours_concave_regression.csv"}
    assert names <= set(os.listdir(d1))
    for f in sorted(names - {"meta.json"}):
        assert open(os.path.join(d1, f)).read() \
            == open(os.path.join(d2, f)).read(), f
    meta = json.load(open(os.path.join(d1, "meta.json")))
    assert meta["f_star"] == pytest.approx(0.365146496, abs=1e-6)
    assert meta["J_list"] == [8]
    gaps = open(os.path.join(d1, "gaps.csv")).read().strip().split("\n")
    assert gaps[0] == "method,J,mean_gap_pct,std_gap_pct,max_gap_pct"
    for line in gaps[1:]:
        cells = line.split(",")
        assert cells[0] in ("envelope", "piecewise_constant",
                            "concave_regression")
        for tok in cells[2:]:
            assert _NINE_SIG.match(tok)
