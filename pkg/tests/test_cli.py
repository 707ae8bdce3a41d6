import csv
import json

import pytest

from reflectkit import paths as P
from reflectkit.cli import main

from oracles import concatenation_driver, concatenation_regulator


@pytest.fixture
def files(tmp_path):
    x = tmp_path / "x.json"
    F = tmp_path / "F.json"
    P.save_path(concatenation_driver(), x)
    P.save_path(concatenation_regulator(), F)
    return tmp_path, str(x), str(F)


def _run(capsys, argv):
    rc = main(argv)
    return rc, capsys.readouterr().out


def test_switch_command(files, capsys):
    d, x, F = files
    out = d / "sol.json"
    rc = main(["switch", "--input", x, "--regulator", F, "--delta", "0.5", "--horizon", "12", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert set(doc) >= {"y", "tA", "tB", "events"}
    assert [e["time"] for e in doc["events"]][:3] == [2.0, 3.0, 6.5]
    assert P.path_from_dict(doc["y"]).horizon == 12.0


def test_verify_command(files, capsys):
    _, x, F = files
    rc, out = _run(capsys, ["verify", "--check", "est2", "--input", x, "--regulator", F, "--delta", "0.5", "--horizon", "12"])
    rep = json.loads(out)
    assert rc == 0 and rep["passed"] and rep["check_name"] == "est2"


def test_verify_def1_reports_contract_error(files, capsys):
    _, x, F = files
    # the regulator jumps and the driver has a downward jump
    rc = main(["verify", "--check", "def1", "--input", x, "--regulator", F])
    assert rc == 2
    assert "ContractError" in capsys.readouterr().err


def test_reflection_commands(files, capsys):
    d, x, _ = files
    lin = d / "lin.json"
    P.save_path(P.linear_path(1.0, -1.0, 3.0), lin)
    ident = d / "id.json"
    P.save_path(P.identity_path(10.0), ident)
    rc, out = _run(capsys, ["reflect", str(lin)])
    assert rc == 0 and P.path_from_dict(json.loads(out)["y"]).eval(2.0) == 0.0
    rc, out = _run(capsys, ["gen-reflect", str(lin), str(ident)])
    assert rc == 0 and "g" in json.loads(out)
    rc, out = _run(capsys, ["sticky", str(lin), str(ident), "--rho", "1"])
    assert P.path_from_dict(json.loads(out)["z"]).horizon == 5.0
    rc, out = _run(capsys, ["absorb", str(lin)])
    assert json.loads(out)["sigma"] == 1.0


def test_distance_command(files, capsys):
    d, _, _ = files
    a, b = d / "a.json", d / "b.json"
    P.save_path(P.step_path([0, 1.0], [0, 1], 10), a)
    P.save_path(P.step_path([0, 1.25], [0, 1], 10), b)
    _, out = _run(capsys, ["distance", str(a), str(b), "--metric", "uniform", "--T", "10"])
    assert json.loads(out)["value"] == 1.0
    _, out = _run(capsys, ["distance", str(a), str(b), "--metric", "j1", "--T", "10", "--window", "0.5"])
    assert json.loads(out)["value"] == pytest.approx(0.25)


@pytest.mark.parametrize("kind", ["rw", "cpp", "stable", "bm"])
def test_simulate_command_is_seeded(kind, tmp_path, capsys):
    params = json.dumps({"n": 16, "lam": 2.0})
    _, a = _run(capsys, ["simulate", "--kind", kind, "--params", params, "--seed", "4"])
    _, b = _run(capsys, ["simulate", "--kind", kind, "--params", params, "--seed", "4"])
    assert a == b
    P.path_from_dict(json.loads(a))


def test_converge_csv(tmp_path, capsys):
    cfg = {
        "name": "zig",
        "driving": {"kind": "polyline", "t": [0, 1, 2, 3, 4], "x": [0.5, -0.5, 0.3, -0.2, 0.6]},
        "regulator": {"kind": "identity"},
        "delta_schedule": [0.5, 0.25],
        "rho_schedule": [1.0, 1.0],
        "horizon": 4.0,
    }
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    outdir = tmp_path / "out"
    rc = main(["converge", "--config", str(path), "--format", "csv", "--out", str(outdir)])
    assert rc == 0
    rows = list(csv.reader((outdir / "converge.csv").open()))
    assert rows[0] == ["n", "delta", "rho", "distance", "metric_kind", "runtime_ms", "seed", "replica", "flag"]
    assert [float(r[3]) for r in rows[1:]] == [0.5, 0.25]
    # 17 significant digits survive a float round trip
    assert all(float(r[5]) == float(f"{float(r[5]):.17g}") for r in rows[1:])


def test_perturbed_walk_command(tmp_path, capsys):
    path = tmp_path / "pw.json"
    path.write_text(json.dumps({"name": "pw", "driving": {}, "regulator": {}, "replicas": 10, "n": 100}))
    rc, out = _run(capsys, ["perturbed-walk", "--config", str(path), "--seed", "3"])
    doc = json.loads(out)
    assert rc == 0 and "ks_statistic" in doc and "chain" not in doc
    assert doc["params"]["seed"] == 3


def test_simulate_cpp_default_jumps(capsys):
    _, out = _run(capsys, ["simulate", "--kind", "cpp", "--params", json.dumps({"lam": 5.0, "horizon": 4.0}), "--seed", "1"])
    p = P.path_from_dict(json.loads(out))
    assert set(p.jumps().round(12)) == {1.0}


def test_storage_command(tmp_path, capsys):
    path = tmp_path / "st.json"
    path.write_text(json.dumps({"name": "st", "driving": {}, "regulator": {}, "replicas": 1, "scale_schedule": [50]}))
    # the delta and scale schedules must have equal length
    assert main(["storage", "--config", str(path)]) == 2
    doc = json.loads(path.read_text())
    doc.update(delta_schedule=[0.0], rho_schedule=[1.0])
    path.write_text(json.dumps(doc))
    rc, out = _run(capsys, ["storage", "--config", str(path), "--format", "csv"])
    lines = out.strip().splitlines()
    assert rc == 0 and lines[0].startswith("case,n,replica") and len(lines) == 4
