import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from foursqueeze.cli import CONFIG_SCHEMA, config_hash, main, parse_range, params_from_mapping, validate_config
from foursqueeze.errors import DomainError

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "data" / "golden" / "de_sitter_coupled"


def invoke(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    comments = [l for l in lines if l.startswith("#")]
    rows = list(csv.reader(l for l in lines if not l.startswith("#")))
    return comments, rows[0], rows[1:]


def small_config(tmp_path, **extra):
    cfg = {
        "model": {"type": "cosmology", "zeta": 1 / 6, "lambda": 0.0,
                  "scale_factor": {"type": "de_sitter", "H": 1.0}},
        "k": {"grid": [1.0, 2.0]},
        "time": {"start": -10.0, "end": -0.5, "steps": 400, "stride": 100},
        "methods": ["gaussian", "perturbative"],
    }
    cfg.update(extra)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path, cfg


def test_algebra_check():
    res = invoke("algebra-check")
    assert res.exit_code == 0
    assert "45/45 commutators exact" in res.stdout


def test_conformal_run_is_pure(tmp_path):
    path, cfg = small_config(tmp_path)
    res = invoke("run", "--config", str(path), "--out", str(tmp_path / "out"))
    assert res.exit_code == 0, res.output
    comments, header, rows = read_csv(tmp_path / "out" / "purity.csv")
    assert comments[0] == f"# config_sha256={config_hash(cfg)} schema=1"
    g = [float(r[header.index("gamma_gaussian")]) for r in rows]
    assert max(abs(x - 1.0) for x in g) < 1e-6
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["config_sha256"] == config_hash(cfg)
    assert {f["path"] for f in manifest["files"]} == {"trajectory.csv", "spectra.csv", "purity.csv"}
    for f in manifest["files"]:
        assert read_csv(tmp_path / "out" / f["path"])[1] == f["columns"]


def test_rerun_and_threads_are_identical(tmp_path):
    path, _ = small_config(tmp_path)
    invoke("run", "--config", str(path), "--out", str(tmp_path / "a"))
    invoke("run", "--config", str(path), "--out", str(tmp_path / "b"), "--threads", "2")
    for name in ("trajectory.csv", "spectra.csv", "purity.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_unknown_key_rejected(tmp_path):
    path, _ = small_config(tmp_path, colour="blue")
    res = invoke("run", "--config", str(path), "--out", str(tmp_path / "out"))
    assert res.exit_code == 2
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("patch", [
    {"k": {"grid": []}},
    {"time": {"start": 0.0, "end": -1.0, "steps": 10}},
    {"methods": ["magic"]},
    {"cutoff": -1},
])
def test_schema_violations_exit_2(tmp_path, patch):
    path, _ = small_config(tmp_path, **patch)
    assert invoke("run", "--config", str(path)).exit_code == 2


def test_missing_config_exit_2(tmp_path):
    assert invoke("run", "--config", str(tmp_path / "nope.json")).exit_code == 2


def test_numerical_failure_exit_3(tmp_path):
    names = ("F1", "F2", "F12", "R1", "R2", "R12", "phi", "Theta1", "Theta2", "xi")
    lines = ["t," + ",".join(names)]
    for t in (0.0, 1.0):
        lines.append(f"{t}," + ",".join(["1e300", "1", "0", "1e300", "0", "0", "0", "0", "0", "0"]))
    (tmp_path / "kernel.csv").write_text("\n".join(lines) + "\n")
    cfg = {"model": {"type": "table", "path": "kernel.csv"}, "k": 1.0,
           "time": {"start": 0.0, "end": 1.0, "steps": 10}}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    res = invoke("run", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path / "out"))
    assert res.exit_code == 3
    assert "numerical failure in foursqueeze." in res.stderr


def test_resource_error_exit_4():
    res = invoke("state", "-p", "r1=0.5", "-p", "r2=0.5", "-p", "tau_abs=0.1", "--cutoff", "500",
                 "--truncation", "total")
    assert res.exit_code == 4
    assert "suggested cutoff" in res.stderr


def test_bad_param_exit_2():
    assert invoke("purity", "-p", "r9=1").exit_code == 2
    assert invoke("purity", "-p", "r1=abc").exit_code == 2
    assert invoke("sweep", "--tau", "0:1").exit_code == 2


def test_state_command(tmp_path):
    out = tmp_path / "state.csv"
    res = invoke("state", "-p", "r1=0.4", "--cutoff", "3", "--out", str(out))
    assert res.exit_code == 0
    comments, header, rows = read_csv(out)
    assert header == ["n", "m", "s", "t", "re", "im", "abs2"]
    vac = [r for r in rows if r[:4] == ["0", "0", "0", "0"]][0]
    assert float(vac[6]) == pytest.approx(1 / math.cosh(0.4) ** 2)


def test_purity_methods_agree():
    vals = {}
    for method in ("gaussian", "fock", "oracle"):
        res = invoke("purity", "-p", "r1=0.5", "-p", "r2=0.3", "-p", "tau_abs=0.2", "-p", "tau_arg=0.4",
                     "--method", method, "--cutoff", "24")
        assert res.exit_code == 0
        vals[method] = float(res.stdout.split()[0].split("=")[1])
    assert vals["fock"] == pytest.approx(vals["gaussian"], abs=1e-9)
    assert vals["oracle"] == pytest.approx(vals["fock"], abs=1e-12)
    assert "# tolerances:" in invoke("purity", "-p", "r1=0.1").stderr


def test_large_r_fock_warns():
    res = invoke("purity", "-p", "r1=2.5", "--method", "fock", "--cutoff", "4")
    assert "Gaussian" in res.stderr or "gaussian" in res.stderr


def test_oracle_compare():
    res = invoke("oracle-compare", "-p", "r1=0.5", "-p", "r2=0.4", "-p", "tau_abs=0.3", "--cutoff", "5")
    assert res.exit_code == 0
    diff = float(res.stdout.split("max amplitude discrepancy:")[1].split()[0])
    assert diff < 1e-8


def test_sweep_command(tmp_path):
    out = tmp_path / "sweep.csv"
    res = invoke("sweep", "-p", "theta3=0.39269908169872414", "--tau", "0:0.1:3", "--r", "0:3:4", "--out", str(out))
    assert res.exit_code == 0
    _, header, rows = read_csv(out)
    assert header == ["tau", "r", "gamma_gaussian", "gamma_pert", "distortion", "flag"]
    assert len(rows) == 12
    assert any(r[5] == "1" for r in rows)


def test_spectra_command():
    res = invoke("spectra", "-p", "r1=0.3", "--k", "1", "--k", "2")
    assert res.exit_code == 0
    lines = [l for l in res.stdout.splitlines() if not l.startswith("#")]
    assert lines[0].startswith("k,cov_00")
    assert len(lines) == 3


def test_parse_helpers():
    assert parse_range("0:1:3") == [0.0, 0.5, 1.0]
    assert parse_range("2") == [2.0]
    p = params_from_mapping({"r1": 0.3, "tau_abs": 0.1, "tau_arg": 0.5})
    assert abs(p.tau) == pytest.approx(0.1)
    with pytest.raises(DomainError):
        params_from_mapping({"r1": 0.3, "d1": 0.1})
    assert CONFIG_SCHEMA["additionalProperties"] is False


def test_shipped_configs_validate():
    for path in (ROOT / "configs").glob("*.json"):
        validate_config(json.loads(path.read_text()))


@pytest.mark.slow
def test_golden_outputs(tmp_path):
    cfg = ROOT / "configs" / "de_sitter_coupled.json"
    res = invoke("run", "--config", str(cfg), "--out", str(tmp_path))
    assert res.exit_code == 0
    for name in ("trajectory.csv", "spectra.csv", "purity.csv", "sweep.csv"):
        gc, gh, grows = read_csv(GOLDEN / name)
        nc, nh, nrows = read_csv(tmp_path / name)
        assert (gc, gh) == (nc, nh)
        assert len(grows) == len(nrows)
        for g, n in zip(grows, nrows):
            for a, b in zip(g, n):
                if a == b:
                    continue
                assert float(b) == pytest.approx(float(a), rel=1e-10, abs=1e-10), name
