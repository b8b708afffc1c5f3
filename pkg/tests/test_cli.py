from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from fiveconst.cli import main
from fiveconst.inversion import synthesize, write_measurements
from fiveconst.medium import MaterialPoint

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_speeds(capsys, tmp_path):
    code, out, _ = run(capsys, "speeds", CONFIGS / "speeds.yaml", "--out", tmp_path)
    assert code == 0
    assert out.strip() == "c_P=2 c_S=1"
    assert json.loads((tmp_path / "speeds.json").read_text())["c_S"] == 1.0


def test_output_dir_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("FIVECONST_OUTPUT_DIR", str(tmp_path / "env"))
    assert run(capsys, "speeds", CONFIGS / "speeds.yaml")[0] == 0
    assert (tmp_path / "env" / "speeds.json").exists()


def test_override(capsys, tmp_path):
    code, out, _ = run(capsys, "speeds", CONFIGS / "speeds.yaml", "--set", "medium.lam=7", "--out", tmp_path)
    assert code == 0 and out.strip() == "c_P=3 c_S=1"


def test_classify_glancing(capsys, tmp_path):
    code, out, _ = run(capsys, "classify", CONFIGS / "classify_glancing.yaml", "--out", tmp_path)
    assert code == 0
    assert "P glancing" in out and "S hyperbolic" in out


def test_trace_homogeneous_straight(capsys, tmp_path):
    assert run(capsys, "trace", CONFIGS / "trace_homogeneous.yaml", "--out", tmp_path)[0] == 0
    with open(tmp_path / "ray.csv") as fh:
        rows = list(csv.DictReader(fh))
    x = np.array([[float(r["x1"]), float(r["x2"]), float(r["x3"])] for r in rows])
    t = np.array([float(r["t"]) for r in rows])
    np.testing.assert_allclose(x[:, 0], 2 * t, atol=1e-12)
    assert np.max(np.abs(x[:, 1:])) < 1e-12


def test_trace_gradient_bends(capsys, tmp_path):
    assert run(capsys, "trace", CONFIGS / "trace_gradient.yaml", "--out", tmp_path)[0] == 0
    with open(tmp_path / "ray.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert abs(float(rows[-1]["x2"])) > 1e-3


def test_resonance_no_interaction(capsys, tmp_path):
    code, out, _ = run(capsys, "resonance", CONFIGS / "resonance_ss_no_root.yaml", "--out", tmp_path)
    assert code == 0 and "no-interaction" in out
    assert "no-interaction" in (tmp_path / "resonance.json").read_text()


def test_resonance_pp(capsys, tmp_path):
    code, out, _ = run(capsys, "resonance", CONFIGS / "resonance_pp.yaml", "--out", tmp_path)
    assert code == 0 and out.count("PP->S resonant") == 2


def test_table(capsys, tmp_path):
    code, out, _ = run(capsys, "table", CONFIGS / "table.yaml", "--out", tmp_path)
    assert code == 0
    rows = [line.split() for line in out.splitlines() if "->" in line]
    assert len(rows) == 7
    assert {r[0]: r[1] for r in rows}["SH+SV->0"] == "vanishing"
    assert (tmp_path / "table.txt").read_text().strip() == out.strip()


def test_symbol_sweep_zeros(capsys, tmp_path):
    assert run(capsys, "symbol", CONFIGS / "symbol_pp_sh.yaml", "--out", tmp_path)[0] == 0
    with open(tmp_path / "symbol_sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    amp = [(float(r["alpha"]), float(r["psi"]), math.hypot(float(r["amplitude_re"]), float(r["amplitude_im"])))
           for r in rows]
    peak = max(v for _, _, v in amp)
    zeros = [v for a, p, v in amp if abs(math.remainder(2 * p - a, math.pi)) < 1e-8]
    assert len(zeros) == 2  # alpha = 60 and 100 degrees
    assert max(zeros) < 1e-12 * peak


def test_invert_synthetic(capsys, tmp_path):
    code, out, _ = run(capsys, "invert", CONFIGS / "invert_synthetic.yaml", "--out", tmp_path)
    assert code == 0
    rec = json.loads((tmp_path / "recovery.json").read_text())
    assert abs(rec["A"] - 0.3) < 1e-10 * 0.3 and abs(rec["B"] + 0.4) < 1e-10 * 0.4


def test_invert_travel_times(capsys, tmp_path):
    code, _, _ = run(capsys, "invert", CONFIGS / "invert_travel_times.yaml", "--out", tmp_path)
    assert code == 0
    rec = json.loads((tmp_path / "recovery.json").read_text())
    assert rec["lam"] == pytest.approx(2.0, abs=1e-12) and rec["mu"] == pytest.approx(1.0, abs=1e-12)


def test_invert_degenerate_exit_code(capsys, tmp_path):
    m = synthesize(MaterialPoint(2, 1, 0.3, -0.4), "P+SV->SV", 0.7, 0.4)
    write_measurements(tmp_path / "dup.json", [m, m])
    cfg = tmp_path / "deg.yaml"
    cfg.write_text(yaml.safe_dump({"lam": 2.0, "mu": 1.0, "measurements": "dup.json"}))
    code, _, err = run(capsys, "invert", cfg, "--out", tmp_path)
    assert code == 3
    assert json.loads(err)["error"] == "DegenerateSystemError"


def test_missing_config(capsys, tmp_path):
    code, _, err = run(capsys, "speeds", tmp_path / "nope.yaml")
    assert code != 0
    assert json.loads(err)["exit_code"] == code


def test_validation_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "speeds", CONFIGS / "speeds.yaml", "--set", "medium.mu=-1", "--out", tmp_path)
    assert code == 2
    assert "message" in json.loads(err)


def test_bad_override(capsys):
    code, _, _ = run(capsys, "speeds", CONFIGS / "speeds.yaml", "--set", "novalue")
    assert code == 2


@pytest.mark.parametrize("name, cfg", [
    ("speeds", "speeds.yaml"), ("classify", "classify_glancing.yaml"), ("trace", "trace_homogeneous.yaml"),
    ("resonance", "resonance_pp.yaml"), ("symbol", "symbol_pp_sh.yaml"), ("table", "table.yaml"),
    ("simulate", "simulate_pp_sh.yaml"), ("invert", "invert_synthetic.yaml"),
])
def test_dry_run(capsys, tmp_path, name, cfg):
    code, out, _ = run(capsys, name, CONFIGS / cfg, "--dry-run", "--out", tmp_path / "o")
    assert code == 0
    assert json.loads(out)["dry_run"] is True
    assert not (tmp_path / "o").exists()


def test_simulate_dry_run_rejects_cfl(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", CONFIGS / "simulate_pp_sh.yaml", "--dry-run", "--set", "grid.cfl=0.9")
    assert code == 2 and "cfl" in json.loads(err)["message"]


def test_determinism(capsys, tmp_path):
    for d in ("a", "b"):
        assert run(capsys, "symbol", CONFIGS / "symbol_pp_sh.yaml", "--out", tmp_path / d)[0] == 0
        assert run(capsys, "invert", CONFIGS / "invert_synthetic.yaml", "--out", tmp_path / d)[0] == 0
    for f in ("symbol_sweep.csv", "recovery.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_simulate_plan_rejects_small_grid(capsys, tmp_path):
    cfg = {
        "name": "tiny", "medium": {"lam": 1.0, "mu": 1.0, "A": 0.5, "B": 0.25},
        "grid": {"n": [128, 128]},
        "geometry": {"case": "PP->SH", "alpha_deg": 40.0, "k1": 0.75, "root": "small", "width": 8.0},
        "eps_ladder": [],
    }
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(cfg))
    code, out, err = run(capsys, "simulate", path, "--dry-run")
    # 128 cells are too few for this geometry: planning must say so up front
    assert code == 2 and "Error" in json.loads(err)["error"]
