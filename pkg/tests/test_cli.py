import csv
import json

import pytest

from speccode.cli import fmt, main

STAB3 = {"kind": "stabilizer", "n": 3, "generators": ["ZZI", "IZZ"]}
HAMMING = [[1, 0, 0, 0, 0, 1, 1], [0, 1, 0, 0, 1, 0, 1], [0, 0, 1, 0, 1, 1, 0], [0, 0, 0, 1, 1, 1, 1]]


def run(tmp_path, command, cfg, *extra):
    path = tmp_path / f"{command}.json"
    path.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    out = tmp_path / f"out_{command}"
    return main([command, "--config", str(path), "--out", str(out), *extra]), out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_code_stabilizer_report(tmp_path):
    code, out = run(tmp_path, "code", STAB3)
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["distance"] == 1 and rep["ker_dim"] == 2 and rep["W_size"] == 12
    assert rep["spectrum"]["values"] == [0, 2, 4] and rep["spectrum"]["multiplicities"] == [2, 4, 2]


def test_code_classical_and_gkp(tmp_path):
    code, out = run(tmp_path, "code", {"kind": "classical", "n": 7, "generators": HAMMING})
    assert code == 0 and json.loads((out / "report.json").read_text())["distance"] == 3
    code, out = run(tmp_path, "code", {"kind": "gkp", "M": 8})
    assert code == 0 and json.loads((out / "report.json").read_text())["distance"] == 1


def test_code_toric(tmp_path):
    code, out = run(tmp_path, "code", {"kind": "toric", "Lx": 2, "Ly": 2})
    rep = json.loads((out / "report.json").read_text())
    assert code == 0 and rep["distance"] == 2 and rep["ker_dim"] == 4 and rep["W_size"] is None


@pytest.mark.parametrize("cfg,expect", [
    ('{"kind": "stabilizer"', 2),
    ({"kind": "stabilizer", "n": 3, "generators": ["ZZI"], "extra": 1}, 2),
    ({"kind": "steane"}, 2),
    ({"kind": "stabilizer", "n": 2, "generators": ["XI", "ZI"]}, 3),
])
def test_code_exit_codes(tmp_path, cfg, expect, capsys):
    code, _ = run(tmp_path, "code", cfg)
    assert code == expect
    if expect == 2 and isinstance(cfg, dict) and "extra" in cfg:
        assert "extra" in capsys.readouterr().err


def test_missing_config_is_config_error(tmp_path):
    assert main(["code", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2


def test_threshold_poor_decoder(tmp_path):
    cfg = {"code": STAB3, "noise": {"kind": "pauli", "errors": ["XII"]},
           "thetas": [1e-4, 1e-3, 5e-3, 1e-2], "decoder": "poor"}
    with pytest.warns(RuntimeWarning):
        code, out = run(tmp_path, "threshold", cfg)
    assert code == 0
    fit = json.loads((out / "fit.json").read_text())
    assert fit["expansion"]["certified"] and fit["k"] == pytest.approx(0.75)
    rows = read_csv(out / "sweep.csv")
    assert list(rows[0]) == ["theta", "T", "T_expansion", "P_leak", "Fe"]


def test_threshold_petz_correctable(tmp_path):
    cfg = {"code": STAB3, "noise": {"kind": "pauli", "errors": ["XII", "IXI", "IIX"]},
           "thetas": [0.01, 0.02, 0.05, 0.1]}
    with pytest.warns(RuntimeWarning):
        code, out = run(tmp_path, "threshold", cfg)
    assert code == 0
    assert json.loads((out / "fit.json").read_text())["k"] <= 1e-3


def test_threshold_singleton_grid(tmp_path):
    cfg = {"code": STAB3, "noise": {"kind": "pauli", "errors": ["XII"]}, "thetas": [0.01]}
    assert run(tmp_path, "threshold", cfg)[0] == 2


def test_threshold_random_code_seeded(tmp_path):
    cfg = {"code": {"kind": "random", "dim": 8, "rank": 2}, "noise": {"kind": "random", "count": 3},
           "thetas": [1e-4, 1e-3, 3e-3, 1e-2], "decoder": "poor"}
    code, out = run(tmp_path, "threshold", cfg, "--seed", "7")
    assert code == 0
    fit = json.loads((out / "fit.json").read_text())
    assert fit["seed"] == 7 and fit["expansion"]["slope"] >= 1.9


def test_fluctuation_gap_column(tmp_path):
    cfg = {"code": STAB3, "error": "XII", "theta": 0.01, "lambdas": [0, 1, 2, 4]}
    code, out = run(tmp_path, "fluctuation", cfg)
    assert code == 0
    assert [float(r["gap"]) for r in read_csv(out / "sweep.csv")] == [2, 3, 4, 6]


def test_bt_halving(tmp_path):
    code, out = run(tmp_path, "bt", {"p_list": [8, 16, 32]})
    assert code == 0
    d1 = [float(r["delta1"]) for r in read_csv(out / "defects.csv")]
    assert all(0.4 <= b / a <= 0.65 for a, b in zip(d1, d1[1:]))


def test_distance_cube(tmp_path):
    code, out = run(tmp_path, "distance", {"group": {"kind": "bits", "n": 3}})
    assert code == 0
    rows = read_csv(out / "distances.csv")
    assert len(rows) == 28
    for r in rows:
        assert float(r["d_closed"]) == float(r["wt"])
        assert abs(float(r["d_general"]) - float(r["wt"])) < 1e-4


def test_distance_bad_weight_is_config_error(tmp_path):
    assert run(tmp_path, "distance", {"group": {"kind": "bits", "n": 2}, "weight": "manhattan"})[0] == 2


def test_fmt_round_trips():
    for v in (0.1, 1 / 3, 2.0 ** -40, 12345.678):
        assert float(fmt(v)) == v
    assert fmt(3) == "3" and fmt(float("inf")) == "inf"
