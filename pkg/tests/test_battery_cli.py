import csv
import json

import numpy as np
import pytest

from todalab import battery as bt
from todalab import canonical as cn
from todalab import cli
from todalab import jacobi as jm


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def write_config(tmp_path, text):
    p = tmp_path / "cfg.yaml"
    p.write_text(text)
    return str(p)


def test_default_config_is_valid():
    cfg = bt.ExperimentConfig.from_dict({})
    assert cfg.z_grid == (1j, 1 + 1j)
    assert all(v > 0 for v in cfg.tolerances.values())
    assert bt.ExperimentConfig.from_dict(json.loads(cfg.key())) == cfg


@pytest.mark.parametrize(
    "bad",
    [
        {"tolerances": {"band_edge": 0}},
        {"tolerances": {"nonsense": 1.0}},
        {"z_grid": []},
        {"z_grid": ["-1j"]},
        {"seed": "x"},
        {"bogus": 1},
        {"suites": ["no-such-suite"]},
        {"jacobi": {"sizes": []}},
    ],
)
def test_invalid_configs(bad):
    with pytest.raises(bt.ConfigError):
        bt.ExperimentConfig.from_dict(bad)


def test_empty_suite_list(tmp_path):
    cfg = write_config(tmp_path, "suites: []\n")
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["rows"] == [] and report["passed"] is True


def test_config_errors_exit_two(tmp_path, capsys):
    assert cli.main(["run", "--config", write_config(tmp_path, "tolerances: {floquet: -1}\n")]) == 2
    assert cli.main(["run", "--config", write_config(tmp_path, "seed: [unclosed\n")]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2
    assert cli.main(["run", "--suite", "nope"]) == 2


def test_broken_tolerance_reports_failure_with_values(tmp_path):
    cfg = write_config(tmp_path, "tolerances: {floquet: 1.0e-300}\n")
    out = tmp_path / "o"
    assert cli.main(["run", "--config", cfg, "--suite", "band-set", "--out", str(out)]) == 1
    rows = json.loads((out / "report.json").read_text())["rows"]
    bad = [r for r in rows if not r["pass"]]
    assert len(bad) == 1 and bad[0]["metric"] == "floquet_hausdorff"
    assert bad[0]["value"] is not None and bad[0]["value"] > 1e-300


def test_report_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["run", "--suite", "band-set", "--suite", "canonical-roundtrip", "--seed", "7", "--out", str(tmp_path / name)]) == 0
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    report = json.loads(a)
    assert report["seed"] == 7 and {r["suite"] for r in report["rows"]} == {"band-set", "canonical-roundtrip"}
    assert set(report["rows"][0]) == {"suite", "instance", "metric", "value", "tolerance", "pass"}


def test_float_format_is_17_digits():
    report = bt.Report(1, ["x"], [bt.Row("x", "i", "m", 0.1, 1.0), bt.Row("x", "i", "m", float("nan"), 1.0)])
    text = report.to_json()
    assert "0.10000000000000001" in text and '"value": null' in text
    assert json.loads(text)["passed"] is False


def test_suite_exception_becomes_failing_row(monkeypatch, tmp_path):
    def boom(cfg, out, rows):
        rows.add("inst", "partial", 0.0, "band_edge")
        raise ArithmeticError("boom")

    monkeypatch.setitem(bt.SUITES, "band-set", boom)
    rows = bt.run_suite("band-set", bt.ExperimentConfig.from_dict({}), tmp_path)
    assert [r.metric for r in rows] == ["partial", "error:ArithmeticError"]
    assert rows[0].passed and not rows[1].passed


def test_emit_band_set_free(tmp_path):
    path = tmp_path / "bands.csv"
    assert cli.main(["emit", "band-set", str(path)]) == 0
    header, data = read_csv(path)
    assert header == ["lo", "hi"]
    assert np.allclose(data, [[-1.0, 1.0]], atol=1e-10)


def test_emit_trajectory_of_constant_matrix(tmp_path):
    J = jm.JacobiMatrix([0.5, 0.5], [0.1, 0.1])
    jpath = bt.write_jacobi(J, tmp_path / "J.json")
    path = tmp_path / "traj.csv"
    assert cli.main(["emit", "trajectory", str(path), "--jacobi", str(jpath), "--steps", "100"]) == 0
    header, data = read_csv(path)
    assert header == ["t", "a_0", "a_1", "b_0", "b_1"]
    assert np.allclose(data[:, 1:3], 0.5) and np.allclose(data[:, 3:], 0.1)


def test_emit_disk_radii_decrease(tmp_path):
    path = tmp_path / "disks.csv"
    assert cli.main(["emit", "disk-radii", str(path), "--x-max", "5", "--dx", "1e-2"]) == 0
    header, data = read_csv(path)
    assert header == ["x", "center_re", "center_im", "radius"]
    r = data[:, 3]
    assert np.isinf(r[0]) and np.all(np.diff(r[1:]) < 0)


def test_emit_m_trace(tmp_path):
    path = tmp_path / "m.csv"
    assert cli.main(["emit", "m-trace", str(path), "--points", "11", "--y", "0.1"]) == 0
    header, data = read_csv(path)
    assert header == ["x", "y", "m_plus_re", "m_plus_im", "m_minus_re", "m_minus_im"]
    assert data.shape == (11, 6) and np.all(data[:, 3] > 0) and np.all(data[:, 5] > 0)


def test_hamiltonian_and_potential_csv_roundtrip(tmp_path):
    V = cn.Potential.from_function(np.cos, 0.0, 0.1, 1e-2)
    H, _ = cn.schrodinger_to_canonical(V)
    H2 = bt.read_hamiltonian(bt.write_hamiltonian(H, tmp_path / "H.csv"))
    V2 = bt.read_potential(bt.write_potential(V, tmp_path / "V.csv"))
    assert np.array_equal(H2.values, H.values) and np.array_equal(H2.x, H.x)
    assert np.array_equal(V2.V, V.V)


def test_cli_lists_suites_and_config(capsys):
    assert cli.main(["suites"]) == 0
    assert capsys.readouterr().out.split() == list(bt.SUITES)
    assert cli.main(["config"]) == 0
    assert "tolerances:" in capsys.readouterr().out
