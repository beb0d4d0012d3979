import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from ddcoherence.cli import EXIT_INVALID, EXIT_NONCONVERGED, EXIT_OK, main
from ddcoherence.fitting import rabi_model


def _rows(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == EXIT_INVALID
    assert "unknown subcommand" in capsys.readouterr().err


def test_validation_error_exit(capsys):
    assert main(["simulate", "--set", "scan.start=-5 us"]) == EXIT_INVALID
    assert "scan.start" in capsys.readouterr().err
    assert main(["simulate", "--set", "simulation.n_rep=300"]) == EXIT_INVALID
    assert main(["simulate", "-c", "/nonexistent/config.yaml"]) == EXIT_INVALID


def test_simulate_is_reproducible(tmp_path):
    args = ["simulate", "--set", "simulation.n_rep=300", "--set", "scan.points=20", "--seed", "11"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["-o", str(a)]) == EXIT_OK
    assert main(args + ["-o", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    header = a.read_text().splitlines()[0]
    assert header.startswith("#") and "seed=11" in header and "config_sha256=" in header
    rows = _rows(a)
    assert list(rows[0]) == ["tau_us", "w", "p2", "p2_sampled", "stderr"]
    assert len(rows) == 20
    c = tmp_path / "c.csv"
    main(["simulate", "--set", "simulation.n_rep=300", "--set", "scan.points=20", "--seed", "12", "-o", str(c)])
    assert c.read_bytes() != a.read_bytes()


def test_config_file(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("sequence:\n  kind: udd\n  n: 5\nscan:\n  start: 100 us\n  stop: 1 ms\n  points: 4\n")
    out = tmp_path / "o.csv"
    assert main(["simulate", "-c", str(cfg), "-o", str(out)]) == EXIT_OK
    rows = _rows(out)
    assert float(rows[-1]["tau_us"]) == pytest.approx(1000.0)
    # flags override file values
    assert main(["simulate", "-c", str(cfg), "--set", "scan.points=3", "-o", str(out)]) == EXIT_OK
    assert len(_rows(out)) == 3


def test_filter(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["filter", "--set", "sequence.kind=echo", "--set", "filter.points=11", "-o", str(out)]) == EXIT_OK
    rows = _rows(out)
    assert list(rows[0]) == ["omega_rad_s", "omega_over_pi_tau", "g"]
    assert float(rows[0]["g"]) == 0.0


def test_t2scan(tmp_path):
    out = tmp_path / "t2.csv"
    assert main(["t2scan", "-o", str(out)]) == EXIT_OK
    rows = _rows(out)
    assert [int(r["n_pulses"]) for r in rows] == [1, 3, 5, 9, 13]
    t2 = [float(r["t2_us"]) for r in rows]
    assert all(np.diff(t2) > 0)
    assert t2[0] == pytest.approx(480.0, rel=1e-3)


def test_mc(tmp_path, capsys):
    assert main(["mc", "--set", "mc.n_traj=400", "--set", "mc.n_modes=1024"]) == EXIT_INVALID
    args = ["mc", "--set", "mc.n_traj=400", "--set", "mc.n_modes=1024", "--seed", "3"]
    assert main(args + ["-o", str(tmp_path / "a.json")]) == EXIT_OK
    assert main(args + ["-o", str(tmp_path / "b.json")]) == EXIT_OK
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    doc = json.loads((tmp_path / "a.json").read_text())
    assert doc["seed"] == 3
    assert abs(doc["w_mc"] - doc["w_filter"]) < max(0.05, 4 * doc["w_mc_stderr"])


def test_spectroscopy_from_file(tmp_path):
    data = tmp_path / "pts.csv"
    data.write_text("# measured\nn_pulses,tau_us,w\n9,750,0.6\n9,375,0.8\n")
    out = tmp_path / "s.csv"
    assert main(["spectroscopy", "--input", str(data), "-o", str(out)]) == EXIT_OK
    rows = _rows(out)
    assert list(rows[0]) == ["omega_bar_khz", "omega_bar_rad_s", "s_hat_rad_s"]
    assert [float(r["omega_bar_khz"]) for r in rows] == pytest.approx([6.0, 12.0])
    data.write_text("n_pulses,tau_us,w\n9,750,0.0\n")
    assert main(["spectroscopy", "--input", str(data)]) == EXIT_INVALID


def test_spectroscopy_forward(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["spectroscopy", "--set", "spectroscopy.points=25", "-o", str(out)]) == EXIT_OK
    rows = _rows(out)
    s = np.array([float(r["s_hat_rad_s"]) for r in rows])
    f = np.array([float(r["omega_bar_khz"]) for r in rows])
    assert f[np.argmax(s)] == pytest.approx(12.0, rel=0.1)


def test_optimize(tmp_path, capsys):
    out = tmp_path / "map.csv"
    args = ["optimize", "--set", "optimize.step=0.05", "--set", "optimize.tau=1500 us"]
    assert main(args + ["-o", str(out)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out.split("\n", 0)[0])
    rows = _rows(out)
    assert list(rows[0]) == ["tau1_frac", "tau2_frac", "tau0_frac", "w"]
    assert summary["w_best"] == pytest.approx(max(float(r["w"]) for r in rows))
    assert {"best_tau1", "best_tau2", "w_best"} <= set(summary)


def _write_series(path, t, y):
    with open(path, "w") as fh:
        fh.write("t_us,y\n")
        for a, b in zip(t, y):
            fh.write(f"{float(a) * 1e6!r},{float(b)!r}\n")


def test_fit(tmp_path, capsys):
    t = np.linspace(0, 60e-6, 301)
    data = tmp_path / "rabi.csv"
    _write_series(data, t, rabi_model(t, 2 * math.pi * 76.78e3, 0.837, 150e-6))
    assert main(["fit", "--model", "rabi", "--input", str(data)]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["params"]["rabi_f_khz"] == pytest.approx(76.78, rel=1e-6)
    assert doc["params"]["visibility"] == pytest.approx(0.837, rel=1e-6)

    _write_series(data, t, np.random.default_rng(0).binomial(300, 0.5, len(t)) / 300)
    assert main(["fit", "--model", "rabi", "--input", str(data)]) == EXIT_NONCONVERGED
    _write_series(data, t, np.full(len(t), 0.7))
    assert main(["fit", "--model", "exponential", "--input", str(data)]) == EXIT_NONCONVERGED
    assert main(["fit", "--model", "exponential"]) == EXIT_INVALID


def test_threshold(tmp_path, capsys):
    from scipy import stats
    n = np.arange(40)
    up, down = tmp_path / "up.csv", tmp_path / "down.csv"
    for path, mu in ((up, 11.7), (down, 0.36)):
        counts = np.round(1e6 * stats.poisson.pmf(n, mu))
        path.write_text("n,count\n" + "".join(f"{k},{int(c)}\n" for k, c in zip(n, counts)))
    assert main(["threshold", "--up", str(up), "--down", str(down)]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["n_th"] == 3
    assert 0.5 <= doc["F"] <= 1.0
    down.write_text("n,count\n-1,5\n")
    assert main(["threshold", "--up", str(up), "--down", str(down)]) == EXIT_INVALID


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "ddcoherence.cli", "nope"], capture_output=True, text=True)
    assert res.returncode == 1
