import csv

import numpy as np
import pytest

from hartree.cli import main
from hartree.config import SCHEMA, ConfigError, parse_config
from hartree.reference import read_snapshot
from hartree.scheme import read_trajectory_arrays

CSV_COUPLING = 8

SMALL = """
grid_x.n = 128
grid_y.n = 128
time.T = 0.2
time.dt = 1e-2
time.record_every = 5
"""


def _cfg(tmp_path, text, name="c.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_defaults_and_comments(tmp_path):
    cfg = parse_config(_cfg(tmp_path, "# only a comment\npotentials.amplitude = 0.1  # inline\n"))
    assert cfg["potentials.amplitude"] == 0.1
    assert cfg["grid_x.n"] == SCHEMA["grid_x.n"][1]
    assert cfg["check.search_C"] == (0.0, 1.0, 2.0, 5.0, 10.0, 50.0)
    assert cfg.section("picard")["T1"] == 0.25


def test_list_and_bool_values(tmp_path):
    cfg = parse_config(_cfg(tmp_path, "check.search_C = 0, 3.5 7\npotentials.shift_to_h1 = no\n"))
    assert cfg["check.search_C"] == (0.0, 3.5, 7.0)
    assert cfg["potentials.shift_to_h1"] is False


@pytest.mark.parametrize("text,match", [
    ("grid_x.nn = 64\n", "did you mean 'grid_x.n'"),
    ("grid_x.n = 64\ngrid_x.n = 64\n", "duplicate"),
    ("grid_x.n = 1000\n", "power of two"),
    ("time.dt = 1\ntime.T = 0.5\n", "smaller than"),
    ("time.dt = -1\n", "positive"),
    ("picard.N = 0\n", "positive integer"),
    ("potentials.preset = cubic\n", "expected one of"),
    ("potentials.preset = tabulated\n", "v1_file"),
    ("just words\n", "key = value"),
    ("grid_x.n = 6.5\n", "integer"),
    ("time.T = nan\n", "positive"),
    ("potentials.amplitude = inf\n", "finite"),
])
def test_config_errors(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(_cfg(tmp_path, text))


def test_missing_config_exits_1(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 1
    assert "not found" in capsys.readouterr().err


def test_unknown_key_exits_1(tmp_path, capsys):
    assert main(["check-assumptions", "--config", _cfg(tmp_path, "potentials.amplitud = 1\n"),
                 "--out", str(tmp_path)]) == 1
    assert "potentials.amplitude" in capsys.readouterr().err


def test_check_pass_and_fail(tmp_path):
    ok = _cfg(tmp_path, "potentials.amplitude = 0.2\n", "ok.cfg")
    bad = _cfg(tmp_path, "potentials.amplitude = 1.0\n", "bad.cfg")
    assert main(["check-assumptions", "--config", ok, "--out", str(tmp_path / "a")]) == 0
    assert main(["check-assumptions", "--config", bad, "--out", str(tmp_path / "b")]) == 2
    text = (tmp_path / "b" / "assumptions.txt").read_text()
    assert "H2: FAIL" in text and "OVERALL: FAIL" in text
    assert "verified on grid [-10, 10] x [-16, 16]" in text
    assert "OVERALL: PASS" in (tmp_path / "a" / "assumptions.txt").read_text()


def test_run_outputs_and_determinism(tmp_path):
    cfg = _cfg(tmp_path, SMALL + "potentials.amplitude = 0.0\n")
    for d in ("r1", "r2"):
        assert main(["run", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    a, b = tmp_path / "r1", tmp_path / "r2"
    assert (a / "trajectory.htrj").read_bytes() == (b / "trajectory.htrj").read_bytes()
    assert (a / "diagnostics.csv").read_text() == (b / "diagnostics.csv").read_text()
    rows = _rows(a / "diagnostics.csv")
    assert rows[0][0] == "t" and rows[0][-1] == "df_residual"
    e = np.array([float(r[3]) for r in rows[1:]])
    # O(dt^2) splitting drift at dt = 1e-2
    assert np.abs(e - e[0]).max() < 1e-4
    assert all(float(r[CSV_COUPLING]) == 0.0 for r in rows[1:])
    dt, times, X, Y = read_trajectory_arrays(a / "trajectory.htrj")
    assert dt == 1e-2 and times.tolist() == pytest.approx([0, 0.05, 0.1, 0.15, 0.2])
    manifest = (a / "manifest.txt").read_text()
    assert "command = run" in manifest and "grid_x.n = 128" in manifest


def test_run_rejects_initial_mass_at_edge(tmp_path, capsys):
    cfg = _cfg(tmp_path, SMALL + "initial.x.center = 8.5\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "boundary mass" in capsys.readouterr().err


def test_picard_outputs(tmp_path):
    cfg = _cfg(tmp_path, SMALL + "picard.T1 = 0.1\npicard.segments = 2\n")
    assert main(["picard", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "picard_report.csv")
    assert rows[0] == ["n", "sup_diff", "ratio"]
    assert float(rows[-1][1]) < 1e-12
    dt, times, _, _ = read_trajectory_arrays(tmp_path / "trajectory.htrj")
    assert times[-1] == pytest.approx(0.2)


def test_compare_outputs(tmp_path):
    cfg = _cfg(tmp_path, SMALL)
    assert main(["compare", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "error.csv")
    assert rows[0] == ["t", "hartree_error", "full_norm", "full_energy"]
    assert float(rows[1][1]) == 0.0 and float(rows[-1][1]) > 0
    t, v = read_snapshot(tmp_path / "full_final.htr2")
    assert t == pytest.approx(0.2) and v.shape == (128, 128)


def test_compare_memory_guard(tmp_path, capsys):
    cfg = _cfg(tmp_path, "grid_x.n = 4096\ngrid_y.n = 2048\ngrid_x.min = -40\ngrid_x.max = 40\n"
                         "time.T = 0.002\ntime.dt = 1e-3\n")
    assert main(["compare", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "memory_ack" in capsys.readouterr().err


def test_ground_state_outputs(tmp_path):
    cfg = _cfg(tmp_path, "grid_x.n = 128\ngrid_y.n = 128\npotentials.preset = harmonic\n"
                         "potentials.omega = 2\n")
    assert main(["ground-state", "--config", cfg, "--out", str(tmp_path)]) == 0
    text = (tmp_path / "ground_state.txt").read_text().split("\n")
    ex = float(text[0].split("unshifted ")[1].rstrip(")"))
    ey = float(text[1].split("unshifted ")[1].rstrip(")"))
    assert ex == pytest.approx(0.5, abs=1e-5) and ey == pytest.approx(1.0, abs=1e-5)
    rows = _rows(tmp_path / "ground_state_x.csv")
    assert rows[0] == ["x", "re", "im"] and len(rows) == 129


def test_tabulated_preset(tmp_path):
    xs = np.linspace(-20, 20, 401)
    for name in ("v1.csv", "v2.csv"):
        (tmp_path / name).write_text("x,V\n" + "\n".join(f"{float(x)!r},{float(0.5 * x * x)!r}"
                                                         for x in xs) + "\n")
    cfg = _cfg(tmp_path, SMALL + f"potentials.preset = tabulated\npotentials.v1_file = "
               f"{tmp_path / 'v1.csv'}\npotentials.v2_file = {tmp_path / 'v2.csv'}\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
