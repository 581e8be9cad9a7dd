import csv
import json

import pytest

from magframe import cli

SMALL = """
[scenario]
name = small
d = 1
t = 0.5

[symbol]
preset = bracket_xi
s = -2

[lattice]
R = 3
Rm = 8
decay_radii = 2, 3
"""


def write(tmp_path, text, name="s.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_unknown_preset_exits_2_naming_key(tmp_path, capsys):
    path = write(tmp_path, SMALL.replace("preset = bracket_xi", "preset = nonsense"))
    assert cli.run(["frame-check", "--scenario", path, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "symbol.preset" in err and "nonsense" in err


def test_parse_errors_exit_2(tmp_path, capsys):
    path = write(tmp_path, SMALL.replace("t = 0.5", "t = half"))
    assert cli.run(["frame-check", "--scenario", path, "--out", str(tmp_path)]) == 2
    assert "scenario.t" in capsys.readouterr().err
    path = write(tmp_path, SMALL.replace("t = 0.5", "t = 1.5"), "b.ini")
    assert cli.run(["frame-check", "--scenario", path, "--out", str(tmp_path)]) == 2
    assert cli.run(["frame-check", "--grid", "8", "--out", str(tmp_path)]) == 2


def test_planar_field_needs_d2(tmp_path, capsys):
    path = write(tmp_path, SMALL + "\n[field]\npreset = tanh\n")
    assert cli.run(["frame-check", "--scenario", path, "--out", str(tmp_path)]) == 2
    assert "field.preset" in capsys.readouterr().err


def test_frame_check_default(tmp_path):
    out = tmp_path / "o"
    assert cli.run(["frame-check", "--out", str(out)]) == 0
    rep = json.loads((out / "frame-check.json").read_text())
    assert rep["passed"]
    assert rep["scenario"]["R"] == 8 and rep["scenario"]["field"]["preset"] == "zero"
    parseval = [c for c in rep["checks"] if c["name"] == "parseval_defect"][0]
    assert parseval["value"] <= 1e-4


def test_matrix_then_decay_csv(tmp_path):
    path = write(tmp_path, SMALL)
    out = tmp_path / "o"
    assert cli.run(["matrix", "--scenario", path, "--out", str(out)]) == 0
    assert (out / "matrix.csv").exists()
    cli.run(["decay", "--scenario", path, "--out", str(out)])
    with open(out / "decay_certificates.csv") as fh:
        rows = list(csv.reader(fh))
    assert {"n", "m", "R", "certificate"} <= set(rows[0])
    assert len(rows) > 1
    # 17 significant digits
    value = rows[1][rows[0].index("certificate")]
    assert len(value.replace(".", "").replace("-", "").split("e")[0].lstrip("0")) >= 15 or float(value) == 0


def test_failed_check_exits_1(tmp_path, capsys):
    path = write(tmp_path, SMALL + "\n[tolerances]\nparseval = 1e-30\n")
    assert cli.run(["frame-check", "--scenario", path, "--out", str(tmp_path)]) == 1
    assert "parseval" in capsys.readouterr().err


def test_unknown_tolerance_key(tmp_path):
    path = write(tmp_path, SMALL + "\n[tolerances]\nbogus = 1\n")
    assert cli.run(["frame-check", "--scenario", path, "--out", str(tmp_path)]) == 2


def test_d2_roundtrip_needs_t_endpoint(tmp_path, capsys):
    text = SMALL.replace("d = 1", "d = 2").replace("Rm = 8", "Rm = 2").replace("R = 3", "R = 1")
    path = write(tmp_path, text)
    assert cli.run(["roundtrip", "--scenario", path, "--out", str(tmp_path)]) == 2
    assert "scenario.t" in capsys.readouterr().err


@pytest.mark.parametrize("sub", ["schur", "frame-check"])
def test_reports_identical_across_threads(tmp_path, sub):
    path = write(tmp_path, SMALL)
    blobs = []
    for k, threads in enumerate(("1", "3")):
        out = tmp_path / f"run{k}"
        cli.run([sub, "--scenario", path, "--out", str(out), "--threads", threads])
        blobs.append((out / f"{sub}.json").read_bytes())
    assert blobs[0] == blobs[1]


def test_module_entry_point():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "magframe", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "frame-check" in r.stdout
