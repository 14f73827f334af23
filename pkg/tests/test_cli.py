import csv
import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest
from numba import njit

from shadowtrace import dynamics
from shadowtrace.cli import main, parse_number, parse_span

CIRCLE = '{"type": "circle"}'
ELLIPSE = '{"type": "ellipse", "b": 2}'
SVG_NS = "{http://www.w3.org/2000/svg}"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def polylines_ok(path, line_ids):
    """Parse the SVG and require every named line artist to draw at least one segment."""
    root = ET.parse(path).getroot()
    assert root.tag == SVG_NS + "svg"
    groups = {g.get("id"): g for g in root.iter(SVG_NS + "g")}
    for gid in line_ids:
        paths = [n.get("d", "") for n in groups[gid].iter(SVG_NS + "path")]
        assert paths and all(" L " in d for d in paths), gid
    return groups


def test_number_parsing():
    assert parse_number("4pi") == pytest.approx(4 * math.pi)
    assert parse_number("-pi/2") == pytest.approx(-math.pi / 2)
    assert parse_number("3*pi/4") == pytest.approx(0.75 * math.pi)
    assert parse_span("-4pi:4pi") == pytest.approx((-4 * math.pi, 4 * math.pi))
    with pytest.raises(Exception):
        parse_number("__import__('os')")


def test_trace_writes_reproducible_outputs(tmp_path, capsys):
    args = ["trace", "--curve", ELLIPSE, "--R", "1.3", "--theta0", "0.5", "--t-span=-pi:2pi",
            "--t-init", "0", "--steps-per-period", "512"]
    code, out, _ = run(capsys, *args, "--out", str(tmp_path / "a"))
    assert code == 0
    summary = json.loads(out)
    assert summary["distance_error"] < 1e-12
    code, _, _ = run(capsys, *args, "--out", str(tmp_path / "b"))
    first = (tmp_path / "a" / "trajectory.csv").read_bytes()
    assert first == (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert first.splitlines()[0] == b"t,theta,x,y,alpha"
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["config_hash"] == summary["config_hash"]
    polylines_ok(tmp_path / "a" / "trajectory.svg",
                 ["escaping-curve", "shadowing-forward", "shadowing-backward"])
    cusps = json.loads((tmp_path / "a" / "trajectory_cusps.json").read_text())
    assert isinstance(cusps, list)


def test_sweep_outputs(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "--curve", CIRCLE, "--R-min", "0.5", "--R-max", "3",
                       "--n-points", "6", "--n-periods", "32", "--steps-per-period", "256",
                       "--out", str(tmp_path))
    assert code == 0 and json.loads(out)["points"] == 6
    with open(tmp_path / "sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6 and float(rows[0]["rho"]) == pytest.approx(1.0, abs=1 / 32)
    polylines_ok(tmp_path / "sweep.svg", ["rho-numeric", "rho-oracle"])


def test_critical_with_turning(tmp_path, capsys):
    code, out, _ = run(capsys, "critical", "--curve", CIRCLE, "--tol", "0.05", "--n-periods", "32",
                       "--steps-per-period", "256", "--turning", "--out", str(tmp_path))
    assert code == 0
    summary = json.loads(out)
    assert summary["critical"] == pytest.approx(1.0, abs=0.06)
    assert (tmp_path / "turning.json").exists()


def test_subharmonic_on_circle(tmp_path, capsys):
    code, out, _ = run(capsys, "subharmonic", "--curve", CIRCLE, "--p", "2", "--q", "1", "--tol", "1e-9",
                       "--steps-per-period", "1024", "--out", str(tmp_path))
    assert code == 0
    res = json.loads(out)
    assert res["R"] == pytest.approx(2 / math.sqrt(3), abs=1e-8)
    assert res["closure"] < 1e-6
    assert res["cusps"] == res["expected_cusps"] == 2


@pytest.mark.parametrize("argv", [
    ["trace", "--curve", '{"type": "circle", "radius": -1}', "--R", "1"],
    ["trace", "--curve", CIRCLE, "--R", "0"],
    ["trace", "--curve", "{broken", "--R", "1"],
    ["subharmonic", "--curve", CIRCLE, "--p", "4", "--q", "2"],
    ["sweep", "--curve", CIRCLE, "--R-min", "2", "--R-max", "1"],
])
def test_validation_errors_exit_2(tmp_path, capsys, argv):
    code, _, err = run(capsys, *argv, "--out", str(tmp_path))
    assert code == 2 and err.startswith("error:")


def test_hypothesis_error_exit_4(tmp_path, capsys):
    eight = json.dumps({"type": "fourier", "x": {"a0": 0, "a": [0, 0], "b": [0, 1]},
                        "y": {"a0": 0, "a": [0], "b": [1]}})
    code, _, _ = run(capsys, "subharmonic", "--curve", eight, "--p", "2", "--q", "1", "--out", str(tmp_path))
    assert code == 4


@pytest.mark.slow
def test_oracle_check_passes(tmp_path, capsys):
    code, out, _ = run(capsys, "oracle-check", "--n-periods", "64", "--grid-points", "10", "--out", str(tmp_path))
    assert code == 0
    assert all(line.startswith("PASS") for line in out.strip().splitlines())
    assert json.loads((tmp_path / "scorecard.json").read_text())["passed"]


@pytest.mark.slow
def test_oracle_check_catches_corrupted_field(tmp_path, capsys, monkeypatch):
    original = dynamics.SE_FIELD

    @njit
    def flipped(px, py, dpx, dpy, ux, uy):
        vx, vy = original(px, py, dpx, dpy, ux, uy)
        return -vx, -vy

    monkeypatch.setattr(dynamics, "SE_FIELD", flipped)
    code, out, _ = run(capsys, "oracle-check", "--n-periods", "64", "--grid-points", "10", "--out", str(tmp_path))
    assert code == 3
    assert "FAIL distance_invariance" in out


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "shadowtrace", "trace", "--curve", CIRCLE, "--R", "0.5",
                           "--steps-per-period", "128", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["samples"] == 129
