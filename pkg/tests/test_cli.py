"""Command line interface: modes, overrides, file formats, exit codes."""

import subprocess
import sys

import numpy as np
import pytest

from eddydg import cli
from eddydg.solver import SolverError

CUBE_CFG = """\
[run]
mode = solve
mesh = boxed_cube:3
degree = 1
entry = gradient_pair
"""


def _write(tmp_path, body, name="run.cfg"):
    path = tmp_path / name
    path.write_text(body)
    return str(path)


def test_solve_writes_solution_archive(tmp_path):
    cfg = _write(tmp_path, CUBE_CFG + f"output = {tmp_path}\n")
    assert cli.main([cfg]) == 0
    data = np.load(tmp_path / "solution.npz")
    assert set(data.files) >= {
        "x", "residual_inf", "certificate_bound", "precision", "ndofs", "dg_error"
    }
    assert data["residual_inf"] <= data["certificate_bound"]
    assert data["x"].shape == (int(data["ndofs"]),)
    assert str(data["precision"]) == "double"


def test_convergence_csv_header_and_threshold(tmp_path):
    cfg = _write(tmp_path, CUBE_CFG)
    out = tmp_path / "conv"
    code = cli.main([
        cfg, "--mode", "convergence", "--levels", "2",
        "--eoc_threshold", "0.8", "--output", str(out),
    ])
    assert code == 0
    rows = (out / "errors.csv").read_text().splitlines()
    assert rows[0] == "level,h,dg_error,err_curl,err_l2C,err_gradI,jumpC,jumpI,jumpE,eoc"
    assert len(rows) == 3
    first = rows[1].split(",")
    assert first[0] == "0" and first[-1] == ""  # no rate on the first level
    assert float(rows[2].split(",")[-1]) > 0.5


def test_convergence_below_threshold_exits_5(tmp_path):
    cfg = _write(tmp_path, CUBE_CFG)
    code = cli.main([
        cfg, "--mode", "convergence", "--levels", "2",
        "--eoc_threshold", "2.0", "--output", str(tmp_path / "bad"),
    ])
    assert code == 5


def test_verify_torus_report(tmp_path):
    cfg = _write(tmp_path, "[run]\nmode = verify\nmesh = boxed_torus:5\n")
    assert cli.main([cfg, "--output", str(tmp_path)]) == 0
    report = (tmp_path / "report.txt").read_text()
    lines = report.splitlines()
    assert lines[-1].endswith("checks passed")
    assert all(l.endswith(" PASS") for l in lines[:-1])
    # cohomology checks run on the torus
    assert any(l.startswith("generator circulation") for l in lines)


def test_nonpositive_sigma_exits_2_naming_key(tmp_path, caplog):
    cfg = _write(tmp_path, "[materials]\nsigma.conductor = 0\n[run]\nmesh = two_tet\n")
    assert cli.main([cfg]) == 2
    assert "sigma['conductor']" in caplog.text


def test_unknown_key_exits_2(tmp_path):
    cfg = _write(tmp_path, "[run]\nwibble = 3\n")
    assert cli.main([cfg]) == 2


def test_bad_mode_exits_2(tmp_path):
    cfg = _write(tmp_path, "[run]\nmode = frobnicate\n")
    assert cli.main([cfg]) == 2


def test_missing_config_exits_2(tmp_path):
    assert cli.main([str(tmp_path / "nope.cfg")]) == 2


def test_unknown_fixture_exits_3(tmp_path):
    cfg = _write(tmp_path, "[run]\nmesh = boxed_sphere:4\n")
    assert cli.main([cfg, "--output", str(tmp_path)]) == 3


def test_solver_failure_exits_4(tmp_path, monkeypatch):
    def boom(system, **kw):
        raise SolverError("synthetic failure")

    monkeypatch.setattr(cli, "solve_system", boom)
    cfg = _write(tmp_path, CUBE_CFG + f"output = {tmp_path}\n")
    assert cli.main([cfg]) == 4


def test_flag_overrides_config(tmp_path):
    cfg = _write(tmp_path, CUBE_CFG + f"output = {tmp_path}\n")
    assert cli.main([cfg, "--mesh", "two_tet", "--degree", "2"]) == 0
    base = np.load(tmp_path / "solution.npz")
    # two tets at degree 2: 30 vector dofs plus the enriched scalar block
    assert int(base["ndofs"]) == 44


def test_vtk_export(tmp_path):
    cfg = _write(tmp_path, CUBE_CFG + f"output = {tmp_path}\nvtk = yes\n")
    assert cli.main([cfg]) == 0
    lines = (tmp_path / "fields.vtk").read_text().splitlines()
    assert lines[0].startswith("# vtk DataFile")
    assert "ASCII" in lines[2]
    ncells = int(next(l for l in lines if l.startswith("CELLS")).split()[1])
    assert ncells == 162
    names = [l.split()[1] for l in lines if l.startswith("SCALARS")]
    assert names == ["h_mag", "e_mag", "psi_re"]
    data_at = lines.index("LOOKUP_TABLE default") + 1
    vals = np.array([float(v) for v in lines[data_at:data_at + ncells]])
    assert np.isfinite(vals).all() and vals.max() > 0


def test_module_entry_logs_to_stderr_only(tmp_path):
    cfg = _write(tmp_path, CUBE_CFG + f"output = {tmp_path}\n")
    proc = subprocess.run(
        [sys.executable, "-m", "eddydg.cli", cfg],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout == ""
    assert "residual" in proc.stderr
