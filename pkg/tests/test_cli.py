import json

import pytest

from miura.cases import make_case
from miura.cli import main
from miura.pipeline import convergence_study, solver_config


def _summary(path, command):
    return json.loads((path / f"{command}_summary.json").read_text())


def test_solve_hyperboloid(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["solve", "--nx", "2", "--ny", "12", "--out", str(out)]) == 0
    s = _summary(out, "solve")
    assert s["newton"]["iterations"] == 3 and s["newton"]["converged"]
    assert s["constraints"]["omega_prime_fraction"] == 1.0
    for f in ("solution.vtk", "surface.obj", "solution.npz", "surface.png", "gy2.png", "omega_prime.png"):
        assert (out / f).exists(), f
    assert "3 iterations" in capsys.readouterr().out


def test_nonconvergence_exit_code(tmp_path):
    out = tmp_path / "run"
    code = main(["solve", "--case", "annulus", "--nx", "2", "--ny", "12", "--max-iter", "1", "--out", str(out), "--no-plots"])
    assert code == 2
    s = _summary(out, "solve")
    assert not s["newton"]["converged"] and s["newton"]["iterations"] == 1


def test_convergence_table(tmp_path):
    out = tmp_path / "conv"
    assert main(["convergence", "--nx", "1", "--ny", "6", "--refine", "2", "--out", str(out), "--no-plots"]) == 0
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0] == "h,dofs,newton_iters,h1_err,h1_rate,l2_err,l2_rate"
    assert len(lines) == 3


def test_convergence_single_mesh_has_no_rates():
    case = make_case("hyperboloid", nx=1, ny=6)
    table, _ = convergence_study(case, solver_config(case), [(1, 6)])
    assert len(table.rows) == 1 and table.rows[0].h1_rate is None


def test_convergence_rejects_case_without_exact(tmp_path, capsys):
    assert main(["convergence", "--case", "annulus", "--out", str(tmp_path)]) == 1
    assert "no exact solution" in capsys.readouterr().err


def test_validate_passes(tmp_path, capsys):
    assert main(["validate", "--states", "2", "--out", str(tmp_path)]) == 0
    s = _summary(tmp_path, "validate")
    assert s["passed"] and len(s["checks"]) == 4
    assert capsys.readouterr().out.count("PASS") == 4


def test_validate_fails_on_corrupted_data(tmp_path, capsys):
    assert main(["validate", "--case", "annulus", "--literal", "--states", "1", "--out", str(tmp_path)]) == 3
    out = capsys.readouterr().out
    assert "FAIL boundary data" in out and "norm_identity" in out


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["solve", "--bogus"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 1
    assert main(["solve", "--case", "eggbox", "--out", str(tmp_path)]) == 1
    assert main(["solve", "--config", str(tmp_path / "none.ini")]) == 1
    assert main(["solve", "--format", "pdf", "--out", str(tmp_path)]) == 1


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[case]\nname = hyperboloid\n[mesh]\nnx = 1\nny = 6\n[output]\nplots = false\nformats = obj\n")
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--ny", "12", "--out", str(out)]) == 0
    s = _summary(out, "solve")
    assert (s["nx"], s["ny"]) == (1, 12)
    assert (out / "surface.obj").exists() and not (out / "solution.vtk").exists()


def test_export_from_saved_solution(tmp_path):
    out = tmp_path / "run"
    assert main(["solve", "--nx", "1", "--ny", "6", "--out", str(out), "--no-plots", "--format", "obj"]) == 0
    again = tmp_path / "again"
    code = main(["export", "--input", str(out / "solution.npz"), "--out", str(again), "--format", "vtk,obj", "--no-plots"])
    assert code == 0
    assert (again / "solution.vtk").exists()
    assert (again / "surface.obj").read_bytes() == (out / "surface.obj").read_bytes()
    assert main(["export", "--input", str(tmp_path / "missing.npz"), "--out", str(again)]) == 1


def test_deterministic_csv(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert main(["convergence", "--nx", "1", "--ny", "6", "--refine", "2", "--out", str(out), "--no-plots"]) == 0
        outs.append((out / "convergence.csv").read_bytes())
    assert outs[0] == outs[1]
