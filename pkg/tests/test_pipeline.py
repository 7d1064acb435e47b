import json

import pytest

from miura import plotting
from miura.analysis import vertex_constraints
from miura.cases import make_case
from miura.checks import CheckResult, hypothesis_tolerance
from miura.pipeline import convergence_study, refinement_meshes, solve_case, solver_config


def test_refinement_meshes():
    assert refinement_meshes(2, 12, 3) == [(2, 12), (4, 24), (8, 48)]


def test_solver_config_ignores_none():
    case = make_case("hyperboloid", nx=1, ny=6)
    cfg = solver_config(case, tol_rel=None, max_iter=7)
    assert cfg.max_iter == 7 and cfg.tol_rel == 1e-8 and cfg.bc_mode == "strong"


def test_summary_is_json(coarse_hyperboloid):
    s = coarse_hyperboloid.summary()
    again = json.loads(json.dumps(s, default=float))
    assert again["newton"]["converged"] and again["dofs"] == coarse_hyperboloid.dofs
    assert again["h1_error"] > again["l2_error"] > 0


def test_weak_mode_override():
    case = make_case("hyperboloid", nx=1, ny=6)
    res = solve_case(case, solver_config(case, bc_mode="weak"))
    assert res.case.bc.mode == "weak" and res.report.converged


def test_convergence_needs_exact():
    case = make_case("annulus", nx=1, ny=6)
    with pytest.raises(ValueError, match="no exact solution"):
        convergence_study(case, solver_config(case), [(1, 6)])


def test_hypothesis_tolerance():
    assert hypothesis_tolerance(make_case("axisymmetric")) == 1e-8
    assert hypothesis_tolerance(make_case("hyperboloid")) == 1e-10


def test_check_line():
    assert CheckResult("x", 1e-9, 1e-6, True).line() == "PASS x: 1.000e-09 (tol 1e-06)"
    assert CheckResult("y", 2.0, 1.0, False, "bad").line() == "FAIL y: 2.000e+00 (tol 1) (bad)"


def test_plots_written(tmp_path, coarse_hyperboloid):
    res = coarse_hyperboloid
    pdata = vertex_constraints(res.asm, res.state.g)
    files = [
        plotting.plot_surface(res.surface, tmp_path / "s.png"),
        plotting.plot_vertex_field(res.mesh, pdata["gy2"], tmp_path / "f.png", "gy2"),
        plotting.plot_cell_flag(res.mesh, res.constraints.cell_data()["omega_prime"], tmp_path / "c.png"),
    ]
    case = make_case("hyperboloid", nx=1, ny=6)
    table, _ = convergence_study(case, solver_config(case), [(1, 6), (2, 12)])
    files.append(plotting.plot_convergence(table, tmp_path / "conv.png"))
    for f in files:
        data = open(f, "rb").read()
        assert data[:8] == b"\x89PNG\r\n\x1a\n" and len(data) > 1000
