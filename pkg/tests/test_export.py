import os

import numpy as np
import pytest

from miura.analysis import ConvergenceTable
from miura.export import csv_text, export, obj_text, write_csv, write_obj, write_vtk
from miura.mesh import Rect, build_rect_mesh

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def _golden(name):
    with open(os.path.join(GOLDEN, name), "rb") as fh:
        return fh.read()


def _table():
    t = ConvergenceTable()
    t.add(0.5, 100, 3, 1.0, 0.5, 8)
    t.add(0.25, 400, 3, 0.25, 0.0625, 32)
    return t


def test_vtk_golden(tmp_path):
    m = build_rect_mesh(Rect(0, 1, 0, 1), 1, 1)
    path = tmp_path / "m.vtk"
    write_vtk(path, m, {"u": np.arange(4.0)}, {"omega_prime": np.array([1.0, 0.0])})
    assert path.read_bytes() == _golden("unit_square.vtk")


def test_obj_golden(tmp_path):
    m = build_rect_mesh(Rect(0, 1, 0, 1), 1, 1)
    z = np.array([0.0, 0.5, -0.5, 0.0])
    text = obj_text(np.column_stack([m.vertices, z]), m.triangles)
    assert text.encode() == _golden("unit_square.obj")


def test_csv_golden(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, _table())
    assert path.read_bytes() == _golden("table.csv")
    assert csv_text(ConvergenceTable()).strip() == "h,dofs,newton_iters,h1_err,h1_rate,l2_err,l2_rate"


def test_periodic_vtk_uses_unwrapped_nodes(tmp_path):
    m = build_rect_mesh(Rect(0, 1, 0, 1), 2, 3, "y")
    path = tmp_path / "p.vtk"
    write_vtk(path, m, {"i": np.arange(m.n_vertices, dtype=float)})
    text = path.read_text()
    assert f"POINTS {(2 + 1) * (3 + 1)} double" in text
    assert f"CELLS {m.n_triangles} {4 * m.n_triangles}" in text


def test_surface_obj_counts(coarse_hyperboloid, tmp_path):
    res = coarse_hyperboloid
    path = tmp_path / "s.obj"
    write_obj(path, res.surface)
    lines = path.read_text().splitlines()
    assert sum(l.startswith("v ") for l in lines) == res.mesh.n_vertices
    assert sum(l.startswith("f ") for l in lines) == res.mesh.n_triangles


def test_dispatch_errors(coarse_hyperboloid, tmp_path):
    with pytest.raises(ValueError):
        export(_table(), "vtk", tmp_path / "x")
    with pytest.raises(ValueError):
        export(coarse_hyperboloid.mesh, "obj", tmp_path / "x")
    with pytest.raises(ValueError):
        export(coarse_hyperboloid.surface, "png", tmp_path / "x")
    with pytest.raises(ValueError):
        write_vtk(tmp_path / "x", coarse_hyperboloid.mesh, {"bad": np.zeros(3)})


def test_io_error_names_path(tmp_path):
    target = tmp_path / "missing" / "t.csv"
    with pytest.raises(OSError, match="missing"):
        write_csv(target, _table())
