"""Writers for VTK legacy ASCII grids, Wavefront OBJ surfaces and CSV tables.

Every float is written with ``%.12e`` so that outputs are byte-stable.
"""
from __future__ import annotations

import os
from typing import Dict, Optional

import numpy as np

from .analysis import CSV_HEADER, ConvergenceTable
from .mesh import Mesh

FLOAT = "%.12e"
EXPORT_FORMATS = ("vtk", "obj", "csv")


def _f(x) -> str:
    return FLOAT % float(x)


def _write(path, text: str):
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {os.fspath(path)}: {exc.strerror or exc}") from exc
    return path


def vtk_text(
    mesh: Mesh,
    point_data: Optional[Dict[str, np.ndarray]] = None,
    cell_data: Optional[Dict[str, np.ndarray]] = None,
    title: str = "miura",
) -> str:
    """Unstructured grid over the parameter domain.

    Points are the unwrapped grid nodes, so periodic seams do not produce
    stretched triangles; ``point_data`` is given per (glued) vertex.
    """
    pts = mesh.nodes
    cells = mesh.cell_nodes
    out = ["# vtk DataFile Version 2.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    out.append(f"POINTS {len(pts)} double")
    out += [f"{_f(x)} {_f(y)} {_f(0.0)}" for x, y in pts]
    out.append(f"CELLS {len(cells)} {4 * len(cells)}")
    out += [f"3 {a} {b} {c}" for a, b, c in cells]
    out.append(f"CELL_TYPES {len(cells)}")
    out += ["5"] * len(cells)
    if point_data:
        out.append(f"POINT_DATA {len(pts)}")
        for name, vals in point_data.items():
            vals = np.asarray(vals, dtype=float)
            if len(vals) != mesh.n_vertices:
                raise ValueError(f"point array {name!r} has {len(vals)} values, expected {mesh.n_vertices}")
            out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            out += [_f(v) for v in vals[mesh.node_vertex]]
    if cell_data:
        out.append(f"CELL_DATA {len(cells)}")
        for name, vals in cell_data.items():
            vals = np.asarray(vals, dtype=float)
            if len(vals) != len(cells):
                raise ValueError(f"cell array {name!r} has {len(vals)} values, expected {len(cells)}")
            out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            out += [_f(v) for v in vals]
    return "\n".join(out) + "\n"


def write_vtk(path, mesh: Mesh, point_data=None, cell_data=None, title: str = "miura"):
    return _write(path, vtk_text(mesh, point_data, cell_data, title))


def obj_text(vertices: np.ndarray, triangles: np.ndarray) -> str:
    out = [f"v {_f(a)} {_f(b)} {_f(c)}" for a, b, c in vertices]
    out += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in triangles]
    return "\n".join(out) + "\n"


def write_obj(path, surface):
    """Triangulated surface phi_h on the glued mesh vertices."""
    mesh = surface.asm.spaces.mesh
    return _write(path, obj_text(surface.vertex_values, mesh.triangles))


def csv_text(table: ConvergenceTable) -> str:
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return _f(v)

    lines = [",".join(CSV_HEADER)]
    lines += [",".join(cell(v) for v in rec) for rec in table.records()]
    return "\n".join(lines) + "\n"


def write_csv(path, table: ConvergenceTable):
    return _write(path, csv_text(table))


def export(artifact, fmt: str, path, **data):
    """Write ``artifact`` (Mesh, SurfaceField or ConvergenceTable) in ``fmt``."""
    if fmt not in EXPORT_FORMATS:
        raise ValueError(f"unknown export format {fmt!r}")
    if isinstance(artifact, ConvergenceTable):
        if fmt != "csv":
            raise ValueError("tables export to csv only")
        return write_csv(path, artifact)
    if isinstance(artifact, Mesh):
        if fmt != "vtk":
            raise ValueError("meshes export to vtk only")
        return write_vtk(path, artifact, data.get("point_data"), data.get("cell_data"))
    if hasattr(artifact, "vertex_values"):
        if fmt == "obj":
            return write_obj(path, artifact)
        if fmt == "vtk":
            mesh = artifact.asm.spaces.mesh
            phi = artifact.vertex_values
            pd = {f"phi_{k}": phi[:, i] for i, k in enumerate("xyz")}
            pd.update(data.get("point_data") or {})
            return write_vtk(path, mesh, pd, data.get("cell_data"))
    raise ValueError(f"cannot export {type(artifact).__name__} as {fmt}")
