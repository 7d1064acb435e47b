"""Figures written next to the numeric outputs (non-interactive Agg backend)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri  # noqa: E402
import numpy as np  # noqa: E402

from .analysis import ConvergenceTable  # noqa: E402


def _save(fig, path):
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def _triangulation(mesh):
    return mtri.Triangulation(mesh.nodes[:, 0], mesh.nodes[:, 1], mesh.cell_nodes)


def plot_convergence(table: ConvergenceTable, path, title: str = "gradient error"):
    """Log-log errors against the mesh size with reference slopes 2 and 3."""
    h = np.array([r.h for r in table.rows])
    e1 = np.array([r.h1_err for r in table.rows])
    e0 = np.array([r.l2_err for r in table.rows])
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(h, e1, "o-", label="H1")
    ax.loglog(h, e0, "s-", label="L2")
    if len(h) > 1:
        for err, k, style in ((e1, 2, ":"), (e0, 3, "--")):
            ax.loglog(h, err[-1] * (h / h[-1]) ** k, "k" + style, lw=0.8, label=f"h^{k}")
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.set_title(title)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def plot_vertex_field(mesh, values, path, title: str = "", cmap: str = "viridis"):
    """Smooth plot of a per-vertex field over the parameter domain."""
    fig, ax = plt.subplots(figsize=(5, 4))
    tc = ax.tripcolor(_triangulation(mesh), np.asarray(values)[mesh.node_vertex], shading="gouraud", cmap=cmap)
    fig.colorbar(tc, ax=ax)
    ax.set_aspect("auto")
    ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    return _save(fig, path)


def plot_cell_flag(mesh, flag, path, title: str = "Omega'"):
    """Per-triangle indicator (e.g. membership in Omega')."""
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.tripcolor(_triangulation(mesh), facecolors=np.asarray(flag, dtype=float), cmap="coolwarm", vmin=0, vmax=1)
    ax.set_aspect("auto")
    ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    return _save(fig, path)


def plot_surface(surface, path, title: str = "surface"):
    mesh = surface.asm.spaces.mesh
    phi = surface.vertex_values
    fig = plt.figure(figsize=(5, 5))
    ax = fig.add_subplot(projection="3d")
    ax.plot_trisurf(phi[:, 0], phi[:, 1], phi[:, 2], triangles=mesh.triangles, cmap="viridis", linewidth=0.1)
    ax.set_title(title)
    span = np.ptp(phi, axis=0).max() / 2
    centre = (phi.max(axis=0) + phi.min(axis=0)) / 2
    for c, setter in zip(centre, (ax.set_xlim, ax.set_ylim, ax.set_zlim)):
        setter(c - span, c + span)
    return _save(fig, path)
