"""Structured triangulations of rectangles, optionally periodic along one axis.

Every grid cell ``(i, j)`` is split along its lower-left to upper-right
diagonal into the two counter-clockwise triangles ``(a, b, c)`` and
``(a, c, d)`` where ``a = (i, j)``, ``b = (i+1, j)``, ``c = (i+1, j+1)``,
``d = (i, j+1)``.

Periodic identification is done on indices: the grid nodes of the glued
sides map to the same vertex, and edges are numbered by their grid position
so that a periodic direction with only two subdivisions still yields
distinct edges.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

SIDES = ("left", "right", "bottom", "top")

# local edges of a triangle, as pairs of local vertices; edge k of the P2
# element carries the midpoint dof with local index 3 + k
LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


@dataclass(frozen=True)
class Rect:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable triangulation.

    ``nodes`` are the unglued grid nodes (``(nx+1)*(ny+1)`` of them) and
    ``cell_nodes`` indexes into them, so per-triangle geometry never wraps
    around a periodic seam. ``vertices``/``triangles`` are the glued
    (topological) view used for the degrees of freedom.
    """

    rect: Rect
    nx: int
    ny: int
    periodic: Optional[str]
    nodes: np.ndarray  # (N, 2)
    node_vertex: np.ndarray  # (N,) glued vertex of each grid node
    cell_nodes: np.ndarray  # (T, 3)
    vertices: np.ndarray  # (V, 2) canonical coordinates
    triangles: np.ndarray  # (T, 3)
    edges: np.ndarray  # (E, 2) vertex pairs
    edge_midpoints: np.ndarray  # (E, 2)
    edge_lengths: np.ndarray  # (E,)
    triangle_edges: np.ndarray  # (T, 3), ordered as LOCAL_EDGES
    boundary: dict = field(default_factory=dict)  # side -> edge indices
    boundary_vertices: dict = field(default_factory=dict)  # side -> vertex indices

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    @property
    def cell_coords(self) -> np.ndarray:
        """Unwrapped triangle corner coordinates, shape (T, 3, 2)."""
        return self.nodes[self.cell_nodes]

    @property
    def areas(self) -> np.ndarray:
        c = self.cell_coords
        e1 = c[:, 1] - c[:, 0]
        e2 = c[:, 2] - c[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def cell_diameters(self) -> np.ndarray:
        c = self.cell_coords
        lengths = [np.linalg.norm(c[:, b] - c[:, a], axis=1) for a, b in LOCAL_EDGES]
        return np.max(lengths, axis=0)

    @property
    def h(self) -> float:
        return float(self.cell_diameters.max())

    @property
    def sides(self) -> tuple:
        """Sides that are physical boundary (not glued away)."""
        return tuple(s for s in SIDES if s in self.boundary)


def build_rect_mesh(rect: Rect, nx: int, ny: int, periodic: Optional[str] = None) -> Mesh:
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be positive")
    if periodic not in (None, "x", "y"):
        raise ValueError(f"unknown periodic axis {periodic!r}")
    if periodic == "x" and nx < 2:
        raise ValueError("periodicity in x needs nx >= 2")
    if periodic == "y" and ny < 2:
        raise ValueError("periodicity in y needs ny >= 2")

    px, py = periodic == "x", periodic == "y"
    xs = np.linspace(rect.x_min, rect.x_max, nx + 1)
    ys = np.linspace(rect.y_min, rect.y_max, ny + 1)
    I, J = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))  # (ny+1, nx+1)
    I, J = I.ravel(), J.ravel()
    nodes = np.column_stack([xs[I], ys[J]])

    nvx = nx if px else nx + 1
    nvy = ny if py else ny + 1

    def vid(i, j):
        return (j % nvy if py else j) * nvx + (i % nvx if px else i)

    node_vertex = vid(I, J)
    vi, vj = np.meshgrid(np.arange(nvx), np.arange(nvy))
    vertices = np.column_stack([xs[vi.ravel()], ys[vj.ravel()]])

    def nid(i, j):
        return j * (nx + 1) + i

    ci, cj = np.meshgrid(np.arange(nx), np.arange(ny))
    ci, cj = ci.ravel(), cj.ravel()
    a, b, c, d = nid(ci, cj), nid(ci + 1, cj), nid(ci + 1, cj + 1), nid(ci, cj + 1)
    cell_nodes = np.empty((2 * len(ci), 3), dtype=np.int64)
    cell_nodes[0::2] = np.column_stack([a, b, c])
    cell_nodes[1::2] = np.column_stack([a, c, d])
    triangles = node_vertex[cell_nodes]

    # edges by grid position: horizontal, vertical, diagonal
    nhy = ny if py else ny + 1
    nvx_e = nx if px else nx + 1
    n_h = nx * nhy
    n_v = nvx_e * ny

    def h_edge(i, j):
        return (j % nhy if py else j) * nx + i

    def v_edge(i, j):
        return n_h + j * nvx_e + (i % nvx_e if px else i)

    def d_edge(i, j):
        return n_h + n_v + j * nx + i

    tri_edges = np.empty((2 * len(ci), 3), dtype=np.int64)
    tri_edges[0::2] = np.column_stack([h_edge(ci, cj), v_edge(ci + 1, cj), d_edge(ci, cj)])
    tri_edges[1::2] = np.column_stack([d_edge(ci, cj), h_edge(ci, cj + 1), v_edge(ci, cj)])
    n_edges = n_h + n_v + nx * ny

    edges = np.empty((n_edges, 2), dtype=np.int64)
    mids = np.empty((n_edges, 2))
    lengths = np.empty(n_edges)
    coords = nodes[cell_nodes]
    for k, (p, q) in enumerate(LOCAL_EDGES):
        e = tri_edges[:, k]
        edges[e] = np.column_stack([triangles[:, p], triangles[:, q]])
        mids[e] = 0.5 * (coords[:, p] + coords[:, q])
        lengths[e] = np.linalg.norm(coords[:, q] - coords[:, p], axis=1)
    # fold midpoints of seam edges back into the canonical period
    if px:
        mids[:, 0] = np.where(mids[:, 0] >= rect.x_max, mids[:, 0] - rect.width, mids[:, 0])
    if py:
        mids[:, 1] = np.where(mids[:, 1] >= rect.y_max, mids[:, 1] - rect.height, mids[:, 1])

    boundary = {}
    boundary_vertices = {}
    i_all, j_all = np.arange(nx), np.arange(ny)
    if not px:
        boundary["left"] = v_edge(np.zeros(ny, dtype=np.int64), j_all)
        boundary["right"] = v_edge(np.full(ny, nx), j_all)
        boundary_vertices["left"] = np.unique(vid(0, np.arange(ny + 1)))
        boundary_vertices["right"] = np.unique(vid(nx, np.arange(ny + 1)))
    if not py:
        boundary["bottom"] = h_edge(i_all, np.zeros(nx, dtype=np.int64))
        boundary["top"] = h_edge(i_all, np.full(nx, ny))
        boundary_vertices["bottom"] = np.unique(vid(np.arange(nx + 1), 0))
        boundary_vertices["top"] = np.unique(vid(np.arange(nx + 1), ny))

    return Mesh(
        rect=rect,
        nx=nx,
        ny=ny,
        periodic=periodic,
        nodes=nodes,
        node_vertex=node_vertex,
        cell_nodes=cell_nodes,
        vertices=vertices,
        triangles=triangles,
        edges=edges,
        edge_midpoints=mids,
        edge_lengths=lengths,
        triangle_edges=tri_edges,
        boundary=boundary,
        boundary_vertices=boundary_vertices,
    )


def boundary_edges(mesh: Mesh, sides: Iterable[str]) -> np.ndarray:
    """Indices of the boundary edges lying on the requested sides."""
    sides = list(sides)
    for s in sides:
        if s not in SIDES:
            raise ValueError(f"unknown side {s!r}")
    parts = [mesh.boundary[s] for s in sides if s in mesh.boundary]
    if not parts:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(parts)


def dump_entities(mesh: Mesh) -> str:
    """Plain-text table of the mesh entities, for debugging."""
    lines = [f"vertices {mesh.n_vertices}"]
    lines += [f"{k} {x:.12e} {y:.12e}" for k, (x, y) in enumerate(mesh.vertices)]
    lines.append(f"edges {mesh.n_edges}")
    lines += [f"{k} {a} {b}" for k, (a, b) in enumerate(mesh.edges)]
    lines.append(f"triangles {mesh.n_triangles}")
    lines += [f"{k} {a} {b} {c}" for k, (a, b, c) in enumerate(mesh.triangles)]
    for side in mesh.sides:
        lines.append(f"boundary {side} " + " ".join(str(e) for e in mesh.boundary[side]))
    return "\n".join(lines) + "\n"
