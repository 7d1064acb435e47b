"""Degree-of-freedom maps for the Taylor--Hood pair and boundary data.

Global numbering of a vector space with ``n_components`` components is
interleaved: the value of component ``c`` at scalar dof ``k`` lives at index
``k * n_components + c``. For the gradient field the six components are
ordered ``(G^x_0, G^x_1, G^x_2, G^y_0, G^y_1, G^y_2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .mesh import Mesh, SIDES

GRADIENT_COMPONENTS = 6
MULTIPLIER_COMPONENTS = 3


@dataclass(frozen=True, eq=False)
class DofMap:
    mesh: Mesh
    degree: int
    n_components: int
    cell_dofs: np.ndarray  # (T, 3 or 6) scalar dofs per triangle
    dof_coords: np.ndarray  # (n_scalar, 2)
    boundary_scalar: Dict[str, np.ndarray]  # side -> scalar dofs

    @property
    def n_scalar(self) -> int:
        return len(self.dof_coords)

    @property
    def size(self) -> int:
        return self.n_scalar * self.n_components

    def vector_dofs(self, scalar_dofs) -> np.ndarray:
        """Global indices of all components of the given scalar dofs, shape (n, ncomp)."""
        scalar_dofs = np.asarray(scalar_dofs, dtype=np.int64)
        return scalar_dofs[:, None] * self.n_components + np.arange(self.n_components)

    def boundary_dofs(self, sides=None) -> np.ndarray:
        """Sorted unique scalar dofs on the given sides (all physical sides by default)."""
        sides = self.mesh.sides if sides is None else sides
        parts = [self.boundary_scalar[s] for s in sides if s in self.boundary_scalar]
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.unique(np.concatenate(parts))

    def cell_vector_dofs(self) -> np.ndarray:
        """(T, nloc * ncomp) global dofs, local index ``k * ncomp + c``."""
        nc = self.n_components
        return (self.cell_dofs[:, :, None] * nc + np.arange(nc)).reshape(len(self.cell_dofs), -1)


def build_space(mesh: Mesh, degree: int, n_components: int = 1) -> DofMap:
    if degree not in (1, 2):
        raise ValueError(f"unsupported degree {degree}")
    if n_components < 1:
        raise ValueError("n_components must be positive")
    V = mesh.n_vertices
    if degree == 1:
        cell_dofs = mesh.triangles.copy()
        coords = mesh.vertices.copy()
        boundary = {s: mesh.boundary_vertices[s].copy() for s in mesh.sides}
    else:
        cell_dofs = np.hstack([mesh.triangles, V + mesh.triangle_edges])
        coords = np.vstack([mesh.vertices, mesh.edge_midpoints])
        boundary = {
            s: np.concatenate([mesh.boundary_vertices[s], V + mesh.boundary[s]]) for s in mesh.sides
        }
    return DofMap(
        mesh=mesh,
        degree=degree,
        n_components=n_components,
        cell_dofs=cell_dofs,
        dof_coords=coords,
        boundary_scalar=boundary,
    )


@dataclass(frozen=True, eq=False)
class Spaces:
    """The gradient space W_h (P2, 6 components) and multiplier space R_h (P1, 3 components)."""

    mesh: Mesh
    W: DofMap
    R: DofMap

    @property
    def n_g(self) -> int:
        return self.W.size

    @property
    def n_r(self) -> int:
        return self.R.size

    @property
    def size(self) -> int:
        return self.n_g + self.n_r + MULTIPLIER_COMPONENTS

    @property
    def slices(self):
        return (
            slice(0, self.n_g),
            slice(self.n_g, self.n_g + self.n_r),
            slice(self.n_g + self.n_r, self.size),
        )


def taylor_hood(mesh: Mesh) -> Spaces:
    return Spaces(
        mesh=mesh,
        W=build_space(mesh, 2, GRADIENT_COMPONENTS),
        R=build_space(mesh, 1, MULTIPLIER_COMPONENTS),
    )


@dataclass
class State:
    """Coefficients of G_h, r_h and the three zero-mean multipliers."""

    g: np.ndarray
    r: np.ndarray
    mu: np.ndarray

    @classmethod
    def from_vector(cls, spaces: Spaces, x: np.ndarray) -> "State":
        sg, sr, sm = spaces.slices
        return cls(g=x[sg].copy(), r=x[sr].copy(), mu=x[sm].copy())

    @classmethod
    def zeros(cls, spaces: Spaces) -> "State":
        return cls(np.zeros(spaces.n_g), np.zeros(spaces.n_r), np.zeros(MULTIPLIER_COMPONENTS))

    def vector(self) -> np.ndarray:
        return np.concatenate([self.g, self.r, self.mu])

    def copy(self) -> "State":
        return State(self.g.copy(), self.r.copy(), self.mu.copy())


# evaluator(x, y) -> (n, 3, 2) array whose columns are G_D^x and G_D^y
Evaluator = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class BoundaryData:
    """Gradient Dirichlet data, one evaluator per active side."""

    rect: object
    sides: Dict[str, Evaluator]
    mode: str = "strong"

    def __post_init__(self):
        if self.mode not in ("strong", "weak"):
            raise ValueError(f"unknown boundary mode {self.mode!r}")
        for s in self.sides:
            if s not in SIDES:
                raise ValueError(f"unknown side {s!r}")

    def evaluate(self, side: str, x, y) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        x, y = np.broadcast_arrays(x, y)
        out = np.asarray(self.sides[side](x, y), dtype=float)
        if out.shape != x.shape + (3, 2) or not np.all(np.isfinite(out)):
            raise ValueError(f"boundary data on side {side!r} failed to evaluate")
        return out

    def sample(self, n_samples: int):
        """Evaluate on ``n_samples`` points spread uniformly over the active sides."""
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        rect = self.rect
        sides = list(self.sides)
        counts = np.full(len(sides), n_samples // len(sides))
        counts[: n_samples % len(sides)] += 1
        values = []
        for side, n in zip(sides, counts):
            if n == 0:
                continue
            t = (np.arange(n) + 0.5) / n
            if side in ("left", "right"):
                x = np.full(n, rect.x_min if side == "left" else rect.x_max)
                y = rect.y_min + t * rect.height
            else:
                x = rect.x_min + t * rect.width
                y = np.full(n, rect.y_min if side == "bottom" else rect.y_max)
            values.append(self.evaluate(side, x, y))
        return np.concatenate(values)


def matrix_to_components(G: np.ndarray) -> np.ndarray:
    """(..., 3, 2) gradient matrices -> (..., 6) components in W_h order."""
    return np.concatenate([G[..., 0], G[..., 1]], axis=-1)


def interpolate_boundary(W: DofMap, bc: BoundaryData, sides=None):
    """Lagrange interpolation of the boundary data at the boundary dofs.

    Returns ``(indices, values)`` in the global numbering of ``W``. A scalar
    dof shared by two sides (a corner) takes the value of the first side.
    """
    sides = [s for s in (bc.sides if sides is None else sides) if s in W.boundary_scalar]
    seen = set()
    idx, vals = [], []
    for side in sides:
        dofs = [d for d in W.boundary_scalar[side] if d not in seen]
        seen.update(dofs)
        if not dofs:
            continue
        dofs = np.array(dofs, dtype=np.int64)
        xy = W.dof_coords[dofs]
        G = bc.evaluate(side, xy[:, 0], xy[:, 1])
        idx.append(W.vector_dofs(dofs).ravel())
        vals.append(matrix_to_components(G).ravel())
    if not idx:
        return np.empty(0, dtype=np.int64), np.empty(0)
    idx = np.concatenate(idx)
    vals = np.concatenate(vals)
    order = np.argsort(idx)
    return idx[order], vals[order]


@dataclass
class HypothesisReport:
    orthogonality: float
    norm_identity: float
    gx_bounds: float
    gy_bound: float

    @property
    def max_violation(self) -> float:
        return max(self.orthogonality, self.norm_identity, self.gx_bounds, self.gy_bound)

    def as_dict(self) -> dict:
        return {
            "orthogonality": self.orthogonality,
            "norm_identity": self.norm_identity,
            "gx_bounds": self.gx_bounds,
            "gy_bound": self.gy_bound,
        }

    def violated(self, tol: float):
        return [k for k, v in self.as_dict().items() if v > tol]


def hypothesis_violations(G: np.ndarray) -> HypothesisReport:
    """Worst violations of the admissibility conditions over an array of (3, 2) matrices."""
    gx, gy = G[..., 0], G[..., 1]
    nx2 = np.sum(gx * gx, axis=-1)
    ny2 = np.sum(gy * gy, axis=-1)
    orth = np.abs(np.sum(gx * gy, axis=-1))
    ident = np.abs(ny2 * (4.0 - nx2) / 4.0 - 1.0)
    # 0 < |gx|^2 is reported as a violation of size 1 when it fails
    gx_bad = np.maximum(nx2 - 3.0, 0.0) + np.where(nx2 > 0.0, 0.0, 1.0)
    gy_bad = np.maximum(ny2 - 4.0, 0.0)
    return HypothesisReport(
        orthogonality=float(orth.max()),
        norm_identity=float(ident.max()),
        gx_bounds=float(gx_bad.max()),
        gy_bound=float(gy_bad.max()),
    )


def validate_hypothesis(bc: BoundaryData, n_samples: int = 1000) -> HypothesisReport:
    return hypothesis_violations(bc.sample(n_samples))


def interpolate(W: DofMap, func: Evaluator) -> np.ndarray:
    """Lagrange interpolant of a (3, 2)-matrix field as a W_h coefficient vector."""
    xy = W.dof_coords
    G = np.asarray(func(xy[:, 0], xy[:, 1]), dtype=float)
    return matrix_to_components(G).ravel()
