"""Error norms, convergence rates and constraint diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .forms import Assembler
from .spaces import matrix_to_components

V_GUARD = 1e-14
CSV_HEADER = ("h", "dofs", "newton_iters", "h1_err", "h1_rate", "l2_err", "l2_rate")


def _exact_at_quadrature(asm: Assembler, exact):
    xq = asm.xq.reshape(-1, 2)
    shape = asm.xq.shape[:2] + (6,)
    G = matrix_to_components(exact.gradient(xq[:, 0], xq[:, 1])).reshape(shape)
    dx, dy = exact.gradient_derivatives(xq[:, 0], xq[:, 1])
    return G, matrix_to_components(dx).reshape(shape), matrix_to_components(dy).reshape(shape)


def error_norms(asm: Assembler, g, exact):
    """(L2, H1) norms of ``G_h - grad phi``; ``exact`` provides gradient and its derivatives."""
    G, Gdx, Gdy = asm.gradient_fields(g)
    Ge, dxe, dye = _exact_at_quadrature(asm, exact)
    l2 = np.einsum("tq,tqc->", asm.wdet, (G - Ge) ** 2)
    semi = np.einsum("tq,tqc->", asm.wdet, (Gdx - dxe) ** 2 + (Gdy - dye) ** 2)
    return float(np.sqrt(l2)), float(np.sqrt(l2 + semi))


def clairault_defect(asm: Assembler, g) -> float:
    """L2 norm of ``G^x_y - G^y_x``."""
    _, Gdx, Gdy = asm.gradient_fields(g)
    curl = Gdy[..., :3] - Gdx[..., 3:]
    return float(np.sqrt(np.einsum("tq,tqi->", asm.wdet, curl**2)))


def gradient_mismatch(asm: Assembler, surface, g) -> float:
    """L2 norm of ``grad phi_h - G_h``."""
    G, _, _ = asm.gradient_fields(g)
    diff = surface.gradient_components() - G
    return float(np.sqrt(np.einsum("tq,tqc->", asm.wdet, diff**2)))


def convergence_rate(e1: float, e2: float, n1: int, n2: int) -> float:
    """``2 log(e1/e2) / log(n2/n1)`` with ``n`` the triangle counts.

    Four times as many cells with a four times smaller error gives 2.
    """
    if min(e1, e2, n1, n2) <= 0:
        raise ValueError("errors and cell counts must be positive")
    if n1 == n2:
        raise ValueError("cell counts must differ")
    return 2.0 * math.log(e1 / e2) / math.log(n2 / n1)


@dataclass
class ConvergenceRow:
    h: float
    dofs: int
    newton_iters: int
    h1_err: float
    l2_err: float
    n_cells: int
    h1_rate: Optional[float] = None
    l2_rate: Optional[float] = None


@dataclass
class ConvergenceTable:
    rows: List[ConvergenceRow] = field(default_factory=list)

    def add(self, h, dofs, newton_iters, h1_err, l2_err, n_cells) -> ConvergenceRow:
        row = ConvergenceRow(h, dofs, newton_iters, h1_err, l2_err, n_cells)
        if self.rows:
            prev = self.rows[-1]
            row.h1_rate = convergence_rate(prev.h1_err, h1_err, prev.n_cells, n_cells)
            row.l2_rate = convergence_rate(prev.l2_err, l2_err, prev.n_cells, n_cells)
        self.rows.append(row)
        return row

    def records(self) -> List[tuple]:
        return [(r.h, r.dofs, r.newton_iters, r.h1_err, r.h1_rate, r.l2_err, r.l2_rate) for r in self.rows]

    def format(self) -> str:
        lines = ["%10s %8s %4s %11s %6s %11s %6s" % ("h", "dofs", "its", "H1 err", "rate", "L2 err", "rate")]
        for r in self.rows:
            rate = lambda v: "%6.2f" % v if v is not None else "%6s" % "-"  # noqa: E731
            lines.append(
                "%10.4e %8d %4d %11.4e %s %11.4e %s"
                % (r.h, r.dofs, r.newton_iters, r.h1_err, rate(r.h1_rate), r.l2_err, rate(r.l2_rate))
            )
        return "\n".join(lines)


@dataclass
class ConstraintFields:
    """Constraint residuals at the quadrature points.

    ``u = G^x . G^y`` and ``v = log((1 - |G^x|^2/4)|G^y|^2)``; ``v`` is NaN
    where its argument is below the guard. A triangle belongs to Omega' when
    ``|G^y|^2 > 1`` at all of its quadrature points.
    """

    u: np.ndarray  # (T, Q)
    v: np.ndarray  # (T, Q)
    gx2: np.ndarray
    gy2: np.ndarray
    omega_prime: np.ndarray  # (T,) bool
    v_defined: np.ndarray  # (T, Q) bool

    @property
    def omega_prime_fraction(self) -> float:
        return float(np.mean(self.omega_prime))

    @property
    def sup_u(self) -> float:
        """sup |u| over Omega' (0 when Omega' is empty)."""
        vals = np.abs(self.u[self.omega_prime])
        return float(vals.max()) if vals.size else 0.0

    @property
    def sup_v(self) -> float:
        mask = self.v_defined & self.omega_prime[:, None]
        vals = np.abs(self.v[mask])
        return float(vals.max()) if vals.size else 0.0

    @property
    def max_gx2(self) -> float:
        return float(self.gx2.max())

    @property
    def max_gy2(self) -> float:
        return float(self.gy2.max())

    @property
    def n_undefined(self) -> int:
        return int(np.sum(~self.v_defined))

    def cell_data(self):
        """Per-triangle arrays for export."""
        v_abs = np.where(self.v_defined, np.abs(np.nan_to_num(self.v)), 0.0)
        return {
            "omega_prime": self.omega_prime.astype(float),
            "u_sup": np.abs(self.u).max(axis=1),
            "v_sup": v_abs.max(axis=1),
            "gy2_min": self.gy2.min(axis=1),
        }

    def summary(self) -> dict:
        return {
            "omega_prime_fraction": self.omega_prime_fraction,
            "sup_u": self.sup_u,
            "sup_v": self.sup_v,
            "max_gx2": self.max_gx2,
            "max_gy2": self.max_gy2,
            "min_gy2": float(self.gy2.min()),
            "v_undefined_points": self.n_undefined,
        }


def pointwise_constraints(G: np.ndarray):
    """u, v (NaN where undefined), |G^x|^2, |G^y|^2 for components (..., 6)."""
    gx, gy = G[..., :3], G[..., 3:]
    gx2 = np.sum(gx * gx, axis=-1)
    gy2 = np.sum(gy * gy, axis=-1)
    u = np.sum(gx * gy, axis=-1)
    arg = (1.0 - 0.25 * gx2) * gy2
    defined = arg >= V_GUARD
    v = np.full(arg.shape, np.nan)
    v[defined] = np.log(arg[defined])
    return u, v, gx2, gy2, defined


def constraint_fields(asm: Assembler, field) -> ConstraintFields:
    """Diagnostics for a W_h coefficient vector or a recovered surface."""
    if hasattr(field, "gradient_components"):
        G = field.gradient_components()
    else:
        G, _, _ = asm.gradient_fields(np.asarray(field, dtype=float))
    u, v, gx2, gy2, defined = pointwise_constraints(G)
    return ConstraintFields(u, v, gx2, gy2, np.all(gy2 > 1.0, axis=1), defined)


def vertex_constraints(asm: Assembler, g):
    """Point data at the mesh vertices (P2 vertex dofs carry nodal values)."""
    V = asm.spaces.mesh.n_vertices
    G = np.asarray(g, dtype=float).reshape(-1, 6)[:V]
    u, v, gx2, gy2, defined = pointwise_constraints(G)
    return {
        "u": u,
        "v": np.where(defined, np.nan_to_num(v), 0.0),
        "v_defined": defined.astype(float),
        "gx2": gx2,
        "gy2": gy2,
        "omega_prime": (gy2 > 1.0).astype(float),
    }
