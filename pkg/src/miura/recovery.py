"""Least-squares recovery of the parametrization from a gradient field.

Given ``G_h`` in W_h, find the zero-mean ``phi_h`` in the quadratic,
three-component space V_h with ``int grad phi_h . grad psi = int G_h . grad psi``
for every zero-mean ``psi``. One Poisson problem per component, sharing the
bordered matrix ``[[K, m], [m^T, 0]]`` where ``m_k = int psi_k``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .forms import Assembler, _scatter
from .solver import BorderedLU

SURFACE_COMPONENTS = 3


@dataclass
class SurfaceField:
    """Coefficients of phi_h (one column per component) and the mean multipliers."""

    coefficients: np.ndarray  # (n_scalar, 3)
    multipliers: np.ndarray  # (3,)
    asm: Assembler
    normal_residual: float = 0.0

    @property
    def vertex_values(self) -> np.ndarray:
        """phi_h at the mesh vertices (the first P2 dofs are the vertices)."""
        return self.coefficients[: self.asm.spaces.mesh.n_vertices]

    def fields(self):
        """phi_h, d phi_h/dx, d phi_h/dy at the quadrature points, each (T, Q, 3)."""
        loc = self.coefficients[self.asm.spaces.W.cell_dofs]  # (T, 6, 3)
        phi = np.einsum("qk,tki->tqi", self.asm.N2, loc)
        d = np.einsum("tqkd,tki->tqdi", self.asm.dN2, loc)
        return phi, d[:, :, 0], d[:, :, 1]

    def gradient_components(self) -> np.ndarray:
        """grad phi_h as (T, Q, 6) in the W_h component order."""
        _, px, py = self.fields()
        return np.concatenate([px, py], axis=-1)

    def means(self) -> np.ndarray:
        phi, _, _ = self.fields()
        return np.einsum("tq,tqi->i", self.asm.wdet, phi)


class SurfaceRecovery:
    """Factorized Poisson problem for one mesh; reuse it for many fields."""

    def __init__(self, asm: Assembler):
        self.asm = asm
        W = asm.spaces.W
        n = W.n_scalar
        loc = np.einsum("tq,tqkd,tqmd->tkm", asm.wdet, asm.dN2, asm.dN2)
        self.K = _scatter(loc, W.cell_dofs, W.cell_dofs, (n, n))
        self.m = np.bincount(
            W.cell_dofs.ravel(), weights=np.einsum("tq,qk->tk", asm.wdet, asm.N2).ravel(), minlength=n
        )
        M = sp.bmat([[self.K, sp.csr_matrix(self.m[:, None])], [sp.csr_matrix(self.m[None, :]), None]])
        self.lu = BorderedLU(M, n_border=1)

    def load(self, g) -> np.ndarray:
        """``b[k, i] = int G^x_i dpsi_k/dx + G^y_i dpsi_k/dy`` of shape (n_scalar, 3)."""
        asm = self.asm
        G, _, _ = asm.gradient_fields(g)
        loc = np.einsum("tq,tqk,tqi->tki", asm.wdet, asm.dN2[..., 0], G[..., :3])
        loc += np.einsum("tq,tqk,tqi->tki", asm.wdet, asm.dN2[..., 1], G[..., 3:])
        n = asm.spaces.W.n_scalar
        b = np.zeros((n, SURFACE_COMPONENTS))
        for i in range(SURFACE_COMPONENTS):
            b[:, i] = np.bincount(asm.spaces.W.cell_dofs.ravel(), weights=loc[..., i].ravel(), minlength=n)
        return b

    def normal_residual(self, coefficients, b) -> float:
        """Largest residual of the normal equations tested against zero-mean fields."""
        res = self.K @ coefficients - b
        # remove the component along m: that direction is absorbed by the multiplier
        res -= np.outer(self.m, self.m @ res) / (self.m @ self.m)
        return float(np.abs(res).max())

    def __call__(self, g) -> SurfaceField:
        b = self.load(g)
        rhs = np.vstack([b, np.zeros((1, SURFACE_COMPONENTS))])
        x = self.lu.solve(rhs)
        coef, lam = x[:-1], x[-1]
        return SurfaceField(coef, lam, self.asm, self.normal_residual(coef, b))


def recover_surface(g, asm: Assembler) -> SurfaceField:
    """Zero-mean least-squares parametrization whose gradient best matches ``g``.

    The factorization is cached on the assembler, so repeated calls on the
    same mesh only solve.
    """
    rec = asm.__dict__.get("_surface_recovery")
    if rec is None:
        rec = asm.__dict__["_surface_recovery"] = SurfaceRecovery(asm)
    return rec(np.asarray(g, dtype=float))
