"""Cut-off coefficients and assembly of the penalized mixed system.

The unknown vector is ``[g, r, mu]`` (see :mod:`miura.spaces`). The residual
tested with ``G~ in W_h`` and ``r~ in P1`` reads::

    F_g = int A(G)G . A(G)G~ + eta int curl G . curl G~ + int curl G~ . r
          [+ sum_e eta/h_e int_e (G - I_h G_D) : G~]          (weak mode)
    F_r = int curl G . r~ + mu . int r~
    F_mu = int r

with ``A(G)H = pbar(G^x) H^x_x + qbar(G^y) H^y_y`` and
``curl H = H^x_y - H^y_x``. In strong mode the boundary rows of ``F_g`` are
replaced by ``g - I_h G_D``.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .quadrature import basis, dunavant6, gauss_legendre_01
from .spaces import (
    GRADIENT_COMPONENTS as NG,
    MULTIPLIER_COMPONENTS as NR,
    BoundaryData,
    Spaces,
    State,
    interpolate_boundary,
)

P_THRESHOLD = 3.0
Q_LOWER = 1.0
Q_UPPER = 4.0


def coefficient_x(gx):
    """Clamped ``p = 4 / (4 - |gx|^2)`` and its gradient with respect to ``gx``.

    The clamped branch (``|gx|^2 >= 3``) includes the threshold itself.
    """
    gx = np.asarray(gx, dtype=float)
    n2 = np.sum(gx * gx, axis=-1)
    live = n2 < P_THRESHOLD
    d = np.where(live, 4.0 - n2, 1.0)
    p = np.where(live, 4.0 / d, 4.0)
    dp = np.where(live, 8.0 / d**2, 0.0)[..., None] * gx
    return p, dp


def coefficient_y(gy):
    """Clamped ``q = 4 / |gy|^2`` and its gradient with respect to ``gy``."""
    gy = np.asarray(gy, dtype=float)
    n2 = np.sum(gy * gy, axis=-1)
    live = (n2 > Q_LOWER) & (n2 < Q_UPPER)
    safe = np.where(live, n2, 1.0)
    q = np.where(n2 <= Q_LOWER, 4.0, np.where(n2 >= Q_UPPER, 1.0, 4.0 / safe))
    dq = np.where(live, -8.0 / safe**2, 0.0)[..., None] * gy
    return q, dq


def gamma(p, q):
    """Cordes-type ratio ``(p + q) / (p^2 + q^2)``."""
    return (p + q) / (p * p + q * q)


def _scatter(local, rows, cols, shape):
    T, nr, nc = local.shape
    I = np.broadcast_to(rows[:, :, None], (T, nr, nc)).ravel()
    J = np.broadcast_to(cols[:, None, :], (T, nr, nc)).ravel()
    return sp.coo_matrix((local.ravel(), (I, J)), shape=shape).tocsr()


def _kron_identity(local, n):
    """Expand scalar-pair blocks ``(T, k, a, m, b)`` to components: ``(T, k*a*n, m*b*n)``.

    The expanded entry couples component ``i`` only with component ``i``.
    """
    T, k, a, m, b = local.shape
    out = np.einsum("tkamb,ij->tkaimbj", local, np.eye(n))
    return out.reshape(T, k * a * n, m * b * n)


class Assembler:
    """Precomputed quadrature tables and linear blocks for one set of spaces."""

    def __init__(self, spaces: Spaces):
        self.spaces = spaces
        mesh = spaces.mesh
        self.quad = dunavant6()
        pts = self.quad.points
        coords = mesh.cell_coords  # (T, 3, 2)
        x0 = coords[:, 0]
        Jm = np.stack([coords[:, 1] - x0, coords[:, 2] - x0], axis=-1)  # (T, 2, 2) columns
        det = Jm[:, 0, 0] * Jm[:, 1, 1] - Jm[:, 0, 1] * Jm[:, 1, 0]
        if np.any(det <= 0):
            raise ValueError("mesh has non-positive triangle orientation")
        Jinv = np.linalg.inv(Jm)
        self.det = det
        self.wdet = det[:, None] * self.quad.weights[None, :]  # (T, Q)
        self.xq = x0[:, None, :] + np.einsum("tij,qj->tqi", Jm, pts)  # (T, Q, 2)

        N2, dN2ref = basis(2, pts)
        N1, _ = basis(1, pts)
        self.N2 = N2  # (Q, 6)
        self.N1 = N1  # (Q, 3)
        # physical gradients: dN/dx = J^{-T} dN/dxi
        self.dN2 = np.einsum("tji,qkj->tqki", Jinv, dN2ref)  # (T, Q, 6, 2)

        self.w_dofs = spaces.W.cell_vector_dofs()  # (T, 36)
        self.r_dofs = spaces.R.cell_vector_dofs()  # (T, 9)

    # ------------------------------------------------------------------ fields
    def gradient_fields(self, g):
        """G, dG/dx, dG/dy at quadrature points, each (T, Q, 6)."""
        loc = g[self.w_dofs].reshape(-1, 6, NG)  # (T, k, c)
        G = np.einsum("qk,tkc->tqc", self.N2, loc)
        dG = np.einsum("tqkd,tkc->tqdc", self.dN2, loc)
        return G, dG[:, :, 0], dG[:, :, 1]

    def multiplier_field(self, r):
        loc = r[self.r_dofs].reshape(-1, 3, NR)
        return np.einsum("ql,tli->tqi", self.N1, loc)

    # ----------------------------------------------------------- linear blocks
    @cached_property
    def _curl_op(self):
        # curl of N_k e_(a,i) is Cur[a] * e_i with Cur = (dN/dy, -dN/dx)
        return np.stack([self.dN2[..., 1], -self.dN2[..., 0]], axis=-1)  # (T, Q, 6, 2)

    @cached_property
    def penalty_matrix(self):
        """Unscaled curl-curl block ``int curl G . curl G~``."""
        Cur = self._curl_op
        loc = np.einsum("tq,tqka,tqmb->tkamb", self.wdet, Cur, Cur)
        n = self.spaces.n_g
        return _scatter(_kron_identity(loc, 3), self.w_dofs, self.w_dofs, (n, n))

    @cached_property
    def constraint_matrix(self):
        """``B[r_row, g_col] = int curl G . r~`` of shape (n_r, n_g)."""
        Cur = self._curl_op
        loc = np.einsum("tq,ql,tqmb->tlmb", self.wdet, self.N1, Cur)  # (T, 3, 6, 2)
        T = loc.shape[0]
        full = np.einsum("tlmb,ij->tlimbj", loc, np.eye(3)).reshape(T, 9, 36)
        return _scatter(full, self.r_dofs, self.w_dofs, (self.spaces.n_r, self.spaces.n_g))

    @cached_property
    def mean_matrix(self):
        """``C[i, r_col] = int r_i`` of shape (3, n_r)."""
        loc = np.einsum("tq,ql->tl", self.wdet, self.N1)  # (T, 3)
        rows = np.broadcast_to(np.arange(NR), (len(loc), 3, NR)).reshape(len(loc), 9)
        vals = np.repeat(loc, NR, axis=1)  # local index l*3 + i
        M = sp.coo_matrix((vals.ravel(), (rows.ravel(), self.r_dofs.ravel())), shape=(NR, self.spaces.n_r))
        return M.tocsr()

    @cached_property
    def laplacian_matrix(self):
        loc = np.einsum("tq,tqkd,tqmd->tkm", self.wdet, self.dN2, self.dN2)
        return self._scalar_block(loc)

    @cached_property
    def mass_matrix(self):
        loc = np.einsum("tq,qk,qm->tkm", self.wdet, self.N2, self.N2)
        return self._scalar_block(loc)

    @cached_property
    def h1_matrix(self):
        return (self.laplacian_matrix + self.mass_matrix).tocsr()

    @cached_property
    def scalar_h1_matrix(self):
        """H^1 Gram matrix of the scalar P2 space."""
        loc = np.einsum("tq,tqkd,tqmd->tkm", self.wdet, self.dN2, self.dN2)
        loc += np.einsum("tq,qk,qm->tkm", self.wdet, self.N2, self.N2)
        n = self.spaces.W.n_scalar
        return _scatter(loc, self.spaces.W.cell_dofs, self.spaces.W.cell_dofs, (n, n))

    def _scalar_block(self, loc):
        T = loc.shape[0]
        full = np.einsum("tkm,ij->tkimj", loc, np.eye(NG)).reshape(T, 36, 36)
        n = self.spaces.n_g
        return _scatter(full, self.w_dofs, self.w_dofs, (n, n))

    def boundary_penalty_matrix(self, sides):
        """``sum_e 1/h_e int_e G : G~`` over boundary edges of ``sides`` (unscaled by eta)."""
        mesh = self.spaces.mesh
        edges = np.concatenate([mesh.boundary[s] for s in sides if s in mesh.boundary] or [np.empty(0, int)])
        n = self.spaces.n_g
        if len(edges) == 0:
            return sp.csr_matrix((n, n))
        t, w = gauss_legendre_01(4)
        phi = np.column_stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)])
        ref = np.einsum("q,qa,qb->ab", w, phi, phi)  # mass on [0, 1]
        # ds = h_e dt cancels the 1/h_e weight, h_e being the edge length
        loc = np.broadcast_to(ref, (len(edges), 3, 3))
        scal = np.column_stack([mesh.edges[edges], mesh.n_vertices + edges])
        T = len(edges)
        full = np.einsum("tab,ij->taibj", loc, np.eye(NG)).reshape(T, 18, 18)
        dofs = (scal[:, :, None] * NG + np.arange(NG)).reshape(T, 18)
        return _scatter(full, dofs, dofs, (n, n))

    # ------------------------------------------------------------- nonlinear
    def _pointwise(self, g):
        G, Gdx, Gdy = self.gradient_fields(g)
        p, dp = coefficient_x(G[..., :3])
        q, dq = coefficient_y(G[..., 3:])
        GxX = Gdx[..., :3]
        GyY = Gdy[..., 3:]
        A = p[..., None] * GxX + q[..., None] * GyY  # (T, Q, 3)
        return dict(G=G, Gdx=Gdx, Gdy=Gdy, p=p, q=q, dp=dp, dq=dq, GxX=GxX, GyY=GyY, A=A)

    def operator_residual(self, g):
        """``int A(G)G . A(G)G~`` for every W_h basis function."""
        f = self._pointwise(g)
        Dir = np.stack(
            [f["p"][..., None] * self.dN2[..., 0], f["q"][..., None] * self.dN2[..., 1]], axis=-1
        )  # (T, Q, 6, 2)
        loc = np.einsum("tq,tqka,tqi->tkai", self.wdet, Dir, f["A"]).reshape(-1, 36)
        out = np.zeros(self.spaces.n_g)
        np.add.at(out, self.w_dofs.ravel(), loc.ravel())
        return out

    def operator_jacobian(self, g, linearization="newton"):
        f = self._pointwise(g)
        W = self.wdet
        Dir = np.stack(
            [f["p"][..., None] * self.dN2[..., 0], f["q"][..., None] * self.dN2[..., 1]], axis=-1
        )
        T = Dir.shape[0]
        frozen = np.einsum("tq,tqka,tqmb->tkamb", W, Dir, Dir)
        loc = _kron_identity(frozen, 3).reshape(T, 6, 2, 3, 6, 2, 3)
        if linearization == "newton":
            dcoef = np.stack([f["dp"], f["dq"]], axis=-2)  # (T, Q, 2, 3) [b, j]
            H = np.stack([f["GxX"], f["GyY"]], axis=-2)  # (T, Q, 2, 3) [b, i]
            # derivative of A(G)G in the trial direction, tested by A(G)G~
            loc += np.einsum("tq,tqka,qm,tqbj,tqbi->tkaimbj", W, Dir, self.N2, dcoef, H)
            # A(G)G tested by the derivative of A(G)G~
            dN = self.dN2  # (T, Q, 6, 2) [k, a]
            term = np.einsum("tq,tqi,tqaj,qm,tqka->tkaimj", W, f["A"], dcoef, self.N2, dN)
            idx = np.arange(2)
            loc[:, :, idx, :, :, idx, :] += np.moveaxis(term, 2, 0)
        elif linearization != "picard":
            raise ValueError(f"unknown linearization {linearization!r}")
        n = self.spaces.n_g
        return _scatter(loc.reshape(T, 36, 36), self.w_dofs, self.w_dofs, (n, n))

    # ---------------------------------------------------------------- system
    def boundary_values(self, bc: BoundaryData):
        return interpolate_boundary(self.spaces.W, bc)

    def residual(self, state: State, bc: BoundaryData, eta: float = 1.0) -> np.ndarray:
        if eta < 0:
            raise ValueError("eta must be nonnegative")
        self._check(state)
        B, C = self.constraint_matrix, self.mean_matrix
        Fg = self.operator_residual(state.g) + eta * (self.penalty_matrix @ state.g) + B.T @ state.r
        Fg += self._boundary_residual(state.g, bc, eta)
        Fr = B @ state.g + C.T @ state.mu
        Fm = C @ state.r
        return np.concatenate([Fg, Fr, Fm])

    def jacobian(self, state: State, bc: BoundaryData, eta: float = 1.0, linearization="newton"):
        self._check(state)
        Kg = self.operator_jacobian(state.g, linearization) + eta * self.penalty_matrix
        return self._bordered(Kg, bc, eta)

    def linear_guess_system(self, bc: BoundaryData, eta: float = 1.0):
        """Matrix and right-hand side of the vector-Laplacian starting problem."""
        K = self._bordered(self.laplacian_matrix + eta * self.penalty_matrix, bc, eta)
        rhs = np.zeros(self.spaces.size)
        idx, vals = self.boundary_values(bc)
        if bc.mode == "weak":
            gd = np.zeros(self.spaces.n_g)
            gd[idx] = vals
            rhs[: self.spaces.n_g] = eta * (self.boundary_penalty_matrix(list(bc.sides)) @ gd)
        else:
            rhs[idx] = vals
        return K, rhs

    def _bordered(self, Kg, bc, eta):
        B, C = self.constraint_matrix, self.mean_matrix
        if bc.mode == "weak":
            Kg = Kg + eta * self.boundary_penalty_matrix(list(bc.sides))
        K = sp.bmat([[Kg, B.T, None], [B, None, C.T], [None, C, None]], format="csr")
        if bc.mode == "strong":
            idx, _ = self.boundary_values(bc)
            K = pin_rows(K, idx)
        return K

    def _boundary_residual(self, g, bc, eta):
        idx, vals = self.boundary_values(bc)
        if bc.mode == "weak":
            gd = np.zeros_like(g)
            gd[idx] = vals
            return eta * (self.boundary_penalty_matrix(list(bc.sides)) @ (g - gd))
        return np.zeros_like(g)

    def apply_strong_rows(self, F, state, bc):
        if bc.mode == "strong":
            idx, vals = self.boundary_values(bc)
            F[idx] = state.g[idx] - vals
        return F

    def _check(self, state):
        s = self.spaces
        if state.g.shape != (s.n_g,) or state.r.shape != (s.n_r,) or state.mu.shape != (NR,):
            raise ValueError("state does not match the spaces")


def pin_rows(K, idx):
    """Replace the given rows of ``K`` by identity rows."""
    n = K.shape[0]
    keep = np.ones(n)
    keep[idx] = 0.0
    pin = np.zeros(n)
    pin[idx] = 1.0
    return (sp.diags(keep) @ K + sp.diags(pin)).tocsr()


def assemble_residual(asm: Assembler, state: State, bc: BoundaryData, eta: float = 1.0):
    F = asm.residual(state, bc, eta)
    return asm.apply_strong_rows(F, state, bc)


def assemble_jacobian(asm: Assembler, state: State, bc: BoundaryData, eta: float = 1.0, linearization="newton"):
    return asm.jacobian(state, bc, eta, linearization)
