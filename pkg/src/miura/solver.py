"""Newton iteration, starting guess and sparse saddle-point solves."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .forms import Assembler, assemble_jacobian, assemble_residual
from .spaces import MULTIPLIER_COMPONENTS as N_BORDER, BoundaryData, State

log = logging.getLogger(__name__)


class SingularSystemError(np.linalg.LinAlgError):
    pass


@dataclass
class SolverConfig:
    eta: float = 1.0
    tol_rel: float = 1e-8
    tol_abs: float = 0.0
    max_iter: int = 25
    residual_norm: str = "h1_riesz"
    linearization: str = "newton"
    bc_mode: str = "strong"
    line_search: bool = False

    def __post_init__(self):
        if not self.tol_rel > 0:
            raise ValueError("tol_rel must be positive")
        if self.tol_abs < 0:
            raise ValueError("tol_abs must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.residual_norm not in ("h1_riesz", "euclidean"):
            raise ValueError(f"unknown residual norm {self.residual_norm!r}")
        if self.linearization not in ("newton", "picard"):
            raise ValueError(f"unknown linearization {self.linearization!r}")
        if self.bc_mode not in ("strong", "weak"):
            raise ValueError(f"unknown boundary mode {self.bc_mode!r}")


@dataclass
class NewtonReport:
    iterations: int = 0
    residuals: List[float] = field(default_factory=list)
    converged: bool = False
    final_residual: float = float("nan")

    @property
    def relative(self) -> List[float]:
        r0 = self.residuals[0] if self.residuals else 1.0
        return [r / r0 if r0 > 0 else 0.0 for r in self.residuals]

    def as_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residuals": list(self.residuals),
            "relative_residuals": self.relative,
            "converged": self.converged,
            "final_residual": self.final_residual,
        }


def _splu(A):
    A = sp.csc_matrix(A)
    empty_rows = np.flatnonzero(np.diff(A.tocsr().indptr) == 0)
    if len(empty_rows):
        raise SingularSystemError(f"structurally singular: empty row {empty_rows[0]}")
    empty_cols = np.flatnonzero(np.diff(A.indptr) == 0)
    if len(empty_cols):
        raise SingularSystemError(f"structurally singular: empty column {empty_cols[0]}")
    try:
        return spla.splu(A, permc_spec="MMD_ATA")
    except RuntimeError as exc:
        raise SingularSystemError(f"numerically singular: {exc}") from exc


class BorderedLU:
    """Direct solver for ``[[K, C^T], [C, 0]]`` with a few dense border rows ``C``.

    Dense rows wreck the fill-reducing ordering of a sparse LU, so only the
    sparse core is factorized. The core may be singular (the border removes
    its kernel); it is regularized by ``s e_j e_j^T`` at one column per
    border row and the exact inverse is recovered with the Woodbury identity.
    """

    def __init__(self, A, n_border: int = 0):
        A = sp.csr_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"matrix is not square: {A.shape}")
        self.n = A.shape[0]
        self.nb = nb = n_border
        if nb == 0:
            self.lu = _splu(A)
            return
        m = self.n - nb
        K = A[:m][:, :m]
        C = A[m:][:, :m].toarray()
        Ct = A[:m][:, m:].toarray()
        if np.any(A[m:][:, m:].toarray()):
            raise ValueError("border block must be zero")
        self.C = C
        cols = np.argmax(np.abs(C), axis=1)
        diag = np.abs(K.diagonal())
        s = float(diag.max()) if diag.size and diag.max() > 0 else 1.0
        self.cols, self.s = cols, s
        Kreg = K + sp.csr_matrix((np.full(nb, s), (cols, cols)), shape=(m, m))
        self.lu = _splu(Kreg)
        self.Y = self.lu.solve(Ct)  # (m, nb)
        self.S = C @ self.Y
        # columns of M~^{-1} Q with Q = [e_cols; 0]
        E = np.zeros((m, nb))
        E[cols, np.arange(nb)] = 1.0
        self.W = self._solve_reg(E, np.zeros((nb, nb)))
        self.T = np.eye(nb) / s - self.W[cols, :]

    def _solve_reg(self, f, g):
        z = self.lu.solve(f)
        mu = np.linalg.solve(self.S, self.C @ z - g)
        return np.vstack([z - self.Y @ mu, mu])

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: matrix {self.n}, rhs {rhs.shape[0]}")
        if self.nb == 0:
            x = self.lu.solve(rhs)
        else:
            m = self.n - self.nb
            one = rhs.ndim == 1
            f = rhs[:m].reshape(m, -1)
            g = rhs[m:].reshape(self.nb, -1)
            xt = self._solve_reg(f, g)
            x = xt + self.W @ np.linalg.solve(self.T, xt[self.cols])
            x = x[:, 0] if one else x
        if not np.all(np.isfinite(x)):
            raise SingularSystemError("numerically singular: non-finite solution")
        return x


def solve_linear_saddle(A, rhs, n_border: int = 0):
    """Direct sparse solve of ``A x = rhs``.

    The last ``n_border`` rows/columns may form a dense border with a zero
    corner block; see :class:`BorderedLU`. Singular systems raise
    :class:`SingularSystemError`.
    """
    A = sp.csr_matrix(A)
    if A.shape[0] != A.shape[1] or A.shape[0] != len(rhs):
        raise ValueError(f"dimension mismatch: matrix {A.shape}, rhs {len(rhs)}")
    return BorderedLU(A, n_border).solve(rhs)


def solve_pinned(A, rhs, pinned, n_border: int = 0):
    """Solve ``A x = rhs`` where the rows ``pinned`` of ``A`` are identity rows.

    The pinned values are moved to the right-hand side so that only the free
    block is factorized.
    """
    n = A.shape[0]
    free = np.ones(n, dtype=bool)
    free[pinned] = False
    x = np.zeros(n)
    x[pinned] = rhs[pinned]
    A = sp.csr_matrix(A)
    Af = A[free]
    b = rhs[free] - Af[:, ~free] @ x[~free]
    x[free] = solve_linear_saddle(Af[:, free], b, n_border)
    return x


class ResidualNorm:
    """H^1 Riesz norm of the gradient block of a residual, over free dofs."""

    def __init__(self, asm: Assembler, pinned):
        self.n_g = asm.spaces.n_g
        free = np.ones(self.n_g, dtype=bool)
        free[pinned] = False
        self.free = free
        # the H^1 Gram matrix is block diagonal over the six components
        nc = asm.spaces.W.n_components
        scalar_free = free.reshape(-1, nc)
        if not np.all(scalar_free == scalar_free[:, :1]):
            raise ValueError("pinned set must cover whole nodes")
        self.scalar_free = scalar_free[:, 0]
        M = asm.scalar_h1_matrix[self.scalar_free][:, self.scalar_free]
        self.lu = _splu(M)
        self.nc = nc

    def __call__(self, F):
        Fg = F[: self.n_g].reshape(-1, self.nc)[self.scalar_free]
        z = self.lu.solve(Fg)
        return float(np.sqrt(max(np.sum(z * Fg), 0.0)))


def residual_norm_h1(residual, asm: Assembler, pinned=()):
    return ResidualNorm(asm, np.asarray(pinned, dtype=np.int64))(residual)


def _pinned(asm, bc):
    if bc.mode == "strong":
        return asm.boundary_values(bc)[0]
    return np.empty(0, dtype=np.int64)


def initial_guess(asm: Assembler, bc: BoundaryData, eta: float = 1.0) -> State:
    """Solve the vector-Laplacian mixed problem used as Newton starting point."""
    K, rhs = asm.linear_guess_system(bc, eta)
    x = solve_pinned(K, rhs, _pinned(asm, bc), N_BORDER)
    return State.from_vector(asm.spaces, x)


def newton_solve(asm: Assembler, config: SolverConfig, bc: BoundaryData, state0: State):
    """Newton (or Picard) iteration until the relative residual drops below ``tol_rel``
    (or the absolute one below ``tol_abs``).

    Returns ``(state, report)``; non-convergence is reported, not raised.
    """
    pinned = _pinned(asm, bc)
    if config.residual_norm == "h1_riesz":
        norm = ResidualNorm(asm, pinned)
    else:
        free = np.ones(asm.spaces.size, dtype=bool)
        free[pinned] = False

        def norm(F):
            return float(np.linalg.norm(F[free]))

    state = state0.copy()
    F = assemble_residual(asm, state, bc, config.eta)
    report = NewtonReport(residuals=[norm(F)])
    r0 = report.residuals[0]
    log.info("newton it 0: residual %.3e", r0)
    if r0 <= config.tol_abs:
        report.converged, report.final_residual = True, 0.0
        return state, report

    for it in range(1, config.max_iter + 1):
        J = assemble_jacobian(asm, state, bc, config.eta, config.linearization)
        delta = solve_pinned(J, -F, pinned, N_BORDER)
        step = 1.0
        trial = State.from_vector(asm.spaces, state.vector() + delta)
        Ft = assemble_residual(asm, trial, bc, config.eta)
        if config.line_search:
            current = report.residuals[-1]
            for _ in range(8):
                if norm(Ft) < current:
                    break
                step *= 0.5
                trial = State.from_vector(asm.spaces, state.vector() + step * delta)
                Ft = assemble_residual(asm, trial, bc, config.eta)
        state, F = trial, Ft
        res = norm(F)
        report.residuals.append(res)
        report.iterations = it
        log.info("newton it %d: residual %.3e (relative %.3e, step %.3g)", it, res, res / r0, step)
        if not np.isfinite(res):
            break
        if res / r0 <= config.tol_rel or res <= config.tol_abs:
            report.converged = True
            break
    report.final_residual = report.residuals[-1]
    return state, report
