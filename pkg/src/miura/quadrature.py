"""Reference-triangle quadrature and Lagrange shape functions.

The reference triangle has vertices (0, 0), (1, 0), (0, 1).
"""
from dataclasses import dataclass

import numpy as np

from .mesh import LOCAL_EDGES


@dataclass(frozen=True)
class Quadrature:
    points: np.ndarray  # (Q, 2)
    weights: np.ndarray  # (Q,), summing to the reference area 1/2
    degree: int


def _orbit3(a, w):
    b = 1.0 - 2.0 * a
    bary = [(b, a, a), (a, b, a), (a, a, b)]
    return bary, [w] * 3


def _orbit6(a, b, w):
    c = 1.0 - a - b
    bary = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
    return bary, [w] * 6


def dunavant6() -> Quadrature:
    """12-point symmetric rule, exact for polynomials of degree 6."""
    bary, w = [], []
    for pts, ws in (
        _orbit3(0.063089014491502228340331602870819, 0.050844906370206816920936809106869),
        _orbit3(0.249286745170910421291638553107019, 0.116786275726379366030690407964113),
        _orbit6(
            0.053145049844816947353249671631398,
            0.310352451033784405416607733956552,
            0.082851075618373575193553456420442,
        ),
    ):
        bary += pts
        w += ws
    bary = np.array(bary)
    # barycentric (L0, L1, L2) -> reference (xi, eta) = (L1, L2)
    return Quadrature(points=bary[:, 1:].copy(), weights=0.5 * np.array(w), degree=6)


def gauss_legendre_01(n: int):
    """Gauss-Legendre points and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def p1_basis(pts):
    """Values (Q, 3) and reference gradients (Q, 3, 2) of the P1 basis."""
    xi, eta = pts[:, 0], pts[:, 1]
    vals = np.column_stack([1.0 - xi - eta, xi, eta])
    grads = np.broadcast_to(np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]), (len(pts), 3, 2)).copy()
    return vals, grads


def p2_basis(pts):
    """Values (Q, 6) and reference gradients (Q, 6, 2) of the P2 basis.

    Local dofs 0-2 sit on the vertices, 3-5 on the midpoints of the edges
    listed in ``LOCAL_EDGES``.
    """
    L, dL = p1_basis(pts)
    Q = len(pts)
    vals = np.empty((Q, 6))
    grads = np.empty((Q, 6, 2))
    for k in range(3):
        vals[:, k] = L[:, k] * (2.0 * L[:, k] - 1.0)
        grads[:, k] = (4.0 * L[:, k] - 1.0)[:, None] * dL[:, k]
    for k, (a, b) in enumerate(LOCAL_EDGES):
        vals[:, 3 + k] = 4.0 * L[:, a] * L[:, b]
        grads[:, 3 + k] = 4.0 * (L[:, a][:, None] * dL[:, b] + L[:, b][:, None] * dL[:, a])
    return vals, grads


def basis(degree: int, pts):
    if degree == 1:
        return p1_basis(pts)
    if degree == 2:
        return p2_basis(pts)
    raise ValueError(f"unsupported degree {degree}")
