"""Dormand--Prince 5(4) integrator with continuous (dense) output."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
E = B5 - B4
# Shampine's coefficients for the 4th-order continuous extension
D = np.array(
    [
        -12715105075 / 11282082432,
        0.0,
        87487479700 / 32700410799,
        -10690763975 / 1880347072,
        701980252875 / 199316789632,
        -1453857185 / 822651844,
        69997945 / 29380423,
    ]
)


class BlowUpError(RuntimeError):
    def __init__(self, t, message):
        super().__init__(f"{message} at t = {t:.6g}")
        self.t = t


def dopri_step(f, t, y, h, k1=None):
    """One Dormand--Prince step; returns (y_new, stage matrix K)."""
    K = np.empty((7, len(y)))
    K[0] = f(t, y) if k1 is None else k1
    for s in range(1, 7):
        K[s] = f(t + C[s] * h, y + h * np.dot(A[s], K[:s]))
    y_new = y + h * np.dot(B5, K)
    return y_new, K


@dataclass
class DenseSolution:
    """Piecewise continuous extension over the accepted steps."""

    ts: np.ndarray
    ys: np.ndarray
    ks: List[np.ndarray]
    rtol: float
    atol: float
    n_rejected: int = 0

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < self.ts[0] - 1e-12) or np.any(t > self.ts[-1] + 1e-12):
            raise ValueError("dense output requested outside the integration interval")
        i = np.clip(np.searchsorted(self.ts, t, side="right") - 1, 0, len(self.ts) - 2)
        out = np.empty((len(t), self.ys.shape[1]))
        for n, (tt, ii) in enumerate(zip(t, i)):
            out[n] = self._interp(ii, tt)
        return out

    def _interp(self, i, t):
        t0, t1 = self.ts[i], self.ts[i + 1]
        h = t1 - t0
        th = (t - t0) / h
        y0, y1, K = self.ys[i], self.ys[i + 1], self.ks[i]
        # Hermite-type continuous extension of the 5th order solution
        r1 = y1 - y0
        r2 = h * K[0] - r1
        r3 = r1 - h * K[6] - r2
        r4 = h * np.dot(D, K)
        th1 = 1.0 - th
        return y0 + th * (r1 + th1 * (r2 + th * (r3 + th1 * r4)))


def integrate_adaptive(
    f: Callable,
    t0: float,
    y0,
    t_end: float,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    h0: Optional[float] = None,
    guard: Optional[Callable] = None,
    max_steps: int = 100000,
) -> DenseSolution:
    """Adaptive DOPRI5 with standard step-size control.

    ``guard(t, y)`` may raise :class:`BlowUpError` to abort the integration.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    span = t_end - t0
    h = h0 if h0 is not None else 1e-3 * span
    ts, ys, ks = [t], [y.copy()], []
    k1 = f(t, y)
    rejected = 0
    for _ in range(max_steps):
        if t >= t_end:
            break
        last = h >= t_end - t
        h = t_end - t if last else h
        y_new, K = dopri_step(f, t, y, h, k1)
        K[6] = f(t + h, y_new)
        err_vec = h * np.dot(E, K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean((err_vec / scale) ** 2))
        if err <= 1.0:
            t = t_end if last else t + h
            y = y_new
            if guard is not None:
                guard(t, y)
            ts.append(t)
            ys.append(y.copy())
            ks.append(K)
            k1 = K[6]
        else:
            rejected += 1
        factor = 0.9 * err ** (-0.2) if err > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))
    else:
        raise RuntimeError("maximum number of steps exceeded")
    return DenseSolution(np.array(ts), np.array(ys), ks, rtol, atol, rejected)


def integrate_fixed(f: Callable, t0: float, y0, t_end: float, n_steps: int, guard=None):
    """Fixed-step DOPRI5 (5th order propagation); returns the final state."""
    y = np.array(y0, dtype=float)
    h = (t_end - t0) / n_steps
    for n in range(n_steps):
        t = t0 + n * h
        y, _ = dopri_step(f, t, y, h)
        if guard is not None:
            guard(t + h, y)
    return y


def integrate_on_grid(f: Callable, ts, y0, subdivide: int = 2, guard=None):
    """Fixed-step DOPRI5 through the grid ``ts`` with every interval split ``subdivide`` times."""
    ts = np.asarray(ts, dtype=float)
    y = np.array(y0, dtype=float)
    for t0, t1 in zip(ts[:-1], ts[1:]):
        y = integrate_fixed(f, t0, y, t1, subdivide, guard)
    return y
