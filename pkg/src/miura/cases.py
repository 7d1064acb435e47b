"""Benchmark problems: domains, gradient boundary data and exact solutions."""
from __future__ import annotations

import importlib
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .mesh import Rect, build_rect_mesh
from .ode import BlowUpError, DenseSolution, integrate_adaptive, integrate_fixed, integrate_on_grid
from .spaces import BoundaryData

CASE_NAMES = ("hyperboloid", "annulus", "axisymmetric", "deformed-hyperboloid", "custom")


def _frame(G_x, G_y):
    """Stack two (n, 3) columns into (n, 3, 2) gradient matrices."""
    return np.stack([G_x, G_y], axis=-1)


@dataclass
class CaseSpec:
    name: str
    rect: Rect
    periodic: Optional[str]
    bc: BoundaryData
    nx: int
    ny: int
    exact: Optional[object] = None
    solver_overrides: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def build_mesh(self, nx=None, ny=None):
        return build_rect_mesh(self.rect, nx or self.nx, ny or self.ny, self.periodic)


# ---------------------------------------------------------------- hyperboloid
def hyperboloid_constants(theta: float):
    if not 0.0 < theta < 2.0 * math.pi / 3.0:
        raise ValueError(f"theta = {theta} outside (0, 2 pi / 3)")
    c0 = math.cos(theta / 2.0)
    s0 = math.sin(theta / 2.0)
    alpha = (1.0 - s0 * s0) ** -0.5
    s_star = math.sin(0.5 * math.acos(0.5 / c0))
    return c0, s0, alpha, s_star


class HyperboloidSolution:
    """phi(x, y) = (rho(x) cos(alpha y), rho(x) sin(alpha y), 2 s0 x)."""

    def __init__(self, theta: float):
        self.theta = theta
        self.c0, self.s0, self.alpha, self.s_star = hyperboloid_constants(theta)

    def _rho(self, x):
        k = 4.0 * self.c0**2
        rho = np.sqrt(k * x * x + 1.0)
        return rho, k * x / rho, k / rho**3

    def phi(self, x, y):
        rho, _, _ = self._rho(x)
        a = self.alpha * y
        return np.stack([rho * np.cos(a), rho * np.sin(a), 2.0 * self.s0 * x], axis=-1)

    def gradient(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        rho, drho, _ = self._rho(x)
        c, s = np.cos(self.alpha * y), np.sin(self.alpha * y)
        gx = np.stack([drho * c, drho * s, np.full_like(x, 2.0 * self.s0)], axis=-1)
        gy = np.stack([-self.alpha * rho * s, self.alpha * rho * c, np.zeros_like(x)], axis=-1)
        return _frame(gx, gy)

    def gradient_derivatives(self, x, y):
        """(dG/dx, dG/dy), each (n, 3, 2)."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        rho, drho, d2rho = self._rho(x)
        al = self.alpha
        c, s = np.cos(al * y), np.sin(al * y)
        z = np.zeros_like(x)
        phi_xx = np.stack([d2rho * c, d2rho * s, z], axis=-1)
        phi_xy = np.stack([-al * drho * s, al * drho * c, z], axis=-1)
        phi_yy = np.stack([-al * al * rho * c, -al * al * rho * s, z], axis=-1)
        return _frame(phi_xx, phi_xy), _frame(phi_xy, phi_yy)


def hyperboloid_case(theta: float = math.pi / 2, nx: int = 8, ny: int = 48, mode: str = "strong") -> CaseSpec:
    exact = HyperboloidSolution(theta)
    rect = Rect(-exact.s_star, exact.s_star, 0.0, 2.0 * math.pi / exact.alpha)
    bc = BoundaryData(rect, {"left": exact.gradient, "right": exact.gradient}, mode)
    return CaseSpec("hyperboloid", rect, "y", bc, nx, ny, exact=exact, params={"theta": theta})


def rotation(angle: float, axis: str = "x") -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    if axis == "x":
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    if axis == "z":
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    raise ValueError(f"unknown rotation axis {axis!r}")


def deformed_hyperboloid_case(
    theta: float = math.pi / 2,
    angle: float = math.pi / 6,
    nx: int = 8,
    ny: int = 48,
    axis: str = "x",
    mode: str = "strong",
) -> CaseSpec:
    """Hyperboloid data on the left side, rotated hyperboloid data on the right."""
    exact = HyperboloidSolution(theta)
    R = rotation(angle, axis)
    rect = Rect(-exact.s_star, exact.s_star, 0.0, 2.0 * math.pi / exact.alpha)

    def right(x, y):
        return np.einsum("ij,njk->nik", R, exact.gradient(x, y).reshape(-1, 3, 2)).reshape(np.shape(x) + (3, 2))

    bc = BoundaryData(rect, {"left": exact.gradient, "right": right}, mode)
    return CaseSpec(
        "deformed-hyperboloid",
        rect,
        "y",
        bc,
        nx,
        ny,
        exact=exact if angle == 0.0 else None,
        params={"theta": theta, "angle": angle, "axis": axis},
    )


# -------------------------------------------------------------------- annulus
def annulus_case(a: float = 0.675, nx: int = 8, ny: int = 48, literal: bool = False, mode: str = "strong") -> CaseSpec:
    """Radial/azimuthal data on (0, 3/4) x (0, 2 pi), periodic in y.

    By default ``|G_D^y|^2 = 4 / (4 - |G_D^x|^2)``; ``literal=True`` uses
    ``|G_D^y| = 4 / (4 - |G_D^x|^2)`` instead, which is not admissible.
    """
    L = 0.75
    if not (a * L + 1.0) ** 2 <= 3.0:
        raise ValueError(f"a = {a} gives |G_D^x|^2 > 3 on the right side")
    if not a > -1.0 / L:
        raise ValueError(f"a = {a} makes G_D^x vanish inside the domain")
    rect = Rect(0.0, L, 0.0, 2.0 * math.pi)

    def data(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        c, s, z = np.cos(y), np.sin(y), np.zeros_like(y)
        e_r = np.stack([c, s, z], axis=-1)
        e_t = np.stack([-s, c, z], axis=-1)
        mx = a * x + 1.0
        my = 4.0 / (4.0 - mx**2) if literal else 2.0 / np.sqrt(4.0 - mx**2)
        return _frame(mx[..., None] * e_r, my[..., None] * e_t)

    bc = BoundaryData(rect, {"left": data, "right": data}, mode)
    return CaseSpec("annulus", rect, "y", bc, nx, ny, params={"a": a, "literal": literal})


# --------------------------------------------------------------- axisymmetric
def _rho_rhs(t, u):
    rho, drho, _ = u
    radicand = 4.0 / (4.0 - rho * rho) - drho * drho
    return np.array([drho, 4.0 * rho / (4.0 - rho * rho) ** 2, math.sqrt(max(radicand, 0.0))])


def _rho_guard(t, u):
    rho, drho, _ = u
    if rho >= 2.0 - 1e-8:
        raise BlowUpError(t, "rho approaches 2")
    if 4.0 / (4.0 - rho * rho) - drho * drho < 0.0:
        raise BlowUpError(t, "negative radicand for dz/dy")


@dataclass
class OdeSolution:
    """Dense sampler of (rho, rho', z) on [0, y_end]."""

    dense: DenseSolution
    rho0: float
    drho0: float
    tol: float

    @property
    def y_end(self) -> float:
        return self.dense.t_end

    def __call__(self, y):
        return self.dense(y)

    @property
    def steps(self) -> int:
        return len(self.dense.ts) - 1


def integrate_rho(rho0: float = 0.1, drho0: float = 0.0, y_end: float = 4.0, tol: float = 1e-10) -> OdeSolution:
    """Integrate rho'' = 4 rho / (4 - rho^2)^2 together with z' = sqrt(4/(4-rho^2) - rho'^2)."""
    if not 0.0 < rho0 < 2.0:
        raise ValueError("rho0 must lie in (0, 2)")
    u0 = [rho0, drho0, 0.0]
    _rho_guard(0.0, u0)
    dense = integrate_adaptive(_rho_rhs, 0.0, u0, y_end, rtol=tol, atol=tol * 1e-2, guard=_rho_guard)
    return OdeSolution(dense, rho0, drho0, tol)


def rho_fixed_step(rho0: float, drho0: float, y_end: float, n_steps: int) -> np.ndarray:
    return integrate_fixed(_rho_rhs, 0.0, [rho0, drho0, 0.0], y_end, n_steps, guard=_rho_guard)


def rho_step_halved(ode: OdeSolution) -> np.ndarray:
    """Re-integrate over the accepted steps of ``ode`` with every step halved."""
    return integrate_on_grid(_rho_rhs, ode.dense.ts, [ode.rho0, ode.drho0, 0.0], 2, guard=_rho_guard)


def rho_self_convergence(rho0: float = 0.1, drho0: float = 0.0, y_end: float = 4.0, steps=(40, 80, 160)):
    """Observed order from three fixed-step runs with step ratio 2."""
    n1, n2, n3 = steps
    if not (n2 == 2 * n1 and n3 == 2 * n2):
        raise ValueError("step counts must double")
    r = [rho_fixed_step(rho0, drho0, y_end, n)[0] for n in steps]
    return math.log2(abs(r[0] - r[1]) / abs(r[1] - r[2]))


class AxisymmetricSolution:
    """phi(x, y) = (rho(y) cos x, rho(y) sin x, z(y)) from the integrated profile."""

    def __init__(self, ode: OdeSolution):
        self.ode = ode

    def _profile(self, y):
        u = self.ode(np.ravel(y))
        rho, drho, z = u[:, 0], u[:, 1], u[:, 2]
        d2rho = 4.0 * rho / (4.0 - rho**2) ** 2
        dz = np.sqrt(np.maximum(4.0 / (4.0 - rho**2) - drho**2, 0.0))
        shape = np.shape(y)
        return [v.reshape(shape) for v in (rho, drho, d2rho, z, dz)]

    def phi(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        rho, _, _, z, _ = self._profile(y)
        return np.stack([rho * np.cos(x), rho * np.sin(x), z], axis=-1)

    def gradient(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        rho, drho, _, _, dz = self._profile(y)
        c, s = np.cos(x), np.sin(x)
        gx = np.stack([-rho * s, rho * c, np.zeros_like(x)], axis=-1)
        gy = np.stack([drho * c, drho * s, dz], axis=-1)
        return _frame(gx, gy)

    def gradient_derivatives(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        rho, drho, d2rho, _, dz = self._profile(y)
        c, s = np.cos(x), np.sin(x)
        z0 = np.zeros_like(x)
        # dz/dy is constant along exact trajectories
        phi_xx = np.stack([-rho * c, -rho * s, z0], axis=-1)
        phi_xy = np.stack([-drho * s, drho * c, z0], axis=-1)
        phi_yy = np.stack([d2rho * c, d2rho * s, z0], axis=-1)
        return _frame(phi_xx, phi_xy), _frame(phi_xy, phi_yy)


def axisymmetric_case(nx: int = 32, ny: int = 16, rho0: float = 0.1, drho0: float = 0.0, mode: str = "weak") -> CaseSpec:
    height = 4.0
    ode = integrate_rho(rho0, drho0, height)
    exact = AxisymmetricSolution(ode)
    rect = Rect(0.0, 2.0 * math.pi, 0.0, height)
    bc = BoundaryData(rect, {"bottom": exact.gradient, "top": exact.gradient}, mode)
    return CaseSpec(
        "axisymmetric",
        rect,
        "x",
        bc,
        nx,
        ny,
        exact=exact,
        solver_overrides={"bc_mode": mode},
        params={"rho0": rho0, "drho0": drho0},
    )


# --------------------------------------------------------------------- custom
def custom_case(target: str, **params) -> CaseSpec:
    """Load a case from ``"package.module:function"``; the function returns a CaseSpec."""
    module, sep, func = target.partition(":")
    if not sep:
        raise ValueError(f"custom case target must look like 'module:function', got {target!r}")
    case = getattr(importlib.import_module(module), func)(**params)
    if not isinstance(case, CaseSpec):
        raise TypeError(f"{target} did not return a CaseSpec")
    return case


def make_case(name: str, **params) -> CaseSpec:
    if name == "hyperboloid":
        return hyperboloid_case(**params)
    if name == "annulus":
        return annulus_case(**params)
    if name == "axisymmetric":
        return axisymmetric_case(**params)
    if name == "deformed-hyperboloid":
        return deformed_hyperboloid_case(**params)
    if name == "custom":
        target = params.pop("target")
        return custom_case(target, **params)
    raise ValueError(f"unknown case {name!r}")
