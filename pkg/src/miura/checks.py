"""Self-checks shared by the ``validate`` command and the test-suite."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .cases import CaseSpec, integrate_rho, rho_self_convergence, rho_step_halved
from .forms import Assembler, assemble_jacobian, assemble_residual
from .solver import initial_guess
from .spaces import HypothesisReport, State, taylor_hood, validate_hypothesis


@dataclass
class CheckResult:
    name: str
    value: float
    tol: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{status} {self.name}: {self.value:.3e} (tol {self.tol:g}){extra}"


def hypothesis_check(case: CaseSpec, tol: float, n_samples: int = 1000) -> CheckResult:
    rep: HypothesisReport = validate_hypothesis(case.bc, n_samples)
    bad = rep.violated(tol)
    detail = "violated: " + ", ".join(bad) if bad else ""
    return CheckResult(f"boundary data ({case.name})", rep.max_violation, tol, not bad, detail)


def random_state(asm: Assembler, base: State, rng: np.random.Generator, scale: float = 0.05) -> State:
    return State(
        base.g + scale * rng.standard_normal(base.g.shape),
        rng.standard_normal(base.r.shape),
        rng.standard_normal(base.mu.shape),
    )


def jacobian_fd_errors(
    asm: Assembler, bc, eta: float = 1.0, n_states: int = 10, seed: int = 0, eps: float = 1e-6
) -> List[float]:
    """Relative mismatch between ``J v`` and a central difference of the residual.

    One random direction per random state; states are perturbations of the
    starting guess.
    """
    rng = np.random.default_rng(seed)
    base = initial_guess(asm, bc, eta)
    errors = []
    for _ in range(n_states):
        state = random_state(asm, base, rng)
        x = state.vector()
        v = rng.standard_normal(x.shape)
        v /= np.linalg.norm(v)
        J = assemble_jacobian(asm, state, bc, eta)
        Fp = assemble_residual(asm, State.from_vector(asm.spaces, x + eps * v), bc, eta)
        Fm = assemble_residual(asm, State.from_vector(asm.spaces, x - eps * v), bc, eta)
        fd = (Fp - Fm) / (2 * eps)
        Jv = J @ v
        errors.append(float(np.linalg.norm(Jv - fd) / np.linalg.norm(Jv)))
    return errors


def jacobian_check(case: CaseSpec, nx: int = 2, ny: int = 8, n_states: int = 10, tol: float = 1e-6, seed: int = 0):
    mesh = case.build_mesh(nx, ny)
    asm = Assembler(taylor_hood(mesh))
    errs = jacobian_fd_errors(asm, case.bc, n_states=n_states, seed=seed)
    worst = max(errs)
    return CheckResult(f"jacobian vs finite differences ({n_states} states)", worst, tol, worst <= tol)


def ode_checks(tol_halved: float = 1e-8, min_order: float = 4.8) -> List[CheckResult]:
    ode = integrate_rho()
    diff = abs(rho_step_halved(ode)[0] - ode(ode.y_end)[0, 0])
    order = rho_self_convergence()
    return [
        CheckResult("rho(4) vs step-halved integration", diff, tol_halved, diff <= tol_halved),
        CheckResult("ODE self-convergence order", order, min_order, order >= min_order, "lower bound"),
    ]


def hypothesis_tolerance(case: CaseSpec) -> float:
    """Closed-form data is checked to 1e-10, ODE-based data to 1e-8."""
    return 1e-8 if case.name == "axisymmetric" else 1e-10
