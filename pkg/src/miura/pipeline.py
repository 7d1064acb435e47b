"""End-to-end runs: mesh, starting guess, Newton, recovery and diagnostics."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

from .analysis import (
    ConstraintFields,
    ConvergenceTable,
    clairault_defect,
    constraint_fields,
    error_norms,
    gradient_mismatch,
)
from .cases import CaseSpec
from .forms import Assembler
from .mesh import Mesh
from .recovery import SurfaceField, recover_surface
from .solver import NewtonReport, SolverConfig, initial_guess, newton_solve
from .spaces import State, taylor_hood

log = logging.getLogger(__name__)


@dataclass
class SolveResult:
    case: CaseSpec
    mesh: Mesh
    asm: Assembler
    state: State
    report: NewtonReport
    surface: SurfaceField
    constraints: ConstraintFields
    errors: Optional[Tuple[float, float]] = None
    seconds: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def dofs(self) -> int:
        return self.asm.spaces.size

    def summary(self) -> dict:
        out = {
            "case": self.case.name,
            "params": dict(self.case.params),
            "nx": self.mesh.nx,
            "ny": self.mesh.ny,
            "h": self.mesh.h,
            "triangles": self.mesh.n_triangles,
            "dofs": self.dofs,
            "bc_mode": self.case.bc.mode,
            "newton": self.report.as_dict(),
            "constraints": self.constraints.summary(),
            "recovery_normal_residual": self.surface.normal_residual,
            "seconds": self.seconds,
        }
        out.update(self.extras)
        if self.errors is not None:
            out["l2_error"], out["h1_error"] = self.errors
        return out


def solver_config(case: CaseSpec, **overrides) -> SolverConfig:
    """Case defaults, then explicit overrides (``None`` values are ignored)."""
    kw = {"bc_mode": case.bc.mode}
    kw.update(case.solver_overrides)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return SolverConfig(**kw)


def solve_case(case: CaseSpec, config: SolverConfig, nx: int = None, ny: int = None) -> SolveResult:
    if config.bc_mode != case.bc.mode:
        case = replace(case, bc=replace(case.bc, mode=config.bc_mode))
    t0 = time.perf_counter()
    mesh = case.build_mesh(nx, ny)
    asm = Assembler(taylor_hood(mesh))
    log.info("%s: %dx%d mesh, %d triangles, %d dofs", case.name, mesh.nx, mesh.ny, mesh.n_triangles, asm.spaces.size)
    state0 = initial_guess(asm, case.bc, config.eta)
    state, report = newton_solve(asm, config, case.bc, state0)
    surface = recover_surface(state.g, asm)
    cons = constraint_fields(asm, state.g)
    errors = error_norms(asm, state.g, case.exact) if case.exact is not None else None
    extras = {
        "clairault_defect": clairault_defect(asm, state.g),
        "gradient_mismatch": gradient_mismatch(asm, surface, state.g),
    }
    return SolveResult(case, mesh, asm, state, report, surface, cons, errors, time.perf_counter() - t0, extras)


def refinement_meshes(nx: int, ny: int, levels: int) -> List[Tuple[int, int]]:
    """Uniform refinements, each one quadrupling the number of triangles."""
    return [(nx * 2**k, ny * 2**k) for k in range(levels)]


def convergence_study(case: CaseSpec, config: SolverConfig, meshes: Sequence[Tuple[int, int]]):
    if case.exact is None:
        raise ValueError(f"case {case.name!r} has no exact solution")
    table = ConvergenceTable()
    results = []
    for nx, ny in meshes:
        res = solve_case(case, config, nx, ny)
        l2, h1 = res.errors
        table.add(res.mesh.h, res.dofs, res.report.iterations, h1, l2, res.mesh.n_triangles)
        results.append(res)
    return table, results
