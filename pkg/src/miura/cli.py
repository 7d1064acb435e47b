"""Command line interface: ``miura solve|convergence|validate|export``.

Exit codes: 0 success, 1 usage or configuration error, 2 Newton did not
converge, 3 a validation check failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

import numpy as np

from . import checks
from .analysis import constraint_fields, vertex_constraints
from .cases import make_case
from .config import ConfigError, RunConfig
from .export import export, write_csv
from .forms import Assembler
from .pipeline import SolveResult, convergence_study, refinement_meshes, solve_case, solver_config
from .recovery import recover_surface
from .spaces import State, taylor_hood

log = logging.getLogger("miura")

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGED, EXIT_VALIDATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI run configuration; flags override its values")
    p.add_argument("--case", help="hyperboloid, annulus, axisymmetric, deformed-hyperboloid or custom")
    p.add_argument("--theta", type=float, help="hyperboloid fold angle")
    p.add_argument("--a", type=float, help="annulus slope of |G^x|")
    p.add_argument("--angle", type=float, help="rotation of the deformed hyperboloid's right side")
    p.add_argument("--axis", choices=("x", "z"), help="rotation axis of the deformed hyperboloid")
    p.add_argument("--literal", action="store_true", default=None, help="annulus: use the uncorrected |G^y|")
    p.add_argument("--target", help="custom case factory, module:function")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--refine", type=int, help="number of uniform refinement levels")
    p.add_argument("--eta", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--bc-mode", choices=("strong", "weak"), dest="bc_mode")
    p.add_argument("--linearization", choices=("newton", "picard"))
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", dest="formats", help="comma separated subset of vtk,obj,csv")
    p.add_argument("--no-plots", action="store_true", help="skip the PNG figures")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="miura", description="Finite-element solver for Miura surfaces.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    for name, help_ in (
        ("solve", "solve one case and write the solution"),
        ("convergence", "error table over uniform refinements"),
        ("validate", "check boundary data, the ODE integrator and the Jacobian"),
        ("export", "re-export a saved solution"),
    ):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        if name == "export":
            p.add_argument("--input", help="solution.npz written by 'solve' (default OUT/solution.npz)")
        if name == "validate":
            p.add_argument("--states", type=int, default=10, help="random states for the Jacobian check")
    return parser


def load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for key in ("theta", "a", "angle", "axis", "literal", "target"):
        if getattr(args, key) is not None:
            setattr(cfg.case, key, getattr(args, key))
    if args.case is not None:
        cfg.case.name = args.case
    for key in ("nx", "ny", "refine"):
        if getattr(args, key) is not None:
            setattr(cfg.mesh, key, getattr(args, key))
    for key in ("eta", "tol", "max_iter", "bc_mode", "linearization"):
        if getattr(args, key) is not None:
            setattr(cfg.solver, key, getattr(args, key))
    if args.out is not None:
        cfg.output.out = args.out
    if args.formats is not None:
        cfg.output.formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    if args.no_plots:
        cfg.output.plots = False
    return cfg.validate()


def case_from_config(cfg: RunConfig):
    c = cfg.case
    params = {
        "hyperboloid": {"theta": c.theta},
        "deformed-hyperboloid": {"theta": c.theta, "angle": c.angle, "axis": c.axis},
        "annulus": {"a": c.a, "literal": c.literal},
        "axisymmetric": {"rho0": c.rho0},
        "custom": {"target": c.target},
    }[c.name]
    if cfg.mesh.nx is not None:
        params["nx"] = cfg.mesh.nx
    if cfg.mesh.ny is not None:
        params["ny"] = cfg.mesh.ny
    try:
        return make_case(c.name, **params)
    except (ValueError, TypeError, ImportError, AttributeError) as exc:
        raise ConfigError(f"cannot build case {c.name!r}: {exc}") from exc


def _solver(cfg: RunConfig, case):
    s = cfg.solver
    return solver_config(
        case,
        eta=s.eta,
        tol_rel=s.tol,
        max_iter=s.max_iter,
        bc_mode=s.bc_mode,
        linearization=s.linearization,
        residual_norm=s.residual_norm,
        line_search=s.line_search,
    )


def _outdir(cfg: RunConfig) -> str:
    os.makedirs(cfg.output.out, exist_ok=True)
    return cfg.output.out


def _write_summary(out: str, command: str, payload: dict) -> str:
    path = os.path.join(out, f"{command}_summary.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    return path


def write_solution_outputs(res: SolveResult, cfg: RunConfig, out: str) -> List[str]:
    written = []
    mesh = res.mesh
    pdata = vertex_constraints(res.asm, res.state.g)
    cdata = res.constraints.cell_data()
    if "vtk" in cfg.output.formats:
        written.append(export(res.surface, "vtk", os.path.join(out, "solution.vtk"), point_data=pdata, cell_data=cdata))
    if "obj" in cfg.output.formats:
        written.append(export(res.surface, "obj", os.path.join(out, "surface.obj")))
    if cfg.output.plots:
        from . import plotting

        written.append(plotting.plot_surface(res.surface, os.path.join(out, "surface.png"), res.case.name))
        written.append(plotting.plot_vertex_field(mesh, pdata["gx2"], os.path.join(out, "gx2.png"), "|G^x|^2"))
        written.append(plotting.plot_vertex_field(mesh, pdata["gy2"], os.path.join(out, "gy2.png"), "|G^y|^2"))
        written.append(plotting.plot_cell_flag(mesh, cdata["omega_prime"], os.path.join(out, "omega_prime.png")))
    return written


def cmd_solve(cfg: RunConfig) -> int:
    case = case_from_config(cfg)
    res = solve_case(case, _solver(cfg, case))
    out = _outdir(cfg)
    np.savez(
        os.path.join(out, "solution.npz"),
        g=res.state.g,
        r=res.state.r,
        mu=res.state.mu,
        nx=res.mesh.nx,
        ny=res.mesh.ny,
        config=cfg.to_ini(),
    )
    files = write_solution_outputs(res, cfg, out)
    summary = res.summary()
    summary["files"] = [os.path.basename(f) for f in files] + ["solution.npz"]
    _write_summary(out, "solve", summary)
    rep = res.report
    print(f"{case.name}: {res.mesh.n_triangles} triangles, {res.dofs} dofs")
    print(f"newton: {rep.iterations} iterations, relative residual {rep.relative[-1]:.3e}, converged={rep.converged}")
    print(f"omega' fraction {res.constraints.omega_prime_fraction:.3f}, sup|u| {res.constraints.sup_u:.3e}, "
          f"sup|v| {res.constraints.sup_v:.3e}")
    if res.errors is not None:
        print(f"errors: L2 {res.errors[0]:.4e}, H1 {res.errors[1]:.4e}")
    return EXIT_OK if rep.converged else EXIT_NONCONVERGED


def cmd_convergence(cfg: RunConfig) -> int:
    case = case_from_config(cfg)
    if case.exact is None:
        raise UsageError(f"case {case.name!r}: no exact solution, convergence study unavailable")
    levels = cfg.mesh.refine if cfg.mesh.refine > 1 else 3
    meshes = refinement_meshes(case.nx, case.ny, levels)
    table, results = convergence_study(case, _solver(cfg, case), meshes)
    out = _outdir(cfg)
    files = []
    if "csv" in cfg.output.formats:
        files.append(write_csv(os.path.join(out, "convergence.csv"), table))
    if cfg.output.plots:
        from . import plotting

        files.append(plotting.plot_convergence(table, os.path.join(out, "convergence.png"), case.name))
    converged = all(r.report.converged for r in results)
    _write_summary(
        out,
        "convergence",
        {
            "case": case.name,
            "rows": [dict(zip(("h", "dofs", "newton_iters", "h1_err", "h1_rate", "l2_err", "l2_rate"), rec))
                     for rec in table.records()],
            "runs": [r.summary() for r in results],
            "converged": converged,
            "files": [os.path.basename(f) for f in files],
        },
    )
    print(table.format())
    return EXIT_OK if converged else EXIT_NONCONVERGED


def cmd_validate(cfg: RunConfig, n_states: int = 10) -> int:
    case = case_from_config(cfg)
    results = [checks.hypothesis_check(case, checks.hypothesis_tolerance(case))]
    results += checks.ode_checks()
    results.append(checks.jacobian_check(case, n_states=n_states))
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    out = _outdir(cfg)
    _write_summary(
        out,
        "validate",
        {"case": case.name, "passed": ok, "checks": [vars(r) for r in results]},
    )
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_export(cfg: RunConfig, source: Optional[str]) -> int:
    path = source or os.path.join(cfg.output.out, "solution.npz")
    try:
        data = np.load(path)
    except OSError as exc:
        raise ConfigError(f"cannot read saved solution {path}: {exc}") from exc
    saved = RunConfig.from_ini(str(data["config"]))
    saved.output = cfg.output
    case = case_from_config(saved)
    mesh = case.build_mesh(int(data["nx"]), int(data["ny"]))
    asm = Assembler(taylor_hood(mesh))
    state = State(data["g"], data["r"], data["mu"])
    if state.g.shape != (asm.spaces.n_g,):
        raise ConfigError(f"{path} does not match the configured mesh")
    surface = recover_surface(state.g, asm)
    cons = constraint_fields(asm, state.g)
    res = SolveResult(case, mesh, asm, state, None, surface, cons)
    out = _outdir(cfg)
    files = write_solution_outputs(res, cfg, out)
    _write_summary(out, "export", {"source": path, "files": [os.path.basename(f) for f in files]})
    for f in files:
        print(f)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "convergence":
            return cmd_convergence(cfg)
        if args.command == "validate":
            return cmd_validate(cfg, args.states)
        return cmd_export(cfg, args.input)
    except (ConfigError, UsageError) as exc:
        print(f"miura: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
