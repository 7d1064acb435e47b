"""Run configuration: an INI file with [case], [mesh], [solver] and [output] sections.

Example::

    [case]
    name = hyperboloid
    theta = 1.5707963267948966

    [mesh]
    nx = 8
    ny = 48
    refine = 3

    [solver]
    eta = 1.0
    tol = 1e-8
    max_iter = 25
    bc_mode = strong
    linearization = newton

    [output]
    out = results
    formats = vtk,obj,csv
    plots = true

Unknown sections or keys are rejected. Command-line flags override file values.
"""
from __future__ import annotations

import configparser
import io
import math
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

from .cases import CASE_NAMES
from .export import EXPORT_FORMATS


SECTIONS = ("case", "mesh", "solver", "output")


class ConfigError(ValueError):
    pass


@dataclass
class CaseConfig:
    name: str = "hyperboloid"
    theta: float = math.pi / 2
    a: float = 0.675
    angle: float = math.pi / 6
    axis: str = "x"
    literal: bool = False
    rho0: float = 0.1
    target: str = ""


@dataclass
class MeshConfig:
    nx: Optional[int] = None
    ny: Optional[int] = None
    refine: int = 1


@dataclass
class SolverSection:
    eta: float = 1.0
    tol: float = 1e-8
    max_iter: int = 25
    bc_mode: Optional[str] = None
    linearization: str = "newton"
    residual_norm: str = "h1_riesz"
    line_search: bool = False


@dataclass
class OutputConfig:
    out: str = "results"
    formats: List[str] = field(default_factory=lambda: ["vtk", "obj", "csv"])
    plots: bool = True


@dataclass
class RunConfig:
    case: CaseConfig = field(default_factory=CaseConfig)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    solver: SolverSection = field(default_factory=SolverSection)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> "RunConfig":
        if self.case.name not in CASE_NAMES:
            raise ConfigError(f"unknown case {self.case.name!r}; choose from {', '.join(CASE_NAMES)}")
        if self.case.name == "custom" and not self.case.target:
            raise ConfigError("case 'custom' needs target = module:function")
        if self.case.axis not in ("x", "z"):
            raise ConfigError(f"rotation axis must be x or z, got {self.case.axis!r}")
        for k in ("nx", "ny"):
            v = getattr(self.mesh, k)
            if v is not None and v < 1:
                raise ConfigError(f"{k} must be >= 1")
        if self.mesh.refine < 1:
            raise ConfigError("refine must be >= 1")
        if self.solver.bc_mode not in (None, "strong", "weak"):
            raise ConfigError(f"bc_mode must be strong or weak, got {self.solver.bc_mode!r}")
        if not self.solver.tol > 0 or self.solver.max_iter < 1 or self.solver.eta < 0:
            raise ConfigError("need tol > 0, max_iter >= 1 and eta >= 0")
        if self.solver.linearization not in ("newton", "picard"):
            raise ConfigError(f"unknown linearization {self.solver.linearization!r}")
        if self.solver.residual_norm not in ("h1_riesz", "euclidean"):
            raise ConfigError(f"unknown residual norm {self.solver.residual_norm!r}")
        bad = [f for f in self.output.formats if f not in EXPORT_FORMATS]
        if bad:
            raise ConfigError(f"unknown export format(s): {', '.join(bad)}")
        return self

    # ------------------------------------------------------------ serialization
    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        for section in SECTIONS:
            values = {}
            for k, v in asdict(getattr(self, section)).items():
                if v is None:
                    continue
                if isinstance(v, list):
                    v = ",".join(v)
                elif isinstance(v, bool):
                    v = "true" if v else "false"
                elif isinstance(v, float):
                    v = repr(v)
                values[k] = str(v)
            cp[section] = values
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        cfg = cls()
        for section in cp.sections():
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]")
            obj = getattr(cfg, section)
            known = {f.name for f in fields(obj)}
            for key, raw in cp[section].items():
                if key not in known:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                setattr(obj, key, _parse(raw, section, key))
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                return cls.from_ini(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc


_TYPES = {
    ("case", "name"): str,
    ("case", "axis"): str,
    ("case", "target"): str,
    ("case", "literal"): bool,
    ("mesh", "nx"): int,
    ("mesh", "ny"): int,
    ("mesh", "refine"): int,
    ("solver", "max_iter"): int,
    ("solver", "bc_mode"): str,
    ("solver", "linearization"): str,
    ("solver", "residual_norm"): str,
    ("solver", "line_search"): bool,
    ("output", "out"): str,
    ("output", "formats"): list,
    ("output", "plots"): bool,
}


def _parse(raw: str, section: str, key: str):
    kind = _TYPES.get((section, key), float)
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is list:
            return [s.strip() for s in raw.split(",") if s.strip()]
        if kind is float:
            return _parse_float(raw)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value {raw!r} for {key} in [{section}]") from exc


def _parse_float(raw: str) -> float:
    """Floats, optionally written as multiples of pi (``pi/6``, ``2*pi/3``)."""
    text = raw.replace(" ", "")
    if "pi" not in text:
        return float(text)
    num, _, den = text.partition("/")
    num = num.replace("*pi", "").replace("pi", "") or "1"
    return float(num) * math.pi / (float(den) if den else 1.0)
