"""Run configuration: one JSON file with nested sections, overridable by CLI flags."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import InputOutputError, ValidationError
from .minkowski import SolverOptions
from .pde import AnnulusConfig


@dataclass(frozen=True)
class AnnulusSection:
    p: float = 2.0
    rho: float | None = None  # absolute obstacle radius; default is rho_factor * sqrt(area / pi)
    rho_factor: float = 0.4
    Ns: int = 64
    Ntheta: int = 256
    epsilon_reg: float = 1e-6
    picard_tol: float = 1e-8
    max_iters: int = 200
    method: str = "newton"


@dataclass(frozen=True)
class VariationSection:
    delta: float = 1e-2
    tol_var: float = 0.02
    richardson: bool = False


@dataclass(frozen=True)
class SolverSection:
    q: float = 0.5
    tol_solve: float = 0.05
    tol_center: float = 1e-10
    tol_norm: float = 0.01
    max_outer: int = 60
    max_center_iters: int = 100
    method: str = "fixed-point"


@dataclass(frozen=True)
class RunConfig:
    M: int = 256
    annulus: AnnulusSection = field(default_factory=AnnulusSection)
    variation: VariationSection = field(default_factory=VariationSection)
    solver: SolverSection = field(default_factory=SolverSection)
    output_dir: str = "."
    seed: int = 0

    def __post_init__(self):
        if self.M < 8:
            raise ValidationError("grid-too-coarse", f"M = {self.M}")
        if not self.annulus.p > 1:
            raise ValidationError("parameter-domain", f"p must exceed 1, got {self.annulus.p}")
        for name, v in (("delta", self.variation.delta), ("tol_var", self.variation.tol_var)):
            if not v > 0:
                raise ValidationError("bad-tolerance", f"{name} must be positive")
        # validates the remaining tolerances
        self.annulus_config()
        self.solver_options()

    def annulus_config(self, p: float | None = None) -> AnnulusConfig:
        a = self.annulus
        return AnnulusConfig(
            p=a.p if p is None else float(p), rho=a.rho, Ns=a.Ns, Ntheta=a.Ntheta, rho_factor=a.rho_factor,
            epsilon_reg=a.epsilon_reg, picard_tol=a.picard_tol, max_iters=a.max_iters, method=a.method,
        )

    def solver_options(self) -> SolverOptions:
        s = self.solver
        return SolverOptions(
            tol_solve=s.tol_solve, tol_center=s.tol_center, tol_norm=s.tol_norm, max_outer=s.max_outer,
            max_center_iters=s.max_center_iters, method=s.method,
        )

    def to_json(self) -> dict:
        return asdict(self)


_SECTIONS = {"annulus": AnnulusSection, "variation": VariationSection, "solver": SolverSection}


def _build(cls, data: dict, where: str):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ValidationError("bad-config", f"unknown key '{where}{key}'")
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ValidationError("bad-config", f"'{where}{key}' must be an object")
            value = _build(_SECTIONS[key], value, f"{where}{key}.")
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError("bad-config", f"{where}: {exc}") from exc


def from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ValidationError("bad-config", "configuration must be a JSON object")
    return _build(RunConfig, data, "")


def load(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputOutputError("io", str(exc)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError("bad-config", f"{path}: line {exc.lineno}: {exc.msg}") from None
    return from_dict(data)


def override(cfg: RunConfig, **flags) -> RunConfig:
    """Apply flag overrides; ``None`` means "not given". Keys are ``section_field`` or top-level names."""
    top, sections = {}, {name: {} for name in _SECTIONS}
    for key, value in flags.items():
        if value is None:
            continue
        for name, cls in _SECTIONS.items():
            prefix = name + "_"
            if key.startswith(prefix) and key[len(prefix):] in {f.name for f in fields(cls)}:
                sections[name][key[len(prefix):]] = value
                break
        else:
            top[key] = value
    for name, vals in sections.items():
        if vals:
            top[name] = replace(getattr(cfg, name), **vals)
    return replace(cfg, **top) if top else cfg
