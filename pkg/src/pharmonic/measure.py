"""p-harmonic measures, their L_q versions and the functional Gamma.

Measures are densities with respect to ``d theta`` on the direction grid. For a body
``K`` the p-harmonic density is ``|grad u(grad h_K(xi))|^(p-1) (h'' + h)(xi)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InputOutputError, ValidationError
from .geometry import DirectionGrid, SupportFunction, curvature_density, make_grid
from .pde import AnnulusConfig, PHarmonicSolution, solve_body


@dataclass(frozen=True, eq=False)
class SphericalMeasure:
    grid: DirectionGrid
    density: np.ndarray
    provenance: str = "synthetic"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        d = np.array(self.density, dtype=float)
        if d.shape != (self.grid.M,):
            raise ValidationError("shape-mismatch", f"expected {self.grid.M} densities, got {d.shape}")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValidationError("negative-density", "densities must be finite and nonnegative")
        d.flags.writeable = False
        object.__setattr__(self, "density", d)

    @property
    def total_mass(self) -> float:
        return float(self.density.sum() * self.grid.dtheta)

    def scaled(self, factor: float) -> "SphericalMeasure":
        return SphericalMeasure(self.grid, factor * self.density, self.provenance, dict(self.meta))


def _body_key(K: SupportFunction) -> tuple:
    return (K.M, K.h.tobytes())


@lru_cache(maxsize=128)
def _solve_cached(key: tuple, cfg: AnnulusConfig) -> tuple[PHarmonicSolution, np.ndarray]:
    M, raw = key
    K = SupportFunction(make_grid(M), np.frombuffer(raw, dtype=float).copy())
    sol = solve_body(K, cfg)
    return sol, curvature_density(K)


def solve_cached(K: SupportFunction, cfg: AnnulusConfig) -> PHarmonicSolution:
    return _solve_cached(_body_key(K), cfg)[0]


def pharmonic_density(K: SupportFunction, cfg: AnnulusConfig) -> np.ndarray:
    sol, s = _solve_cached(_body_key(K), cfg)
    return sol.boundary_gradient ** (cfg.p - 1.0) * s


def pharmonic_measure(K: SupportFunction, cfg: AnnulusConfig) -> SphericalMeasure:
    return SphericalMeasure(K.grid, pharmonic_density(K, cfg), "pharmonic", {"p": cfg.p})


def lq_measure(K: SupportFunction, q: float, cfg: AnnulusConfig) -> SphericalMeasure:
    """``d mu_{K,q} = h_K^(1-q) d mu_K``; any real ``q``."""
    dens = K.h ** (1.0 - q) * pharmonic_density(K, cfg)
    return SphericalMeasure(K.grid, dens, "lq", {"p": cfg.p, "q": q})


def gamma(K: SupportFunction, cfg: AnnulusConfig) -> float:
    return float((K.h * pharmonic_density(K, cfg)).sum() * K.grid.dtheta)


def measure_centroid(m: SphericalMeasure) -> np.ndarray:
    return (m.density[:, None] * m.grid.directions).sum(axis=0) * m.grid.dtheta


def integrate(m: SphericalMeasure, f) -> float:
    f = np.asarray(f, dtype=float)
    if f.shape != (m.grid.M,):
        raise ValidationError("grid-mismatch", f"function has {f.shape}, grid has {m.grid.M}")
    return float((f * m.density).sum() * m.grid.dtheta)


def bin_atoms(angles, masses, grid: DirectionGrid, provenance: str = "target") -> SphericalMeasure:
    """Grid density of a discrete measure, each atom assigned to its nearest direction."""
    idx = np.mod(np.rint(np.asarray(angles, dtype=float) / grid.dtheta).astype(int), grid.M)
    dens = np.bincount(idx, weights=np.asarray(masses, dtype=float), minlength=grid.M) / grid.dtheta
    return SphericalMeasure(grid, dens, provenance)


# -- CSV --------------------------------------------------------------------


def write_measure_csv(m: SphericalMeasure, path) -> None:
    meta = {"provenance": m.provenance, "grid_size": m.grid.M, **m.meta}
    lines = [f"# {k}={meta[k]}" for k in sorted(meta)] + ["theta,density"]
    lines += [f"{th:.17g},{d:.17g}" for th, d in zip(m.grid.angles, m.density)]
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise InputOutputError("io", str(exc)) from exc


def read_measure_csv(path) -> SphericalMeasure:
    meta: dict = {}
    rows = []
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputOutputError("io", str(exc)) from exc
    header_seen = False
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k.strip()] = v.strip()
            continue
        if not header_seen:
            if [c.strip() for c in line.split(",")] != ["theta", "density"]:
                raise ValidationError("bad-measure-file", f"line {lineno}: expected header 'theta,density'")
            header_seen = True
            continue
        try:
            th, d = (float(x) for x in line.split(","))
        except ValueError:
            raise ValidationError("bad-measure-file", f"line {lineno}: cannot parse {line!r}") from None
        rows.append((th, d))
    if not rows:
        raise ValidationError("bad-measure-file", "no data rows")
    arr = np.array(rows)
    M = int(meta.get("grid_size", len(arr)))
    grid = make_grid(M)
    if len(arr) != M or not np.allclose(arr[:, 0], grid.angles, atol=1e-9):
        raise ValidationError("bad-measure-file", "theta column does not match a uniform grid")
    prov = meta.pop("provenance", "target")
    meta.pop("grid_size", None)
    return SphericalMeasure(grid, arr[:, 1], prov, meta)
