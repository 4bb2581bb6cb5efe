"""Finite-difference checks of the first variation of Gamma along q-sum paths.

``Gamma(K^t)`` with ``K^t`` the Wulff shape of ``(h_K^q + t h_L^q)^(1/q)`` should have
derivative ``(n - p + 1)/q * int h_L^q h_K^(1-q) d mu_K`` at ``t = 0``.

Two obstacle conventions are offered. ``"covariant"`` re-places the obstacle for every
body on the path (centroid and area-equivalent radius), which is what makes ``Gamma``
translation invariant and homogeneous. ``"fixed"`` keeps the obstacle of ``K``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ValidationError
from .geometry import SupportFunction, q_sum, scale
from .measure import gamma, pharmonic_density
from .pde import AnnulusConfig, obstacle_for

log = logging.getLogger(__name__)

DEFAULT_STEP = 1e-2
RICHARDSON_WARN = 0.2


@dataclass(frozen=True)
class VariationReport:
    K_id: str
    L_id: str
    q: float
    p: float
    fd_value: float
    formula_value: float
    rel_error: float
    step: float
    richardson_used: bool
    tol: float = 0.02

    @property
    def passed(self) -> bool:
        return self.rel_error <= self.tol

    @property
    def degenerate(self) -> bool:
        # both sides vanish identically at p = n + 1
        return abs(self.formula_value) < 1e-8

    def as_row(self) -> dict:
        row = asdict(self)
        row["passed"] = self.passed
        row["degenerate"] = self.degenerate
        return row


def _path_config(K: SupportFunction, cfg: AnnulusConfig, obstacle: str) -> AnnulusConfig:
    if obstacle == "covariant":
        return cfg
    if obstacle == "fixed":
        c, rho, _ = obstacle_for(K, cfg)
        return cfg.with_obstacle(c, rho)
    raise ValidationError("bad-option", f"unknown obstacle convention {obstacle!r}")


def step_bound(K: SupportFunction, L: SupportFunction, q: float) -> float:
    """Largest ``|t|`` keeping ``h_K^q + t h_L^q`` positive, with a safety factor of 2."""
    return 0.5 * float((K.h**q / L.h**q).min())


def gamma_on_path(K, L, q, t, cfg: AnnulusConfig, obstacle: str = "covariant") -> float:
    return gamma(q_sum(K, L, q, t), _path_config(K, cfg, obstacle))


def _central(K, L, q, cfg, delta, obstacle):
    if delta <= 0 or delta > step_bound(K, L, q):
        raise ValidationError("bad-step", f"step {delta} outside (0, {step_bound(K, L, q):.3g}]")
    gp = gamma_on_path(K, L, q, delta, cfg, obstacle)
    gm = gamma_on_path(K, L, q, -delta, cfg, obstacle)
    return (gp - gm) / (2.0 * delta)


def fd_derivative(K, L, q, cfg: AnnulusConfig, step: float = DEFAULT_STEP, richardson: bool = True,
                  obstacle: str = "covariant") -> float:
    """Central difference of ``Gamma`` along the path, optionally Richardson-extrapolated."""
    d1 = _central(K, L, q, cfg, step, obstacle)
    if not richardson:
        return d1
    d2 = _central(K, L, q, cfg, 0.5 * step, obstacle)
    if abs(d1 - d2) > RICHARDSON_WARN * max(abs(d1), abs(d2), 1e-300):
        warnings.warn(f"Richardson estimates disagree: {d1:.6g} vs {d2:.6g}", RuntimeWarning, stacklevel=2)
    return (4.0 * d2 - d1) / 3.0


def formula_derivative(K, L, q, cfg: AnnulusConfig) -> float:
    if q == 0:
        raise ValidationError("parameter-domain", "q must be nonzero")
    _check_grid(K, L)
    n = cfg.n
    integrand = L.h**q * K.h ** (1.0 - q) * pharmonic_density(K, cfg)
    return (n - cfg.p + 1.0) / q * float(integrand.sum() * K.grid.dtheta)


def _check_grid(K, L):
    if K.grid.M != L.grid.M:
        raise ValidationError("grid-mismatch", f"{K.grid.M} vs {L.grid.M}")


def verify_variation(K, L, q, cfg: AnnulusConfig, step: float = DEFAULT_STEP, richardson: bool = False,
                     tol: float = 0.02, K_id: str = "K", L_id: str = "L", obstacle: str = "covariant") -> VariationReport:
    fd = fd_derivative(K, L, q, cfg, step=step, richardson=richardson, obstacle=obstacle)
    fm = formula_derivative(K, L, q, cfg)
    rel = abs(fd - fm) / max(abs(fm), 1e-8)
    log.info("variation %s/%s p=%g q=%g: fd=%.6g formula=%.6g rel=%.3g", K_id, L_id, cfg.p, q, fd, fm, rel)
    return VariationReport(K_id, L_id, q, cfg.p, fd, fm, rel, step, richardson, tol)


def fd_order(K, L, q, cfg: AnnulusConfig, steps=(0.04, 0.02, 0.01), obstacle: str = "covariant") -> float:
    """Observed order of the central difference from successive differences at halved steps.

    Uses ``log2(|D(d) - D(d/2)| / |D(d/2) - D(d/4)|)``, which does not need the exact
    derivative. Steps should stay well above the solver noise floor.
    """
    a, b, c = (_central(K, L, q, cfg, d, obstacle) for d in steps)
    r = steps[0] / steps[1]
    return float(np.log(abs(a - b) / abs(b - c)) / np.log(r))


def homogeneity_slope(K: SupportFunction, cfg: AnnulusConfig, lambdas=(0.5, 0.75, 1.5, 2.0),
                      q: float | None = None) -> float:
    """Least-squares slope of ``log Gamma(lam K)`` (or of the total L_q mass) against ``log lam``."""
    vals = []
    for lam in lambdas:
        Kl = scale(K, lam)
        if q is None:
            vals.append(gamma(Kl, cfg))
        else:
            dens = Kl.h ** (1.0 - q) * pharmonic_density(Kl, cfg)
            vals.append(float(dens.sum() * Kl.grid.dtheta))
    slope, _ = np.polyfit(np.log(lambdas), np.log(vals), 1)
    return float(slope)


def self_consistency(K: SupportFunction, q: float, cfg: AnnulusConfig, step: float = DEFAULT_STEP):
    """(fd, formula, exact) for the ``L = K`` path, where ``Gamma(K^t) = (1+t)^((n-p+1)/q) Gamma(K)``."""
    exact = (cfg.n - cfg.p + 1.0) / q * gamma(K, cfg)
    return fd_derivative(K, K, q, cfg, step=step, richardson=False), formula_derivative(K, K, q, cfg), exact
