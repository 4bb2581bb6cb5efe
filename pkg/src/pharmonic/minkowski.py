"""L_q Minkowski problem for the p-harmonic measure: find ``Omega`` and ``c`` with
``mu = c * mu_{Omega,q}`` for ``0 < q < 1`` and ``1 < p != n + 1``.

The body is obtained from the extremal problem

    minimise  max_zeta  int (h_Q - <zeta, xi>)^q d mu   subject to  Gamma(Q) = Gamma(B),

where ``B`` is the unit ball. Bodies are always stored with the inner maximiser moved
to the origin, so the objective reduces to ``int h^q d mu``.

The outer iteration is a damped fixed point on the curvature density. The target
identity reads ``mu = c h^(1-q) |grad u|^(p-1) (h'' + h)``; freezing ``h`` and
``|grad u|`` on the right gives a new curvature density, hence a new body through
``h'' + h = s``. Every trial is convexified, centred and Gamma-normalised.

On a discrete grid the identity and the minimiser of the extremal problem need not
coincide, so two acceptance rules are offered: monotone objective (``"descent"``) or
monotone stationarity residual (``"fixed-point"``, the default).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConvergenceError, ValidationError
from .geometry import (
    SupportFunction,
    curvature_density,
    make_grid,
    scale,
    support_of_ball,
    translate,
    wulff_shape,
)
from .measure import SphericalMeasure, gamma, lq_measure, solve_cached
from .pde import AnnulusConfig

log = logging.getLogger(__name__)

SPREAD_FLOOR = 1e-9
LINE_SEARCH_TOL = 1e-12
NORM_EXACT = 1e-9  # below this no corrective rescale is attempted


@dataclass(frozen=True)
class SolverOptions:
    tol_solve: float = 0.05
    tol_center: float = 1e-10
    tol_norm: float = 0.01
    max_outer: int = 60
    max_center_iters: int = 100
    damping: float = 1.0
    min_damping: float = 1.0 / 64
    method: str = "fixed-point"

    def __post_init__(self):
        for name in ("tol_solve", "tol_center", "tol_norm", "damping", "min_damping"):
            if not getattr(self, name) > 0:
                raise ValidationError("bad-tolerance", f"{name} must be positive")
        if self.min_damping > self.damping:
            raise ValidationError("bad-tolerance", "min_damping exceeds damping")
        if self.method not in ("fixed-point", "descent"):
            raise ValidationError("bad-method", self.method)
        if self.max_outer < 1 or self.max_center_iters < 1:
            raise ValidationError("bad-tolerance", "iteration caps must be positive")


@dataclass
class SolverState:
    Q: SupportFunction
    zeta: np.ndarray
    objective: float
    residual: float
    iter: int


@dataclass
class MinkowskiSolution:
    omega: SupportFunction
    c: float
    residual: float
    iterations: int
    converged: bool
    rescaled_to_unit: bool = False
    c_fit: float = float("nan")
    diagnostics: list = field(default_factory=list)

    @property
    def objective_trace(self) -> list[float]:
        return [row["objective"] for row in self.diagnostics]


# -- target measures ----------------------------------------------------------


def check_spread(mu: SphericalMeasure, probes: int | None = None) -> float:
    """Smallest one-sided first moment ``int max(<xi, v>, 0) d mu`` over probe directions ``v``."""
    grid = mu.grid
    k = 4 * grid.M if probes is None else int(probes)
    ang = 2.0 * np.pi * np.arange(k) / k
    v = np.column_stack([np.cos(ang), np.sin(ang)])
    w = mu.density * grid.dtheta
    return float((np.maximum(v @ grid.directions.T, 0.0) @ w).min())


def require_spread(mu: SphericalMeasure) -> float:
    margin = check_spread(mu)
    if margin <= SPREAD_FLOOR * max(mu.total_mass, 1e-300):
        raise ValidationError("hemisphere-concentrated", f"target is concentrated on a closed half-circle (margin {margin:.3g})")
    return margin


def synth_target(omega_star: SupportFunction, p: float, q: float, cfg: AnnulusConfig) -> SphericalMeasure:
    """Unit-mass L_q p-harmonic measure of ``omega_star``."""
    m = lq_measure(omega_star, q, replace(cfg, p=p))
    return SphericalMeasure(m.grid, m.density / m.total_mass, "target", {"p": p, "q": q})


# -- inner problem ------------------------------------------------------------


def _bases(Q: SupportFunction, zeta) -> np.ndarray:
    return Q.h - Q.grid.directions @ np.asarray(zeta, dtype=float)


def phi(Q: SupportFunction, zeta, mu: SphericalMeasure, q: float) -> float:
    b = _bases(Q, zeta)
    if b.min() <= 0:
        raise ValidationError("zeta-not-interior", "zeta is not interior to Q")
    return float((b**q * mu.density).sum() * mu.grid.dtheta)


def optimal_center(Q: SupportFunction, mu: SphericalMeasure, q: float, tol: float = 1e-10,
                   max_iters: int = 100, zeta0=None) -> np.ndarray:
    """Maximiser of the strictly concave ``zeta -> phi(Q, zeta)`` by damped Newton ascent."""
    xi = mu.grid.directions
    w = mu.density * mu.grid.dtheta
    scale_ = tol * max(mu.total_mass, 1e-300)
    zeta = np.zeros(2) if zeta0 is None else np.array(zeta0, dtype=float)
    b = _bases(Q, zeta)
    if b.min() <= 0:
        raise ValidationError("zeta-not-interior", "starting point is not interior to Q")
    val = float((b**q * w).sum())
    for _ in range(max_iters):
        grad = -q * (b ** (q - 1.0) * w) @ xi
        if np.hypot(*grad) <= scale_:
            return zeta
        H = q * (q - 1.0) * (xi.T * (b ** (q - 2.0) * w)) @ xi
        try:
            step = -np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = grad
        t = 1.0
        while True:
            trial = zeta + t * step
            bt = _bases(Q, trial)
            if bt.min() > 0:
                vt = float((bt**q * w).sum())
                if vt >= val:
                    break
            t *= 0.5
            if t < 1e-14:
                return zeta  # no representable ascent left
        zeta, b, val = trial, bt, vt
    raise ConvergenceError("center-no-convergence", f"inner maximiser not found in {max_iters} steps")


def objective(Q: SupportFunction, mu: SphericalMeasure, q: float, cfg: AnnulusConfig | None = None) -> float:
    return phi(Q, optimal_center(Q, mu, q), mu, q)


# -- constraint ---------------------------------------------------------------


def gamma_of_ball(cfg: AnnulusConfig, M: int) -> float:
    return gamma(support_of_ball(1.0, grid=make_grid(M)), cfg)


def normalize_gamma(Q: SupportFunction, cfg: AnnulusConfig, tol_norm: float = 0.01) -> SupportFunction:
    """Rescale ``Q`` so that ``Gamma(Q) = Gamma(B)``, with one corrective rescale if needed."""
    deg = cfg.n - cfg.p + 1.0
    if deg == 0:
        raise ValidationError("normalization-undefined", "Gamma is scale invariant at p = n + 1")
    target = gamma_of_ball(cfg, Q.M)
    g = gamma(Q, cfg)
    for corrective in (False, True):
        if not g > 0:
            raise ValidationError("degenerate-body", f"Gamma(Q) = {g:.3g}")
        Q = scale(Q, (target / g) ** (1.0 / deg))
        g = gamma(Q, cfg)
        if abs(g / target - 1.0) <= NORM_EXACT:
            break
    if abs(g / target - 1.0) > tol_norm:
        raise ConvergenceError("normalization-drift", f"Gamma off by {g / target - 1.0:.3g} after rescale")
    return Q


# -- certificate --------------------------------------------------------------


def _box3(x: np.ndarray) -> np.ndarray:
    return (np.roll(x, 1) + x + np.roll(x, -1)) / 3.0


def stationarity_residual(omega: SupportFunction, c: float, mu: SphericalMeasure, q: float, cfg: AnnulusConfig) -> float:
    """Relative sup-norm of ``mu - c mu_{omega,q}`` after a 3-cell box filter."""
    a = _box3(mu.density)
    b = _box3(c * lq_measure(omega, q, cfg).density)
    return float(np.abs(a - b).max() / a.max())


def constant_of(omega: SupportFunction, mu: SphericalMeasure, q: float, cfg: AnnulusConfig) -> float:
    """``c = int h_omega^q d mu / Gamma(B)``."""
    return float((omega.h**q * mu.density).sum() * mu.grid.dtheta) / gamma_of_ball(cfg, omega.M)


def rescale_to_unit_constant(omega: SupportFunction, c: float, p: float, q: float, n: int = 2) -> SupportFunction:
    deg = n - p + 1.0 - q
    if abs(deg) < 1e-12:
        raise ValidationError("rescale-undefined", "mu_{., q} is scale invariant at p = n + 1 - q")
    if not c > 0:
        raise ValidationError("parameter-domain", "c must be positive")
    return scale(omega, c ** (1.0 / deg))


# -- outer solver -------------------------------------------------------------


def _step_direction(ds: np.ndarray, dtheta: float, p: float, q: float) -> np.ndarray:
    """Support-function update for a curvature-density change ``ds``.

    Inverts the discrete ``h'' + h`` (same stencil as ``curvature_density``; its kernel is
    the first harmonics, i.e. translations, which are dropped) and then shrinks mode ``k``
    by ``(k^2 - 1) / (k^2 - 1 + (p - 1)|k| + 1 - q)``. That factor is the linearised
    response of the fixed point about a disk, where the boundary gradient reacts to a
    mode-``k`` perturbation roughly like ``|k|``; without it the plain fixed point is
    unstable for ``p`` above about 2.
    """
    M = len(ds)
    k = np.abs(np.fft.fftfreq(M, d=1.0 / M))
    sym = (np.cos(k * dtheta) - np.cos(dtheta)) / (1.0 - np.cos(dtheta))
    D = np.fft.fft(ds)
    out = np.zeros_like(D)
    keep = ~np.isclose(k, 1.0)
    k2 = k[keep] ** 2 - 1.0
    out[keep] = D[keep] / sym[keep] * k2 / (k2 + (p - 1.0) * k[keep] + 1.0 - q)
    return np.fft.ifft(out).real


def _project(h: np.ndarray, grid, mu, q, cfg, opts) -> SupportFunction:
    """Convexify, centre and Gamma-normalise a trial support vector.

    Centring first is enough: ``zeta(lam Q) = lam zeta(Q)``, so the rescaled body stays
    centred.
    """
    Q = wulff_shape(h, grid)
    zeta = optimal_center(Q, mu, q, tol=opts.tol_center, max_iters=opts.max_center_iters)
    return normalize_gamma(translate(Q, -zeta), cfg, opts.tol_norm)


def _fixed_point_density(Q: SupportFunction, mu: SphericalMeasure, q: float, c: float, cfg: AnnulusConfig) -> np.ndarray:
    g = solve_cached(Q, cfg).boundary_gradient
    return mu.density / (c * Q.h ** (1.0 - q) * g ** (cfg.p - 1.0))


def _evaluate(Q, mu, q, cfg, gB):
    J = phi(Q, np.zeros(2), mu, q)
    return J, stationarity_residual(Q, J / gB, mu, q, cfg)


def solve(mu: SphericalMeasure, p: float, q: float, cfg: AnnulusConfig, opts: SolverOptions | None = None,
          initial: SupportFunction | None = None, raise_on_failure: bool = False) -> MinkowskiSolution:
    """Solve ``mu = c mu_{Omega,q}``; see the module docstring for the iteration.

    With ``opts.method == "descent"`` a step is accepted only if the objective does not
    increase; with ``"fixed-point"`` (default) only if the stationarity residual drops.
    """
    opts = opts or SolverOptions()
    n = cfg.n
    if not 0.0 < q < 1.0:
        raise ValidationError("parameter-domain", f"q must lie in (0, 1), got {q}")
    if not p > 1.0 or p == n + 1:
        raise ValidationError("parameter-domain", f"p must satisfy 1 < p != {n + 1}, got {p}")
    cfg = replace(cfg, p=float(p))
    require_spread(mu)
    grid = mu.grid
    descent = opts.method == "descent"

    Q0 = support_of_ball(1.0, grid=grid) if initial is None else initial
    Q = _project(Q0.h, grid, mu, q, cfg, opts)
    gB = gamma_of_ball(cfg, grid.M)
    J, res = _evaluate(Q, mu, q, cfg, gB)
    diagnostics = []
    w_last = opts.damping
    converged = False
    it = 0
    while True:
        diagnostics.append({"iter": it, "objective": J, "residual": res, "gamma": gamma(Q, cfg), "damping": w_last})
        log.info("outer %d: objective=%.10g residual=%.3g", it, J, res)
        if res <= opts.tol_solve:
            converged = True
            break
        if it >= opts.max_outer:
            break
        it += 1
        s_new = _fixed_point_density(Q, mu, q, J / gB, cfg)
        dh = _step_direction(s_new - curvature_density(Q), grid.dtheta, cfg.p, q)
        w = min(opts.damping, 2.0 * w_last)
        step = None
        while w >= opts.min_damping:
            h_trial = Q.h + w * dh
            if h_trial.min() > 0:
                try:
                    Qt = _project(h_trial, grid, mu, q, cfg, opts)
                except ValidationError:
                    Qt = None
                if Qt is not None:
                    Jt, rt = _evaluate(Qt, mu, q, cfg, gB)
                    ok = Jt <= J + LINE_SEARCH_TOL * abs(J) if descent else rt < res
                    if ok:
                        step = (Qt, Jt, rt)
                        break
            w *= 0.5
        if step is None:
            log.info("outer %d: no admissible step, stopping", it)
            break
        (Q, J, res), w_last = step, w

    lq = lq_measure(Q, q, cfg)
    sol = MinkowskiSolution(
        omega=Q,
        c=J / gB,
        residual=res,
        iterations=it,
        converged=converged,
        c_fit=mu.total_mass / lq.total_mass,
        diagnostics=diagnostics,
    )
    if not converged and raise_on_failure:
        raise ConvergenceError("no-convergence", f"residual {res:.3g} after {it} iterations", info=sol)
    return sol


def rescaled_solution(sol: MinkowskiSolution, mu: SphericalMeasure, p: float, q: float, cfg: AnnulusConfig) -> MinkowskiSolution:
    """Same solution scaled so that the constant becomes 1, with its residual recomputed."""
    cfg = replace(cfg, p=float(p))
    omega = rescale_to_unit_constant(sol.omega, sol.c, p, q, cfg.n)
    res = stationarity_residual(omega, 1.0, mu, q, cfg)
    return replace(sol, omega=omega, c=1.0, residual=res, rescaled_to_unit=True)
