"""Invariant suites shared by ``pharmonic verify`` and the acceptance tests.

Each suite returns a list of :class:`Check` rows; a suite passes when all rows pass.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    DirectionGrid,
    area_and_centroid,
    inradius_at,
    regular_polygon,
    rounded_square,
    support_of_ball,
    support_of_ellipse,
    translate,
)
from .measure import gamma, integrate, lq_measure, measure_centroid, pharmonic_measure, solve_cached
from .pde import AnnulusConfig, radial_oracle
from .variation import homogeneity_slope

WEAK_FLOOR = 1e-9  # relative to the ball mass; integrals that vanish by symmetry sit at roundoff


@dataclass(frozen=True)
class Check:
    suite: str
    case: str
    value: float
    tol: float
    passed: bool

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.suite}: {self.case}: {self.value:.4g} (tol {self.tol:.4g})"


def test_bodies(grid: DirectionGrid) -> dict:
    return {
        "ball": support_of_ball(1.0, grid=grid),
        "ellipse(1.5,1)": support_of_ellipse(1.5, 1.0, grid),
        "ellipse(2,1)": support_of_ellipse(2.0, 1.0, grid),
        "rounded-square": rounded_square(grid),
        "translated-ellipse": translate(support_of_ellipse(1.5, 1.0, grid), (0.3, -0.2)),
    }


def radial_suite(grid: DirectionGrid, cfg: AnnulusConfig, ps=(1.5, 2.0, 2.5, 4.0), rho: float = 0.5,
                 tol_g: float = 0.01, tol_gamma: float = 0.015) -> list[Check]:
    B = support_of_ball(1.0, grid=grid)
    out = []
    for p in ps:
        c = replace(cfg, p=p).with_obstacle((0.0, 0.0), rho)
        _, g_exact = radial_oracle(1.0, rho, p)
        err = float(np.abs(solve_cached(B, c).boundary_gradient / g_exact - 1.0).max())
        out.append(Check("radial", f"p={p} max|g/g_exact-1|", err, tol_g, err <= tol_g))
        gerr = abs(gamma(B, c) / (2.0 * np.pi * g_exact ** (p - 1.0)) - 1.0)
        out.append(Check("radial", f"p={p} Gamma(B)", gerr, tol_gamma, gerr <= tol_gamma))
    return out


def centroid_suite(grid: DirectionGrid, cfg: AnnulusConfig, tol: float = 0.01) -> list[Check]:
    out = []
    for name, K in test_bodies(grid).items():
        m = pharmonic_measure(K, cfg)
        v = float(np.hypot(*measure_centroid(m)) / m.total_mass)
        out.append(Check("centroid", name, v, tol, v <= tol))
    return out


def translation_suite(grid: DirectionGrid, cfg: AnnulusConfig, seed: int = 0, tol: float = 0.02,
                      trials: int = 2) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for name, K in test_bodies(grid).items():
        _, c = area_and_centroid(K)
        r_in = inradius_at(K, c)
        g0 = gamma(K, cfg)
        for k in range(trials):
            ang = rng.uniform(0.0, 2.0 * np.pi)
            rad = 0.3 * r_in * (1.0 if k == 0 else rng.uniform(0.2, 1.0))
            x0 = rad * np.array([np.cos(ang), np.sin(ang)])
            v = abs(gamma(translate(K, x0), cfg) / g0 - 1.0)
            out.append(Check("translation", f"{name} |x0|={rad:.3f}", v, tol, v <= tol))
    return out


def homogeneity_suite(grid: DirectionGrid, cfg: AnnulusConfig, ps=(1.5, 2.0, 2.5), qs=(0.3, 0.5, 0.9),
                      tol: float = 0.05, body: str = "ellipse(1.5,1)") -> list[Check]:
    K = test_bodies(grid)[body]
    out = []
    for p in ps:
        c = replace(cfg, p=p)
        n = c.n
        s = homogeneity_slope(K, c)
        out.append(Check("homogeneity", f"p={p} Gamma slope-(n-p+1)", abs(s - (n - p + 1)), tol, abs(s - (n - p + 1)) <= tol))
        for q in qs:
            s = homogeneity_slope(K, c, q=q)
            e = abs(s - (n - p + 1 - q))
            out.append(Check("homogeneity", f"p={p} q={q} Lq-mass slope-(n-p+1-q)", e, tol, e <= tol))
    return out


def _monotone(errs, floor) -> bool:
    e = [0.0 if x <= floor else x for x in errs]
    return all(b < a or b == 0.0 for a, b in zip(e, e[1:]))


def weak_convergence_suite(grid: DirectionGrid, cfg: AnnulusConfig, ms=(8, 16, 32, 64), q: float = 0.5) -> list[Check]:
    B = support_of_ball(1.0, grid=grid)
    fs = {"1": np.ones(grid.M), "cos": np.cos(grid.angles), "cos2": np.cos(2 * grid.angles)}
    out = []
    for kind in ("mu", "mu_q"):
        ref = pharmonic_measure(B, cfg) if kind == "mu" else lq_measure(B, q, cfg)
        floor = WEAK_FLOOR * ref.total_mass
        meas = [pharmonic_measure(regular_polygon(m, grid), cfg) if kind == "mu"
                else lq_measure(regular_polygon(m, grid), q, cfg) for m in ms]
        for fname, f in fs.items():
            errs = [abs(integrate(mm, f) - integrate(ref, f)) for mm in meas]
            ok = _monotone(errs, floor)
            out.append(Check("weak-convergence", f"{kind} f={fname} errors {['%.2e' % e for e in errs]}", errs[-1], floor, ok))
    return out


def halfplane_bound(d, rho: float) -> np.ndarray:
    """Boundary gradient of the p = 2 capacitary potential of (halfplane minus disk).

    The disk has radius ``rho`` and its centre is at distance ``d`` from the line. In bipolar
    coordinates the potential is ``log(|z - P-| / |z - P+|) / log k`` with foci at distance
    ``a = sqrt(d^2 - rho^2)`` from the foot point, so on the line ``|grad v| <= 2 / (a log k)``.
    """
    d = np.asarray(d, dtype=float)
    a = np.sqrt(d * d - rho * rho)
    k = (d - rho + a) / (a - d + rho)
    return 2.0 / (a * np.log(k))


def gradient_bound_suite(grid: DirectionGrid, cfg: AnnulusConfig, r0: float = 1.0, R0: float = 2.0,
                         rho_factor: float = 0.4) -> list[Check]:
    """Uniform gradient bound for p = 2 with one obstacle shared by the whole family.

    A convex body lies in the halfplane of each supporting line, so by comparison its
    capacitary potential is below that of (halfplane minus obstacle) and both vanish at
    the contact point. Hence ``|grad u|`` at the point with normal ``xi`` is at most
    ``halfplane_bound(h(xi) - <c, xi>)``, and uniformly at most its maximum over
    ``d >= r0``.
    """
    rho = rho_factor * r0
    c = replace(cfg, p=2.0).with_obstacle((0.0, 0.0), rho)
    family = {
        "ball": support_of_ball(1.0, grid=grid),
        "ellipse(1.5,1)": support_of_ellipse(1.5, 1.0, grid),
        "ellipse(2,1)": support_of_ellipse(2.0, 1.0, grid),
        "rounded-square": rounded_square(grid),
        "square": regular_polygon(4, grid, circumradius=np.sqrt(2.0), phase=np.pi / 4),
        "hexagon": regular_polygon(6, grid, circumradius=2.0 / np.sqrt(3.0)),
    }
    Mbound = float(halfplane_bound(np.linspace(r0, R0, 2001), rho).max())
    out = []
    for name, K in family.items():
        g = solve_cached(K, c).boundary_gradient
        ratio = float((g / halfplane_bound(K.h, rho)).max())  # obstacle at the origin
        out.append(Check("gradient-bound", f"{name} max g / pointwise bound", ratio, 1.0, ratio <= 1.0))
        out.append(Check("gradient-bound", f"{name} max g / uniform M", float(g.max()) / Mbound, 1.0, g.max() <= Mbound))
    return out


SUITES = {
    "radial": radial_suite,
    "centroid": centroid_suite,
    "translation": translation_suite,
    "homogeneity": homogeneity_suite,
    "weak-convergence": weak_convergence_suite,
    "gradient-bound": gradient_bound_suite,
}
