"""Support-function calculus for planar convex bodies.

A body is stored as its support values on a uniform grid of unit directions
``xi_j = (cos theta_j, sin theta_j)``, ``theta_j = 2 pi j / M``. All bodies are
required to contain the origin in their interior, so support values are positive.

The finite-difference stencils used here are normalised so that they are exact on
the support functions of points, ``h(xi) = <x0, xi>``. This makes translation act
exactly on every derived quantity (boundary points shift by ``x0``, the curvature
density is unchanged).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from ._accel import njit
from .errors import ValidationError

MIN_GRID = 8
TOL_CONVEX = 1e-8


@dataclass(frozen=True)
class DirectionGrid:
    M: int

    def __post_init__(self):
        if int(self.M) != self.M or self.M < MIN_GRID:
            raise ValidationError("grid-too-coarse", f"need M >= {MIN_GRID}, got {self.M}")

    @cached_property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.M

    @cached_property
    def angles(self) -> np.ndarray:
        a = 2.0 * np.pi * np.arange(self.M) / self.M
        a.flags.writeable = False
        return a

    @cached_property
    def directions(self) -> np.ndarray:
        d = np.column_stack([np.cos(self.angles), np.sin(self.angles)])
        d.flags.writeable = False
        return d

    @cached_property
    def tangents(self) -> np.ndarray:
        """Unit vectors ``xi_j`` rotated by +90 degrees."""
        d = np.column_stack([-np.sin(self.angles), np.cos(self.angles)])
        d.flags.writeable = False
        return d


def make_grid(M: int) -> DirectionGrid:
    return DirectionGrid(int(M))


def _second_difference(h: np.ndarray, dtheta: float) -> np.ndarray:
    # exact for h = R + <x0, xi>: returns R
    c = np.cos(dtheta)
    return (np.roll(h, 1) + np.roll(h, -1) - 2.0 * c * h) / (2.0 * (1.0 - c))


@dataclass(frozen=True, eq=False)
class SupportFunction:
    """Positive support values of a convex body on ``grid``."""

    grid: DirectionGrid
    h: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.shape != (self.grid.M,):
            raise ValidationError("shape-mismatch", f"expected {self.grid.M} support values, got {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValidationError("non-finite-support")
        if np.any(h <= 0.0):
            raise ValidationError("origin-not-interior", f"min support value {h.min():.3g} <= 0")
        defect = _second_difference(h, self.grid.dtheta).min()
        if defect < -TOL_CONVEX * h.max():
            raise ValidationError("not-convex", f"curvature density {defect:.3g} below tolerance")
        h.flags.writeable = False
        object.__setattr__(self, "h", h)

    @property
    def M(self) -> int:
        return self.grid.M

    def __repr__(self) -> str:
        return f"SupportFunction(M={self.M}, h in [{self.h.min():.4g}, {self.h.max():.4g}])"


# -- constructors -----------------------------------------------------------


def support_of_ball(R: float, center=(0.0, 0.0), grid: DirectionGrid | None = None) -> SupportFunction:
    grid = grid or make_grid(256)
    c = np.asarray(center, dtype=float)
    if R <= 0 or R - np.hypot(*c) <= 0:
        raise ValidationError("origin-not-interior", f"ball R={R} center={tuple(c)} does not contain the origin")
    return SupportFunction(grid, R + grid.directions @ c)


def support_of_polygon(vertices, grid: DirectionGrid | None = None) -> SupportFunction:
    grid = grid or make_grid(256)
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise ValidationError("bad-polygon", "need at least 3 vertices as (x, y) pairs")
    h = (grid.directions @ v.T).max(axis=1)
    if np.any(h <= 1e-12 * np.abs(v).max()):
        raise ValidationError("origin-not-interior", "origin is not inside the convex hull of the vertices")
    return SupportFunction(grid, h)


def support_of_ellipse(a: float, b: float, grid: DirectionGrid | None = None) -> SupportFunction:
    grid = grid or make_grid(256)
    if a <= 0 or b <= 0:
        raise ValidationError("bad-ellipse", "semi-axes must be positive")
    th = grid.angles
    return SupportFunction(grid, np.sqrt((a * np.cos(th)) ** 2 + (b * np.sin(th)) ** 2))


def regular_polygon(m: int, grid: DirectionGrid | None = None, circumradius: float = 1.0, phase: float = 0.0):
    """Regular ``m``-gon with vertices on the circle of radius ``circumradius``."""
    ang = phase + 2.0 * np.pi * np.arange(m) / m
    return support_of_polygon(circumradius * np.column_stack([np.cos(ang), np.sin(ang)]), grid)


def rounded_square(grid: DirectionGrid | None = None, half_side: float = 1.0, smoothing: float = 0.15):
    """Square ``[-a, a]^2`` with its support function smoothed by a Gaussian in angle.

    Circular convolution with a positive kernel keeps ``h'' + h >= 0``, so the result
    is the support function of a smooth convex body (an average of rotated squares).
    The Wulff shape of the smoothed values is returned.
    """
    grid = grid or make_grid(256)
    th = grid.angles
    h = half_side * (np.abs(np.cos(th)) + np.abs(np.sin(th)))
    k = np.fft.rfftfreq(grid.M, d=1.0 / grid.M)
    h = np.fft.irfft(np.fft.rfft(h) * np.exp(-0.5 * (k * smoothing) ** 2), n=grid.M)
    # on coarse grids the sampled kernel can leave small concavities
    return wulff_shape(h, grid)


# -- differential quantities -----------------------------------------------


def support_derivative(K: SupportFunction) -> np.ndarray:
    """Centred difference ``h'(theta_j)``, exact for ``h = <x0, xi>``."""
    return (np.roll(K.h, -1) - np.roll(K.h, 1)) / (2.0 * np.sin(K.grid.dtheta))


def boundary_point(K: SupportFunction, j: int | None = None) -> np.ndarray:
    """Point of the boundary with outer normal ``xi_j``: ``grad h = h xi + h' xi_perp``.

    Returns a ``(2,)`` vector for a single index, or ``(M, 2)`` for ``j=None``.
    """
    pts = K.h[:, None] * K.grid.directions + support_derivative(K)[:, None] * K.grid.tangents
    return pts if j is None else pts[j % K.M]


def curvature_density(K: SupportFunction) -> np.ndarray:
    """Discrete ``h'' + h`` (radius of curvature as a function of the normal)."""
    s = _second_difference(K.h, K.grid.dtheta)
    tol = TOL_CONVEX * K.h.max()
    if s.min() < -tol:
        raise ValidationError("not-convex", f"curvature density {s.min():.3g} below tolerance")
    return np.maximum(s, 0.0)


def perimeter(K: SupportFunction) -> float:
    return float(curvature_density(K).sum() * K.grid.dtheta)


# -- Wulff shapes ------------------------------------------------------------


@njit
def _dual_hull(px, py, start, tol):
    # Graham scan over points already sorted by angle about an interior point,
    # starting at a known hull vertex; returns hull indices in angular order.
    m = px.shape[0]
    stack = np.empty(m + 1, dtype=np.int64)
    top = 0
    for step in range(m + 1):
        k = (start + step) % m
        while top >= 2:
            a = stack[top - 2]
            b = stack[top - 1]
            cross = (px[b] - px[a]) * (py[k] - py[a]) - (py[b] - py[a]) * (px[k] - px[a])
            if cross <= tol:
                top -= 1
            else:
                break
        stack[top] = k
        top += 1
    # last entry repeats the start vertex
    return stack[: top - 1].copy()


def _active_constraints(f: np.ndarray, grid: DirectionGrid) -> np.ndarray:
    p = grid.directions / f[:, None]
    r2 = (p**2).sum(axis=1)
    start = int(np.argmax(r2))
    return _dual_hull(p[:, 0].copy(), p[:, 1].copy(), start, 1e-13 * float(r2.max()))


def wulff_vertices(f, grid: DirectionGrid) -> tuple[np.ndarray, np.ndarray]:
    """Vertices of the polygon ``{x : <x, xi_j> <= f_j}`` and the active constraint indices.

    The constraint ``j`` is non-redundant exactly when ``xi_j / f_j`` is a vertex of the
    convex hull of all the dual points, so the hull pass discards the rest and
    consecutive active lines are intersected.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (grid.M,):
        raise ValidationError("shape-mismatch", f"expected {grid.M} values")
    if not np.all(np.isfinite(f)) or np.any(f <= 0.0):
        raise ValidationError("degenerate-wulff", "Wulff data must be strictly positive")
    act = np.sort(_active_constraints(f, grid))
    if len(act) < 3:
        raise ValidationError("degenerate-wulff", "fewer than three active halfplanes")
    a, b = act, np.roll(act, -1)
    da, db = grid.directions[a], grid.directions[b]
    det = da[:, 0] * db[:, 1] - da[:, 1] * db[:, 0]
    if np.any(det <= 0):
        raise ValidationError("degenerate-wulff", "consecutive active normals are not in convex position")
    vx = (f[a] * db[:, 1] - f[b] * da[:, 1]) / det
    vy = (da[:, 0] * f[b] - db[:, 0] * f[a]) / det
    return np.column_stack([vx, vy]), act


def wulff_shape(f, grid: DirectionGrid) -> SupportFunction:
    """Support function of the Wulff shape of the positive grid function ``f``."""
    verts, act = wulff_vertices(f, grid)
    h = (grid.directions @ verts.T).max(axis=1)
    h = np.minimum(h, np.asarray(f, dtype=float))
    h[act] = np.asarray(f, dtype=float)[act]
    return SupportFunction(grid, h)


def q_sum(K: SupportFunction, L: SupportFunction, q: float, t: float) -> SupportFunction:
    """Wulff shape of ``(h_K^q + t h_L^q)^{1/q}``."""
    _same_grid(K, L)
    if q <= 0:
        raise ValidationError("invalid-qsum", "q must be positive")
    base = K.h**q + t * L.h**q
    if np.any(base <= 0):
        raise ValidationError("invalid-qsum", f"h_K^q + t h_L^q is not positive for t={t}")
    return wulff_shape(base ** (1.0 / q), K.grid)


# -- metric and affine operations ------------------------------------------


def _same_grid(K: SupportFunction, L: SupportFunction):
    if K.grid != L.grid:
        raise ValidationError("grid-mismatch", f"M={K.M} vs M={L.M}")


def hausdorff(K: SupportFunction, L: SupportFunction) -> float:
    _same_grid(K, L)
    return float(np.abs(K.h - L.h).max())


def translate(K: SupportFunction, x0) -> SupportFunction:
    return SupportFunction(K.grid, K.h + K.grid.directions @ np.asarray(x0, dtype=float))


def scale(K: SupportFunction, lam: float) -> SupportFunction:
    if not lam > 0:
        raise ValidationError("bad-scale", f"scale factor must be positive, got {lam}")
    return SupportFunction(K.grid, lam * K.h)


def radial_function(K: SupportFunction, phi, center=(0.0, 0.0)):
    """Distance from ``center`` to the boundary along the ray at angle ``phi``.

    Uses ``min_j (h_j - <c, xi_j>) / <xi_j, e>`` over directions with ``<xi_j, e> > 0``,
    i.e. the exact ray/polygon intersection for the grid body.
    """
    c = np.asarray(center, dtype=float)
    phi_arr = np.atleast_1d(np.asarray(phi, dtype=float))
    e = np.column_stack([np.cos(phi_arr), np.sin(phi_arr)])
    gap = K.h - K.grid.directions @ c
    if np.any(gap <= 0):
        raise ValidationError("origin-not-interior", "center is not interior to the body")
    den = e @ K.grid.directions.T
    with np.errstate(divide="ignore"):
        ratio = np.where(den > 1e-12, gap[None, :] / np.where(den > 1e-12, den, 1.0), np.inf)
    r = ratio.min(axis=1)
    return float(r[0]) if np.ndim(phi) == 0 else r


def area_and_centroid(K: SupportFunction) -> tuple[float, np.ndarray]:
    """Area and centroid of the grid polygon of ``K``."""
    v, _ = wulff_vertices(K.h, K.grid)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    A = 0.5 * cr.sum()
    cx = ((x + xn) * cr).sum() / (6.0 * A)
    cy = ((y + yn) * cr).sum() / (6.0 * A)
    return float(A), np.array([cx, cy])


def inradius_at(K: SupportFunction, center) -> float:
    """Distance from an interior point to the boundary."""
    return float((K.h - K.grid.directions @ np.asarray(center, dtype=float)).min())


def support_function_from_json(data: dict) -> SupportFunction:
    """Parse ``{"grid_size": M, "support": [...]}`` or ``{"vertices": [[x, y], ...]}``."""
    if not isinstance(data, dict):
        raise ValidationError("bad-body-file", "body file must hold a JSON object")
    M = data.get("grid_size")
    if M is not None and (not isinstance(M, int) or isinstance(M, bool)):
        raise ValidationError("bad-body-file", "key 'grid_size' must be an integer")
    if "support" in data:
        try:
            h = np.asarray(data["support"], dtype=float)
        except (TypeError, ValueError):
            raise ValidationError("bad-body-file", "key 'support' must be a list of numbers") from None
        if h.ndim != 1 or (M is not None and len(h) != M):
            raise ValidationError("bad-body-file", f"key 'support' must hold grid_size={M} numbers")
        return SupportFunction(make_grid(len(h)), h)
    if "vertices" in data:
        try:
            v = np.asarray(data["vertices"], dtype=float)
        except (TypeError, ValueError):
            raise ValidationError("bad-body-file", "key 'vertices' must be a list of [x, y] pairs") from None
        return support_of_polygon(v, make_grid(256 if M is None else M))
    raise ValidationError("bad-body-file", "expected key 'support' or 'vertices'")


def support_function_to_json(K: SupportFunction) -> dict:
    return {"grid_size": K.M, "support": [float(x) for x in K.h]}


def directions_of(angles: Sequence[float]) -> np.ndarray:
    a = np.asarray(angles, dtype=float)
    return np.column_stack([np.cos(a), np.sin(a)])
