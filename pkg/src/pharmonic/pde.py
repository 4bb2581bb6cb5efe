"""Capacitary p-Laplace problem on the annulus between an obstacle disk and a body.

The body ``K`` is meshed by rays from the obstacle centre ``c``: node ``(i, j)`` sits at
``c + ((1 - s_i) rho + s_i R(theta_j)) e(theta_j)`` with ``R`` the radial function of
``K - c``. The equation ``div((|grad u|^2 + eps^2 G^2)^((p-2)/2) grad u) = 0`` is
discretised with bilinear quadrilaterals (2x2 Gauss) and solved with ``u = 1`` on the
obstacle circle and ``u = 0`` on the boundary of ``K``.

When no obstacle is given it is placed at the area centroid of ``K`` with radius
``rho_factor * sqrt(area / pi)`` (capped at ``0.6`` times the distance from the
centroid to the boundary). That choice is
equivariant under translations and dilations of ``K``, so the whole configuration
moves with the body.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicSpline

from . import kernels
from .errors import ConvergenceError, ValidationError
from .geometry import SupportFunction, area_and_centroid, boundary_point, radial_function

log = logging.getLogger(__name__)

MAX_RHO_FRACTION = 0.6

_GP = 1.0 / np.sqrt(3.0)
_QPTS = np.array([[-_GP, -_GP], [_GP, -_GP], [_GP, _GP], [-_GP, _GP]])
# local node order: (i, j), (i+1, j), (i+1, j+1), (i, j+1); xi runs along s, eta along theta
_REF = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


@dataclass(frozen=True)
class AnnulusConfig:
    p: float = 2.0
    Ns: int = 64
    Ntheta: int = 256
    rho: float | None = None
    rho_factor: float = 0.4
    obstacle_center: tuple | None = None
    clearance_min: float | None = None
    clearance_factor: float = 0.1
    epsilon_reg: float = 1e-6
    picard_tol: float = 1e-8
    max_iters: int = 200
    method: str = "newton"
    n: int = 2

    def __post_init__(self):
        if not self.p > 1.0:
            raise ValidationError("parameter-domain", f"p must exceed 1, got {self.p}")
        if self.Ns < 4 or self.Ntheta < 8:
            raise ValidationError("mesh-too-coarse", f"Ns={self.Ns}, Ntheta={self.Ntheta}")
        if not self.epsilon_reg > 0 or not self.picard_tol > 0:
            raise ValidationError("bad-tolerance", "epsilon_reg and picard_tol must be positive")
        if self.method not in ("newton", "picard"):
            raise ValidationError("bad-method", self.method)
        if self.n != 2:
            raise ValidationError("dimension", "only n = 2 is implemented")

    def with_obstacle(self, center, rho) -> "AnnulusConfig":
        return replace(self, obstacle_center=tuple(float(x) for x in center), rho=float(rho))


def obstacle_for(K: SupportFunction, cfg: AnnulusConfig) -> tuple[np.ndarray, float, float]:
    """Obstacle centre, radius and required clearance for ``K``."""
    if cfg.obstacle_center is None:
        _, c = area_and_centroid(K)
    else:
        c = np.asarray(cfg.obstacle_center, dtype=float)
    gap = K.h - K.grid.directions @ c
    if gap.min() <= 0:
        raise ValidationError("obstacle-clearance", "obstacle centre is not inside the body")
    r_in = float(gap.min())
    if cfg.rho is None:
        # area-equivalent radius: smooth in h, unlike the inradius
        area, _ = area_and_centroid(K)
        rho = min(cfg.rho_factor * np.sqrt(area / np.pi), MAX_RHO_FRACTION * r_in)
    else:
        rho = float(cfg.rho)
    clearance = cfg.clearance_factor * r_in if cfg.clearance_min is None else float(cfg.clearance_min)
    if rho <= 0 or r_in - rho < clearance:
        raise ValidationError(
            "obstacle-clearance", f"obstacle radius {rho:.4g} leaves {r_in - rho:.4g} < {clearance:.4g}"
        )
    return c, rho, clearance


@dataclass(frozen=True, eq=False)
class AnnulusMesh:
    center: np.ndarray
    rho: float
    s: np.ndarray  # (Ns+1,)
    theta: np.ndarray  # (Ntheta,)
    outer: np.ndarray  # radial function of K - c at theta
    body: SupportFunction = field(repr=False)

    @property
    def Ns(self) -> int:
        return len(self.s) - 1

    @property
    def Ntheta(self) -> int:
        return len(self.theta)

    @cached_property
    def radii(self) -> np.ndarray:
        return (1.0 - self.s)[:, None] * self.rho + self.s[:, None] * self.outer[None, :]

    @cached_property
    def nodes(self) -> np.ndarray:
        e = np.column_stack([np.cos(self.theta), np.sin(self.theta)])
        return self.center + self.radii[:, :, None] * e[None, :, :]

    @cached_property
    def conn(self) -> np.ndarray:
        Ns, Nt = self.Ns, self.Ntheta
        i, j = np.meshgrid(np.arange(Ns), np.arange(Nt), indexing="ij")
        jp = (j + 1) % Nt
        c = np.stack([i * Nt + j, (i + 1) * Nt + j, (i + 1) * Nt + jp, i * Nt + jp], axis=-1)
        return c.reshape(-1, 4).astype(np.int64)

    @cached_property
    def _quadrature(self):
        xy = self.nodes.reshape(-1, 2)[self.conn]  # (E, 4, 2)
        xi, eta = _QPTS[:, 0], _QPTS[:, 1]
        dN_dxi = 0.25 * _REF[None, :, 0] * (1.0 + eta[:, None] * _REF[None, :, 1])  # (Q, 4)
        dN_deta = 0.25 * _REF[None, :, 1] * (1.0 + xi[:, None] * _REF[None, :, 0])
        J11 = np.einsum("qa,ea->eq", dN_dxi, xy[:, :, 0])
        J12 = np.einsum("qa,ea->eq", dN_dxi, xy[:, :, 1])
        J21 = np.einsum("qa,ea->eq", dN_deta, xy[:, :, 0])
        J22 = np.einsum("qa,ea->eq", dN_deta, xy[:, :, 1])
        det = J11 * J22 - J12 * J21
        if det.min() <= 0:
            raise ValidationError("mesh-degenerate", "non-positive cell Jacobian")
        # inverse-transpose applied to reference gradients
        Gx = (J22[:, :, None] * dN_dxi[None] - J12[:, :, None] * dN_deta[None]) / det[:, :, None]
        Gy = (-J21[:, :, None] * dN_dxi[None] + J11[:, :, None] * dN_deta[None]) / det[:, :, None]
        return np.ascontiguousarray(Gx), np.ascontiguousarray(Gy), np.ascontiguousarray(det)

    @cached_property
    def cell_areas(self) -> np.ndarray:
        return self._quadrature[2].sum(axis=1)

    @cached_property
    def _pattern(self):
        Ns, Nt = self.Ns, self.Ntheta
        nfree = (Ns - 1) * Nt
        free = np.full((Ns + 1) * Nt, -1, dtype=np.int64)
        free[Nt : Ns * Nt] = np.arange(nfree)
        fc = free[self.conn]  # (E, 4)
        rows = np.broadcast_to(fc[:, :, None], fc.shape + (4,))
        cols = np.broadcast_to(fc[:, None, :], fc.shape + (4,))
        ok = (rows >= 0) & (cols >= 0)
        key = rows.astype(np.int64) * nfree + cols
        uniq, inv = np.unique(key[ok], return_inverse=True)
        nnz = len(uniq)
        pos = np.full(key.shape, nnz, dtype=np.int64)
        pos[ok] = inv
        return pos, uniq // nfree, uniq % nfree, nnz, nfree

    @property
    def thickness(self) -> float:
        return float((self.outer - self.rho).mean())


def build_mesh(K: SupportFunction, cfg: AnnulusConfig) -> AnnulusMesh:
    c, rho, _ = obstacle_for(K, cfg)
    theta = 2.0 * np.pi * np.arange(cfg.Ntheta) / cfg.Ntheta
    outer = radial_function(K, theta, center=c)
    s = np.linspace(0.0, 1.0, cfg.Ns + 1)
    return AnnulusMesh(center=c, rho=rho, s=s, theta=theta, outer=np.asarray(outer), body=K)


@dataclass(eq=False)
class PHarmonicSolution:
    u: np.ndarray  # (Ns+1, Ntheta)
    residual: float
    iterations: int
    mesh: AnnulusMesh
    ray_gradient: np.ndarray  # |grad u| at the outer node of each ray
    boundary_gradient: np.ndarray  # |grad u| at grad h_K(xi_j), j over the direction grid
    p: float


def _dirichlet(mesh: AnnulusMesh) -> np.ndarray:
    u = np.zeros((mesh.Ns + 1, mesh.Ntheta))
    u[0] = 1.0
    return u


def _initial_guess(mesh: AnnulusMesh) -> np.ndarray:
    # harmonic profile along each ray, exact for the concentric disk with p = 2
    r = mesh.radii
    return np.log(mesh.outer[None, :] / r) / np.log(mesh.outer[None, :] / mesh.rho)


def solve_plaplace(mesh: AnnulusMesh, cfg: AnnulusConfig, u0: np.ndarray | None = None) -> PHarmonicSolution:
    """Newton (or Picard) iteration with an energy line search.

    The regularised problem minimises the convex energy
    ``(1/p) int (|grad u|^2 + eps^2)^(p/2)``, so every Newton/Picard direction is a
    descent direction and backtracking on the energy globalises both.
    """
    p = float(cfg.p)
    Gx, Gy, W = mesh._quadrature
    pos, rows, cols, nnz, nfree = mesh._pattern
    conn = mesh.conn
    eps2 = (cfg.epsilon_reg / mesh.thickness) ** 2
    newton = cfg.method == "newton"

    u = _initial_guess(mesh) if u0 is None else np.array(u0, dtype=float).reshape(mesh.Ns + 1, mesh.Ntheta)
    u[0], u[-1] = 1.0, 0.0
    u = u.ravel()
    Nt = mesh.Ntheta
    fr = slice(Nt, mesh.Ns * Nt)
    E0 = kernels.energy(u, conn, Gx, Gy, W, p, eps2)
    res_norm = np.inf
    for it in range(1, cfg.max_iters + 1):
        res, data = kernels.assemble(u, conn, Gx, Gy, W, p, eps2, newton, pos, nnz)
        A = sp.csc_matrix((data, (rows, cols)), shape=(nfree, nfree))
        r = res[fr]
        res_norm = float(np.abs(r).max())
        try:
            du = spla.spsolve(A, -r)
        except RuntimeError as exc:  # singular factor
            raise ValidationError("mesh-degenerate", str(exc)) from exc
        if not np.all(np.isfinite(du)):
            raise ValidationError("mesh-degenerate", "linear solve produced non-finite values")
        slope = float(r @ du)
        alpha = 1.0
        while True:
            trial = u.copy()
            trial[fr] += alpha * du
            E1 = kernels.energy(trial, conn, Gx, Gy, W, p, eps2)
            if E1 <= E0 + 1e-4 * alpha * slope or alpha < 1e-6:
                break
            alpha *= 0.5
        u, E0 = trial, E1
        step = alpha * float(np.abs(du).max())
        if step <= cfg.picard_tol * float(np.abs(u).max()):
            break
    else:
        raise ConvergenceError(
            "no-convergence", f"p-Laplace iteration stalled after {cfg.max_iters} steps (residual {res_norm:.3g})"
        )
    U = u.reshape(mesh.Ns + 1, Nt)
    ray_g = _ray_gradient(U, mesh)
    g = _gradient_at_normals(ray_g, mesh)
    return PHarmonicSolution(u=U, residual=res_norm, iterations=it, mesh=mesh, ray_gradient=ray_g, boundary_gradient=g, p=p)


def _ray_gradient(U: np.ndarray, mesh: AnnulusMesh) -> np.ndarray:
    # one-sided second-order difference along each ray, u = 0 on the boundary;
    # du/dr = -|grad u| <nu, e_r>, <nu, e_r> = R / sqrt(R^2 + R'^2)
    R = mesh.outer
    dr = (R - mesh.rho) / mesh.Ns
    dudr = (3.0 * U[-1] - 4.0 * U[-2] + U[-3]) / (2.0 * dr)
    dth = 2.0 * np.pi / mesh.Ntheta
    Rp = (np.roll(R, -1) - np.roll(R, 1)) / (2.0 * dth)
    cos_nr = R / np.hypot(R, Rp)
    return -dudr / cos_nr


def _periodic_spline(theta: np.ndarray, values: np.ndarray) -> CubicSpline:
    x = np.append(theta, 2.0 * np.pi)
    y = np.append(values, values[0])
    return CubicSpline(x, y, bc_type="periodic")


def _gradient_at_normals(ray_g: np.ndarray, mesh: AnnulusMesh) -> np.ndarray:
    K = mesh.body
    x = boundary_point(K) - mesh.center
    phi = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2.0 * np.pi)
    R_here = _periodic_spline(mesh.theta, mesh.outer)(phi)
    dist = np.hypot(x[:, 0], x[:, 1])
    if np.any(np.abs(dist - R_here) > 0.02 * R_here):
        raise ValidationError("geometry-inconsistent", "boundary points do not lie on the meshed boundary")
    g = _periodic_spline(mesh.theta, ray_g)(phi)
    return np.maximum(g, 0.0)


def boundary_gradient(sol: PHarmonicSolution) -> np.ndarray:
    return sol.boundary_gradient


def solve_body(K: SupportFunction, cfg: AnnulusConfig, u0=None) -> PHarmonicSolution:
    return solve_plaplace(build_mesh(K, cfg), cfg, u0=u0)


def radial_oracle(R: float, rho: float, p: float, n: int = 2):
    """Capacitary potential of the concentric annulus ``rho < r < R`` and ``|u'(R)|``."""
    if not 0 < rho < R or not p > 1:
        raise ValidationError("parameter-domain", "need 0 < rho < R and p > 1")
    if np.isclose(p, n):
        L = np.log(R / rho)

        def u(r):
            return np.log(R / np.asarray(r, dtype=float)) / L

        return u, 1.0 / (R * L)
    a = (p - n) / (p - 1.0)
    den = rho**a - R**a

    def u(r):
        return (np.asarray(r, dtype=float) ** a - R**a) / den

    return u, abs(a * R ** (a - 1.0) / den)


def level_set_polygon(sol: PHarmonicSolution, level: float = 0.5) -> np.ndarray:
    """Points where ``u`` crosses ``level`` on each ray (linear interpolation in ``s``)."""
    U, mesh = sol.u, sol.mesh
    pts = np.empty((mesh.Ntheta, 2))
    for j in range(mesh.Ntheta):
        col = U[:, j]
        k = int(np.argmax(col < level))  # first node below the level
        if k == 0:
            raise ValidationError("geometry-inconsistent", "level set not crossed on a ray")
        w = (col[k - 1] - level) / (col[k - 1] - col[k])
        r = (1 - w) * mesh.radii[k - 1, j] + w * mesh.radii[k, j]
        pts[j] = mesh.center + r * np.array([np.cos(mesh.theta[j]), np.sin(mesh.theta[j])])
    return pts


def polygon_convexity_defect(pts: np.ndarray) -> float:
    """Most negative turn (cross product of consecutive edges), scaled by edge lengths."""
    e1 = np.roll(pts, -1, axis=0) - pts
    e2 = np.roll(e1, -1, axis=0)
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    norm = np.hypot(*e1.T) * np.hypot(*e2.T)
    return float((cross / norm).min())


def dump_solution_csv(sol: PHarmonicSolution, path) -> None:
    mesh = sol.mesh
    with open(path, "w") as fh:
        fh.write("s_index,theta_index,x,y,u\n")
        for i in range(mesh.Ns + 1):
            for j in range(mesh.Ntheta):
                x, y = mesh.nodes[i, j]
                fh.write(f"{i},{j},{x:.12g},{y:.12g},{sol.u[i, j]:.12g}\n")
