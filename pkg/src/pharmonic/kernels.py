"""Hot loops of the p-Laplace solver.

Each kernel has a numba version and a vectorised numpy version with identical
semantics. ``assemble`` and ``energy`` point at the numba versions unless numba is
missing or ``PHARMONIC_DISABLE_NUMBA`` is set.
"""
import numpy as np

from ._accel import HAVE_NUMBA, njit


def assemble_numpy(u, conn, Gx, Gy, W, p, eps2, newton, pos, nnz):
    """Residual (per node) and reduced Jacobian values for the regularised p-Laplacian.

    The flux is ``(|grad u|^2 + eps2)^((p-2)/2) grad u``. With ``newton`` false the
    matrix is the frozen-coefficient (Picard) operator, otherwise the exact Jacobian.
    ``pos[e, a, b]`` is the slot of entry (a, b) of element ``e`` in the reduced CSR
    data array, or ``nnz`` for entries touching Dirichlet nodes.
    """
    ue = u[conn]  # (E, 4)
    gx = np.einsum("eqa,ea->eq", Gx, ue)
    gy = np.einsum("eqa,ea->eq", Gy, ue)
    t = gx * gx + gy * gy + eps2
    c = W * t ** (0.5 * (p - 2.0))
    res_e = np.einsum("eq,eqa->ea", c * gx, Gx) + np.einsum("eq,eqa->ea", c * gy, Gy)
    res = np.bincount(conn.ravel(), weights=res_e.ravel(), minlength=u.shape[0])
    Ke = np.einsum("eq,eqa,eqb->eab", c, Gx, Gx) + np.einsum("eq,eqa,eqb->eab", c, Gy, Gy)
    if newton:
        d = (p - 2.0) * W * t ** (0.5 * (p - 4.0))
        va = gx[:, :, None] * Gx + gy[:, :, None] * Gy  # (E, Q, 4)
        Ke += np.einsum("eq,eqa,eqb->eab", d, va, va)
    data = np.bincount(pos.ravel(), weights=Ke.ravel(), minlength=nnz + 1)[:nnz]
    return res, data


def energy_numpy(u, conn, Gx, Gy, W, p, eps2):
    ue = u[conn]
    gx = np.einsum("eqa,ea->eq", Gx, ue)
    gy = np.einsum("eqa,ea->eq", Gy, ue)
    return float((W * (gx * gx + gy * gy + eps2) ** (0.5 * p)).sum() / p)


@njit
def _assemble_jit(u, conn, Gx, Gy, W, p, eps2, newton, pos, nnz):
    E, Q, A = Gx.shape
    res = np.zeros(u.shape[0])
    data = np.zeros(nnz + 1)
    ea = 0.5 * (p - 2.0)
    eb = 0.5 * (p - 4.0)
    va = np.empty(A)
    for e in range(E):
        for q in range(Q):
            gx = 0.0
            gy = 0.0
            for a in range(A):
                ua = u[conn[e, a]]
                gx += Gx[e, q, a] * ua
                gy += Gy[e, q, a] * ua
            t = gx * gx + gy * gy + eps2
            c = W[e, q] * t**ea
            d = (p - 2.0) * W[e, q] * t**eb if newton else 0.0
            for a in range(A):
                va[a] = gx * Gx[e, q, a] + gy * Gy[e, q, a]
                res[conn[e, a]] += c * va[a]
            for a in range(A):
                for b in range(A):
                    k = pos[e, a, b]
                    data[k] += c * (Gx[e, q, a] * Gx[e, q, b] + Gy[e, q, a] * Gy[e, q, b]) + d * va[a] * va[b]
    return res, data[:nnz]


@njit
def _energy_jit(u, conn, Gx, Gy, W, p, eps2):
    E, Q, A = Gx.shape
    total = 0.0
    for e in range(E):
        for q in range(Q):
            gx = 0.0
            gy = 0.0
            for a in range(A):
                ua = u[conn[e, a]]
                gx += Gx[e, q, a] * ua
                gy += Gy[e, q, a] * ua
            total += W[e, q] * (gx * gx + gy * gy + eps2) ** (0.5 * p)
    return total / p


if HAVE_NUMBA:
    assemble_numba = _assemble_jit
    energy_numba = _energy_jit
    assemble = _assemble_jit
    energy = _energy_jit
else:
    assemble_numba = None
    energy_numba = None
    assemble = assemble_numpy
    energy = energy_numpy
