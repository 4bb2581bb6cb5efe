import os
import subprocess
import sys

import numpy as np
import pytest

from pharmonic import kernels
from pharmonic._accel import HAVE_NUMBA
from pharmonic.geometry import make_grid, support_of_ellipse
from pharmonic.pde import AnnulusConfig, build_mesh

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba backend disabled")


def setup(p, Ns=16, Nt=64, seed=0):
    cfg = AnnulusConfig(p=p, Ns=Ns, Ntheta=Nt)
    mesh = build_mesh(support_of_ellipse(1.5, 1.0, make_grid(256)), cfg)
    rng = np.random.default_rng(seed)
    u = np.linspace(1, 0, Ns + 1)[:, None] + 0.05 * rng.standard_normal((Ns + 1, Nt))
    u[0], u[-1] = 1.0, 0.0
    Gx, Gy, W = mesh._quadrature
    pos, rows, cols, nnz, nfree = mesh._pattern
    eps2 = (1e-6 / mesh.thickness) ** 2
    return u.ravel(), mesh.conn, Gx, Gy, W, eps2, pos, nnz


@needs_numba
@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
@pytest.mark.parametrize("newton", [True, False])
def test_assemble_parity(p, newton):
    u, conn, Gx, Gy, W, eps2, pos, nnz = setup(p)
    r1, d1 = kernels.assemble_numba(u, conn, Gx, Gy, W, p, eps2, newton, pos, nnz)
    r2, d2 = kernels.assemble_numpy(u, conn, Gx, Gy, W, p, eps2, newton, pos, nnz)
    assert np.allclose(r1, r2, rtol=1e-12, atol=1e-12 * np.abs(r2).max())
    assert np.allclose(d1, d2, rtol=1e-12, atol=1e-12 * np.abs(d2).max())


@needs_numba
@pytest.mark.parametrize("p", [1.5, 2.5])
def test_energy_parity(p):
    u, conn, Gx, Gy, W, eps2, _, _ = setup(p)
    e1 = kernels.energy_numba(u, conn, Gx, Gy, W, p, eps2)
    e2 = kernels.energy_numpy(u, conn, Gx, Gy, W, p, eps2)
    assert e1 == pytest.approx(e2, rel=1e-12)


def test_residual_is_energy_gradient():
    p = 2.5
    u, conn, Gx, Gy, W, eps2, pos, nnz = setup(p, Ns=6, Nt=16)
    r, _ = kernels.assemble(u, conn, Gx, Gy, W, p, eps2, True, pos, nnz)
    k, h = 40, 1e-6
    e = np.zeros_like(u)
    e[k] = h
    fd = (kernels.energy(u + e, conn, Gx, Gy, W, p, eps2) - kernels.energy(u - e, conn, Gx, Gy, W, p, eps2)) / (2 * h)
    assert fd == pytest.approx(r[k], rel=1e-6)


def test_env_flag_selects_numpy():
    script = (
        "import numpy as np\n"
        "from pharmonic import backend, kernels\n"
        "from pharmonic.geometry import make_grid, support_of_ellipse\n"
        "from pharmonic.measure import gamma\n"
        "from pharmonic.pde import AnnulusConfig\n"
        "assert kernels.assemble is kernels.assemble_numpy\n"
        "print(backend(), repr(gamma(support_of_ellipse(1.5, 1, make_grid(64)), AnnulusConfig(p=2.5, Ns=16, Ntheta=64))))\n"
    )
    env = dict(os.environ, PHARMONIC_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", script], env=env, capture_output=True, text=True, check=True).stdout
    name, value = out.split()
    assert name == "numpy"
    from pharmonic.measure import gamma

    here = gamma(support_of_ellipse(1.5, 1, make_grid(64)), AnnulusConfig(p=2.5, Ns=16, Ntheta=64))
    assert float(value) == pytest.approx(here, rel=1e-9)
