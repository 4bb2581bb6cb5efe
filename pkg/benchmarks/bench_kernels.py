"""Compare the numba and numpy backends of the p-Laplace kernels.

Run ``python benchmarks/bench_kernels.py``. It times one residual/Jacobian assembly
and one energy evaluation on the default 64 x 256 mesh with each backend, then a full
solve of one body under each backend (the numpy run happens in a subprocess with
``PHARMONIC_DISABLE_NUMBA=1``).
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from pharmonic import kernels
from pharmonic._accel import HAVE_NUMBA
from pharmonic.geometry import make_grid, support_of_ellipse
from pharmonic.pde import AnnulusConfig, build_mesh

SOLVE = (
    "import time\n"
    "from pharmonic.geometry import make_grid, support_of_ellipse\n"
    "from pharmonic.pde import AnnulusConfig, solve_body\n"
    "K = support_of_ellipse(1.5, 1.0, make_grid(256))\n"
    "cfg = AnnulusConfig(p={p})\n"
    "solve_body(K, cfg)\n"
    "t = time.perf_counter(); sol = solve_body(K, cfg); dt = time.perf_counter() - t\n"
    "print(dt, sol.iterations)\n"
)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def kernel_times(p, Ns, Nt, repeat):
    mesh = build_mesh(support_of_ellipse(1.5, 1.0, make_grid(256)), AnnulusConfig(p=p, Ns=Ns, Ntheta=Nt))
    u = np.repeat(np.linspace(1.0, 0.0, Ns + 1), Nt)
    Gx, Gy, W = mesh._quadrature
    pos, _, _, nnz, _ = mesh._pattern
    eps2 = (1e-6 / mesh.thickness) ** 2
    args = (u, mesh.conn, Gx, Gy, W, p, eps2)
    out = {}
    backends = [("numpy", kernels.assemble_numpy, kernels.energy_numpy)]
    if HAVE_NUMBA:
        backends.insert(0, ("numba", kernels.assemble_numba, kernels.energy_numba))
        kernels.assemble_numba(*args, True, pos, nnz)  # compile
        kernels.energy_numba(*args)
    for name, asm, en in backends:
        out[name] = (best_of(lambda: asm(*args, True, pos, nnz), repeat), best_of(lambda: en(*args), repeat))
    return out


def solve_time(p, disable):
    env = dict(os.environ)
    if disable:
        env["PHARMONIC_DISABLE_NUMBA"] = "1"
    res = subprocess.run([sys.executable, "-c", SOLVE.format(p=p)], env=env, capture_output=True, text=True, check=True)
    dt, its = res.stdout.split()
    return float(dt), int(its)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=2.5)
    ap.add_argument("--ns", type=int, default=64)
    ap.add_argument("--ntheta", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    print(f"mesh {args.ns} x {args.ntheta}, p = {args.p}")
    times = kernel_times(args.p, args.ns, args.ntheta, args.repeat)
    print(f"{'backend':8s} {'assemble [ms]':>14s} {'energy [ms]':>12s}")
    for name, (ta, te) in times.items():
        print(f"{name:8s} {1e3 * ta:14.2f} {1e3 * te:12.2f}")
    if "numba" in times:
        ra = times["numpy"][0] / times["numba"][0]
        re = times["numpy"][1] / times["numba"][1]
        print(f"speed-up of numba: assemble x{ra:.1f}, energy x{re:.1f}")

    print("full solve (second call, warm caches):")
    for name, disable in (("numba", False), ("numpy", True)):
        if name == "numba" and not HAVE_NUMBA:
            continue
        dt, its = solve_time(args.p, disable)
        print(f"  {name:8s} {dt:7.3f} s  ({its} Newton steps)")


if __name__ == "__main__":
    main()
