"""Time the integration kernels under both backends.

The backend is fixed at import time by ``KNDS_NUMBA``, so this script
re-launches itself in a subprocess per backend and reports wall times
side by side.  Run from the repository root:

    python3 benchmarks/benchmark_kernels.py
"""

from __future__ import annotations

import math
import os
import subprocess
import sys
import time


def workload():
    import numpy as np

    from kndsdirac.backend import get_backend
    from kndsdirac.geometry import PhysicalParams, params_from_roots
    from kndsdirac.separation import FieldParams, build_tortoise_map, tortoise_r
    from kndsdirac.radial import integrate_radial, mode_eigenvalue

    m, a2, z2 = params_from_roots(7.0, 2.5, 2.2, 10.0)
    params = PhysicalParams(m=m, a=math.sqrt(a2), l=10.0, q_e=math.sqrt(z2))
    field = FieldParams(mu=0.1, e=0.1)
    tmap = build_tortoise_map(params)
    lam = mode_eigenvalue(params, field, 0.5, 1)

    # warm-up triggers JIT compilation under the numba backend
    integrate_radial(params, field, 0.5, lam, 0.7, (0.0, 5.0),
                     np.array([1.0, 0.0]), tmap=tmap)

    t0 = time.perf_counter()
    traj = integrate_radial(
        params, field, 0.5, lam, 0.7, (-200.0, 200.0),
        np.array([1.0, 0.0]), partner=np.array([0.0, 1.0]), tmap=tmap,
    )
    t_int = time.perf_counter() - t0

    ys = np.linspace(-300.0, 300.0, 200_000)
    t0 = time.perf_counter()
    rs = tortoise_r(tmap, ys)
    t_inv = time.perf_counter() - t0

    print(
        "%-6s integrate[-200,200]: %7.1f ms  (%d steps)   "
        "tortoise_r x 200k: %7.1f ms   checksum %.6g"
        % (
            get_backend(),
            1e3 * t_int,
            traj.stats["n_steps"],
            1e3 * t_inv,
            float(rs.sum()),
        )
    )


def main():
    here = os.path.abspath(__file__)
    for flag in ("1", "0"):
        env = dict(os.environ, KNDS_NUMBA=flag, KNDS_BENCH_CHILD="1")
        subprocess.run([sys.executable, here], env=env, check=True)


if __name__ == "__main__":
    if os.environ.get("KNDS_BENCH_CHILD"):
        workload()
    else:
        main()
