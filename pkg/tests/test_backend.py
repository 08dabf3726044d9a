import os
import subprocess
import sys
import textwrap

import numpy as np

from kndsdirac.backend import get_backend, maybe_njit

WORKLOAD = textwrap.dedent(
    """
    import json, math, sys
    import numpy as np
    from kndsdirac.backend import get_backend
    from kndsdirac.geometry import PhysicalParams, params_from_roots
    from kndsdirac.separation import FieldParams, build_tortoise_map, tortoise_r
    from kndsdirac.radial import integrate_radial

    m, a2, z2 = params_from_roots(7.0, 2.5, 2.2, 10.0)
    params = PhysicalParams(m=m, a=math.sqrt(a2), l=10.0, q_e=math.sqrt(z2))
    field = FieldParams(mu=0.1, e=0.1)
    tmap = build_tortoise_map(params)
    ys = np.linspace(-80.0, 80.0, 33)
    traj = integrate_radial(
        params, field, 0.5, 0.9678612006842956, 0.7, (-80.0, 80.0),
        np.array([1.0, 0.0]), samples=ys, tmap=tmap,
    )
    rs = tortoise_r(tmap, np.linspace(-120.0, 120.0, 501))
    print(json.dumps({
        "backend": get_backend(),
        "X": traj.X.ravel().tolist(),
        "r_sum": float(rs.sum()),
    }))
    """
)


def run_workload(numba_flag):
    env = dict(os.environ, KNDS_NUMBA=numba_flag)
    out = subprocess.run(
        [sys.executable, "-c", WORKLOAD],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    import json

    return json.loads(out.stdout)


def test_backend_reports_valid_name():
    assert get_backend() in ("numba", "numpy")


def test_maybe_njit_decorator_forms():
    @maybe_njit
    def f(x):
        return x + 1.0

    @maybe_njit(cache=False)
    def g(x):
        return 2.0 * x

    assert f(1.0) == 2.0
    assert g(3.0) == 6.0


def test_backends_agree():
    # same source runs compiled and uncompiled; results may differ only by
    # LLVM reassociation of float ops
    res_numba = run_workload("1")
    res_numpy = run_workload("0")
    assert res_numba["backend"] == "numba"
    assert res_numpy["backend"] == "numpy"
    X1 = np.array(res_numba["X"])
    X0 = np.array(res_numpy["X"])
    assert np.max(np.abs(X1 - X0)) < 1e-12 * max(1.0, np.max(np.abs(X1)))
    assert abs(res_numba["r_sum"] - res_numpy["r_sum"]) < 1e-10
