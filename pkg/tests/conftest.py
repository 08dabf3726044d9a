import math

import numpy as np
import pytest

from kndsdirac.geometry import (
    PhysicalParams,
    critical_masses,
    params_from_roots,
)
from kndsdirac.separation import FieldParams, build_tortoise_map


@pytest.fixture(scope="session")
def reference_params():
    """Generic non-extremal background built from the root tuple (7, 2.5, 2.2, 10)."""
    m, a2, z2 = params_from_roots(7.0, 2.5, 2.2, 10.0)
    return PhysicalParams(m=m, a=math.sqrt(a2), l=10.0, q_e=math.sqrt(z2))


@pytest.fixture(scope="session")
def extremal_params():
    """Extremal background: mass set exactly to the lower critical value."""
    crit = critical_masses(0.3, 0.5, 10.0)
    return PhysicalParams(m=crit.m_crit_minus, a=0.3, l=10.0, q_e=0.5)


@pytest.fixture(scope="session")
def field():
    return FieldParams(mu=0.1, e=0.1)


@pytest.fixture(scope="session")
def reference_tmap(reference_params):
    return build_tortoise_map(reference_params)


@pytest.fixture(scope="session")
def extremal_tmap(extremal_params):
    return build_tortoise_map(extremal_params)


def draw_root_tuple(rng, l=10.0):
    """One random admissible ordered root tuple (r_c, r_plus, r_minus, l).

    Rejection sampling: ordered radii inside (0, l) whose reconstructed
    a^2 and z^2 come out positive.  Relative gaps are kept away from the
    degenerate limits so the tuple stays well conditioned for round-trip
    accuracy checks.
    """
    while True:
        rs = np.sort(rng.uniform(0.05 * l, 0.9 * l, size=3))
        r_minus, r_plus, r_c = (float(x) for x in rs)
        if r_plus - r_minus < 0.02 * l or r_c - r_plus < 0.05 * l:
            continue
        m, a2, z2 = params_from_roots(r_c, r_plus, r_minus, l)
        if a2 > 1e-4 and z2 > 1e-4:
            return r_c, r_plus, r_minus, l


def params_of_roots(r_c, r_plus, r_minus, l):
    m, a2, z2 = params_from_roots(r_c, r_plus, r_minus, l)
    return PhysicalParams(m=m, a=math.sqrt(a2), l=l, q_e=math.sqrt(z2))
