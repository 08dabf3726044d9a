import math

import numpy as np
import pytest

from conftest import draw_root_tuple, params_of_roots

from kndsdirac.geometry import (
    NoBlackHoleError,
    PhysicalParams,
    admissibility,
    build_delta,
    critical_masses,
    cubic_resolvent_check,
    find_horizons,
    jacobian_det,
    params_from_roots,
)


def bisect_double_root_masses(a, z, l):
    """Oracle for both critical masses, independent of any closed form.

    The quartic has three positive real roots exactly for masses between
    the two critical values; outside, a pair has merged and gone complex.
    Count positive real roots via companion-matrix eigenvalues, locate the
    window on a coarse mass grid, then bisect both edges.
    """

    def n_positive_real(m):
        coeff = [-1.0 / l**2, 0.0, 1.0 - a**2 / l**2, -2.0 * m, a**2 + z**2]
        rts = np.roots(coeff)
        real = np.abs(rts.imag) < 1e-7 * (1.0 + np.abs(rts.real))
        return int(np.sum(real & (rts.real > 0.0)))

    ms = np.linspace(1e-4 * l, 0.5 * l, 1024)
    inside = np.array([n_positive_real(m) >= 3 for m in ms])
    idx = np.nonzero(inside)[0]
    assert len(idx) > 0, "mass grid missed the admissible window"
    assert idx[0] > 0 and idx[-1] < len(ms) - 1

    def bisect(lo, hi, inside_high):
        # predicate flips once across the edge
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if (n_positive_real(mid) >= 3) == inside_high:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    m_lo = bisect(ms[idx[0] - 1], ms[idx[0]], inside_high=True)
    m_hi = bisect(ms[idx[-1]], ms[idx[-1] + 1], inside_high=False)
    return m_lo, m_hi


class TestDeltaQuartic:
    def test_all_optional_terms_zero(self):
        d = build_delta(PhysicalParams(m=0.0, a=0.0, l=1.0))
        assert (d.c0, d.c1, d.c2, d.c3, d.c4) == (0.0, 0.0, 1.0, 0.0, -1.0)

    def test_hand_expansion(self):
        d = build_delta(PhysicalParams(m=0.0, a=1.0, l=10.0))
        assert d.c0 == 1.0
        assert abs(d.c2 - 0.99) < 1e-15
        assert abs(d.c4 + 0.01) < 1e-18

    def test_value_at_zero(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            p = PhysicalParams(
                m=rng.uniform(0.1, 2.0),
                a=rng.uniform(0.0, 1.0),
                l=10.0,
                q_e=rng.uniform(0.0, 1.0),
                q_m=rng.uniform(0.0, 1.0),
            )
            assert build_delta(p)(0.0) == p.a**2 + p.z2

    def test_coefficient_identity_against_product_form(self):
        # (1/l^2)(r_c - r)(r - r_+)(r - r_-)(r + r_c + r_+ + r_-) expanded
        # must match the quartic built from the reconstructed parameters.
        rng = np.random.default_rng(11)
        for _ in range(25):
            r_c, r_p, r_m, l = draw_root_tuple(rng)
            p = params_of_roots(r_c, r_p, r_m, l)
            d = build_delta(p)
            prod = np.polynomial.polynomial.polyfromroots(
                [r_c, r_p, r_m, -(r_c + r_p + r_m)]
            )
            # polyfromroots is monic ascending; ours is -monic/l^2
            want = -prod[::-1] / l**2
            got = d.coefficients()
            assert np.allclose(got, want, rtol=1e-10, atol=1e-12)


class TestParamsFromRoots:
    def test_reference_tuple(self):
        m, a2, z2 = params_from_roots(7.0, 2.5, 2.2, 10.0)
        assert abs(m - 2.0539) < 1e-12
        assert abs(a2 - 1.51) < 1e-12
        assert abs(z2 - 2.9945) < 1e-12

    def test_unphysical_tuple_is_callers_problem(self):
        m, a2, z2 = params_from_roots(3.0, 2.0, 1.0, 10.0)
        assert a2 == 75.0
        assert z2 < 0.0  # caller-level rejection

    def test_ordering_violation(self):
        with pytest.raises(ValueError):
            params_from_roots(2.5, 7.0, 2.2, 10.0)
        with pytest.raises(ValueError):
            params_from_roots(7.0, 2.5, 2.2, 5.0)  # r_c >= l

    def test_extremal_input_reconstructs_double_root(self):
        # r_minus = r_plus is accepted; outputs stay defined even when the
        # tuple is unphysical (a^2 < 0), so evaluate the raw quartic
        m, a2, z2 = params_from_roots(7.0, 2.5, 2.5, 10.0)
        l2 = 100.0
        coeff = np.array([-1.0 / l2, 0.0, 1.0 - a2 / l2, -2.0 * m, a2 + z2])
        val = np.polyval(coeff, 2.5)
        dval = np.polyval(np.polyder(coeff), 2.5)
        assert abs(val) < 1e-12
        assert abs(dval) < 1e-12


class TestRoundTrip:
    def test_random_tuples(self):
        rng = np.random.default_rng(2024)
        for _ in range(30):
            r_c, r_p, r_m, l = draw_root_tuple(rng)
            h = find_horizons(params_of_roots(r_c, r_p, r_m, l))
            assert abs(h.r_c - r_c) < 1e-10 * r_c
            assert abs(h.r_plus - r_p) < 1e-10 * r_p
            assert abs(h.r_minus - r_m) < 1e-10 * r_m

    def test_reference(self, reference_params):
        h = find_horizons(reference_params)
        assert h.classification == "NonExtremal"
        assert abs(h.r_minus - 2.2) < 1e-10
        assert abs(h.r_plus - 2.5) < 1e-10
        assert abs(h.r_c - 7.0) < 1e-10

    def test_bracketing_sign(self, reference_params):
        d = build_delta(reference_params)
        h = find_horizons(reference_params)
        rs = np.linspace(h.r_plus + 1e-6, h.r_c - 1e-6, 300)
        assert np.all(d(rs) > 0.0)
        rs = np.linspace(h.r_c + 1e-6, 2 * h.r_c, 100)
        assert np.all(d(rs) < 0.0)

    def test_schwarzschild_de_sitter(self):
        # z = 0 removes the inner root: only r_+ < r_c survive, plus the
        # root at the r = 0 sign change reported as r_minus = 0
        h = find_horizons(PhysicalParams(m=0.1, a=0.0, l=1.0))
        assert h.r_minus == 0.0
        assert 0.0 < h.r_plus < h.r_c < 1.0
        oracle = np.roots([-1.0, 0.0, 1.0, -0.2, 0.0])
        real = np.sort(oracle.real[np.abs(oracle.imag) < 1e-12])
        assert abs(h.r_plus - real[2]) < 1e-10
        assert abs(h.r_c - real[3]) < 1e-10

    def test_no_black_hole_raises_with_reason(self):
        with pytest.raises(NoBlackHoleError) as err:
            find_horizons(PhysicalParams(m=0.001, a=0.3, l=10.0, q_e=0.5))
        assert "m too small" in str(err.value)


class TestJacobian:
    def test_extremal_zero(self):
        assert jacobian_det(7.0, 2.5, 2.5, 10.0) == 0.0

    def test_negative_on_ordered(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            r_c, r_p, r_m, l = draw_root_tuple(rng)
            assert jacobian_det(r_c, r_p, r_m, l) < 0.0

    def test_matches_finite_difference(self):
        # determinant of d(m, a^2, z^2) / d(r_minus, r_plus, r_c); the sign
        # convention takes the roots in ascending order, which is what makes
        # the closed form negative on ordered tuples
        rng = np.random.default_rng(13)
        for _ in range(10):
            r_c, r_p, r_m, l = draw_root_tuple(rng)
            closed = jacobian_det(r_c, r_p, r_m, l)
            h = 1e-6
            cols = []
            for i in (2, 1, 0):
                args_p = [r_c, r_p, r_m]
                args_m = [r_c, r_p, r_m]
                args_p[i] += h
                args_m[i] -= h
                fp = np.array(params_from_roots(*args_p, l))
                fm = np.array(params_from_roots(*args_m, l))
                cols.append((fp - fm) / (2 * h))
            fd = np.linalg.det(np.column_stack(cols))
            assert abs(fd - closed) < 1e-6 * abs(closed)


class TestCriticalMasses:
    def test_zero_spin_zero_charge(self):
        crit = critical_masses(0.0, 0.0, 1.0)
        assert abs(crit.m_crit_plus - 1.0 / (3.0 * math.sqrt(3.0))) < 1e-10
        assert abs(crit.m_crit_minus) < 1e-14

    def test_discriminant_boundary(self):
        # the exact boundary rounds to a tiny negative discriminant, so
        # step a hair inside; the stationary radii must then nearly merge
        l = 10.0
        a = math.sqrt(l**2 * (7.0 - 4.0 * math.sqrt(3.0)) - 1e-8)
        crit = critical_masses(a, 0.0, l)
        assert crit.forte_satisfied
        assert crit.discriminant >= 0.0
        assert abs(crit.R_plus - crit.R_minus) < 1e-3 * crit.R_plus

    def test_forte_violation(self):
        crit = critical_masses(3.0, 0.0, 10.0)  # a^2/l^2 = 0.09 > 7 - 4 sqrt(3)
        assert not crit.forte_satisfied

    def test_against_bisection(self):
        for a, z, l in [(0.3, 0.5, 10.0), (0.1, 0.05, 1.0), (1.0, 2.0, 20.0)]:
            crit = critical_masses(a, z, l)
            assert crit.forte_satisfied
            m_lo, m_hi = bisect_double_root_masses(a, z, l)
            assert abs(crit.m_crit_minus - m_lo) < 1e-8
            assert abs(crit.m_crit_plus - m_hi) < 1e-8


class TestAdmissibility:
    def test_trichotomy(self):
        a, z, l = 0.3, 0.5, 10.0
        crit = critical_masses(a, z, l)
        mk = lambda m: PhysicalParams(m=m, a=a, l=l, q_e=z)
        mid = 0.5 * (crit.m_crit_minus + crit.m_crit_plus)
        assert admissibility(mk(mid)).classification == "NonExtremal"
        assert admissibility(mk(crit.m_crit_minus)).classification == "Extremal"
        low = admissibility(mk(0.5 * crit.m_crit_minus))
        assert low.classification == "NoBlackHole"
        assert low.reason == "m too small"
        high = admissibility(mk(1.5 * crit.m_crit_plus))
        assert high.classification == "NoBlackHole"

    def test_forte_reason(self):
        rep = admissibility(PhysicalParams(m=1.0, a=3.0, l=10.0))
        assert rep.classification == "NoBlackHole"
        assert "forte" in rep.reason

    def test_resolvent_agreement_sample(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            a = rng.uniform(0.0, 0.26) * 10.0 * 0.1  # keep a/l small
            z = rng.uniform(0.0, 1.5)
            crit = critical_masses(a, z, 10.0)
            if not crit.forte_satisfied:
                continue
            m = rng.uniform(1e-3, 2.0 * crit.m_crit_plus)
            p = PhysicalParams(m=m, a=a, l=10.0, q_e=z)
            check = cubic_resolvent_check(p)
            assert check.all_real == admissibility(p).is_admissible
