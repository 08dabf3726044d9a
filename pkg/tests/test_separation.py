import math

import numpy as np
import pytest

from kndsdirac.geometry import PhysicalParams, build_delta, find_horizons
from kndsdirac.separation import (
    FieldParams,
    assemble_hamiltonian_symbol,
    assemble_reduced_symbol,
    build_radial_coefficients,
    build_tortoise_map,
    build_V_unitary,
    horizon_potentials,
    magnetic_quantization_check,
    p2_remainder_l1,
    potential_deviation_norm,
    potential_matrix,
    tortoise_r,
    tortoise_y,
)


class TestTortoiseMap:
    def test_normalization(self, reference_tmap):
        # zero up to reassociation of the log sum
        assert abs(tortoise_y(reference_tmap, reference_tmap.r0)) < 1e-13

    def test_forward_inverse_roundtrip(self, reference_params, reference_tmap):
        # approach both horizons geometrically; r -> y -> r is the
        # well-conditioned direction and must hold to a few ulp
        h = find_horizons(reference_params)
        width = h.r_c - h.r_plus
        eps = width * np.logspace(-1, -12, 45)
        for r in np.concatenate([h.r_plus + eps, h.r_c - eps]):
            y = tortoise_y(reference_tmap, r)
            back = tortoise_r(reference_tmap, y)
            assert abs(back - r) <= 4e-15 * (abs(r) + 1.0)

    def test_inverse_forward_roundtrip(self, reference_tmap):
        # moderate |y| only: one ulp of r spans more than 1e-10 in y far out
        ys = np.linspace(-150.0, 150.0, 301)
        rs = tortoise_r(reference_tmap, ys)
        back = tortoise_y(reference_tmap, rs)
        assert np.max(np.abs(back - ys) / (1.0 + np.abs(ys))) <= 1e-10

    def test_extremal_roundtrip(self, extremal_params, extremal_tmap):
        h = find_horizons(extremal_params)
        width = h.r_c - h.r_plus
        eps = width * np.logspace(-1, -10, 30)
        for r in np.concatenate([h.r_plus + eps, h.r_c - eps]):
            y = tortoise_y(extremal_tmap, r)
            back = tortoise_r(extremal_tmap, y)
            assert abs(back - r) <= 1e-13 * (abs(r) + 1.0)
        assert extremal_tmap.extremal

    def test_monotone(self, reference_params, reference_tmap):
        h = find_horizons(reference_params)
        pad = 1e-6 * (h.r_c - h.r_plus)
        rs = np.linspace(h.r_plus + pad, h.r_c - pad, 10_000)
        ys = tortoise_y(reference_tmap, rs)
        assert np.all(np.diff(ys) > 0.0)

    def test_derivative_matches_closed_form(self, reference_params, reference_tmap):
        h = find_horizons(reference_params)
        delta = build_delta(reference_params)
        a2 = reference_params.a ** 2
        r = 0.5 * (h.r_plus + h.r_c)
        step = 1e-6
        fd = (tortoise_y(reference_tmap, r + step) - tortoise_y(reference_tmap, r - step)) / (
            2 * step
        )
        want = (r * r + a2) / delta(r)
        assert abs(fd - want) <= 1e-8 * abs(want)

    def test_partial_fraction_identity(self, reference_params, reference_tmap):
        # dy/dr reconstructed from the per-root surface-gravity weights
        # equals (r^2+a^2)/Delta_r pointwise
        h = find_horizons(reference_params)
        delta = build_delta(reference_params)
        a2 = reference_params.a ** 2
        roots = [reference_tmap.r_neg, h.r_minus, h.r_plus, h.r_c]
        kappas = [
            reference_tmap.kappa_neg,
            reference_tmap.kappa_minus,
            reference_tmap.kappa_plus,
            reference_tmap.kappa_c,
        ]
        rng = np.random.default_rng(17)
        rs = rng.uniform(h.r_plus + 0.01, h.r_c - 0.01, 200)
        recon = sum(1.0 / (2.0 * k * (rs - ri)) for ri, k in zip(roots, kappas))
        want = (rs * rs + a2) / delta(rs)
        assert np.max(np.abs(recon / want - 1.0)) <= 1e-10

    def test_domain_error(self, reference_tmap):
        with pytest.raises(ValueError):
            tortoise_y(reference_tmap, reference_tmap.r_plus)
        with pytest.raises(ValueError):
            tortoise_y(reference_tmap, reference_tmap.r_c + 0.1)

    def test_divergence_directions(self, reference_tmap):
        # y falls to -inf at the event horizon, climbs to +inf at the
        # cosmological one
        assert tortoise_y(reference_tmap, reference_tmap.r_plus + 1e-11) < -100.0
        assert tortoise_y(reference_tmap, reference_tmap.r_c - 1e-11) > 100.0
        assert reference_tmap.kappa_plus > 0.0
        assert reference_tmap.kappa_c < 0.0


class TestHorizonPotentials:
    def test_zero_everything(self):
        p = PhysicalParams(m=0.1, a=0.0, l=1.0)
        pots = horizon_potentials(p, FieldParams(mu=0.0, e=0.1), 0.5)
        assert pots.phi_plus == 0.0
        assert pots.phi_c == 0.0

    def test_coulomb_limit(self):
        # a = 0 leaves only the electrostatic term e q_e / r
        p = PhysicalParams(m=0.15, a=0.0, l=1.0, q_e=0.05)
        f = FieldParams(mu=0.1, e=0.7)
        h = find_horizons(p)
        pots = horizon_potentials(p, f, 1.5)
        assert abs(pots.phi_plus - f.e * p.q_e / h.r_plus) < 1e-14
        assert abs(pots.phi_c - f.e * p.q_e / h.r_c) < 1e-14

    def test_matches_potential_limits(self, reference_params, field):
        pots = horizon_potentials(reference_params, field, 0.5)
        h = find_horizons(reference_params)
        for r_end, phi in ((h.r_plus, pots.phi_plus), (h.r_c, pots.phi_c)):
            r = r_end + 1e-8 * (1.0 if r_end == h.r_plus else -1.0)
            v = (
                reference_params.a * reference_params.xi * 0.5
                + field.e * reference_params.q_e * r
            ) / (r * r + reference_params.a ** 2)
            assert abs(v - phi) < 1e-7


class TestPotentialMatrix:
    def test_symmetry(self, reference_params, field, reference_tmap):
        ys = np.linspace(-40.0, 40.0, 41)
        V = potential_matrix(reference_params, field, 0.5, 1.3, ys, reference_tmap)
        assert V.shape == (41, 2, 2)
        assert np.max(np.abs(V[:, 0, 1] - V[:, 1, 0])) == 0.0

    def test_diagonal_when_uncoupled(self, reference_params, reference_tmap):
        V = potential_matrix(
            reference_params,
            FieldParams(mu=0.0, e=0.1),
            0.5,
            0.0,
            np.array([0.0, 5.0, -3.0]),
            reference_tmap,
        )
        assert np.max(np.abs(V[:, 0, 1])) == 0.0
        assert np.max(np.abs(V[:, 0, 0] - V[:, 1, 1])) == 0.0

    def test_limits(self, reference_params, field, reference_tmap):
        pots = horizon_potentials(reference_params, field, 0.5)
        V = potential_matrix(
            reference_params, field, 0.5, 1.3, np.array([-1400.0, 400.0]), reference_tmap
        )
        assert np.max(np.abs(V[0] - pots.phi_plus * np.eye(2))) < 1e-6
        assert np.max(np.abs(V[1] - pots.phi_c * np.eye(2))) < 1e-6

    def test_deviation_decay_rates(self, reference_params, reference_tmap):
        # two regimes toward the cosmological horizon: the off-diagonal
        # sqrt(Delta_r) couplings decay at rate |kappa_c|; with mu = 0 and
        # lambda = 0 only the diagonal survives, decaying at 2|kappa_c|
        kap = abs(reference_tmap.kappa_c)
        ys = np.linspace(120.0, 220.0, 9)

        def fitted_rate(field, lam):
            dev = potential_deviation_norm(reference_tmap, field, 0.5, lam, ys, "cosmological")
            slope = np.polyfit(ys, np.log(dev), 1)[0]
            return -slope

        generic = fitted_rate(FieldParams(mu=0.1, e=0.1), 1.3)
        assert abs(generic - kap) < 0.1 * kap
        diag_only = fitted_rate(FieldParams(mu=0.0, e=0.1), 0.0)
        assert abs(diag_only - 2.0 * kap) < 0.1 * 2.0 * kap

    def test_extremal_inner_power_law(self, extremal_params, extremal_tmap):
        # double root: the approach in y is a power law of order one
        f = FieldParams(mu=0.1, e=0.1)
        ys = -np.logspace(3.0, 5.0, 9)
        dev = potential_deviation_norm(extremal_tmap, f, 0.5, 1.0, ys, "inner")
        slope = np.polyfit(np.log(-ys), np.log(dev), 1)[0]
        assert abs(slope + 1.0) < 0.1

    def test_deviation_monotone_far_out(self, reference_params, field, reference_tmap):
        ys = np.linspace(60.0, 300.0, 200)
        dev = potential_deviation_norm(reference_tmap, field, 0.5, 1.3, ys, "cosmological")
        assert np.all(np.diff(dev) < 0.0)
        ys = -np.linspace(60.0, 300.0, 200)
        dev = potential_deviation_norm(reference_tmap, field, 0.5, 1.3, ys, "inner")
        assert np.all(np.diff(dev) < 0.0)


class TestP2Remainder:
    def test_tail_convergence(self, reference_params, field, reference_tmap):
        tail = p2_remainder_l1(reference_params, field, 0.5, 1.3, 60.0, reference_tmap)
        assert tail.value > 0.0
        # bound is dominated by the documented r(y) resolution floor
        assert tail.error_bound < 1e-6 * tail.value
        # segment sums fall geometrically
        ratios = tail.segments[1:] / tail.segments[:-1]
        assert np.all(ratios < 0.1)

    def test_against_quadrature(self, reference_params, field, reference_tmap):
        from scipy.integrate import quad

        tail = p2_remainder_l1(reference_params, field, 0.5, 1.3, 60.0, reference_tmap)
        oracle, err = quad(
            lambda y: float(
                potential_deviation_norm(reference_tmap, field, 0.5, 1.3, y, "cosmological")
            ),
            60.0,
            tail.y_max,
            limit=400,
        )
        assert abs(tail.value - oracle) <= 1e-7 * oracle + tail.error_bound + err

    def test_additivity(self, reference_params, field, reference_tmap):
        t1 = p2_remainder_l1(reference_params, field, 0.5, 1.3, 50.0, reference_tmap)
        t2 = p2_remainder_l1(reference_params, field, 0.5, 1.3, 80.0, reference_tmap)
        assert t2.value < t1.value


class TestMagneticQuantization:
    def test_zero_charge(self, reference_params):
        assert magnetic_quantization_check(reference_params, FieldParams(mu=0.1, e=0.3))

    def test_exact_multiple(self):
        p = PhysicalParams(m=0.15, a=0.1, l=1.0, q_m=0.02)
        f = FieldParams(mu=0.0, e=p.xi / p.q_m)
        assert magnetic_quantization_check(p, f)

    def test_non_integer(self):
        p = PhysicalParams(m=0.15, a=0.1, l=1.0, q_m=0.02)
        f = FieldParams(mu=0.0, e=1.5 * p.xi / p.q_m)
        assert not magnetic_quantization_check(p, f)


class TestUnitary:
    def test_unitarity(self):
        V = build_V_unitary()
        assert np.max(np.abs(V @ V.conj().T - np.eye(4))) <= 1e-15
        assert abs(abs(np.linalg.det(V)) - 1.0) <= 1e-15

    def test_conjugation_reproduces_block_structure(self, reference_params, field):
        rng = np.random.default_rng(23)
        V = build_V_unitary()
        for _ in range(5):
            r = rng.uniform(2.6, 6.9)
            th = rng.uniform(0.2, math.pi - 0.2)
            s = rng.standard_normal(6)
            s_r, s_th, s_ph = s[0] + 1j * s[1], s[2] + 1j * s[3], s[4] + 1j * s[5]
            H = assemble_hamiltonian_symbol(reference_params, field, r, th, s_r, s_th, s_ph)
            R = assemble_reduced_symbol(reference_params, field, r, th, s_r, s_th, s_ph)
            assert np.max(np.abs(V @ H @ V.conj().T - R)) <= 1e-12
            # diagonal blocks are scalar multiples of the identity
            assert abs(R[0, 1]) <= 1e-14 and abs(R[1, 0]) <= 1e-14
            assert abs(R[0, 0] - R[1, 1]) <= 1e-14


class TestRadialCoefficients:
    def test_system_matrix_traceless(self, reference_params, field, reference_tmap):
        coeffs = build_radial_coefficients(reference_params, field, 0.5, 1.3, reference_tmap)
        ys = np.linspace(-30.0, 30.0, 7)
        A = coeffs.system_matrix(0.7, ys)
        assert np.max(np.abs(A[:, 0, 0] + A[:, 1, 1])) <= 1e-15

    def test_phi_end_consistency(self, reference_params, field, reference_tmap):
        coeffs = build_radial_coefficients(reference_params, field, 0.5, 1.3, reference_tmap)
        pots = horizon_potentials(reference_params, field, 0.5)
        assert coeffs.phi_end("inner") == pots.phi_plus
        assert coeffs.phi_end("cosmological") == pots.phi_c
