import math

import numpy as np
import pytest

from kndsdirac.angular import (
    AngularSpectrum,
    angular_eigenfunction,
    build_angular_problem,
    solve_angular,
)
from kndsdirac.angular import _fd_window
from kndsdirac.geometry import PhysicalParams
from kndsdirac.separation import FieldParams


def weighted_inner(problem, f, g, theta):
    # components-first sampling (2, n); weight sin/sqrt(Delta_theta);
    # Simpson keeps the quadrature error below the 1e-8 contract
    from scipy.integrate import simpson

    w = np.sin(theta) / np.sqrt(1.0 + problem.aol2 * np.cos(theta) ** 2)
    dens = np.sum(np.conj(f) * g, axis=0).real
    return simpson(dens * w, x=theta)


class TestSpectrumBasics:
    def test_two_methods_agree(self, reference_params, field):
        for k in (0.5, -0.5, 1.5, -1.5):
            problem = build_angular_problem(reference_params, field, k)
            sp = solve_angular(problem, 10, method="spectral")
            fd = solve_angular(problem, 10, method="fd")
            assert np.array_equal(sp.j_indices, fd.j_indices)
            scale = 1.0 + np.abs(sp.lambdas)
            assert np.max(np.abs(sp.lambdas - fd.lambdas) / scale) < 1e-6

    def test_real_simple_sorted(self, reference_params, field):
        problem = build_angular_problem(reference_params, field, 0.5)
        sp = solve_angular(problem, 12)
        assert np.all(np.isreal(sp.lambdas))
        assert np.all(np.diff(sp.lambdas) > 1e-9)
        assert np.all(sp.residuals < 1e-6)

    def test_round_sphere_ladder(self):
        # a = 0, no flux: the angular operator has the round-sphere Dirac
        # spectrum, integers of modulus >= |k| + 1/2
        p = PhysicalParams(m=0.1, a=0.0, l=1.0)
        f = FieldParams(mu=0.4, e=0.0)
        for k, base in ((0.5, 1.0), (-0.5, 1.0), (1.5, 2.0), (-1.5, 2.0)):
            problem = build_angular_problem(p, f, k)
            sp = solve_angular(problem, 8)
            for idx, j in enumerate(sp.j_indices):
                want = math.copysign(base + abs(j) - 1.0, j)
                assert abs(sp.lambdas[idx] - want) < 1e-8

    def test_symmetry_at_zero_mass_coupling(self, reference_params):
        f = FieldParams(mu=0.0, e=0.1)
        for method in ("spectral", "fd"):
            problem = build_angular_problem(reference_params, f, 0.5)
            sp = solve_angular(problem, 10, method=method)
            by_j = {int(j): lam for j, lam in zip(sp.j_indices, sp.lambdas)}
            defect = max(abs(by_j[j] + by_j[-j]) for j in range(1, 6))
            assert defect < 1e-8
            assert sp.symmetry_defect < 1e-8

    def test_reference_eigenvalue_frozen(self, reference_params, field):
        # regression anchor for downstream radial tests
        problem = build_angular_problem(reference_params, field, 0.5)
        sp = solve_angular(problem, 4)
        assert abs(sp.lam(1) - 0.9678612006842956) < 1e-9

    def test_linear_growth(self, reference_params, field):
        problem = build_angular_problem(reference_params, field, 0.5)
        sp = solve_angular(problem, 40)
        for j in range(1, 21):
            assert abs(sp.lam(j)) >= 0.5 * j
            assert abs(sp.lam(-j)) >= 0.5 * j

    def test_missing_index_raises(self, reference_params, field):
        problem = build_angular_problem(reference_params, field, 0.5)
        sp = solve_angular(problem, 4)
        with pytest.raises(KeyError):
            sp.lam(99)

    def test_half_integer_enforced(self, reference_params, field):
        with pytest.raises(ValueError):
            build_angular_problem(reference_params, field, 1.0)


class TestQuantization:
    def test_non_quantized_flux_falls_back(self):
        # gentle flux; half-integer k sectors with |k| <= Q - 1/2 carry
        # zero modes that have no place in the nonzero-index labeling, so
        # stay below that threshold
        p = PhysicalParams(m=0.15, a=0.1, l=1.0, q_m=0.02)
        f = FieldParams(mu=0.1, e=0.25 * p.xi / p.q_m)  # flux ratio 0.25
        problem = build_angular_problem(p, f, 0.5)
        assert not problem.quantized
        sp = solve_angular(problem, 6)
        assert sp.method == "fd"
        assert len(sp.warnings) == 1

    def test_quantized_flux_uses_spectral(self):
        p = PhysicalParams(m=0.15, a=0.1, l=1.0, q_m=0.02)
        f = FieldParams(mu=0.1, e=1.0 * p.xi / p.q_m)  # flux ratio 1
        problem = build_angular_problem(p, f, 2.5)  # sector free of zero modes
        assert problem.quantized
        sp = solve_angular(problem, 6)
        assert sp.method == "spectral"
        assert sp.warnings == ()


class TestEigenfunctions:
    def test_normalization_and_residual(self, reference_params, field):
        # full closed interval: the weight kills the integrand at the poles
        problem = build_angular_problem(reference_params, field, 0.5)
        sp = solve_angular(problem, 6)
        theta = np.linspace(0.0, math.pi, 4001)
        for j in (1, -1, 2, 3):
            S = angular_eigenfunction(problem, j, theta, spectrum=sp)
            norm = weighted_inner(problem, S, S, theta)
            assert abs(norm - 1.0) < 1e-8
        assert np.all(sp.residuals < 1e-6)

    def test_orthogonality(self, reference_params, field):
        problem = build_angular_problem(reference_params, field, 0.5)
        sp = solve_angular(problem, 6)
        theta = np.linspace(0.0, math.pi, 4001)
        funcs = {j: angular_eigenfunction(problem, j, theta, spectrum=sp) for j in (1, -1, 2, -2)}
        pairs = [(1, -1), (1, 2), (-1, -2), (2, -2)]
        for ja, jb in pairs:
            ip = weighted_inner(problem, funcs[ja], funcs[jb], theta)
            assert abs(ip) < 1e-7

    def test_endpoints_bounded(self, reference_params, field):
        problem = build_angular_problem(reference_params, field, 0.5)
        sp = solve_angular(problem, 4)
        theta = np.linspace(1e-6, math.pi - 1e-6, 2001)
        S = angular_eigenfunction(problem, 1, theta, spectrum=sp)
        assert np.all(np.isfinite(S))
        assert np.max(np.abs(S)) < 10.0


class TestConvergence:
    def test_fd_order_on_smooth_problem(self, reference_params, field):
        # observed order of the staggered scheme under halving; the mu a = 0
        # problem keeps the pencil symmetric and the eigenfunctions smooth
        f = FieldParams(mu=0.0, e=field.e)
        problem = build_angular_problem(reference_params, f, 0.5)
        lam = {}
        for N in (256, 512, 1024):
            lams, labels = _fd_window(problem, N, 4)
            lam[N] = lams[np.nonzero(labels == 1)[0][0]]
        exact = solve_angular(problem, 4, method="spectral").lam(1)
        e_coarse = abs(lam[256] - exact)
        e_mid = abs(lam[512] - exact)
        e_fine = abs(lam[1024] - exact)
        order = math.log2(e_coarse / e_mid)
        assert order > 1.9
        assert e_fine < e_mid < e_coarse

    def test_grid_halving_criterion(self, reference_params, field):
        problem = build_angular_problem(reference_params, field, 0.5)
        sp = solve_angular(problem, 10, method="fd")
        # the ladder stops only when successive refinements agree
        assert np.all(sp.error_estimates < 1e-6 * (1.0 + np.abs(sp.lambdas)))
