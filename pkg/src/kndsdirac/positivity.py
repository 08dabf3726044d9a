"""Weighted-norm equivalence for the rotating-frame spinor inner product.

The physical inner product on spinor fields over the exterior region
``r_+ < r < r_c`` differs from the flat reference product by a bounded
multiplication operator: with

    alpha(r, theta) = a sin(theta) sqrt(Delta_r) / (sqrt(Delta_theta) (r^2 + a^2)),

the two products sandwich each other with constants ``1 -/+ eta`` where
``eta = sup alpha < 1``.  ``alpha`` factorizes as ``beta(r) gamma(theta)``
and is controlled by the decreasing radial envelope

    h(r) = (a^2 / l^2) (l^2 - r^2) / (r^2 + a^2),

giving the a-priori bound ``eta <= sqrt(h(r_+)) < 1``.  This module builds
the constant matrices entering the equivalence, evaluates ``eta``
numerically, and checks the sandwich on sampled fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .geometry import PhysicalParams, HorizonData, build_delta, find_horizons

__all__ = [
    "WeightFunctions",
    "WeightMatrices",
    "OmegaMatrices",
    "build_weight_matrices",
    "build_weight_functions",
    "eta_bound",
    "omega_matrices",
    "norm_equivalence",
    "default_grids",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f: Callable[[float], float], lo: float, hi: float, iters: int = 80):
    """Golden-section maximization of a unimodal scalar function."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    xm = 0.5 * (lo + hi)
    return xm, f(xm)


@dataclass(frozen=True)
class WeightMatrices:
    """Constant matrices of the norm-equivalence algebra.

    ``B`` and ``C`` are Hermitian involutions; their product ``BC = CB`` is
    the real symmetric involution diag-block [[0,1],[1,0]] (+) on the first
    two components and (-) on the last two, with spectral projectors
    ``P_plus``, ``P_minus``.
    """

    B: np.ndarray
    C: np.ndarray
    BC: np.ndarray
    P_plus: np.ndarray
    P_minus: np.ndarray


@dataclass(frozen=True)
class OmegaMatrices:
    """Powers of the equivalence weight Omega at a fixed alpha value."""

    alpha: float
    omega2: np.ndarray
    omega_inv2: np.ndarray
    omega1: np.ndarray
    omega_inv1: np.ndarray


@dataclass(frozen=True)
class WeightFunctions:
    """Scalar weight data for a background.

    ``alpha(r, theta) = beta(r) * gamma(theta)``; ``eta`` is the numerically
    located supremum of ``alpha`` over the exterior strip and
    ``sqrt_h_rplus`` the closed-form upper bound it must respect.
    """

    params: PhysicalParams
    horizons: HorizonData
    alpha: Callable = field(repr=False)
    beta: Callable = field(repr=False)
    gamma: Callable = field(repr=False)
    h: Callable = field(repr=False)
    eta: float = 0.0
    sqrt_h_rplus: float = 0.0
    argmax_r: float = 0.0
    argmax_theta: float = 0.0


def build_weight_matrices() -> WeightMatrices:
    """Assemble the constant matrices ``B``, ``C``, ``BC`` and projectors."""
    B = np.zeros((4, 4), dtype=complex)
    B[0, 2] = -1j
    B[1, 3] = 1j
    B[2, 0] = 1j
    B[3, 1] = -1j
    C = np.zeros((4, 4), dtype=complex)
    C[0, 3] = 1j
    C[1, 2] = -1j
    C[2, 1] = 1j
    C[3, 0] = -1j
    BC = B @ C
    eye = np.eye(4, dtype=complex)
    return WeightMatrices(
        B=B,
        C=C,
        BC=BC,
        P_plus=0.5 * (eye + BC),
        P_minus=0.5 * (eye - BC),
    )


def build_weight_functions(
    params: PhysicalParams, horizons: Optional[HorizonData] = None
) -> WeightFunctions:
    """Construct the scalar weights and locate ``eta = sup alpha``.

    The supremum is bracketed on a 512x512 product grid, logarithmically
    refined toward ``r_+`` where the envelope bound peaks, then polished by
    coordinate-wise golden-section search.
    """
    if horizons is None:
        horizons = find_horizons(params)
    delta = build_delta(params)
    a = params.a
    a2 = a * a
    l2 = params.l * params.l
    rp, rc = horizons.r_plus, horizons.r_c

    def gamma(theta):
        ct = np.cos(theta)
        return np.sin(theta) / np.sqrt(1.0 + (a2 / l2) * ct * ct)

    def beta(r):
        d = np.maximum(delta(r), 0.0)
        return a * np.sqrt(d) / (r * r + a2)

    def alpha(r, theta):
        return beta(r) * gamma(theta)

    def h(r):
        return (a2 / l2) * (l2 - r * r) / (r * r + a2)

    sqrt_h_rplus = math.sqrt(max(h(rp), 0.0))

    if a == 0.0:
        return WeightFunctions(
            params, horizons, alpha, beta, gamma, h,
            eta=0.0, sqrt_h_rplus=sqrt_h_rplus,
            argmax_r=rp, argmax_theta=0.5 * math.pi,
        )

    # log-refined radial grid accumulating toward r_+, plus a uniform sweep
    # so the interior maximum of beta cannot slip between nodes.
    t = np.linspace(0.0, 1.0, 256)
    r_log = rp + (rc - rp) * np.expm1(8.0 * t) / np.expm1(8.0)
    r_lin = np.linspace(rp, rc, 256)
    r_grid = np.unique(np.concatenate([r_log, r_lin]))
    th_grid = np.linspace(0.0, math.pi, 512)
    vals = beta(r_grid)[:, None] * gamma(th_grid)[None, :]
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)

    r_best, th_best = float(r_grid[i]), float(th_grid[j])
    for _ in range(3):
        ilo = max(i - 1, 0)
        ihi = min(i + 1, len(r_grid) - 1)
        r_best, _ = _golden_max(
            lambda r: float(beta(r)), float(r_grid[ilo]), float(r_grid[ihi])
        )
        jlo = max(j - 1, 0)
        jhi = min(j + 1, len(th_grid) - 1)
        th_best, _ = _golden_max(
            lambda th: float(gamma(th)), float(th_grid[jlo]), float(th_grid[jhi])
        )
    eta = float(alpha(r_best, th_best))

    return WeightFunctions(
        params, horizons, alpha, beta, gamma, h,
        eta=eta, sqrt_h_rplus=sqrt_h_rplus,
        argmax_r=r_best, argmax_theta=th_best,
    )


def eta_bound(params: PhysicalParams, horizons: Optional[HorizonData] = None):
    """Numerical ``eta`` and its closed-form bound ``sqrt(h(r_+))``.

    Returns
    -------
    (eta_numeric, sqrt_h_rplus) : tuple of float

    Raises
    ------
    RuntimeError
        If the computed supremum exceeds the bound beyond round-off
        (1e-12), or the bound is not strictly below 1.  Either condition
        would invalidate the norm equivalence, so it is a hard failure.
    """
    wf = build_weight_functions(params, horizons)
    if wf.sqrt_h_rplus >= 1.0:
        raise RuntimeError(
            f"envelope bound sqrt(h(r_+)) = {wf.sqrt_h_rplus} is not < 1"
        )
    if wf.eta > wf.sqrt_h_rplus + 1e-12:
        raise RuntimeError(
            f"eta = {wf.eta} exceeds envelope bound {wf.sqrt_h_rplus}"
        )
    return wf.eta, wf.sqrt_h_rplus


def omega_matrices(alpha_value: float) -> OmegaMatrices:
    """Powers of the weight matrix Omega for a pointwise alpha value.

    Omega^2 = I + alpha*BC has eigenvalues {1+alpha (x2), 1-alpha (x2)}, so
    every real power is ``(1+alpha)^(s/2) P_plus + (1-alpha)^(s/2) P_minus``.

    Raises
    ------
    ValueError
        If ``alpha_value`` lies outside [0, 1); at ``alpha >= 1`` the weight
        degenerates and inverse powers do not exist.
    """
    if not 0.0 <= alpha_value < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha_value}")
    wm = build_weight_matrices()

    def power(s: float) -> np.ndarray:
        return (
            (1.0 + alpha_value) ** (0.5 * s) * wm.P_plus
            + (1.0 - alpha_value) ** (0.5 * s) * wm.P_minus
        )

    return OmegaMatrices(
        alpha=alpha_value,
        omega2=power(2.0),
        omega_inv2=power(-2.0),
        omega1=power(1.0),
        omega_inv1=power(-1.0),
    )


def default_grids(
    params: PhysicalParams,
    horizons: Optional[HorizonData] = None,
    nr: int = 96,
    ntheta: int = 96,
    margin: float = 1e-3,
):
    """Interior quadrature grids for the exterior strip.

    The radial measure carries 1/Delta_r, which diverges at both horizons,
    so the grid keeps a relative ``margin`` away from them.
    """
    if horizons is None:
        horizons = find_horizons(params)
    rp, rc = horizons.r_plus, horizons.r_c
    pad = margin * (rc - rp)
    r_grid = np.linspace(rp + pad, rc - pad, nr)
    theta_grid = np.linspace(margin, math.pi - margin, ntheta)
    return r_grid, theta_grid


def norm_equivalence(
    params: PhysicalParams,
    psi: np.ndarray,
    r_grid: Optional[np.ndarray] = None,
    theta_grid: Optional[np.ndarray] = None,
    horizons: Optional[HorizonData] = None,
):
    """Realized ratios of the weighted to the reference norm.

    Parameters
    ----------
    psi : ndarray, shape (..., nr, ntheta, 4)
        Spinor samples on the product grid; a leading batch axis is allowed.
    r_grid, theta_grid : ndarray, optional
        Interior grids; defaults from :func:`default_grids`.

    Returns
    -------
    (ratio_low, ratio_high) : tuple of float
        Minimum and maximum over the batch of
        ``<psi, Omega^2 psi> / <psi, psi>`` in the measure
        ``(r^2+a^2)/Delta_r * sin(theta)/sqrt(Delta_theta) dr dtheta``.
        Both lie in ``[1 - eta, 1 + eta]`` whenever the equivalence holds;
        the caller is expected to assert that sandwich.
    """
    if horizons is None:
        horizons = find_horizons(params)
    if r_grid is None or theta_grid is None:
        r_grid, theta_grid = default_grids(params, horizons)
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[-1] != 4 or psi.ndim < 3:
        raise ValueError("psi must have shape (..., nr, ntheta, 4)")
    if psi.ndim == 3:
        psi = psi[None]

    wf = build_weight_functions(params, horizons)
    delta = build_delta(params)
    a2 = params.a * params.a
    l2 = params.l * params.l
    ct = np.cos(theta_grid)
    dtheta_w = np.sin(theta_grid) / np.sqrt(1.0 + (a2 / l2) * ct * ct)
    measure = ((r_grid * r_grid + a2) / delta(r_grid))[:, None] * dtheta_w[None, :]

    wm = build_weight_matrices()
    alpha = wf.beta(r_grid)[:, None] * wf.gamma(theta_grid)[None, :]
    dens_ref = np.einsum("brtc,brtc->brt", psi.conj(), psi).real
    bc_psi = np.einsum("cd,brtd->brtc", wm.BC, psi)
    dens_bc = np.einsum("brtc,brtc->brt", psi.conj(), bc_psi).real
    dens_w = dens_ref + alpha[None] * dens_bc

    def integrate(dens):
        return np.trapezoid(
            np.trapezoid(dens * measure[None], theta_grid, axis=-1), r_grid, axis=-1
        )

    n_ref = integrate(dens_ref)
    n_w = integrate(dens_w)
    ratios = n_w / n_ref
    return float(np.min(ratios)), float(np.max(ratios))
