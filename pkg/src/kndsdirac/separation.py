"""Separated-mode structures: tortoise coordinate, potentials, symbol algebra.

After separating the charged massive spinor field on an admissible
background into azimuthal half-integer modes ``exp(-i k phi)`` and angular
eigenfunctions, the radial part satisfies a 2x2 first-order system in the
tortoise coordinate

    dy = (r^2 + a^2) / Delta_r dr,

which maps (r_+, r_c) onto the whole real line.  This module constructs the
tortoise map in closed form through partial fractions of the quartic, the
matrix potential of the reduced system and its constant horizon limits, the
integrability estimate of the potential tail at the cosmological end, and
the constant unitary that block-diagonalizes the pre-separation Hamiltonian
symbol (used as an algebraic self-test).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from . import _kernels
from .geometry import (
    PhysicalParams,
    HorizonData,
    build_delta,
    find_horizons,
)

__all__ = [
    "FieldParams",
    "ModeIndices",
    "TortoiseMap",
    "HorizonPotentials",
    "RadialCoefficients",
    "P2Tail",
    "build_tortoise_map",
    "tortoise_y",
    "tortoise_r",
    "horizon_potentials",
    "potential_matrix",
    "potential_deviation_norm",
    "radial_system_matrix",
    "build_radial_coefficients",
    "p2_remainder_l1",
    "magnetic_quantization_check",
    "build_V_unitary",
    "assemble_hamiltonian_symbol",
    "assemble_reduced_symbol",
]


def check_half_integer(k: float) -> float:
    """Validate that k is a half-odd-integer (..., -1/2, 1/2, 3/2, ...)."""
    two_k = 2.0 * k
    if abs(two_k - round(two_k)) > 1e-12 or round(two_k) % 2 == 0:
        raise ValueError(f"azimuthal index k must be in Z + 1/2, got {k}")
    return k


@dataclass(frozen=True)
class FieldParams:
    """Spinor field parameters: mass ``mu >= 0`` and charge coupling ``e``."""

    mu: float
    e: float = 0.0

    def __post_init__(self):
        if self.mu < 0.0:
            raise ValueError(f"field mass must be >= 0, got mu={self.mu}")


@dataclass(frozen=True)
class ModeIndices:
    """A single separated mode: azimuthal k in Z+1/2, angular index j in
    Z without 0, and trial frequency omega."""

    k: float
    j: int
    omega: float

    def __post_init__(self):
        check_half_integer(self.k)
        if int(self.j) != self.j or self.j == 0:
            raise ValueError(f"angular index j must be a nonzero integer, got {self.j}")


@dataclass(frozen=True)
class TortoiseMap:
    """Closed-form tortoise map data for one background.

    The antiderivative of (r^2+a^2)/Delta_r decomposes over the quartic
    roots.  Non-extremal:

        y(r) = sum_i w_i log|r - r_i| - y_ref,   w_i = (r_i^2+a^2)/Delta_r'(r_i),

    where w_i = 1/(2 kappa_i) with kappa_i the surface gravity of root i.
    Extremal (merged inner pair at r_+):

        y(r) = -A/(r - r_+) + B log(r - r_+) + w_c log|r - r_c|
               + w_n log(r - r_n) - y_ref,

    with A = G(r_+) > 0, B = G'(r_+) for
    G(r) = -l^2 (r^2+a^2)/((r - r_c)(r - r_n)).  The normalization point is
    the geometric mean r0 = sqrt(r_+ r_c), where y = 0.
    """

    params: PhysicalParams
    horizons: HorizonData
    r_neg: float
    kappa_minus: float
    kappa_plus: float
    kappa_c: float
    kappa_neg: float
    r0: float
    extremal: bool
    A_ext: float
    pack: np.ndarray = dc_field(repr=False, default=None)

    @property
    def r_minus(self) -> float:
        return self.horizons.r_minus

    @property
    def r_plus(self) -> float:
        return self.horizons.r_plus

    @property
    def r_c(self) -> float:
        return self.horizons.r_c


@dataclass(frozen=True)
class HorizonPotentials:
    """Constant limits of the radial matrix potential at the two ends."""

    phi_plus: float
    phi_c: float


@dataclass(frozen=True)
class P2Tail:
    """Tail integral of the potential remainder toward the cosmological end,
    with an error bound from geometric extrapolation of the segment sums."""

    value: float
    error_bound: float
    y_max: float
    segments: np.ndarray

    def __float__(self) -> float:
        return self.value


def build_tortoise_map(
    params: PhysicalParams, horizons: Optional[HorizonData] = None
) -> TortoiseMap:
    """Construct the tortoise map of an admissible background."""
    if horizons is None:
        horizons = find_horizons(params)
    delta = build_delta(params)
    a2 = params.a * params.a
    l2 = params.l * params.l
    rm, rp, rc = horizons.r_minus, horizons.r_plus, horizons.r_c
    rn = -(rm + rp + rc)
    extremal = horizons.classification == "Extremal"

    def kappa(r):
        s = r * r + a2
        if s == 0.0:
            # a = 0 puts a quartic root at r = 0 (no inner horizon); its
            # weight (r^2+a^2)/Delta' vanishes, so it drops out of the map
            return math.inf
        return delta.derivative(r) / (2.0 * s)

    kap_m = kappa(rm)
    kap_p = kappa(rp)
    kap_c = kappa(rc)
    kap_n = kappa(rn)

    mp = np.zeros(16)
    mp[0], mp[1], mp[2], mp[3] = rp, rc, rm, rn
    mp[10] = a2
    mp[11] = 1.0 / l2
    mp[13] = rc - rp
    mp[14] = rp - rm
    mp[15] = rp - rn

    if extremal:
        # partial fractions with the double root at r_+
        def G(r):
            return -l2 * (r * r + a2) / ((r - rc) * (r - rn))

        A = G(rp)
        # G'(r_+) by the quotient rule
        num = rp * rp + a2
        den = (rp - rc) * (rp - rn)
        dnum = 2.0 * rp
        dden = (rp - rc) + (rp - rn)
        B = -l2 * (dnum * den - num * dden) / (den * den)
        w_c = (rc * rc + a2) / delta.derivative(rc)
        w_n = (rn * rn + a2) / delta.derivative(rn)
        mp[4] = B
        mp[5] = w_c
        mp[6] = 0.0
        mp[7] = w_n
        mp[8] = A
        mp[12] = 1.0
        kap_p = 0.0
        kap_m = 0.0
    else:
        A = 0.0
        mp[4] = 1.0 / (2.0 * kap_p)
        mp[5] = 1.0 / (2.0 * kap_c)
        mp[6] = 1.0 / (2.0 * kap_m)
        mp[7] = 1.0 / (2.0 * kap_n)

    r0 = math.sqrt(rp * rc)
    # evaluate the un-normalized map at r0 via its logit coordinate
    tau0 = math.log((r0 - rp) / (rc - r0))
    y_raw, _, _, _ = _kernels.geom_of_tau(tau0, mp)
    mp[9] = y_raw

    return TortoiseMap(
        params=params,
        horizons=horizons,
        r_neg=rn,
        kappa_minus=kap_m,
        kappa_plus=kap_p,
        kappa_c=kap_c,
        kappa_neg=kap_n,
        r0=r0,
        extremal=extremal,
        A_ext=A,
        pack=mp,
    )


def tortoise_y(tmap: TortoiseMap, r):
    """y(r) for r strictly inside (r_+, r_c).

    Raises ``ValueError`` for arguments outside the open exterior interval.
    """
    r_arr = np.asarray(r, dtype=float)
    rp, rc = tmap.r_plus, tmap.r_c
    if np.any(r_arr <= rp) or np.any(r_arr >= rc):
        raise ValueError(
            f"tortoise map defined on open interval ({rp}, {rc}); got values "
            f"outside it"
        )
    mp = tmap.pack
    dp = r_arr - rp
    dc = rc - r_arr
    fm = r_arr - tmap.r_minus
    fn = r_arr - tmap.r_neg
    if tmap.extremal:
        y = (
            -mp[8] / dp
            + mp[4] * np.log(dp)
            + mp[5] * np.log(dc)
            + mp[7] * np.log(fn)
            - mp[9]
        )
    else:
        y = (
            mp[4] * np.log(dp)
            + mp[5] * np.log(dc)
            + mp[6] * np.log(fm)
            + mp[7] * np.log(fn)
            - mp[9]
        )
    return float(y) if np.isscalar(r) else y


def tortoise_r(tmap: TortoiseMap, y):
    """r(y), the inverse tortoise map, for any real y.

    Solved in the logit variable tau = log((r-r_+)/(r_c-r)), where the
    Newton iteration is well conditioned at both ends.  The round trip
    r -> y -> r is exact to a few ulp of r for all y.  The reverse round
    trip y -> r(y) -> y satisfies |y(r(y)) - y| <= 1e-10 (1 + |y|) on
    moderate ranges (|y| <~ 150 for order-unity surface gravities) and
    then saturates: beyond that, one ulp of r spans more than 1e-10 in y,
    which no inverse in r coordinates can beat.
    """
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    order = np.argsort(y_arr, kind="stable")
    taus_sorted = _kernels.tau_array(np.ascontiguousarray(y_arr[order]), tmap.pack)
    taus = np.empty_like(taus_sorted)
    taus[order] = taus_sorted
    gap = tmap.r_c - tmap.r_plus
    # r = r_+ + gap * sigmoid(tau), computed stably on both branches
    sig = np.where(
        taus >= 0.0,
        1.0 / (1.0 + np.exp(-np.abs(taus))),
        np.exp(-np.abs(taus)) / (1.0 + np.exp(-np.abs(taus))),
    )
    r = tmap.r_plus + gap * sig
    return float(r[0]) if np.isscalar(y) else r.reshape(np.shape(y))


def horizon_potentials(
    params: PhysicalParams,
    field: FieldParams,
    k: float,
    horizons: Optional[HorizonData] = None,
) -> HorizonPotentials:
    """Constant potential limits phi_+ and phi_c of a mode.

        phi_end = (a k Xi + e q_e r_end) / (r_end^2 + a^2)

    At a = 0 both reduce to the electrostatic value e q_e / r_end.
    """
    check_half_integer(k)
    if horizons is None:
        horizons = find_horizons(params)
    a = params.a
    akxi = a * params.xi * k

    def phi(r_end):
        return (akxi + field.e * params.q_e * r_end) / (r_end * r_end + a * a)

    return HorizonPotentials(phi_plus=phi(horizons.r_plus), phi_c=phi(horizons.r_c))


def _mode_pack(params: PhysicalParams, field: FieldParams, k: float, lam: float,
               omega: float) -> np.ndarray:
    md = np.empty(6)
    md[0] = params.a * params.xi * k
    md[1] = field.e * params.q_e
    md[2] = field.mu
    md[3] = lam
    md[4] = omega
    md[5] = params.a * params.a
    return md


def _coeff_triple(tmap: TortoiseMap, field: FieldParams, k: float, lam: float, y):
    """(c, d, lt) coefficient arrays at tortoise positions y."""
    params = tmap.params
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    r = np.atleast_1d(tortoise_r(tmap, y_arr))
    delta = np.maximum(build_delta(params)(r), 0.0)
    sq = np.sqrt(delta)
    s = r * r + params.a * params.a
    c = (params.a * params.xi * k + field.e * params.q_e * r) / s
    d = field.mu * r * sq / s
    lt = lam * sq / s
    return c, d, lt


def potential_matrix(
    params: PhysicalParams,
    field: FieldParams,
    k: float,
    lam: float,
    y,
    tmap: Optional[TortoiseMap] = None,
):
    """Symmetric 2x2 matrix potential V(y) of the reduced radial system.

        V = [[c + d, lt], [lt, c - d]],
        c  = (a Xi k + e q_e r) / (r^2 + a^2),
        d  = mu r sqrt(Delta_r) / (r^2 + a^2),
        lt = lam sqrt(Delta_r) / (r^2 + a^2).

    Returns shape (..., 2, 2); V -> phi_end * I at both ends.
    """
    check_half_integer(k)
    if tmap is None:
        tmap = build_tortoise_map(params)
    c, d, lt = _coeff_triple(tmap, field, k, lam, y)
    out = np.empty(c.shape + (2, 2))
    out[..., 0, 0] = c + d
    out[..., 0, 1] = lt
    out[..., 1, 0] = lt
    out[..., 1, 1] = c - d
    return out[0] if np.isscalar(y) else out.reshape(np.shape(y) + (2, 2))


def potential_deviation_norm(
    tmap: TortoiseMap,
    field: FieldParams,
    k: float,
    lam: float,
    y,
    end: str,
):
    """Spectral norm of V(y) - phi_end I, in closed form.

    The shifted potential [[dc+d, lt],[lt, dc-d]] has eigenvalues
    dc +- sqrt(d^2 + lt^2), so the norm is |dc| + sqrt(d^2 + lt^2).
    """
    pots = horizon_potentials(tmap.params, field, k, tmap.horizons)
    phi = pots.phi_plus if end == "inner" else pots.phi_c
    c, d, lt = _coeff_triple(tmap, field, k, lam, y)
    val = np.abs(c - phi) + np.hypot(d, lt)
    return float(val[0]) if np.isscalar(y) else val.reshape(np.shape(y))


def radial_system_matrix(
    params: PhysicalParams,
    field: FieldParams,
    k: float,
    lam: float,
    omega: float,
    y,
    tmap: Optional[TortoiseMap] = None,
):
    """First-order system matrix A(y) with X' = A X for the radial pair.

    Row-reducing the eigenvalue system of the reduced radial operator gives

        A = [[ lt, (c - d) - omega ], [ omega - (c + d), -lt ]];

    it is traceless, so the Wronskian of two solutions is conserved.  Its
    spectral norm equals that of V - omega*I because A = J (V - omega*I)
    with J the standard symplectic rotation.
    """
    if tmap is None:
        tmap = build_tortoise_map(params)
    c, d, lt = _coeff_triple(tmap, field, k, lam, y)
    out = np.empty(c.shape + (2, 2))
    out[..., 0, 0] = lt
    out[..., 0, 1] = (c - d) - omega
    out[..., 1, 0] = omega - (c + d)
    out[..., 1, 1] = -lt
    return out[0] if np.isscalar(y) else out.reshape(np.shape(y) + (2, 2))


@dataclass(frozen=True)
class RadialCoefficients:
    """Bundle of callable coefficients for one (k, lambda) radial channel.

    Construction is cheap; the tortoise map is built once and shared by the
    potential, the system matrix and the integration kernels.
    """

    params: PhysicalParams
    field: FieldParams
    k: float
    lam: float
    tortoise: TortoiseMap
    potentials: HorizonPotentials

    def mode_pack(self, omega: float) -> np.ndarray:
        return _mode_pack(self.params, self.field, self.k, self.lam, omega)

    def potential(self, y):
        return potential_matrix(
            self.params, self.field, self.k, self.lam, y, self.tortoise
        )

    def system_matrix(self, omega: float, y):
        return radial_system_matrix(
            self.params, self.field, self.k, self.lam, omega, y, self.tortoise
        )

    def deviation_norm(self, y, end: str):
        return potential_deviation_norm(
            self.tortoise, self.field, self.k, self.lam, y, end
        )

    def phi_end(self, end: str) -> float:
        return self.potentials.phi_plus if end == "inner" else self.potentials.phi_c


def build_radial_coefficients(
    params: PhysicalParams,
    field: FieldParams,
    k: float,
    lam: float,
    tmap: Optional[TortoiseMap] = None,
) -> RadialCoefficients:
    check_half_integer(k)
    if tmap is None:
        tmap = build_tortoise_map(params)
    pots = horizon_potentials(params, field, k, tmap.horizons)
    return RadialCoefficients(params, field, k, lam, tmap, pots)


def p2_remainder_l1(
    params: PhysicalParams,
    field: FieldParams,
    k: float,
    lam: float,
    d: float,
    tmap: Optional[TortoiseMap] = None,
    tol: float = 1e-10,
    max_segments: int = 200,
) -> P2Tail:
    """Integral of ||V - phi_c I|| over [d, infinity).

    The integrand decays exponentially at the rate set by the cosmological
    surface gravity, so the integral is chopped into segments of a few
    e-folding lengths, each evaluated with Gauss-Legendre quadrature, until
    the geometric tail extrapolated from consecutive segment ratios drops
    below ``tol``.  The returned error bound adds that extrapolated tail.

    Only the cosmological end is in scope: at an extremal inner end the
    remainder decays like 1/|y| and has no finite tail integral.
    """
    if tmap is None:
        tmap = build_tortoise_map(params)
    kap = abs(tmap.kappa_c)
    seg_len = 4.0 / kap
    rho = math.exp(-kap * seg_len)
    nodes, weights = np.polynomial.legendre.leggauss(24)

    total = 0.0
    segments = []
    y_lo = float(d)
    tail = math.inf
    for _ in range(max_segments):
        y_hi = y_lo + seg_len
        ys = 0.5 * (y_hi + y_lo) + 0.5 * (y_hi - y_lo) * nodes
        vals = potential_deviation_norm(tmap, field, k, lam, ys, "cosmological")
        seg = 0.5 * (y_hi - y_lo) * float(np.dot(weights, vals))
        total += seg
        segments.append(seg)
        y_lo = y_hi
        if len(segments) >= 2:
            ratio = segments[-1] / segments[-2] if segments[-2] > 0.0 else rho
            ratio = min(max(ratio, 0.0), 0.96)
            tail = segments[-1] * ratio / (1.0 - ratio)
            if tail < tol:
                break

    # Beyond the point where r(y) is one ulp away from r_c the closed-form
    # integrand evaluates to exactly zero although the true remainder is
    # merely below resolution; bound that truncated mass explicitly.
    delta = build_delta(params)
    rc = tmap.r_c
    a2 = params.a * params.a
    eps_r = 4.0 * np.finfo(float).eps * rc
    sat_norm = (
        (abs(field.mu) * rc + abs(lam))
        * math.sqrt(abs(delta.derivative(rc)) * eps_r)
        + abs(field.e * params.q_e) * eps_r
    ) / (rc * rc + a2)
    if not math.isfinite(tail):
        tail = 0.0
    return P2Tail(
        value=total + tail,
        error_bound=2.0 * tail + sat_norm / kap,
        y_max=y_lo,
        segments=np.array(segments),
    )


def magnetic_quantization_check(params: PhysicalParams, field: FieldParams) -> bool:
    """Whether q_m * e / Xi is an integer (within 1e-12).

    This is the flux quantization condition under which the angular operator
    is essentially self-adjoint and the global spectral basis applies.
    """
    x = params.q_m * field.e / params.xi
    return abs(x - round(x)) <= 1e-12


def build_V_unitary() -> np.ndarray:
    """The constant unitary V that block-diagonalizes the Hamiltonian symbol.

        V = (1/sqrt(2)) [[0, -i, 0, i], [i, 0, -i, 0],
                         [0, -1, 0, -1], [-1, 0, -1, 0]]

    Satisfies V V* = I and |det V| = 1.
    """
    return np.array(
        [
            [0.0, -1.0j, 0.0, 1.0j],
            [1.0j, 0.0, -1.0j, 0.0],
            [0.0, -1.0, 0.0, -1.0],
            [-1.0, 0.0, -1.0, 0.0],
        ],
        dtype=complex,
    ) / math.sqrt(2.0)


def _theta_weights(params: PhysicalParams, theta: float):
    a2 = params.a * params.a
    l2 = params.l * params.l
    dth = 1.0 + (a2 / l2) * math.cos(theta) ** 2
    return dth, math.sqrt(dth)


def assemble_hamiltonian_symbol(
    params: PhysicalParams,
    field: FieldParams,
    r: float,
    theta: float,
    s_r: complex,
    s_theta: complex,
    s_phi: complex,
) -> np.ndarray:
    """Pre-rotation Hamiltonian symbol (radial plus angular parts).

    The derivative slots (s_r, s_theta, s_phi) substitute the corresponding
    partial derivatives; since every matrix factor is constant, conjugation
    identities hold exactly for arbitrary complex slot values.
    """
    delta = build_delta(params)(r)
    dth, sqdth = _theta_weights(params, theta)
    a = params.a
    s = r * r + a * a
    sqd = math.sqrt(delta)
    mu, e = field.mu, field.e
    q_e, q_m = params.q_e, params.q_m
    xi = params.xi

    E_minus = 1j * (delta / s) * (s_r + (a * xi / delta) * s_phi - 1j * e * q_e * r / delta)
    E_plus = 1j * (delta / s) * (s_r - (a * xi / delta) * s_phi + 1j * e * q_e * r / delta)

    M1 = np.zeros((4, 4), dtype=complex)
    M1[0, 2] = M1[1, 3] = M1[2, 0] = M1[3, 1] = 1.0
    R = -mu * r * sqd / s * M1 + np.diag(
        np.array([E_minus, -E_plus, -E_plus, E_minus], dtype=complex)
    )

    ang = s_theta + 0.5 / math.tan(theta)
    g_phi = 1j * xi / (dth * math.sin(theta)) * s_phi
    g_m = e * q_m / (dth * math.tan(theta))
    M_plus = (sqd * sqdth / s) * (ang + g_phi - g_m)
    M_minus = (sqd * sqdth / s) * (ang - g_phi + g_m)

    M2 = np.zeros((4, 4), dtype=complex)
    M2[0, 2] = M2[1, 3] = 1j
    M2[2, 0] = M2[3, 1] = -1j
    M3 = np.zeros((4, 4), dtype=complex)
    M3[0, 1] = -M_minus
    M3[1, 0] = M_plus
    M3[2, 3] = M_minus
    M3[3, 2] = -M_plus
    A = (a * mu * math.cos(theta) * sqd / s) * M2 + M3
    return R + A


def assemble_reduced_symbol(
    params: PhysicalParams,
    field: FieldParams,
    r: float,
    theta: float,
    s_r: complex,
    s_theta: complex,
    s_phi: complex,
) -> np.ndarray:
    """Post-rotation block form of the Hamiltonian symbol.

    Conjugating :func:`assemble_hamiltonian_symbol` by the constant unitary
    of :func:`build_V_unitary` yields 2x2 blocks: scalar diagonal blocks
    (i a Xi s_phi + e q_e r +- mu r sqrt(Delta_r)) / (r^2+a^2) and
    off-diagonal blocks (+-Delta_r s_r I + sqrt(Delta_r) U) / (r^2+a^2),
    where U is the angular 2x2 symbol.
    """
    delta = build_delta(params)(r)
    dth, sqdth = _theta_weights(params, theta)
    a = params.a
    s = r * r + a * a
    sqd = math.sqrt(delta)
    mu, e = field.mu, field.e
    xi = params.xi

    g = 1j * xi / (dth * math.sin(theta)) * s_phi - params.q_m * e / (dth * math.tan(theta))
    ang = s_theta + 0.5 / math.tan(theta)
    U = np.array(
        [
            [-mu * a * math.cos(theta), 1j * sqdth * (ang + g)],
            [1j * sqdth * (ang - g), mu * a * math.cos(theta)],
        ],
        dtype=complex,
    )
    scalar_plus = (1j * a * xi * s_phi + e * params.q_e * r + mu * r * sqd) / s
    scalar_minus = (1j * a * xi * s_phi + e * params.q_e * r - mu * r * sqd) / s
    eye2 = np.eye(2, dtype=complex)
    out = np.zeros((4, 4), dtype=complex)
    out[:2, :2] = scalar_plus * eye2
    out[2:, 2:] = scalar_minus * eye2
    out[:2, 2:] = (delta / s) * s_r * eye2 + (sqd / s) * U
    out[2:, :2] = -(delta / s) * s_r * eye2 + (sqd / s) * U
    return out
