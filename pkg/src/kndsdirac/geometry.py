"""Kerr-Newman-de Sitter background geometry.

The horizon structure of a rotating charged black hole with positive
cosmological constant is governed by the radial quartic

    Delta_r(r) = (r^2 + a^2)(1 - r^2/l^2) - 2 m r + z^2,

where ``m`` is the mass, ``a`` the rotation parameter, ``l`` the de Sitter
radius and ``z^2 = q_e^2 + q_m^2`` the combined squared electric/magnetic
charge.  An admissible black hole has three real positive zeroes

    0 < r_- <= r_+ < r_c < l

(inner, outer and cosmological horizons) plus one negative zero
``r_n = -(r_- + r_+ + r_c)``.  This module builds the quartic, converts
between horizon radii and physical parameters, locates the critical masses
that bound the admissible mass window, classifies parameter sets, and finds
the horizon radii numerically.

Units are geometric and otherwise free: all lengths scale with ``l``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "NON_EXTREMAL",
    "EXTREMAL",
    "NO_BLACK_HOLE",
    "SPIN_RATIO_MAX",
    "NoBlackHoleError",
    "PhysicalParams",
    "DeltaQuartic",
    "HorizonData",
    "CriticalMassReport",
    "AdmissibilityReport",
    "ResolventCheck",
    "build_delta",
    "params_from_roots",
    "jacobian_det",
    "critical_masses",
    "admissibility",
    "cubic_resolvent_check",
    "find_horizons",
]

NON_EXTREMAL = "NonExtremal"
EXTREMAL = "Extremal"
NO_BLACK_HOLE = "NoBlackHole"

# Largest value of a^2/l^2 for which the angular weight 1 + (a^2/l^2) cos^2
# stays within the regime used by the angular solver: 7 - 4*sqrt(3).
SPIN_RATIO_MAX = 7.0 - 4.0 * math.sqrt(3.0)

# Relative half-width of the mass band classified as extremal.  The critical
# mass itself is only defined to a few ulps, so the band is a small multiple
# of machine epsilon; backgrounds built by assigning m = m_crit_minus fall
# inside it exactly.
_EXTREMAL_MASS_RTOL = 64.0 * np.finfo(float).eps

# Root-space extremality test used by the horizon finder.
_EXTREMAL_ROOT_RTOL = 1e-9


class NoBlackHoleError(ValueError):
    """Raised when horizon data is requested for an inadmissible background.

    Carries the machine-readable classification ``reason``.
    """

    def __init__(self, reason: str, report: "AdmissibilityReport" = None):
        super().__init__(f"no black-hole horizon structure: {reason}")
        self.reason = reason
        self.report = report


@dataclass(frozen=True)
class PhysicalParams:
    """Physical parameters of the background.

    Attributes
    ----------
    m : float
        Mass parameter, ``m > 0`` for black-hole backgrounds.
    a : float
        Rotation parameter, ``a >= 0`` and ``a^2 < l^2``.
    l : float
        de Sitter radius, ``l > 0``.
    q_e, q_m : float
        Electric and magnetic charge.
    """

    m: float
    a: float
    l: float
    q_e: float = 0.0
    q_m: float = 0.0

    def __post_init__(self):
        if not self.l > 0.0:
            raise ValueError(f"de Sitter radius must be positive, got l={self.l}")
        if self.a < 0.0:
            raise ValueError(f"rotation parameter must be >= 0, got a={self.a}")
        if not self.a * self.a < self.l * self.l:
            raise ValueError(
                f"require a^2 < l^2, got a={self.a}, l={self.l}"
            )

    @property
    def z2(self) -> float:
        """Combined squared charge q_e^2 + q_m^2."""
        return self.q_e * self.q_e + self.q_m * self.q_m

    @property
    def xi(self) -> float:
        """Angular deficit factor 1 + a^2/l^2."""
        return 1.0 + (self.a * self.a) / (self.l * self.l)


@dataclass(frozen=True)
class DeltaQuartic:
    """Coefficients of the horizon quartic, c4 r^4 + ... + c0.

    For the backgrounds handled here ``c3 = 0`` identically and
    ``c4 = -1/l^2 < 0``.
    """

    c4: float
    c3: float
    c2: float
    c1: float
    c0: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float) if not np.isscalar(r) else r
        return (((self.c4 * r + self.c3) * r + self.c2) * r + self.c1) * r + self.c0

    def derivative(self, r):
        r = np.asarray(r, dtype=float) if not np.isscalar(r) else r
        return ((4.0 * self.c4 * r + 3.0 * self.c3) * r + 2.0 * self.c2) * r + self.c1

    def second_derivative(self, r):
        return (12.0 * self.c4 * r + 6.0 * self.c3) * r + 2.0 * self.c2

    def coefficients(self) -> np.ndarray:
        """Descending-order coefficient array (c4, c3, c2, c1, c0)."""
        return np.array([self.c4, self.c3, self.c2, self.c1, self.c0])


@dataclass(frozen=True)
class HorizonData:
    """Real positive horizon radii and the background classification.

    ``r_minus <= r_plus < r_c``; the fourth (negative) zero of the quartic is
    determined by the vanishing cubic coefficient and is intentionally not
    part of this record.
    """

    r_minus: float
    r_plus: float
    r_c: float
    classification: str


@dataclass(frozen=True)
class CriticalMassReport:
    """Critical masses bounding the admissible window, with the radii where
    the corresponding double roots form.

    ``forte_satisfied`` records whether the charge/spin combination admits a
    mass window at all, i.e. whether ``(l^2-a^2)^2 >= 12 l^2 (a^2+z^2)``.
    When it fails the radii and masses are undefined and set to ``None``.
    """

    forte_satisfied: bool
    discriminant: float
    R_minus: Optional[float] = None
    R_plus: Optional[float] = None
    m_crit_minus: Optional[float] = None
    m_crit_plus: Optional[float] = None


@dataclass(frozen=True)
class AdmissibilityReport:
    """Classification of a parameter set with the supporting critical data."""

    classification: str
    reason: Optional[str]
    critical: CriticalMassReport
    m: float

    @property
    def is_admissible(self) -> bool:
        return self.classification in (NON_EXTREMAL, EXTREMAL)


@dataclass(frozen=True)
class ResolventCheck:
    """Outcome of the depressed-quartic realness test.

    The horizon quartic, rescaled to monic form r^4 + p r^2 + q r + w, has
    four real roots exactly when the auxiliary cubic u^3 - pt u - qt (with
    ``pt = 4 w + p^2/3`` and ``qt = 2 p^3/27 + q^2 - 8 p w / 3``) has three
    real roots and ``pt > 0``; ``disc = qt^2/4 - pt^3/27 <= 0`` is the
    three-real-roots condition.
    """

    all_real: bool
    p: float
    q: float
    w: float
    p_tilde: float
    q_tilde: float
    disc: float

    def __bool__(self) -> bool:
        return self.all_real


def build_delta(params: PhysicalParams) -> DeltaQuartic:
    """Assemble the horizon quartic for a parameter set.

    Expanding (r^2+a^2)(1-r^2/l^2) - 2 m r + z^2 gives

        c4 = -1/l^2, c3 = 0, c2 = 1 - a^2/l^2, c1 = -2m, c0 = a^2 + z^2.
    """
    a2 = params.a * params.a
    l2 = params.l * params.l
    return DeltaQuartic(
        c4=-1.0 / l2,
        c3=0.0,
        c2=1.0 - a2 / l2,
        c1=-2.0 * params.m,
        c0=a2 + params.z2,
    )


def params_from_roots(r_c: float, r_plus: float, r_minus: float, l: float):
    """Recover (m, a^2, z^2) from the three positive horizon radii.

    With the fourth root fixed by the vanishing r^3 coefficient,
    ``r_n = -(r_c + r_+ + r_-)``, matching the elementary symmetric functions
    of the quartic gives closed forms:

        m   = (r_c + r_+)(r_c + r_-)(r_+ + r_-) / (2 l^2)
        a^2 = l^2 - (r_c^2 + r_+^2 + r_-^2 + r_c r_+ + r_c r_- + r_+ r_-)
        z^2 = r_c r_+ r_- (r_c + r_+ + r_-) / l^2 - a^2

    Parameters must satisfy ``0 < r_minus <= r_plus < r_c < l``; violations
    raise ``ValueError``.  The caller is responsible for checking that the
    returned ``a^2`` and ``z^2`` are nonnegative (not every ordered triple
    descends from physical parameters).

    Returns
    -------
    (m, a2, z2) : tuple of float
    """
    if not (0.0 < r_minus <= r_plus < r_c):
        raise ValueError(
            f"require 0 < r_minus <= r_plus < r_c, got "
            f"({r_minus}, {r_plus}, {r_c})"
        )
    if not r_c < l:
        raise ValueError(f"require r_c < l, got r_c={r_c}, l={l}")
    l2 = l * l
    m = (r_c + r_plus) * (r_c + r_minus) * (r_plus + r_minus) / (2.0 * l2)
    sum_sq = r_c * r_c + r_plus * r_plus + r_minus * r_minus
    sum_pair = r_c * r_plus + r_c * r_minus + r_plus * r_minus
    a2 = l2 - (sum_sq + sum_pair)
    z2 = r_c * r_plus * r_minus * (r_c + r_plus + r_minus) / l2 - a2
    return m, a2, z2


def jacobian_det(r_c: float, r_plus: float, r_minus: float, l: float) -> float:
    """Determinant of d(m, a^2, z^2)/d(r_c, r_+, r_-) at fixed ``l``.

    Factors completely over root differences and sums:

        J = -(1 / (2 l^4)) (r_c - r_+)(r_c - r_-)(r_+ - r_-)
            (2 r_c + r_+ + r_-)(r_c + 2 r_+ + r_-)(r_c + r_+ + 2 r_-),

    strictly negative on the ordered open cone r_- < r_+ < r_c and vanishing
    exactly on its boundary (coinciding roots).
    """
    l4 = (l * l) ** 2
    return (
        -1.0
        / (2.0 * l4)
        * (r_c - r_plus)
        * (r_c - r_minus)
        * (r_plus - r_minus)
        * (2.0 * r_c + r_plus + r_minus)
        * (r_c + 2.0 * r_plus + r_minus)
        * (r_c + r_plus + 2.0 * r_minus)
    )


def critical_masses(a: float, z: float, l: float) -> CriticalMassReport:
    """Critical masses where the quartic develops double roots.

    The stationary radii of the quartic at criticality are

        R_{-/+}^2 = (S -/+ ... ) / 6,  S = l^2 - a^2,  D = sqrt(S^2 - 12 l^2 (a^2 + z^2)),

    i.e. R_- = sqrt((S - D)/6), R_+ = sqrt((S + D)/6), and the masses at
    which the double roots occur are

        m_crit_- = R_- (2 S + D) / (3 l^2),   m_crit_+ = R_+ (2 S - D) / (3 l^2).

    ``m_crit_-`` merges the inner pair (extremal black hole); ``m_crit_+``
    merges the outer pair r_+ = r_c.  The discriminant condition
    ``S^2 >= 12 l^2 (a^2 + z^2)`` must hold for the window to exist; when it
    fails the report carries ``forte_satisfied=False`` and no values.
    """
    if l <= 0.0:
        raise ValueError(f"de Sitter radius must be positive, got l={l}")
    l2 = l * l
    S = l2 - a * a
    disc = S * S - 12.0 * l2 * (a * a + z * z)
    if disc < 0.0:
        return CriticalMassReport(forte_satisfied=False, discriminant=disc)
    D = math.sqrt(disc)
    # Guard tiny negative round-off when D is close to S.
    R_minus = math.sqrt(max((S - D) / 6.0, 0.0))
    R_plus = math.sqrt((S + D) / 6.0)
    m_minus = R_minus * (2.0 * S + D) / (3.0 * l2)
    m_plus = R_plus * (2.0 * S - D) / (3.0 * l2)
    return CriticalMassReport(
        forte_satisfied=True,
        discriminant=disc,
        R_minus=R_minus,
        R_plus=R_plus,
        m_crit_minus=m_minus,
        m_crit_plus=m_plus,
    )


def admissibility(params: PhysicalParams) -> AdmissibilityReport:
    """Classify a parameter set as NonExtremal, Extremal or NoBlackHole.

    A background is admissible when the charge/spin window exists and the
    mass lies strictly between the critical masses.  ``m = m_crit_minus``
    (within a few ulps) is Extremal; ``m >= m_crit_plus`` loses the outer
    pair of horizons (``r_+ = r_c`` at equality) and is excluded.
    """
    crit = critical_masses(params.a, math.sqrt(params.z2), params.l)
    if not crit.forte_satisfied:
        return AdmissibilityReport(NO_BLACK_HOLE, "forte violated", crit, params.m)
    m = params.m
    band = _EXTREMAL_MASS_RTOL * max(abs(crit.m_crit_minus), abs(crit.m_crit_plus), 1.0)
    if abs(m - crit.m_crit_minus) <= band and crit.m_crit_minus > 0.0:
        return AdmissibilityReport(EXTREMAL, None, crit, m)
    if m <= crit.m_crit_minus:
        return AdmissibilityReport(NO_BLACK_HOLE, "m too small", crit, m)
    if m >= crit.m_crit_plus:
        return AdmissibilityReport(
            NO_BLACK_HOLE, "m >= m_crit_plus (r_+ = r_c excluded)", crit, m
        )
    return AdmissibilityReport(NON_EXTREMAL, None, crit, m)


def cubic_resolvent_check(params: PhysicalParams) -> ResolventCheck:
    """Test four-real-rootedness of the horizon quartic via its resolvent.

    Rescale -l^2 Delta_r to the monic depressed form r^4 + p r^2 + q r + w
    with

        p = -(l^2 - a^2),  q = 2 m l^2,  w = -l^2 (a^2 + z^2),

    and form the auxiliary cubic u^3 - pt u - qt.  All four quartic roots are
    real exactly when ``pt > 0`` and ``qt^2/4 - pt^3/27 <= 0``.
    """
    l2 = params.l * params.l
    a2 = params.a * params.a
    p = -(l2 - a2)
    q = 2.0 * params.m * l2
    w = -l2 * (a2 + params.z2)
    p_tilde = 4.0 * w + p * p / 3.0
    q_tilde = 2.0 * p ** 3 / 27.0 + q * q - 8.0 * p * w / 3.0
    disc = 0.25 * q_tilde * q_tilde - p_tilde ** 3 / 27.0
    all_real = (p_tilde > 0.0) and (disc <= 0.0)
    return ResolventCheck(all_real, p, q, w, p_tilde, q_tilde, disc)


def _polish_root(delta: DeltaQuartic, r: float, iters: int = 8) -> float:
    """Newton-polish a simple root of the quartic."""
    for _ in range(iters):
        f = delta(r)
        df = delta.derivative(r)
        if df == 0.0:
            break
        step = f / df
        r_new = r - step
        if r_new == r:
            break
        r = r_new
    return r


def _polish_double_root(delta: DeltaQuartic, r: float, iters: int = 30) -> float:
    """Newton-polish a double root by solving Delta_r'(r) = 0."""
    for _ in range(iters):
        f = delta.derivative(r)
        df = delta.second_derivative(r)
        if df == 0.0:
            break
        r_new = r - f / df
        if r_new == r:
            break
        r = r_new
    return r


def find_horizons(params: PhysicalParams) -> HorizonData:
    """Locate the horizon radii of an admissible background.

    Roots are obtained from the quartic's companion matrix (``numpy.roots``)
    and Newton-polished.  For extremal backgrounds the merged inner pair is
    re-polished as a stationary point of the quartic, which stays
    well-conditioned where the plain root Newton iteration degenerates.

    Raises
    ------
    NoBlackHoleError
        If the parameter set is not admissible; carries the classification
        reason.
    RuntimeError
        If the polished roots fail to reproduce the quartic coefficients to
        1e-10 relative (indicates catastrophic conditioning; not expected
        for admissible parameters).
    """
    report = admissibility(params)
    if not report.is_admissible:
        raise NoBlackHoleError(report.reason, report)

    delta = build_delta(params)
    raw = np.roots(delta.coefficients())
    scale = max(1.0, float(np.max(np.abs(raw))))
    # Admissible quartics have four real roots; near-extremal pairs may come
    # back with small spurious imaginary parts from the companion eigensolve.
    real_mask = np.abs(raw.imag) <= 1e-6 * scale
    if int(real_mask.sum()) != 4:
        raise RuntimeError(
            f"expected four real horizon roots, found {int(real_mask.sum())} "
            f"(roots {raw})"
        )
    roots = np.sort(raw.real)
    r_n, r_m, r_p, r_c = (float(v) for v in roots)

    extremal_roots = abs(r_p - r_m) <= _EXTREMAL_ROOT_RTOL * abs(r_p)
    if report.classification == EXTREMAL or extremal_roots:
        r_dbl = _polish_double_root(delta, 0.5 * (r_m + r_p))
        r_m = r_p = r_dbl
        r_c = _polish_root(delta, r_c)
    else:
        r_m = _polish_root(delta, r_m)
        r_p = _polish_root(delta, r_p)
        r_c = _polish_root(delta, r_c)

    # Cross-check: rebuild the quartic from the polished roots.  The negative
    # root is pinned by the vanishing cubic coefficient.
    r_neg = -(r_m + r_p + r_c)
    rebuilt = delta.c4 * np.poly([r_c, r_p, r_m, r_neg])
    ref = delta.coefficients()
    err = np.max(np.abs(rebuilt - ref)) / max(1.0, float(np.max(np.abs(ref))))
    if err > 1e-10:
        raise RuntimeError(
            f"root/coefficient consistency failure: relative error {err:.3e}"
        )

    if not (0.0 <= r_m <= r_p < r_c < params.l):
        raise RuntimeError(
            f"horizon ordering violated: ({r_m}, {r_p}, {r_c}), l={params.l}"
        )

    return HorizonData(
        r_minus=r_m,
        r_plus=r_p,
        r_c=r_c,
        classification=report.classification,
    )
