"""Compiled numerical kernels for tortoise inversion and radial integration.

Everything here is plain scalar/array code so the whole module can run
either through ``numba.njit`` or as ordinary Python, selected once by
:mod:`kndsdirac.backend`.  Background and mode data travel as packed float64
arrays to keep the kernels free of Python objects.

Tortoise-map pack ``mp`` (float64[16]), built by
:func:`kndsdirac.separation.build_tortoise_map`:

====  =======================================================
 0    r_plus
 1    r_c
 2    r_minus
 3    r_neg (negative quartic root)
 4    log coefficient at r_plus  (extremal: coefficient of log(r - r_plus))
 5    log coefficient at r_c
 6    log coefficient at r_minus (extremal: unused, 0)
 7    log coefficient at r_neg
 8    rational coefficient A at a merged inner pair (0 if non-extremal)
 9    y offset so that y(r0) = 0
10    a^2
11    1/l^2
12    extremal flag (0.0 / 1.0)
13    r_c - r_plus
14    r_plus - r_minus
15    r_plus - r_neg
====  =======================================================

Mode pack ``md`` (float64[6]):  0: a*Xi*k, 1: e*q_e, 2: mu, 3: lambda,
4: omega, 5: a^2.

The radial position is parameterized by the logit variable
``tau = log((r - r_plus)/(r_c - r))``; distances to every quartic root are
then sums of positive quantities, so the horizon factors of Delta_r never
suffer cancellation and the first-order system stays non-stiff arbitrarily
close to both ends.
"""

from __future__ import annotations

import math

import numpy as np

from .backend import maybe_njit

__all__ = [
    "geom_of_tau",
    "solve_tau",
    "tau_array",
    "dp45_pair",
    "dp45_targets",
]


@maybe_njit(cache=True, nogil=True)
def _softplus(x):
    # log(1 + exp(x)) without overflow
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@maybe_njit(cache=True, nogil=True)
def geom_of_tau(tau, mp):
    """Geometry at logit position tau.

    Returns (y, r, delta_r, dy_dtau).  All four root distances are computed
    cancellation-free:  r - r_plus = gap * sigmoid(tau),
    r_c - r = gap * sigmoid(-tau) with gap = r_c - r_plus.
    """
    gap = mp[13]
    if tau >= 0.0:
        e = math.exp(-tau)
        sig = 1.0 / (1.0 + e)
        sigm = e / (1.0 + e)
    else:
        e = math.exp(tau)
        sig = e / (1.0 + e)
        sigm = 1.0 / (1.0 + e)
    dp = gap * sig          # r - r_plus
    dc = gap * sigm         # r_c - r
    fm = dp + mp[14]        # r - r_minus
    fn = dp + mp[15]        # r - r_neg
    ln_gap = math.log(gap)
    ln_dp = ln_gap - _softplus(-tau)
    ln_dc = ln_gap - _softplus(tau)
    if mp[12] != 0.0:
        y = -mp[8] / dp + mp[4] * ln_dp + mp[5] * ln_dc + mp[7] * math.log(fn) - mp[9]
    else:
        y = (
            mp[4] * ln_dp
            + mp[5] * ln_dc
            + mp[6] * math.log(fm)
            + mp[7] * math.log(fn)
            - mp[9]
        )
    r = mp[0] + dp
    delta = mp[11] * dp * dc * fm * fn
    s = r * r + mp[10]
    dy_dtau = (s / delta) * (dp * dc / gap)
    return y, r, delta, dy_dtau


@maybe_njit(cache=True, nogil=True)
def solve_tau_geom(y_target, tau_init, mp):
    """Invert y(tau) = y_target by safeguarded Newton iteration.

    y(tau) is strictly increasing, so a sign bracket shrinks monotonically;
    Newton steps are clamped and fall back to bisection when they leave the
    bracket.  Converges to |y(tau) - y_target| <= 1e-13 (1 + |y_target|).
    Returns (tau, r, delta_r, dy_dtau) so callers get the geometry of the
    converged point without a second evaluation.
    """
    tau = tau_init
    lo = -1.0e300
    hi = 1.0e300
    tol = 1e-13 * (1.0 + abs(y_target))
    y, r, delta, dy_dtau = geom_of_tau(tau, mp)
    for _ in range(200):
        g = y - y_target
        if abs(g) <= tol:
            break
        if g > 0.0:
            if tau < hi:
                hi = tau
        else:
            if tau > lo:
                lo = tau
        step = -g / dy_dtau
        if step > 30.0:
            step = 30.0
        elif step < -30.0:
            step = -30.0
        tau_new = tau + step
        if tau_new <= lo or tau_new >= hi:
            if lo > -1.0e299 and hi < 1.0e299:
                tau_new = 0.5 * (lo + hi)
        tau = tau_new
        y, r, delta, dy_dtau = geom_of_tau(tau, mp)
    return tau, r, delta, dy_dtau


@maybe_njit(cache=True, nogil=True)
def solve_tau(y_target, tau_init, mp):
    """tau(y_target); see :func:`solve_tau_geom`."""
    tau, r, delta, dy_dtau = solve_tau_geom(y_target, tau_init, mp)
    return tau


@maybe_njit(cache=True, nogil=True)
def tau_array(ys, mp):
    """Vector tau(y); warm-started march, fastest on sorted input."""
    n = ys.shape[0]
    out = np.empty(n)
    tau = 0.0
    for i in range(n):
        tau = solve_tau(ys[i], tau, mp)
        out[i] = tau
    return out


@maybe_njit(cache=True, nogil=True)
def _coeffs_at(r, delta, md):
    """Scalar coefficients (c, d, lt) of the first-order system."""
    s = r * r + md[5]
    sq = math.sqrt(delta) if delta > 0.0 else 0.0
    c = (md[0] + md[1] * r) / s
    d = md[2] * r * sq / s
    lt = md[3] * sq / s
    return c, d, lt


@maybe_njit(cache=True, nogil=True)
def _rhs(x, k_out, c, d, lt, omega):
    """Derivative of the stacked pair state (two 2-component solutions)."""
    a12 = (c - d) - omega
    a21 = omega - (c + d)
    k_out[0] = lt * x[0] + a12 * x[1]
    k_out[1] = a21 * x[0] - lt * x[1]
    k_out[2] = lt * x[2] + a12 * x[3]
    k_out[3] = a21 * x[2] - lt * x[3]


# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0])
_DP_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ]
)
_DP_E = np.array(
    [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ]
)


@maybe_njit(cache=True, nogil=True)
def dp45_pair(
    mp,
    md,
    y0,
    x0,
    y_end,
    rtol,
    atol,
    hmax,
    max_steps,
    h_init,
    tau_init,
    record_from,
    ys_rec,
    xs_rec,
):
    """Adaptive embedded 5(4) integration of the stacked pair system.

    Records accepted states once past ``record_from`` (in the direction of
    travel) into the preallocated buffers; when the buffers fill, every
    second sample is dropped and the recording stride doubles.

    Returns (status, y, x, tau, h, n_steps, n_accept, n_rec) with status
    0 = reached y_end, 1 = step budget exhausted, 2 = step underflow.
    """
    direction = 1.0 if y_end >= y0 else -1.0
    x = x0.copy()
    y = y0
    tau, r_n, delta_n, slope_n = solve_tau_geom(y0, tau_init, mp)
    h = h_init * direction if h_init > 0.0 else 1e-3 * direction

    k = np.empty((7, 4))
    xs = np.empty(4)
    x_new = np.empty(4)
    err = np.empty(4)

    cap = ys_rec.shape[0]
    nrec = 0
    stride = 1
    count = 0

    status = 0
    nsteps = 0
    naccept = 0

    while (y - y_end) * direction < 0.0:
        if nsteps >= max_steps:
            status = 1
            break
        if abs(h) > hmax:
            h = hmax * direction
        last = False
        if (y + h - y_end) * direction >= 0.0:
            h = y_end - y
            last = True
        if abs(h) < 4.0e-16 * (1.0 + abs(y)):
            status = 2
            break
        nsteps += 1

        c, d, lt = _coeffs_at(r_n, delta_n, md)
        _rhs(x, k[0], c, d, lt, md[4])
        tau_s = tau
        r_s = r_n
        delta_s = delta_n
        slope_s = slope_n
        y_prev = y
        for s in range(1, 7):
            ys_stage = y + _DP_C[s] * h
            for i in range(4):
                acc = 0.0
                for j in range(s):
                    acc += _DP_A[s, j] * k[j, i]
                xs[i] = x[i] + h * acc
            # slope-predicted warm start; one Newton correction typical
            guess = tau_s + (ys_stage - y_prev) / slope_s
            tau_s, r_s, delta_s, slope_s = solve_tau_geom(ys_stage, guess, mp)
            y_prev = ys_stage
            c, d, lt = _coeffs_at(r_s, delta_s, md)
            _rhs(xs, k[s], c, d, lt, md[4])
            if s == 6:
                for i in range(4):
                    x_new[i] = xs[i]

        errn = 0.0
        for i in range(4):
            acc = 0.0
            for j in range(7):
                acc += _DP_E[j] * k[j, i]
            e = h * acc
            sc = atol + rtol * max(abs(x[i]), abs(x_new[i]))
            q = e / sc
            errn += q * q
        errn = math.sqrt(errn / 4.0)

        if errn <= 1.0:
            y = y_end if last else y + h
            for i in range(4):
                x[i] = x_new[i]
            tau = tau_s
            r_n = r_s
            delta_n = delta_s
            slope_n = slope_s
            naccept += 1
            if cap > 0 and (y - record_from) * direction >= 0.0:
                count += 1
                if count >= stride:
                    count = 0
                    if nrec == cap:
                        half = nrec // 2
                        for i in range(half):
                            ys_rec[i] = ys_rec[2 * i]
                            for q2 in range(4):
                                xs_rec[i, q2] = xs_rec[2 * i, q2]
                        nrec = half
                        stride *= 2
                    ys_rec[nrec] = y
                    for q2 in range(4):
                        xs_rec[nrec, q2] = x[q2]
                    nrec += 1
            fac = 0.9 * errn ** -0.2 if errn > 0.0 else 5.0
            if fac > 5.0:
                fac = 5.0
            h = h * fac
        else:
            fac = 0.9 * errn ** -0.2
            if fac < 0.2:
                fac = 0.2
            h = h * fac

    return status, y, x, tau, abs(h), nsteps, naccept, nrec


@maybe_njit(cache=True, nogil=True)
def dp45_targets(mp, md, y0, x0, targets, rtol, atol, hmax, max_steps):
    """Integrate the pair system hitting each target ordinate exactly.

    Returns (status, out, n_steps) where out[i] is the state at targets[i].
    Targets must be monotone, moving away from y0.
    """
    out = np.empty((targets.shape[0], 4))
    dummy_y = np.empty(0)
    dummy_x = np.empty((0, 4))
    x = x0.copy()
    y = y0
    tau = solve_tau(y0, 0.0, mp)
    h = 1e-3
    nsteps = 0
    status = 0
    for t in range(targets.shape[0]):
        yt = targets[t]
        if yt != y:
            status, y, x, tau, h, ns, na, nr = dp45_pair(
                mp, md, y, x, yt, rtol, atol, hmax,
                max_steps - nsteps, h, tau, math.inf, dummy_y, dummy_x,
            )
            nsteps += ns
            if status != 0:
                for i in range(t, targets.shape[0]):
                    for q in range(4):
                        out[i, q] = math.nan
                return status, out, nsteps
        for q in range(4):
            out[t, q] = x[q]
    return status, out, nsteps
