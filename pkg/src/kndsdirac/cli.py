"""Command line surface: classification, spectra, certification, export.

Subcommands
-----------
classify
    Background admissibility: classification, horizon radii, critical
    masses, root-space Jacobian, and the weighted-norm envelope bound.
    JSON to stdout and ``<out>/classification.json``.
angular
    Angular eigenvalue table over the configured (k, j) ranges, one CSV
    row per eigenvalue with residual and cross-method disagreement.
certify
    Non-normalizability sweep over (omega, k, j); JSON summary plus a CSV
    of per-mode tail diagnostics.  Exit 0 only if every mode certified.
tortoise
    y(r) table on a uniform tortoise grid.
potential
    Matrix potential V(y) of one mode channel with end deviations, plus a
    JSON summary with the remainder tail integral.

Configuration is a JSON file (``--config``); see :func:`load_config`.
Exit codes: 0 success, 2 configuration/parse error, 3 not a black hole,
4 solver failure, 5 sweep finished with uncertified modes.

All output is deterministic for a fixed config: modes are emitted in
sorted order and floats are printed with 17 significant digits, so
repeated runs produce byte-identical files.  ``KNDS_LOG`` (e.g. ``info``,
``debug``) controls stderr logging.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
from typing import List, Optional, Sequence

import numpy as np

from .geometry import (
    NoBlackHoleError,
    PhysicalParams,
    admissibility,
    critical_masses,
    find_horizons,
    jacobian_det,
    params_from_roots,
)
from .positivity import eta_bound
from .separation import (
    FieldParams,
    build_radial_coefficients,
    build_tortoise_map,
    p2_remainder_l1,
    tortoise_r,
)
from .angular import build_angular_problem, solve_angular
from .radial import RadialTolerances, certify_modes

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_BLACK_HOLE = 3
EXIT_SOLVER = 4
EXIT_UNCERTIFIED = 5

log = logging.getLogger("kndsdirac")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


def _fmt(x) -> str:
    """Canonical 17-significant-digit float formatting for CSV/JSON."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    xf = float(x)
    if math.isnan(xf):
        return "nan"
    return "%.17g" % xf


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Validated run configuration.

    Exactly one of the two background forms must be present in the JSON:
    ``{"background": {"physical": {m, a, l, q_e, q_m}}}`` or
    ``{"background": {"roots": {r_c, r_plus, r_minus, l}}}``.  The mode
    ranges live under ``"modes"``: a list of half-integer ``k``, an
    integer ``j_max`` (or explicit ``j`` list) and an omega grid given as
    ``{"start", "stop", "step"}`` or an explicit sorted list.
    """

    params: PhysicalParams
    field: FieldParams
    ks: tuple
    js: tuple
    omegas: tuple
    tolerances: RadialTolerances
    grid_y_min: float
    grid_y_max: float
    grid_n: int
    potential_k: float
    potential_j: int
    y_range: Optional[float]


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def load_config(path: str, tol_overrides: Optional[str] = None) -> RunConfig:
    """Parse and validate the JSON run configuration at ``path``."""
    try:
        with open(path, "r") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    bg = raw.get("background")
    _require(isinstance(bg, dict), "missing 'background' object")
    has_phys = "physical" in bg
    has_roots = "roots" in bg
    _require(
        has_phys != has_roots,
        "background must contain exactly one of 'physical' or 'roots'",
    )
    try:
        if has_phys:
            ph = bg["physical"]
            params = PhysicalParams(
                m=float(ph["m"]),
                a=float(ph["a"]),
                l=float(ph["l"]),
                q_e=float(ph.get("q_e", 0.0)),
                q_m=float(ph.get("q_m", 0.0)),
            )
        else:
            rt = bg["roots"]
            m, a2, z2 = params_from_roots(
                float(rt["r_c"]), float(rt["r_plus"]),
                float(rt["r_minus"]), float(rt["l"]),
            )
            _require(a2 >= 0.0 and z2 >= 0.0,
                     "root tuple does not descend from physical parameters")
            params = PhysicalParams(
                m=m, a=math.sqrt(a2), l=float(rt["l"]),
                q_e=math.sqrt(z2), q_m=0.0,
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid background: {exc}") from exc

    fd = raw.get("field", {})
    try:
        field = FieldParams(mu=float(fd.get("mu", 0.1)),
                            e=float(fd.get("e", 0.1)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid field: {exc}") from exc

    md = raw.get("modes", {})
    ks = tuple(float(k) for k in md.get("k", (0.5, -0.5, 1.5, -1.5)))
    _require(len(ks) > 0, "modes.k must be nonempty")
    for k in ks:
        _require(
            abs(2.0 * k - round(2.0 * k)) < 1e-12 and round(2.0 * k) % 2 != 0,
            f"modes.k entries must be half-integers, got {k}",
        )
    if "j" in md:
        js = tuple(int(j) for j in md["j"])
        _require(all(j != 0 for j in js), "modes.j entries must be nonzero")
    else:
        j_max = int(md.get("j_max", 3))
        _require(j_max >= 1, "modes.j_max must be >= 1")
        js = tuple(range(1, j_max + 1))

    om = md.get("omega", {"start": -5.0, "stop": 5.0, "step": 0.1})
    if isinstance(om, dict):
        start, stop = float(om["start"]), float(om["stop"])
        step = float(om["step"])
        _require(step > 0.0 and stop >= start, "invalid omega grid")
        n = int(round((stop - start) / step)) + 1
        omegas = tuple(start + i * step for i in range(n))
    else:
        omegas = tuple(float(w) for w in om)
    _require(all(math.isfinite(w) for w in omegas), "omega grid must be finite")
    _require(list(omegas) == sorted(omegas), "omega grid must be sorted")

    tol_kwargs = dict(raw.get("tolerances", {}))
    if tol_overrides:
        for item in tol_overrides.replace(",", " ").split():
            key, _, val = item.partition("=")
            _require(bool(val), f"malformed tolerance override '{item}'")
            tol_kwargs[key] = float(val)
    valid = {f.name for f in dataclasses.fields(RadialTolerances)}
    unknown = set(tol_kwargs) - valid
    _require(not unknown, f"unknown tolerance keys: {sorted(unknown)}")
    tolerances = RadialTolerances(**{k: float(v) for k, v in tol_kwargs.items()})

    grid = raw.get("grid", {})
    y_min = float(grid.get("y_min", -150.0))
    y_max = float(grid.get("y_max", 150.0))
    n_grid = int(grid.get("n", 2001))
    _require(y_min < y_max and n_grid >= 2, "invalid grid")

    pot = raw.get("potential", {})
    pot_k = float(pot.get("k", ks[0]))
    pot_j = int(pot.get("j", 1))

    y_range = raw.get("y_range")
    if y_range is not None:
        y_range = float(y_range)
        _require(y_range > 0.0, "y_range must be positive")

    return RunConfig(
        params=params,
        field=field,
        ks=ks,
        js=js,
        omegas=omegas,
        tolerances=tolerances,
        grid_y_min=y_min,
        grid_y_max=y_max,
        grid_n=n_grid,
        potential_k=pot_k,
        potential_j=pot_j,
        y_range=y_range,
    )


def _write_text(path: str, text: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def cmd_classify(config: RunConfig, out_dir: str) -> int:
    p = config.params
    report = admissibility(p)
    crit = report.critical
    payload = {
        "classification": report.classification,
        "m": p.m,
        "a": p.a,
        "l": p.l,
        "q_e": p.q_e,
        "q_m": p.q_m,
        "m_crit_minus": crit.m_crit_minus,
        "m_crit_plus": crit.m_crit_plus,
    }
    if report.classification == "NoBlackHole":
        payload["reason"] = report.reason
        text = _json_dumps(payload)
        _write_text(os.path.join(out_dir, "classification.json"), text)
        sys.stdout.write(text)
        return EXIT_NO_BLACK_HOLE

    horizons = find_horizons(p)
    eta, bound = eta_bound(p, horizons)
    payload.update(
        {
            "r_minus": horizons.r_minus,
            "r_plus": horizons.r_plus,
            "r_c": horizons.r_c,
            "jacobian": jacobian_det(
                horizons.r_c, horizons.r_plus, horizons.r_minus, p.l
            ),
            "eta": eta,
            "eta_bound": bound,
        }
    )
    text = _json_dumps(payload)
    _write_text(os.path.join(out_dir, "classification.json"), text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_angular(config: RunConfig, out_dir: str) -> int:
    rows: List[str] = []
    header = "k,j,lambda,residual,error_estimate,method,disagreement"
    count_per_k = 2 * max(abs(j) for j in config.js)
    for k in sorted(config.ks):
        problem = build_angular_problem(config.params, config.field, k)
        primary = solve_angular(problem, count_per_k)
        if primary.method == "spectral":
            other = solve_angular(problem, count_per_k, method="fd")
        else:
            other = None
        for idx, j in enumerate(primary.j_indices):
            dis = (
                abs(primary.lambdas[idx] - other.lambdas[idx])
                if other is not None
                else float("nan")
            )
            rows.append(
                ",".join(
                    (
                        _fmt(k),
                        str(int(j)),
                        _fmt(primary.lambdas[idx]),
                        _fmt(primary.residuals[idx]),
                        _fmt(primary.error_estimates[idx]),
                        primary.method,
                        _fmt(dis),
                    )
                )
            )
    text = header + "\n" + "\n".join(rows) + "\n"
    _write_text(os.path.join(out_dir, "angular.csv"), text)
    sys.stdout.write(f"wrote {len(rows)} rows to {out_dir}/angular.csv\n")
    return EXIT_OK


def cmd_certify(config: RunConfig, out_dir: str, threads: Optional[int]) -> int:
    certs = certify_modes(
        config.params,
        config.field,
        config.ks,
        config.js,
        config.omegas,
        threads=threads,
        tolerances=config.tolerances,
        y_cap=config.y_range,
    )
    n_cert = sum(c.certified for c in certs)
    summary = {
        "n_modes": len(certs),
        "n_certified": n_cert,
        "all_certified": n_cert == len(certs),
        "verdicts": sorted(set(c.verdict for c in certs)),
        "uncertified": [
            {"k": c.k, "j": c.j, "omega": c.omega, "verdict": c.verdict,
             "reasons": list(c.reasons)}
            for c in certs
            if not c.certified
        ],
    }
    _write_text(
        os.path.join(out_dir, "certification.json"), _json_dumps(summary)
    )

    header = (
        "k,j,lambda,omega,verdict,"
        "inner_Y,inner_amplitude,inner_variation,inner_freq_mismatch,"
        "inner_l2_r2,"
        "cosmo_Y,cosmo_amplitude,cosmo_variation,cosmo_freq_mismatch,"
        "cosmo_l2_r2"
    )
    lines = [header]
    for c in certs:
        rin, rco = c.inner, c.cosmological
        lines.append(
            ",".join(
                (
                    _fmt(c.k),
                    str(c.j),
                    _fmt(c.lam),
                    _fmt(c.omega),
                    c.verdict,
                    _fmt(rin.Y),
                    _fmt(rin.amplitude),
                    _fmt(rin.variation),
                    _fmt(rin.frequency_mismatch),
                    _fmt(np.nanmin(rin.l2_r2) if rin.l2_checked else float("nan")),
                    _fmt(rco.Y),
                    _fmt(rco.amplitude),
                    _fmt(rco.variation),
                    _fmt(rco.frequency_mismatch),
                    _fmt(np.nanmin(rco.l2_r2) if rco.l2_checked else float("nan")),
                )
            )
        )
    _write_text(
        os.path.join(out_dir, "certification.csv"), "\n".join(lines) + "\n"
    )
    sys.stdout.write(_json_dumps(summary))
    return EXIT_OK if summary["all_certified"] else EXIT_UNCERTIFIED


def cmd_tortoise(config: RunConfig, out_dir: str) -> int:
    tmap = build_tortoise_map(config.params)
    ys = np.linspace(config.grid_y_min, config.grid_y_max, config.grid_n)
    rs = tortoise_r(tmap, ys)
    lines = ["y,r"]
    for y, r in zip(ys, rs):
        lines.append(_fmt(y) + "," + _fmt(r))
    _write_text(os.path.join(out_dir, "tortoise.csv"), "\n".join(lines) + "\n")
    sys.stdout.write(
        f"wrote {len(ys)} rows to {out_dir}/tortoise.csv "
        f"(r_plus={_fmt(tmap.r_plus)}, r_c={_fmt(tmap.r_c)})\n"
    )
    return EXIT_OK


def cmd_potential(config: RunConfig, out_dir: str) -> int:
    from .radial import mode_eigenvalue

    k = config.potential_k
    lam = mode_eigenvalue(config.params, config.field, k, config.potential_j)
    tmap = build_tortoise_map(config.params)
    coeffs = build_radial_coefficients(
        config.params, config.field, k, lam, tmap
    )
    ys = np.linspace(config.grid_y_min, config.grid_y_max, config.grid_n)
    V = coeffs.potential(ys)
    dev_in = coeffs.deviation_norm(ys, "inner")
    dev_co = coeffs.deviation_norm(ys, "cosmological")
    lines = ["y,V11,V12,V22,dev_inner,dev_cosmo"]
    for i, y in enumerate(ys):
        lines.append(
            ",".join(
                (
                    _fmt(y),
                    _fmt(V[i, 0, 0]),
                    _fmt(V[i, 0, 1]),
                    _fmt(V[i, 1, 1]),
                    _fmt(dev_in[i]),
                    _fmt(dev_co[i]),
                )
            )
        )
    _write_text(os.path.join(out_dir, "potential.csv"), "\n".join(lines) + "\n")

    # remainder mass beyond the exported window, toward the cosmological end
    d = max(config.grid_y_max, 0.0)
    tail = p2_remainder_l1(config.params, config.field, k, lam, d, tmap)
    summary = {
        "k": k,
        "j": config.potential_j,
        "lambda": lam,
        "phi_plus": coeffs.phi_end("inner"),
        "phi_c": coeffs.phi_end("cosmological"),
        "remainder_tail_from": d,
        "remainder_l1_tail": tail.value,
        "remainder_error_bound": tail.error_bound,
    }
    text = _json_dumps(summary)
    _write_text(os.path.join(out_dir, "potential_summary.json"), text)
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kndsdirac",
        description=(
            "Dirac-mode tools on Kerr-Newman-de Sitter backgrounds: "
            "classification, angular spectra, radial certification, export"
        ),
    )
    parser.add_argument("command",
                        choices=["classify", "angular", "certify",
                                 "tortoise", "potential"])
    parser.add_argument("--config", required=True, help="JSON run config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="sweep worker threads")
    parser.add_argument(
        "--tol-overrides",
        default=None,
        help="comma separated tolerance overrides, e.g. rtol=1e-9,variation=2e-3",
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("KNDS_LOG", "warning").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config, args.tol_overrides)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG

    try:
        if args.command == "classify":
            return cmd_classify(config, args.out)
        if args.command == "angular":
            return cmd_angular(config, args.out)
        if args.command == "certify":
            return cmd_certify(config, args.out, args.threads)
        if args.command == "tortoise":
            return cmd_tortoise(config, args.out)
        return cmd_potential(config, args.out)
    except NoBlackHoleError as exc:
        sys.stderr.write(f"not a black hole background: {exc}\n")
        return EXIT_NO_BLACK_HOLE
    except Exception as exc:  # solver and numeric failures
        log.debug("solver failure", exc_info=True)
        sys.stderr.write(f"solver error: {exc}\n")
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
