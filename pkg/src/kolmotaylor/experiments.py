"""Experiment engine behind the CLI subcommands.

Each ``run_*`` function returns a plain report object; ``write_*`` helpers
serialize it. All randomness flows from ``cfg.seed`` and parallel work is
gathered into pre-indexed slots, so output bytes do not depend on ``jobs``.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import calculus, regularity
from .calculus import _to_mp, precision, taylor_eval, taylor_poly
from .config import ExperimentConfig
from .errors import UnsupportedGroup
from .fields import ScalarField, derived_field
from .group import GroupSpec, compose, dilate, norm, distance
from .multiindex import enumerate_terms, permutation_term_count
from .paths import connect, pivot_columns

EXACT_TOL = 1e-13
SPIKE_LOG_RESIDUAL = 0.5


# --- slope fitting ----------------------------------------------------------


@dataclass
class SlopeFit:
    slope: float | None
    intercept: float | None
    residual: float | None
    exact: bool
    discarded: int


def fit_slope(norms, remainders) -> SlopeFit:
    """Least-squares slope of log|remainder| against log(norm).

    Remainders all below EXACT_TOL give ``exact`` with no slope. With at least
    12 points, the two smallest radii are dropped when they sit far off the
    line fitted through the others (roundoff floor reached).
    """
    norms = np.asarray(norms, dtype=float)
    rems = np.abs(np.asarray(remainders, dtype=float))
    if np.all(rems <= EXACT_TOL):
        return SlopeFit(None, None, None, True, 0)
    keep = rems > 0
    lx, ly = np.log(norms[keep]), np.log(rems[keep])

    def fit(xs, ys):
        coef = np.polyfit(xs, ys, 1)
        return coef, ys - np.polyval(coef, xs)

    coef, res = fit(lx, ly)
    discarded = 0
    if len(lx) >= 12:
        order = np.argsort(lx)
        small, rest = order[:2], order[2:]
        rest_coef, rest_res = fit(lx[rest], ly[rest])
        spike = np.max(np.abs(ly[small] - np.polyval(rest_coef, lx[small])))
        if spike > max(SPIKE_LOG_RESIDUAL, 5 * np.sqrt(np.mean(rest_res ** 2))):
            coef, res = rest_coef, rest_res
            discarded = 2
    return SlopeFit(float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res ** 2))), False, discarded)


# --- converge ---------------------------------------------------------------


@dataclass
class ConvergenceGroup:
    n: int
    direction: int
    rhos: list
    remainders: list
    norms: list
    fit: SlopeFit
    threshold: float
    passed: bool


@dataclass
class ConvergenceReport:
    experiment: str
    alpha: float
    groups: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.groups)


def default_anchor(spec: GroupSpec, u: ScalarField, seed: int) -> np.ndarray:
    if spec.d == 2:
        anchor = np.array([0.3, 0.2, -0.4])
        if not u.is_singular(anchor):
            return anchor
    rng = np.random.default_rng([seed, 1])
    while True:
        anchor = rng.uniform(-0.5, 0.5, size=spec.d + 1)
        if not u.is_singular(anchor):
            return anchor


def sample_directions(spec: GroupSpec, count: int, seed: int, equal_time: bool = False) -> np.ndarray:
    """Random points of unit homogeneous norm."""
    rng = np.random.default_rng(seed)
    ws = rng.normal(size=(count, spec.d + 1))
    if equal_time:
        ws[:, 0] = 0.0
    return dilate(spec, 1.0 / norm(spec, ws), ws)


def _judge(fit: SlopeFit, threshold: float) -> bool:
    return fit.exact or (fit.slope is not None and fit.slope >= threshold)


def run_converge(cfg: ExperimentConfig, jobs: int = 1) -> ConvergenceReport:
    spec = cfg.group
    u = cfg.make_field()
    anchor = cfg.anchor if cfg.anchor is not None else default_anchor(spec, u, cfg.seed)
    dirs = sample_directions(spec, cfg.directions, cfg.seed, cfg.equal_time)
    use_mp = cfg.dps is not None and u.precise is not None
    report = ConvergenceReport(experiment=cfg.experiment, alpha=cfg.alpha)

    with precision(cfg.dps if use_mp else None):
        if use_mp:
            zeta = _to_mp(anchor)
            polys = {n: taylor_poly(spec, u.precise, n, zeta) for n in cfg.orders}
            field_eval = u.precise
        else:
            zeta = np.asarray(anchor, dtype=float)
            polys = {n: taylor_poly(spec, u, n, zeta) for n in cfg.orders}
            field_eval = u

        def cell(job):
            n, idx = job
            w = _to_mp(dirs[idx]) if use_mp else dirs[idx]
            rems, norms = [], []
            for rho in cfg.rho_grid:
                r = mpmath.mpf(float(rho)) if use_mp else float(rho)
                step = dilate(spec, r, w)
                z = compose(spec, zeta, step)
                rems.append(float(field_eval(z) - taylor_eval(spec, polys[n], z)))
                norms.append(float(distance(spec, zeta, z)))
            fit = fit_slope(norms, rems)
            threshold = n + cfg.alpha - cfg.tolerance
            return ConvergenceGroup(n, idx, [float(x) for x in cfg.rho_grid], rems, norms, fit, threshold,
                                    _judge(fit, threshold))

        cells = [(n, i) for n in cfg.orders for i in range(len(dirs))]
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                report.groups = list(pool.map(cell, cells))
        else:
            report.groups = [cell(c) for c in cells]
    return report


def verify_report(report: ConvergenceReport) -> bool:
    """Recompute every slope and verdict from the recorded table."""
    for g in report.groups:
        fit = fit_slope(g.norms, g.remainders)
        if fit != g.fit or _judge(fit, g.threshold) != g.passed:
            return False
    return True


CONVERGE_COLUMNS = ["experiment", "n", "alpha", "direction", "rho", "remainder", "norm", "slope", "verdict"]


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def converge_csv(report: ConvergenceReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CONVERGE_COLUMNS)
    for g in report.groups:
        last = len(g.rhos) - 1
        for i, (rho, rem, nm) in enumerate(zip(g.rhos, g.remainders, g.norms)):
            slope = verdict = ""
            if i == last:
                slope = "exact" if g.fit.exact else _fmt(g.fit.slope)
                verdict = "pass" if g.passed else "fail"
            w.writerow([report.experiment, g.n, _fmt(report.alpha), g.direction, _fmt(rho), _fmt(rem), _fmt(nm),
                        slope, verdict])
    return buf.getvalue()


def converge_json(report: ConvergenceReport) -> str:
    out = {
        "experiment": report.experiment,
        "alpha": report.alpha,
        "passed": report.passed,
        "groups": [
            {
                "n": g.n,
                "direction": g.direction,
                "slope": g.fit.slope,
                "intercept": g.fit.intercept,
                "residual": g.fit.residual,
                "exact": g.fit.exact,
                "discarded": g.fit.discarded,
                "threshold": g.threshold,
                "passed": g.passed,
                "table": [{"rho": r, "remainder": m, "norm": nm} for r, m, nm in zip(g.rhos, g.remainders, g.norms)],
            }
            for g in report.groups
        ],
    }
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


# --- group info -------------------------------------------------------------


def group_info(spec: GroupSpec) -> dict:
    return {
        "d": spec.d,
        "r": spec.r,
        "layers": list(spec.layers),
        "cum_layers": list(spec.cum_layers),
        "dilation_exponents": list(spec.dilation_exponents),
        "powers": [spec.powers[n].tolist() for n in range(spec.r + 1)],
        "pivots": {str(n): [c + 1 for c in pivot_columns(spec, n)[0]] for n in range(1, spec.r + 1)},
    }


def group_info_text(info: dict) -> str:
    lines = [
        f"d = {info['d']}",
        f"r = {info['r']}",
        f"layers = {tuple(info['layers'])}",
        f"dilation exponents q = {tuple(info['dilation_exponents'])}",
    ]
    for n, P in enumerate(info["powers"]):
        lines.append(f"B^{n} = {P}")
    for n, cols in info["pivots"].items():
        lines.append(f"pivot columns (1-based) for level {n} = {tuple(cols)}")
    return "\n".join(lines) + "\n"


# --- Bonfiglioli comparison -------------------------------------------------


@dataclass
class BonfiglioliRow:
    n: int
    max_abs_diff: float
    threshold: float
    passed: bool
    terms_compact: int
    terms_permutation: int


def sample_pairs(spec: GroupSpec, count: int, seed: int, radius: float = 1.0):
    """Anchors in the unit box and partners inside the homogeneous ball of ``radius``."""
    rng = np.random.default_rng(seed)
    zetas = rng.uniform(-0.5, 0.5, size=(count, spec.d + 1))
    ws = sample_directions(spec, count, int(rng.integers(2 ** 31)))
    rho = radius * rng.uniform(0.0, 1.0, size=count)
    return zetas, compose(spec, zetas, dilate(spec, np.maximum(rho, 1e-300), ws))


def run_compare_bonfiglioli(cfg: ExperimentConfig, pairs: int | None = None) -> list:
    spec = cfg.group
    if not calculus._is_prototype(spec):
        raise UnsupportedGroup("compare-bonfiglioli runs on the prototype group only")
    u = cfg.make_field()
    sec = cfg.section("bonfiglioli")
    pairs = pairs or int(sec.get("pairs", 1000))
    orders = [int(n) for n in sec.get("orders", [0, 1, 2, 3, 4])]
    zetas, zs = sample_pairs(spec, pairs, cfg.seed)
    weights = (2, 1, 3)
    rows = []
    for n in orders:
        worst = 0.0
        for zeta, z in zip(zetas, zs):
            if u.is_singular(zeta):
                continue
            ours = taylor_eval(spec, taylor_poly(spec, u, n, zeta), z)
            theirs = calculus.bonfiglioli_prototype(u, n, zeta, z, spec)
            worst = max(worst, abs(float(ours) - float(theirs)))
        threshold = 1e-14 if n <= 2 else 1e-10
        rows.append(BonfiglioliRow(n, worst, threshold, worst < threshold, len(enumerate_terms(spec, n)),
                                   permutation_term_count(weights, n)))
    return rows


def bonfiglioli_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "max_abs_diff", "threshold", "verdict", "terms_compact", "terms_permutation"])
    for r in rows:
        w.writerow([r.n, _fmt(r.max_abs_diff), _fmt(r.threshold), "pass" if r.passed else "fail",
                    r.terms_compact, r.terms_permutation])
    return buf.getvalue()


# --- connect demo -----------------------------------------------------------


@dataclass
class ConnectDemo:
    rows: list
    endpoint: np.ndarray
    target: np.ndarray
    error: float
    deltas: list

    @property
    def passed(self) -> bool:
        return self.error < 1e-10


def run_connect_demo(cfg: ExperimentConfig) -> ConnectDemo:
    spec = cfg.group
    sec = cfg.section("connect")
    n = int(sec.get("n", 0))
    zeta = np.array(sec.get("anchor", [0.0] * (spec.d + 1)), dtype=float)
    y = np.array(sec.get("y", [1.0] * spec.d), dtype=float)
    res = connect(spec, n, zeta, y)
    rows = [(-1, 0, *zeta)]
    for k, (path, dlt) in enumerate(zip(res.paths, res.deltas), start=n):
        if dlt == 0.0:
            continue
        for i, wp in enumerate(path.waypoints[1:], start=1):
            rows.append((k, i, *wp))
    target = zeta + np.concatenate([[0.0], y])
    end = res.points[-1]
    return ConnectDemo(rows, end, target, float(np.max(np.abs(end - target))), res.deltas)


def connect_csv(demo: ConnectDemo, d: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "waypoint", "t"] + [f"x{j}" for j in range(1, d + 1)])
    for k, i, *coords in demo.rows:
        w.writerow([k, i] + [_fmt(c) for c in coords])
    return buf.getvalue()


# --- holder scan ------------------------------------------------------------


def run_holder_scan(cfg: ExperimentConfig) -> list:
    """One SeminormEstimate per requested vector field, as (label, estimate) pairs."""
    spec = cfg.group
    sec = cfg.section("holder")
    u = cfg.make_field()
    k = int(sec.get("derivative_k", 0))
    beta = tuple(int(b) for b in sec.get("derivative_beta", [0] * spec.d))
    if k or any(beta):
        u = derived_field(spec, u, k, beta)
    alpha = float(sec.get("alpha", 1.0))
    samples = int(sec.get("samples", 2000))
    center = sec.get("center")
    region = regularity.default_region(spec, center)
    fields = sec.get("fields", ["Y"] + list(range(1, spec.layers[0] + 1)))
    out = []
    for fld in fields:
        fld = "Y" if fld == "Y" else int(fld)
        est = regularity.seminorm_X(spec, u, fld, alpha, region, samples, cfg.seed)
        out.append(("Y" if fld == "Y" else f"X{fld}", est))
    return out


def holder_csv(name: str, alpha: float, scans) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "vector_field", "alpha", "delta", "max_quotient", "saturated"])
    for label, est in scans:
        for dlt, q in zip(est.deltas, est.envelope):
            w.writerow([name, label, _fmt(alpha), _fmt(dlt), _fmt(q), est.saturated])
    return buf.getvalue()


# --- single-point Taylor evaluation ------------------------------------------


def run_taylor_eval(cfg: ExperimentConfig) -> dict:
    spec = cfg.group
    u = cfg.make_field()
    sec = cfg.section("taylor")
    n = int(sec.get("order", 2))
    anchor = np.array(sec.get("anchor", default_anchor(spec, u, cfg.seed)), dtype=float)
    z = np.array(sec.get("point", anchor + 0.01), dtype=float)
    poly = taylor_poly(spec, u, n, anchor)
    value = float(taylor_eval(spec, poly, z))
    exact = float(u(z))
    return {
        "order": n,
        "anchor": anchor.tolist(),
        "point": z.tolist(),
        "taylor": value,
        "field": exact,
        "remainder": exact - value,
        "distance": float(distance(spec, anchor, z)),
        "terms": len(poly.coefficients),
    }
