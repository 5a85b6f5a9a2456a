"""Acceptance criteria, one check per criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py`` (a PASS/FAIL line per criterion is
printed in the terminal summary) or directly with
``python -m tests.test_acceptance``.
"""
from __future__ import annotations

import sys
import time

import numpy as np
import pytest

from kolmotaylor import experiments as ex
from kolmotaylor.calculus import (
    bonfiglioli_prototype,
    mean_value_residual,
    taylor_eval,
    taylor_poly,
    time_derivative,
)
from kolmotaylor.cli import main as cli_main
from kolmotaylor.config import from_dict
from kolmotaylor.fields import get_field
from kolmotaylor.group import (
    compose,
    dilate,
    distance,
    increment,
    inverse,
    norm,
    prototype,
    random_spec,
    spatial_norm,
)
from kolmotaylor.multiindex import enumerate_terms
from kolmotaylor.paths import S_closed_form, connect, flow_Y, gamma_iterative

RESULTS: list[str] = []

SMOOTH_ORACLE_FIELDS = ("sin_cos_poly", "sin_t_x1x2", "transport")

CONVERGE_CONFIG = {
    "experiment": "acceptance-convergence",
    "seed": 2024,
    "group": {"preset": "prototype"},
    "field": {"name": "sin_cos_poly"},
    "converge": {
        "orders": [0, 1, 2, 3, 4],
        "alpha": 1.0,
        "anchor": [0.3, 0.2, -0.4],
        "rho_max": 0.1,
        "rho_min": 0.001,
        "rho_count": 12,
        "directions": 8,
        "tolerance": 0.15,
        "dps": 50,
    },
}


def _specs_r123():
    rng = np.random.default_rng(77)
    return [random_spec((1, 1), rng), random_spec((2, 2, 1), rng), random_spec((3, 2, 2, 1), rng)]


def _ball_pairs(spec, rng, count, box, rho_min):
    """Anchors uniform in a box and partners at homogeneous distance in (rho_min, 1)."""
    zeta = rng.uniform(-box, box, size=(count, spec.d + 1))
    w = rng.normal(size=zeta.shape)
    w = dilate(spec, rng.uniform(rho_min, 1.0, count) / norm(spec, w), w)
    return zeta, compose(spec, zeta, w)


def _unit_v(spec, rng, count):
    v = np.zeros((count, spec.d))
    v0 = rng.normal(size=(count, spec.layers[0]))
    v[:, : spec.layers[0]] = v0 / np.linalg.norm(v0, axis=1, keepdims=True)
    return v


def criterion_1():
    spec = prototype()
    rng = np.random.default_rng(1)
    zeta = rng.uniform(-2, 2, size=(10_000, 3))
    z = rng.uniform(-2, 2, size=(10_000, 3))
    lam = rng.uniform(0.1, 2.0, size=10_000)
    delta = rng.uniform(-2, 2, size=10_000)
    s, xi1, xi2 = zeta.T
    t, x1, x2 = z.T
    errs = {
        "compose": compose(spec, zeta, z) - np.stack([s + t, x1 + xi1, x2 + xi2 + t * xi1], -1),
        "inverse": compose(spec, inverse(spec, zeta), z) - np.stack([t - s, x1 - xi1, x2 - xi2 - (t - s) * xi1], -1),
        "increment": increment(spec, zeta, z) - np.stack([t - s, x1 - xi1, x2 - xi2 - (t - s) * xi1], -1),
        "dilate": dilate(spec, lam, z) - np.stack([lam ** 2 * t, lam * x1, lam ** 3 * x2], -1),
        "flow_Y": flow_Y(spec, delta, z) - np.stack([t + delta, x1, x2 + delta * x1], -1),
    }
    worst = {k: float(np.max(np.abs(v))) for k, v in errs.items()}
    return max(worst.values()) < 1e-14, f"max errors {worst} (tol 1e-14, 10^4 inputs)"


def criterion_2():
    worst = 0.0
    for spec in _specs_r123():
        rng = np.random.default_rng(spec.d)
        v = _unit_v(spec, rng, 1000)
        z = rng.uniform(-1, 1, size=(1000, spec.d + 1))
        delta = rng.uniform(-1, 1, size=1000)
        for n in range(spec.r + 1):
            for k in range(n, spec.r + 1):
                end = gamma_iterative(spec, n, k, v, delta, z).endpoint
                S = np.stack([S_closed_form(spec, n, k, d) for d in delta])
                expected = z.copy()
                expected[:, 1:] += np.einsum("bij,bj->bi", S, v)
                worst = max(worst, float(np.max(np.abs(end - expected))))
    return worst < 1e-12, f"max |iterative - closed form| = {worst:.2e} (tol 1e-12, r=1,2,3, d<=8)"


def criterion_3():
    worst_err, worst_slope = 0.0, np.inf
    lams = np.geomspace(1e-2, 1.0, 10)
    for spec in _specs_r123():
        rng = np.random.default_rng(100 + spec.d)
        for _ in range(1000):
            n = int(rng.integers(0, spec.r + 1))
            zeta = rng.uniform(-1, 1, size=spec.d + 1)
            y = rng.normal(size=spec.d)
            y[: spec.cum_layers[n - 1] if n else 0] = 0.0
            res = connect(spec, n, zeta, y)
            target = zeta + np.concatenate([[0.0], y])
            worst_err = max(worst_err, float(np.max(np.abs(res.points[-1] - target))))
        for _ in range(20):
            zeta = rng.uniform(-1, 1, size=spec.d + 1)
            y = rng.normal(size=spec.d)
            sizes = [spatial_norm(spec, dilate(spec, lam, np.concatenate([[0.0], y]))[1:]) for lam in lams]
            deltas = [max(connect(spec, 0, zeta, dilate(spec, lam, np.concatenate([[0.0], y]))[1:]).deltas)
                      for lam in lams]
            slope = np.polyfit(np.log(sizes), np.log(deltas), 1)[0]
            worst_slope = min(worst_slope, float(slope))
    ok = worst_err < 1e-10 and worst_slope >= 1 - 0.05
    return ok, f"max endpoint error {worst_err:.2e} (tol 1e-10); min delta-scaling slope {worst_slope:.4f} (>= 0.95)"


def criterion_4():
    report = ex.run_converge(from_dict(CONVERGE_CONFIG))
    by_n = {}
    for g in report.groups:
        slope = np.inf if g.fit.exact else g.fit.slope
        by_n[g.n] = min(by_n.get(g.n, np.inf), slope)
    ok = all(by_n[n] >= n + 1 - 0.15 for n in range(5)) and len(report.groups) == 40
    return ok, "min slope per n: " + ", ".join(f"n={n}: {s:.3f}" for n, s in sorted(by_n.items())) + " (>= n+0.85)"


def _monomials(spec, degree):
    """Every t^k x^beta with B-degree 2k + |beta|_B <= degree."""
    return [(t.k, t.beta) for t in enumerate_terms(spec, degree)]


def criterion_5():
    worst = 0.0
    rng = np.random.default_rng(5)
    specs = [prototype(), random_spec((2, 1, 1), np.random.default_rng(55))]
    for spec in specs:
        zeta, z = _ball_pairs(spec, rng, 20, 1.0, 0.05)
        for k, beta in _monomials(spec, 5):
            u = get_field(f"mono:{','.join(map(str, beta))}:{k}", spec)
            degree = 2 * k + sum(q * b for q, b in zip(spec.dilation_exponents, beta))
            for n in range(degree, 6):
                rem = u(z) - taylor_eval(spec, taylor_poly(spec, u, n, zeta), z)
                worst = max(worst, float(np.max(np.abs(rem))))
    return worst < 1e-11, f"max monomial remainder {worst:.2e} (tol 1e-11, n<=5, prototype + r=2 spec)"


def criterion_6():
    spec = prototype()
    rng = np.random.default_rng(6)
    u = get_field("abs_x2", spec, c=0.25)
    zeta = rng.uniform(-1, 1, size=(100_000, 3))
    z = rng.uniform(-1, 1, size=(100_000, 3))
    z[:, 0] = zeta[:, 0]
    lhs = np.abs(u(z) - u(zeta))
    rhs = distance(spec, zeta, z) ** 3
    violations = int(np.sum(lhs > rhs))
    return violations == 0, f"{violations} violations of |du| <= ||.||^3 over 10^5 equal-time pairs"


def criterion_7():
    spec = prototype()
    rng = np.random.default_rng(7)
    worst_low, worst_high = 0.0, 0.0
    for name in SMOOTH_ORACLE_FIELDS:
        u = get_field(name, spec)
        zeta, z = _ball_pairs(spec, rng, 1000, 0.5, 1e-3)
        for n in range(5):
            diff = float(np.max(np.abs(taylor_eval(spec, taylor_poly(spec, u, n, zeta), z)
                                       - bonfiglioli_prototype(u, n, zeta, z, spec))))
            if n <= 2:
                worst_low = max(worst_low, diff)
            else:
                worst_high = max(worst_high, diff)
    ok = worst_low < 1e-14 and worst_high < 1e-10
    return ok, f"max |T_n - P_n|: n<=2 {worst_low:.2e} (tol 1e-14), n=3,4 {worst_high:.2e} (tol 1e-10)"


def criterion_8():
    spec = prototype()
    rng = np.random.default_rng(8)
    pts = rng.uniform(-1, 1, size=(100, 3))
    analytic = {
        "sin_t_x1x2": lambda z: np.cos(z[0]),
        "sin_cos_poly": lambda z: 2 * z[0],
        "transport": lambda z: -z[1] * np.cos(z[2] - z[0] * z[1]),
    }
    worst = {}
    for name, dt in analytic.items():
        u = get_field(name, spec)
        for use_oracle, label in ((True, "oracle"), (False, "fd")):
            worst[f"{name}/{label}"] = max(abs(time_derivative(spec, u, z, use_oracle=use_oracle) - dt(z))
                                           for z in pts)
    return max(worst.values()) < 1e-6, "max |reconstructed - analytic d_t u|: " + ", ".join(
        f"{k} {v:.1e}" for k, v in worst.items()) + " (tol 1e-6)"


def criterion_9():
    spec = prototype()
    rng = np.random.default_rng(9)
    deltas = np.geomspace(1e-1, 1e-3, 12)
    worst = {1: np.inf, 2: np.inf}
    for name in ("sin_cos_poly", "sin_t_x1x2", "gauss_smoothed_abs"):
        u = get_field(name, spec)
        for z in rng.uniform(-1, 1, size=(5, 3)):
            z[1] = 0.5 + 0.5 * abs(z[1])
            for n in (1, 2):
                res = np.array([abs(float(mean_value_residual(spec, u, n, d, z))) for d in deltas])
                slope = np.inf if np.all(res < 1e-13) else np.polyfit(np.log(deltas), np.log(res), 1)[0]
                worst[n] = min(worst[n], float(slope))
    ok = all(worst[n] >= n + 1 - 0.1 for n in (1, 2))
    return ok, f"min mean-value slopes n=1 {worst[1]:.3f} (>= 1.9), n=2 {worst[2]:.3f} (>= 2.9)"


def criterion_10(tmp_dir=None):
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory(dir=tmp_dir) as d:
        cfg = Path(d) / "converge.toml"
        cfg.write_text(_toml(CONVERGE_CONFIG))
        outs = []
        for jobs in ("1", "8"):
            out = Path(d) / f"jobs{jobs}.csv"
            code = cli_main(["converge", "--config", str(cfg), "--jobs", jobs, "--out", str(out)])
            outs.append((code, out.read_bytes()))
    same = outs[0][1] == outs[1][1]
    return same and outs[0][0] == 0, f"--jobs 1 vs --jobs 8 CSV byte-identical: {same} ({len(outs[0][1])} bytes)"


def _toml(data: dict) -> str:
    def value(v):
        if isinstance(v, str):
            return f'"{v}"'
        if isinstance(v, list):
            return "[" + ", ".join(value(x) for x in v) + "]"
        return repr(v)

    lines = [f"{k} = {value(v)}" for k, v in data.items() if not isinstance(v, dict)]
    for k, v in data.items():
        if isinstance(v, dict):
            lines.append(f"\n[{k}]")
            lines += [f"{kk} = {value(vv)}" for kk, vv in v.items()]
    return "\n".join(lines) + "\n"


CRITERIA = [
    (1, "prototype closed forms", criterion_1, 1.0),
    (2, "switching-path closed form", criterion_2, 10.0),
    (3, "connection exactness and scaling", criterion_3, 10.0),
    (4, "Taylor remainder convergence orders", criterion_4, 30.0),
    (5, "polynomial exactness", criterion_5, 5.0),
    (6, "abs_x2 equal-time bound", criterion_6, 2.0),
    (7, "Bonfiglioli equivalence", criterion_7, 5.0),
    (8, "time-derivative reconstruction", criterion_8, 2.0),
    (9, "mean-value slopes", criterion_9, 5.0),
    (10, "parallel determinism", criterion_10, 60.0),
]


def run_criterion(number, title, fn, budget):
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail} [{elapsed:.2f}s, budget {budget:g}s]"
    RESULTS.append(line)
    return ok, line


@pytest.mark.parametrize("number,title,fn,budget", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, fn, budget):
    ok, line = run_criterion(number, title, fn, budget)
    print(line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for crit in CRITERIA:
        ok, line = run_criterion(*crit)
        print(line, flush=True)
        failed += not ok
    sys.exit(1 if failed else 0)
