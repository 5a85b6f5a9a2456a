"""Empirical intrinsic Hoelder seminorms.

A sampled supremum can refute boundedness but never certify it, so every
estimate carries the per-delta envelope and its trend: a quotient that keeps
growing as delta -> 0 is flagged ``saturated``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AlphaOutOfRange
from .fields import ScalarField
from .group import GroupSpec, compose, dilate, distance
from .paths import flow_X, flow_Y

SATURATION_SLOPE = -0.1


@dataclass
class SeminormEstimate:
    value: float
    sample_count: int
    arg_max: tuple  # (z, delta)
    saturated: bool
    trend_slope: float
    deltas: np.ndarray = field(repr=False)
    envelope: np.ndarray = field(repr=False)  # max quotient per delta


def formal_degree(field) -> int:
    return 2 if field == "Y" else 1


def default_region(spec: GroupSpec, center=None):
    center = np.zeros(spec.d + 1) if center is None else np.asarray(center, dtype=float)
    return center - 0.5, center + 0.5


def delta_grid(count: int = 25, smallest: float = 1e-6, largest: float = 1.0) -> np.ndarray:
    mags = np.geomspace(largest, smallest, count)
    return np.concatenate([mags, -mags])


def _flow(spec, field, delta, z):
    if field == "Y":
        return flow_Y(spec, delta, z)
    return flow_X(spec, int(field), delta, z)


def _trend(mags: np.ndarray, env: np.ndarray) -> float:
    """Slope of log envelope against log |delta| over the smaller half of the positive entries."""
    keep = env > 0
    mags, env = mags[keep], env[keep]
    if len(mags) < 3:
        return 0.0
    order = np.argsort(mags)
    half = order[: max(3, len(order) // 2)]
    return float(np.polyfit(np.log(mags[half]), np.log(env[half]), 1)[0])


def quotient(spec: GroupSpec, u: ScalarField, field, alpha: float, z, delta):
    """|u(exp(delta X) z) - u(z)| / |delta|^(alpha / m_X)."""
    z = np.asarray(z, dtype=float)
    delta = np.asarray(delta, dtype=float)
    m = formal_degree(field)
    moved = _flow(spec, field, delta, z)
    return np.abs(u(moved) - u(z)) / np.abs(delta) ** (alpha / m)


def seminorm_X(spec: GroupSpec, u: ScalarField, field, alpha: float, region=None, samples: int = 2000,
               seed: int = 0, deltas=None) -> SeminormEstimate:
    """Sampled sup of the C^alpha_X difference quotient over a box and a log grid of delta."""
    m = formal_degree(field)
    if not 0 < alpha <= m:
        raise AlphaOutOfRange(f"alpha={alpha} outside (0, {m}] for field {field}")
    low, high = region if region is not None else default_region(spec)
    rng = np.random.default_rng(seed)
    zs = rng.uniform(low, high, size=(samples, spec.d + 1))
    deltas = delta_grid() if deltas is None else np.asarray(deltas, dtype=float)
    table = np.empty((len(deltas), samples))
    base = np.asarray(u(zs), dtype=float)
    for i, dlt in enumerate(deltas):
        moved = _flow(spec, field, dlt, zs)
        table[i] = np.abs(np.asarray(u(moved), dtype=float) - base) / abs(dlt) ** (alpha / m)
    table = np.nan_to_num(table, nan=0.0)
    i, j = np.unravel_index(np.argmax(table), table.shape)
    env = table.max(axis=1)
    mags = np.abs(deltas)
    # envelope over both signs of delta
    uniq = np.unique(mags)
    env_mag = np.array([env[mags == mg].max() for mg in uniq])
    slope = _trend(uniq, env_mag)
    return SeminormEstimate(
        value=float(table[i, j]),
        sample_count=samples,
        arg_max=(zs[j].copy(), float(deltas[i])),
        saturated=slope < SATURATION_SLOPE,
        trend_slope=slope,
        deltas=deltas,
        envelope=env,
    )


@dataclass
class RegularityReport:
    total: float
    y: SeminormEstimate
    x: list
    holder_quotient: float
    saturated: bool


def holder_quotient(spec: GroupSpec, u: ScalarField, alpha: float, region=None, samples: int = 2000,
                    seed: int = 0) -> float:
    """Sampled sup of |u(z) - u(zeta)| / ||zeta^-1 o z||_B^alpha over near and far pairs."""
    low, high = region if region is not None else default_region(spec)
    rng = np.random.default_rng(seed)
    zetas = rng.uniform(low, high, size=(samples, spec.d + 1))
    far = rng.uniform(low, high, size=(samples, spec.d + 1))
    w = rng.normal(size=(samples, spec.d + 1))
    rho = 10.0 ** rng.uniform(-4, 0, size=samples)
    near = compose(spec, zetas, dilate(spec, rho, w))
    best = 0.0
    for z in (far, near):
        dist = distance(spec, zetas, z)
        ok = dist > 0
        q = np.abs(np.asarray(u(z), dtype=float) - np.asarray(u(zetas), dtype=float))[ok] / dist[ok] ** alpha
        q = np.nan_to_num(q, nan=0.0)
        best = max(best, float(q.max(initial=0.0)))
    return best


def classify_C0alpha(spec: GroupSpec, u: ScalarField, alpha: float, region=None, samples: int = 2000,
                     seed: int = 0) -> RegularityReport:
    """C^{0,alpha}_B seminorm estimate: Y part plus every generator part."""
    y = seminorm_X(spec, u, "Y", alpha, region, samples, seed)
    xs = [seminorm_X(spec, u, i, alpha, region, samples, seed) for i in range(1, spec.layers[0] + 1)]
    return RegularityReport(
        total=y.value + sum(e.value for e in xs),
        y=y,
        x=xs,
        holder_quotient=holder_quotient(spec, u, alpha, region, samples, seed),
        saturated=y.saturated or any(e.saturated for e in xs),
    )
