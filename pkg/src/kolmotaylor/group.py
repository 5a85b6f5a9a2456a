"""Kolmogorov-type homogeneous groups built from a block matrix B.

Points are numpy arrays of shape ``(..., 1 + d)`` holding ``(t, x_1, ..., x_d)``;
every operation broadcasts over the leading axes. Object arrays of
``mpmath.mpf`` values are accepted wherever float arrays are, which is how
the high-precision remainder path runs through the same code.

Group law (left factor ``zeta = (s, xi)``, right factor ``z = (t, x)``)::

    zeta o z = (s + t, x + exp(tB) xi)
    zeta^-1  = (-s, -exp(-sB) xi)

This is the convention for which ``zeta^-1 o z = (t - s, x - exp((t-s)B) xi)``
gives the increments of the intrinsic Taylor polynomial and for which the
Kolmogorov operator is left-invariant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    NonMonotoneLayers,
    NonpositiveLambda,
    NonzeroStarBlock,
    RankDeficientBlock,
)

STAR_TOL = 1e-12
RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """Validated block matrix B together with its layer structure.

    Build instances with :func:`validate`; the constructor does not check
    the structural assumptions.
    """

    B: np.ndarray
    layers: tuple[int, ...]
    powers: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def d(self) -> int:
        return self.B.shape[0]

    @property
    def r(self) -> int:
        return len(self.layers) - 1

    @property
    def cum_layers(self) -> tuple[int, ...]:
        return tuple(int(c) for c in np.cumsum(self.layers))

    @property
    def dilation_exponents(self) -> tuple[int, ...]:
        return tuple(2 * i + 1 for i, p in enumerate(self.layers) for _ in range(p))

    def layer_slice(self, i: int) -> slice:
        start = sum(self.layers[:i])
        return slice(start, start + self.layers[i])

    def layer_of(self, j: int) -> int:
        """Layer index of spatial coordinate ``j`` (0-based)."""
        for i, c in enumerate(self.cum_layers):
            if j < c:
                return i
        raise IndexError(j)

    def block(self, j: int) -> np.ndarray:
        """Sub-diagonal block B_j (rows in layer j, columns in layer j-1), 1 <= j <= r."""
        return self.B[self.layer_slice(j), self.layer_slice(j - 1)]

    def __repr__(self) -> str:
        return f"GroupSpec(d={self.d}, layers={self.layers})"


def validate(B_raw, layers) -> GroupSpec:
    B = np.array(B_raw, dtype=float)
    layers = tuple(int(p) for p in layers)
    if not layers or any(p < 1 for p in layers):
        raise NonMonotoneLayers(f"layers must be a nonempty list of positive integers, got {layers}")
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise DimensionMismatch(f"B must be square, got shape {B.shape}")
    d = B.shape[0]
    if sum(layers) != d:
        raise DimensionMismatch(f"layer sizes sum to {sum(layers)} but B is {d}x{d}")
    if any(a < b for a, b in zip(layers, layers[1:])):
        raise NonMonotoneLayers(f"layer sizes must be nonincreasing, got {layers}")

    starts = np.concatenate([[0], np.cumsum(layers)])
    band = np.zeros((d, d), dtype=bool)
    for j in range(1, len(layers)):
        band[starts[j]:starts[j + 1], starts[j - 1]:starts[j]] = True
    off = np.abs(np.where(band, 0.0, B))
    if off.size and off.max() > STAR_TOL:
        i, j = np.unravel_index(np.argmax(off), off.shape)
        raise NonzeroStarBlock(f"entry B[{i},{j}]={B[i, j]!r} lies outside the sub-diagonal blocks")

    for j in range(1, len(layers)):
        blk = B[starts[j]:starts[j + 1], starts[j - 1]:starts[j]]
        sv = np.linalg.svd(blk, compute_uv=False)
        if sv[0] == 0.0 or sv[-1] <= RANK_RTOL * sv[0]:
            raise RankDeficientBlock(f"block B_{j} has rank < {layers[j]} (singular values {sv})")

    B.setflags(write=False)
    powers = [np.eye(d)]
    for _ in range(len(layers) - 1):
        powers.append(powers[-1] @ B)
    for P in powers:
        P.setflags(write=False)
    return GroupSpec(B=B, layers=layers, powers=tuple(powers))


def prototype() -> GroupSpec:
    """The d=2 Langevin group, B = [[0, 0], [1, 0]]."""
    return validate([[0.0, 0.0], [1.0, 0.0]], (1, 1))


def chain(layers, blocks) -> GroupSpec:
    """Assemble B from its sub-diagonal blocks B_1..B_r and validate."""
    layers = tuple(layers)
    d = sum(layers)
    B = np.zeros((d, d))
    starts = np.concatenate([[0], np.cumsum(layers)])
    for j, blk in enumerate(blocks, start=1):
        B[starts[j]:starts[j + 1], starts[j - 1]:starts[j]] = blk
    return validate(B, layers)


def random_spec(layers, rng: np.random.Generator) -> GroupSpec:
    """Random valid group with the given layer sizes (blocks are well conditioned)."""
    layers = tuple(layers)
    blocks = []
    for j in range(1, len(layers)):
        while True:
            blk = rng.uniform(-1.0, 1.0, size=(layers[j], layers[j - 1]))
            sv = np.linalg.svd(blk, compute_uv=False)
            if sv[-1] > 0.2 * sv[0]:
                break
        blocks.append(blk)
    return chain(layers, blocks)


def point(t, x) -> np.ndarray:
    return np.concatenate([[t], np.asarray(x, dtype=float)])


def _check(spec: GroupSpec, *zs) -> None:
    for z in zs:
        if np.shape(z)[-1] != spec.d + 1:
            raise DimensionMismatch(f"point has {np.shape(z)[-1]} coordinates, group needs {spec.d + 1}")


def matrix_power(spec: GroupSpec, n: int) -> np.ndarray:
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > spec.r:
        return np.zeros((spec.d, spec.d))
    return spec.powers[n]


def exp_B(spec: GroupSpec, delta) -> np.ndarray:
    """exp(delta B) as the finite sum over B^h delta^h / h!, h <= r."""
    out = spec.powers[0] * (delta ** 0)
    for h in range(1, spec.r + 1):
        out = out + spec.powers[h] * (delta ** h / math.factorial(h))
    return out


def apply_exp(spec: GroupSpec, tau, v):
    """exp(tau B) v, broadcasting ``tau`` of shape (...) against ``v`` of shape (..., d)."""
    tau = np.asarray(tau)[..., None]
    out = v
    for h in range(1, spec.r + 1):
        out = out + (tau ** h / math.factorial(h)) * (v @ spec.powers[h].T)
    return out


def compose(spec: GroupSpec, zeta, z):
    _check(spec, zeta, z)
    zeta = np.asarray(zeta)
    z = np.asarray(z)
    s, xi = zeta[..., 0], zeta[..., 1:]
    t, x = z[..., 0], z[..., 1:]
    spatial = x + apply_exp(spec, t, xi)
    return np.concatenate([np.asarray(s + t)[..., None], spatial], axis=-1)


def inverse(spec: GroupSpec, z):
    _check(spec, z)
    z = np.asarray(z)
    t, x = z[..., 0], z[..., 1:]
    return np.concatenate([np.asarray(-t)[..., None], -apply_exp(spec, -t, x)], axis=-1)


def increment(spec: GroupSpec, zeta, z):
    """zeta^-1 o z computed directly as (t - s, x - exp((t-s)B) xi)."""
    _check(spec, zeta, z)
    zeta = np.asarray(zeta)
    z = np.asarray(z)
    tau = z[..., 0] - zeta[..., 0]
    return np.concatenate([np.asarray(tau)[..., None], z[..., 1:] - apply_exp(spec, tau, zeta[..., 1:])], axis=-1)


def dilation_weights(spec: GroupSpec) -> np.ndarray:
    return np.array((2,) + spec.dilation_exponents)


def dilate(spec: GroupSpec, lam, z):
    if np.any(np.asarray(lam) <= 0):
        raise NonpositiveLambda(f"dilation factor must be positive, got {lam}")
    _check(spec, z)
    z = np.asarray(z)
    lam = np.asarray(lam)[..., None]
    return z * lam ** dilation_weights(spec)


def _roots(z, weights):
    if np.asarray(z).dtype == object:
        import mpmath

        exps = np.array([mpmath.mpf(1) / w for w in weights], dtype=object)
        return np.vectorize(lambda a, e: abs(a) ** e if a != 0 else mpmath.mpf(0), otypes=[object])(z, exps)
    return np.abs(z) ** (1.0 / weights)


def spatial_norm(spec: GroupSpec, x):
    """|x|_B = sum_j |x_j|^(1/q_j)."""
    return np.sum(_roots(np.asarray(x), np.array(spec.dilation_exponents)), axis=-1)


def norm(spec: GroupSpec, z):
    """Homogeneous quasi-norm |t|^(1/2) + |x|_B."""
    _check(spec, z)
    return np.sum(_roots(np.asarray(z), dilation_weights(spec)), axis=-1)


def distance(spec: GroupSpec, zeta, z):
    """||zeta^-1 o z||_B."""
    return norm(spec, increment(spec, zeta, z))


def in_ball(spec: GroupSpec, zeta, z, rho) -> bool:
    return bool(distance(spec, zeta, z) < rho)


def layer_project(spec: GroupSpec, x, i: int):
    """Keep the layer-i components of a spatial vector, zero elsewhere."""
    x = np.asarray(x)
    out = np.zeros_like(x)
    sl = spec.layer_slice(i)
    out[..., sl] = x[..., sl]
    return out
