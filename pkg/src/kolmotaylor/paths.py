"""Integral curves, commutator directions, switching paths and point connection.

Vector-field indices follow the usual naming: ``X_1 .. X_{p_0}`` are
addressed with 1-based ``i``. Column/coordinate indices returned by
:func:`pivot_columns` are 0-based array positions.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FieldIndexOutOfRange,
    LevelOutOfRange,
    UnsupportedDirection,
    UnsupportedIncrement,
)
from .group import GroupSpec, apply_exp, layer_project, matrix_power

RANK_RTOL = 1e-10


def flow_X(spec: GroupSpec, i: int, delta, z):
    """exp(delta X_i)(t, x) = (t, x + delta e_i)."""
    if not 1 <= i <= spec.layers[0]:
        raise FieldIndexOutOfRange(f"X_{i} is not a generator (p_0 = {spec.layers[0]})")
    out = np.array(z, copy=True)
    out[..., i] = out[..., i] + delta
    return out


def flow_Y(spec: GroupSpec, delta, z):
    """exp(delta Y)(t, x) = (t + delta, exp(delta B) x)."""
    z = np.asarray(z)
    delta = np.asarray(delta)
    spatial = apply_exp(spec, np.broadcast_to(delta, z.shape[:-1]), z[..., 1:])
    return np.concatenate([(z[..., 0] + delta)[..., None], spatial], axis=-1)


def _require_layer0(spec: GroupSpec, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    p0 = spec.layers[0]
    if np.any(v[..., p0:] != 0):
        raise UnsupportedDirection("direction must be supported on the first layer")
    return v


def commutator_vector(spec: GroupSpec, n: int, v) -> np.ndarray:
    """B^n v: the constant-coefficient field of the n-th bracket of <v, grad> with Y."""
    v = _require_layer0(spec, v)
    return v @ matrix_power(spec, n).T


def _rank(m: np.ndarray) -> int:
    if m.size == 0:
        return 0
    sv = np.linalg.svd(m, compute_uv=False)
    return int(np.sum(sv > RANK_RTOL * max(sv[0], 1e-300))) if sv[0] > 0 else 0


def pivot_columns(spec: GroupSpec, n: int) -> tuple[tuple[int, ...], np.ndarray]:
    """Greedy left-to-right independent columns of B_n ... B_1.

    Returns the 0-based column indices (all inside layer 0) and a ``d x p_n``
    basis of the corresponding coordinate subspace of layer 0.
    """
    if not 1 <= n <= spec.r:
        raise LevelOutOfRange(f"level {n} outside 1..{spec.r}")
    prod = spec.powers[n][spec.layer_slice(n), spec.layer_slice(0)]
    chosen: list[int] = []
    for j in range(prod.shape[1]):
        if _rank(prod[:, chosen + [j]]) > len(chosen):
            chosen.append(j)
        if len(chosen) == spec.layers[n]:
            break
    basis = np.zeros((spec.d, len(chosen)))
    for c, j in enumerate(chosen):
        basis[j, c] = 1.0
    return tuple(chosen), basis


def solve_in_pivots(spec: GroupSpec, n: int, target) -> np.ndarray:
    """The unique w in V_{0,n} with B^n w = target (target supported on layer n)."""
    target = np.asarray(target, dtype=float)
    if n == 0:
        return layer_project(spec, target, 0)
    cols, _ = pivot_columns(spec, n)
    sub = spec.powers[n][spec.layer_slice(n)][:, list(cols)]
    coef = np.linalg.solve(sub, target[spec.layer_slice(n)])
    w = np.zeros(spec.d)
    w[list(cols)] = coef
    return w


@dataclass
class PathResult:
    endpoint: np.ndarray
    waypoints: list = field(repr=False)

    @property
    def segment_count(self) -> int:
        return len(self.waypoints) - 1


def _gamma(spec, n, k, v, delta, z, out):
    if k == n:
        step = (v @ spec.powers[n].T) * np.asarray(delta ** (2 * n + 1))[..., None]
        z1 = np.array(z, copy=True)
        z1[..., 1:] = z1[..., 1:] + step
        out.append(z1)
        return z1
    z1 = _gamma(spec, n, k - 1, v, delta, z, out)
    z2 = flow_Y(spec, delta ** 2, z1)
    out.append(z2)
    z3 = _gamma(spec, n, k - 1, v, -delta, z2, out)
    z4 = flow_Y(spec, -(delta ** 2), z3)
    out.append(z4)
    return z4


def _levels(spec: GroupSpec, n: int, k: int) -> int:
    if n == -1:
        n = 0
    if not 0 <= n <= spec.r or not n <= k <= spec.r:
        raise LevelOutOfRange(f"need -1 <= n <= k <= r={spec.r}, got n={n}, k={k}")
    return n


def gamma_iterative(spec: GroupSpec, n: int, k: int, v, delta, z) -> PathResult:
    """Endpoint and waypoints of the switching path gamma^(n,k)_{v,delta}(z).

    Built only from straight steps along B^n v and flows of Y, following the
    recursion gamma^(n,k+1) = e^{-delta^2 Y} gamma^(n,k)_{-delta} e^{delta^2 Y} gamma^(n,k)_{delta}.
    Broadcasts over a leading batch axis of ``v``, ``delta`` and ``z``.
    """
    n = _levels(spec, n, k)
    v = _require_layer0(spec, v)
    delta = np.asarray(delta, dtype=float)
    z = np.asarray(z, dtype=float)
    waypoints = [z]
    end = _gamma(spec, n, k, v, delta, z, waypoints)
    return PathResult(endpoint=end, waypoints=waypoints)


def _positive_compositions(parts: int, max_total: int):
    """h in N^parts with every h_i >= 1 and |h| <= max_total."""
    for h in itertools.product(range(1, max_total + 1), repeat=parts):
        if sum(h) <= max_total:
            yield h


def S_closed_form(spec: GroupSpec, n: int, k: int, delta) -> np.ndarray:
    """Matrix S_{n,k}(delta) with gamma^(n,k)_{v,delta}(t, x) = (t, x + S_{n,k}(delta) v)."""
    n = _levels(spec, n, k)
    lead = delta ** (2 * n + 1) * matrix_power(spec, n)
    if k == n:
        return lead
    acc = np.zeros((spec.d, spec.d))
    for h in _positive_compositions(k - n, spec.r):
        m = sum(h)
        coef = (-1) ** m * delta ** (2 * m) / math.prod(math.factorial(x) for x in h)
        acc = acc + coef * matrix_power(spec, m)
    return (-1) ** (k - n) * lead @ acc


def S_tilde(spec: GroupSpec, n: int, k: int, delta) -> np.ndarray:
    """S_{n,k}(delta) minus its leading term delta^(2k+1) B^k."""
    S = S_closed_form(spec, n, k, delta)
    return S - delta ** (2 * k + 1) * matrix_power(spec, k)


@dataclass
class ConnectionResult:
    points: list
    deltas: list
    directions: list
    paths: list = field(repr=False)


def connect(spec: GroupSpec, n: int, zeta, y) -> ConnectionResult:
    """Reach zeta + (0, y) from zeta by switching paths gamma^(n-1,k), k = n..r.

    Step k solves B^k w_k = y^[k] + xi^[k] - xi_{k-1}^[k] in V_{0,k} and runs
    gamma^(n-1,k) with direction w_k/|w_k| and parameter |w_k|^(1/(2k+1)),
    so that its leading displacement delta^(2k+1) B^k v equals B^k w_k.
    Steps with w_k = 0 are skipped (delta_k = 0).
    """
    if not 0 <= n <= spec.r:
        raise LevelOutOfRange(f"n={n} outside 0..{spec.r}")
    zeta = np.asarray(zeta, dtype=float)
    y = np.asarray(y, dtype=float)
    low = y[: sum(spec.layers[:n])]
    if np.any(low != 0):
        raise UnsupportedIncrement(f"increment has nonzero components below layer {n}")
    xi = zeta[1:]
    points = [zeta]
    deltas, directions, paths = [], [], []
    current = zeta
    for k in range(n, spec.r + 1):
        sl = spec.layer_slice(k)
        target = np.zeros(spec.d)
        target[sl] = y[sl] + xi[sl] - current[1:][sl]
        w = solve_in_pivots(spec, k, target)
        size = float(np.linalg.norm(w))
        if size == 0.0:
            deltas.append(0.0)
            directions.append(np.zeros(spec.d))
            paths.append(PathResult(endpoint=current, waypoints=[current]))
            points.append(current)
            continue
        v = w / size
        delta = size ** (1.0 / (2 * k + 1))
        path = gamma_iterative(spec, max(n - 1, 0), k, v, delta, current)
        current = path.endpoint
        deltas.append(delta)
        directions.append(v)
        paths.append(path)
        points.append(current)
    return ConnectionResult(points=points, deltas=deltas, directions=directions, paths=paths)
