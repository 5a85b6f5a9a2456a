"""Intrinsic derivatives and the B-Taylor polynomial.

The polynomial of order n around zeta = (s, xi) is

    T_n u(zeta, z) = sum_{2k + |beta|_B <= n} Y^k d^beta u(zeta) / (k! beta!)
                     * (t - s)^k (x - exp((t - s)B) xi)^beta.
"""
from __future__ import annotations

import math
from contextlib import nullcontext
from dataclasses import dataclass
from itertools import product

import mpmath
import numpy as np

from .errors import InsufficientSmoothness, OrderOutOfRange, UnsupportedGroup
from .fields import ScalarField
from .group import GroupSpec, apply_exp, prototype
from .multiindex import TaylorTermIndex, b_length, enumerate_terms, factorial, monomial
from .paths import flow_X, flow_Y

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class TaylorPoly:
    anchor: np.ndarray
    order: int
    coefficients: dict

    def coefficient(self, k: int, beta) -> float:
        return self.coefficients[TaylorTermIndex(k, tuple(beta))]


def _flow(spec: GroupSpec, field, delta, z):
    if field == "Y":
        return flow_Y(spec, delta, z)
    return flow_X(spec, int(field), delta, z)


def lie_derivative_fd(spec: GroupSpec, u: ScalarField, field, z, h: float) -> float:
    """Central difference of u along the integral curve of ``field`` ("Y" or generator index i)."""
    z = np.asarray(z, dtype=float)
    return (u(_flow(spec, field, h, z)) - u(_flow(spec, field, -h, z))) / (2 * h)


def _central_weights(m: int):
    """Offsets (in units of h) and weights of the second-order central m-th difference."""
    offsets = [m / 2 - i for i in range(m + 1)]
    weights = [(-1) ** i * math.comb(m, i) for i in range(m + 1)]
    return offsets, weights


def _euclidean_stencil(u: ScalarField, beta, z: np.ndarray, base: float) -> tuple[float, float]:
    """Tensor-product second-order central stencil with relative step ``base``."""
    axes = []
    for j, b in enumerate(beta):
        if b:
            h = base * max(1.0, abs(z[j + 1]))
            offs, ws = _central_weights(b)
            axes.append([(j + 1, o * h, w / h ** b) for o, w in zip(offs, ws)])
    pts, wts = [], []
    for combo in product(*axes):
        p = z.copy()
        w = 1.0
        for axis, off, weight in combo:
            p[axis] += off
            w *= weight
        pts.append(p)
        wts.append(w)
    vals = np.asarray(u(np.array(pts)), dtype=float)
    scale = max(float(np.max(np.abs(vals))), 1.0)
    return float(np.dot(wts, vals)), EPS * scale * float(np.sum(np.abs(wts)))


def _euclidean_fd(u: ScalarField, beta, z: np.ndarray):
    """d^beta u(z) with one Richardson step on top of the central stencil; returns (value, noise).

    The extrapolated stencil is fourth order, so the step eps^(1/(|beta|+4))
    balances truncation against roundoff.
    """
    order = sum(beta)
    if order == 0:
        return float(u(z)), EPS * max(abs(float(u(z))), 1.0)
    base = EPS ** (1.0 / (order + 4))
    coarse, _ = _euclidean_stencil(u, beta, z, base)
    fine, noise = _euclidean_stencil(u, beta, z, base / 2)
    return (4.0 * fine - coarse) / 3.0, 2.0 * noise


def _y_derivative_fd(spec: GroupSpec, g, k: int, z: np.ndarray, noise: float) -> float:
    """k-th derivative of delta -> g(exp(delta Y) z) at 0, with one Richardson step."""
    h = noise ** (1.0 / (k + 4))
    h = min(max(h, 1e-4), 0.1)
    offs, ws = _central_weights(k)

    def diff(step):
        return sum(w * g(flow_Y(spec, o * step, z)) for o, w in zip(offs, ws)) / step ** k

    return (4.0 * diff(h / 2) - diff(h)) / 3.0


def mixed_derivative(spec: GroupSpec, u: ScalarField, k: int, beta, zeta, use_oracle: bool = True):
    """Y^k d^beta u(zeta), from the oracle when present, else nested finite differences."""
    beta = tuple(beta)
    weight = 2 * k + b_length(spec, beta)
    if weight > u.smoothness and u.is_singular(zeta):
        raise InsufficientSmoothness(
            f"Y^{k} d^{beta} needs intrinsic order {weight}; {u.name or 'field'} is only "
            f"C^{u.smoothness} at {zeta}")
    if use_oracle and u.derivative_oracle is not None:
        return u.derivative_oracle(k, beta, zeta)
    zeta = np.asarray(zeta, dtype=float)
    if k == 0:
        return _euclidean_fd(u, beta, zeta)[0]
    _, noise = _euclidean_fd(u, beta, zeta)
    return _y_derivative_fd(spec, lambda p: _euclidean_fd(u, beta, p)[0], k, zeta, noise)


def taylor_poly(spec: GroupSpec, u: ScalarField, n: int, zeta, use_oracle: bool = True) -> TaylorPoly:
    coefficients = {}
    for term in enumerate_terms(spec, n):
        value = mixed_derivative(spec, u, term.k, term.beta, zeta, use_oracle=use_oracle)
        coefficients[term] = value / (math.factorial(term.k) * factorial(term.beta))
    return TaylorPoly(anchor=np.array(zeta), order=n, coefficients=coefficients)


def taylor_eval(spec: GroupSpec, poly: TaylorPoly, z):
    """T_n u(zeta, z); broadcasts over batches of points ``z`` and of anchors."""
    z = np.asarray(z)
    zeta = poly.anchor
    tau = z[..., 0] - zeta[..., 0]
    inc = z[..., 1:] - apply_exp(spec, tau, np.broadcast_to(zeta[..., 1:], z[..., 1:].shape))
    total = 0
    for term, c in poly.coefficients.items():
        total = total + c * tau ** term.k * monomial(spec, term.beta, inc)
    return total


def _to_mp(a) -> np.ndarray:
    return np.array([mpmath.mpf(float(c)) if not isinstance(c, mpmath.mpf) else c for c in np.ravel(a)],
                    dtype=object).reshape(np.shape(a))


def precision(dps: int | None):
    """Context raising mpmath precision to ``dps`` digits unless it is already that high."""
    if dps is None or mpmath.mp.dps >= dps:
        return nullcontext()
    return mpmath.workdps(dps)


def remainder(spec: GroupSpec, u: ScalarField, n: int, zeta, z, dps: int | None = None,
              use_oracle: bool = True):
    """u(z) - T_n u(zeta, z).

    With ``dps`` set the whole computation runs in mpmath at that many digits
    (the field must provide a ``precise`` twin) and a float is returned; this
    keeps remainders far below float64 roundoff measurable.
    """
    if dps is None:
        poly = taylor_poly(spec, u, n, zeta, use_oracle=use_oracle)
        return u(z) - taylor_eval(spec, poly, z)
    if u.precise is None:
        raise ValueError(f"field {u.name!r} has no high-precision evaluator")
    with precision(dps):
        zeta_mp, z_mp = _to_mp(zeta), _to_mp(z)
        poly = taylor_poly(spec, u.precise, n, zeta_mp)
        return float(u.precise(z_mp) - taylor_eval(spec, poly, z_mp))


def time_derivative(spec: GroupSpec, u: ScalarField, z, use_oracle: bool = True) -> float:
    """d_t u = Yu - <Bx, grad u>, with the full spatial gradient from intrinsic derivatives."""
    z = np.asarray(z, dtype=float)
    yu = mixed_derivative(spec, u, 1, (0,) * spec.d, z, use_oracle=use_oracle)
    bx = spec.B @ z[1:]
    grad_term = 0.0
    for j in range(spec.d):
        if bx[j] != 0.0:
            e = tuple(1 if i == j else 0 for i in range(spec.d))
            grad_term += bx[j] * mixed_derivative(spec, u, 0, e, z, use_oracle=use_oracle)
    return yu - grad_term


def word_derivative(spec: GroupSpec, u: ScalarField, word, z):
    """Apply an operator word (outermost first) to u at z.

    Uses ``u.word_oracle`` when available; otherwise nests Richardson-corrected
    central differences along the flows of the letters (``"Y"`` or ``"x<i>"``
    for generators).
    """
    word = tuple(word)
    if u.word_oracle is not None:
        return u.word_oracle(word, z)
    z = np.asarray(z, dtype=float)
    if not word:
        return float(u(z))
    head, rest = word[0], word[1:]
    field = "Y" if head == "Y" else int(head[1:])
    if field != "Y" and field > spec.layers[0]:
        # non-generator coordinate: plain Euclidean direction
        def step(p, h):
            q = p.copy()
            q[field] += h
            return q
    else:
        def step(p, h):
            return _flow(spec, field, h, p)
    h = 10.0 ** (-2.0 - 0.5 * len(rest)) if rest else 1e-3

    def d(hh):
        return (word_derivative(spec, u, rest, step(z, hh)) - word_derivative(spec, u, rest, step(z, -hh))) / (2 * hh)

    return (4.0 * d(h / 2) - d(h)) / 3.0


def _is_prototype(spec: GroupSpec) -> bool:
    return spec.layers == (1, 1) and np.array_equal(spec.B, prototype().B)


def bonfiglioli_prototype(u: ScalarField, n: int, zeta, z, spec: GroupSpec | None = None):
    """Word-indexed (permutation form) Taylor polynomial on the prototype group, n <= 4.

    Uses the exponential-coordinate increment
    x2 - xi2 - (t - s) xi1 - (t - s)(x1 - xi1)/2 in the x2 direction and the
    symmetrized non-commuting derivatives, written out to order four.
    """
    spec = spec or prototype()
    if not _is_prototype(spec):
        raise UnsupportedGroup("the permutation-form polynomial is only available on the prototype group")
    if not 0 <= n <= 4:
        raise OrderOutOfRange(f"order {n} outside 0..4")
    zeta = np.asarray(zeta, dtype=float)
    z = np.asarray(z, dtype=float)
    tau = z[..., 0] - zeta[..., 0]
    d1 = z[..., 1] - zeta[..., 1]
    log2 = z[..., 2] - zeta[..., 2] - tau * zeta[..., 1] - tau * d1 / 2

    def W(*word):
        return word_derivative(spec, u, word, zeta)

    total = W()
    if n >= 1:
        total = total + W("x1") * d1
    if n >= 2:
        total = total + W("Y") * tau + W("x1", "x1") / 2 * d1 ** 2
    if n >= 3:
        total = (total + (W("Y", "x1") + W("x1", "Y")) / 2 * d1 * tau
                 + W("x1", "x1", "x1") / 6 * d1 ** 3 + W("x2") * log2)
    if n >= 4:
        total = (total + W("Y", "Y") / 2 * tau ** 2 + W("x1", "x1", "x1", "x1") / 24 * d1 ** 4
                 + (W("Y", "x1", "x1") + W("x1", "Y", "x1") + W("x1", "x1", "Y")) / 6 * d1 ** 2 * tau
                 + W("x2", "x1") * d1 * log2)
    return total


def mean_value_residual(spec: GroupSpec, u: ScalarField, n: int, delta, z, use_oracle: bool = True):
    """u(exp(delta Y) z) - sum_{i<=n} delta^i Y^i u(z) / i!."""
    z = np.asarray(z, dtype=float)
    zero = (0,) * spec.d
    partial = sum(delta ** i / math.factorial(i) * mixed_derivative(spec, u, i, zero, z, use_oracle=use_oracle)
                  for i in range(n + 1))
    return u(flow_Y(spec, delta, z)) - partial
