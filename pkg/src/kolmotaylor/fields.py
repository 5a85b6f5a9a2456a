"""Scalar fields u(t, x) with optional exact derivative oracles, and the built-in registry.

Oracles for the smooth registry fields are generated symbolically once per
requested derivative and compiled twice: a numpy version for float work and
an mpmath version used by the high-precision remainder path.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, replace
from typing import Callable

import mpmath
import numpy as np
import sympy as sp

from .errors import ConfigError, DimensionMismatch
from .group import GroupSpec

Word = tuple  # operator names, outermost first: ("Y", "x1") means Y d_{x1}


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Evaluable field with optional exact derivatives.

    ``derivative_oracle(k, beta, z)`` returns Y^k d^beta u(z);
    ``word_oracle(word, z)`` applies an arbitrary non-commuting operator word.
    ``smoothness`` is the intrinsic order n of the class C^{n,1}_B the field
    is known to belong to near ``singular`` points; away from the singular set
    the field is classically smooth. ``precise`` is an mpmath-capable twin
    taking single points with ``mpf`` entries.
    """

    evaluator: Callable
    derivative_oracle: Callable | None = None
    smoothness: float = math.inf
    tag: str = "smooth"
    word_oracle: Callable | None = None
    precise: "ScalarField | None" = None
    singular: Callable | None = None
    name: str = ""

    def __call__(self, z):
        return self.evaluator(np.asarray(z))

    def is_singular(self, z) -> bool:
        return bool(self.singular is not None and np.any(self.singular(np.asarray(z))))


def _spread(value, z):
    """Broadcast a lambdified result to the batch shape of ``z``."""
    shape = np.shape(z)[:-1]
    if not shape:
        return value
    return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()


def coordinate_symbols(d: int):
    t = sp.Symbol("t", real=True)
    xs = sp.symbols(f"x1:{d + 1}", real=True)
    return t, xs


def _exact(value: float):
    return sp.Rational(float(value))


class _SymbolicOracle:
    """Compiled derivatives of one sympy expression, built on demand."""

    def __init__(self, spec: GroupSpec, expr, t, xs):
        self.spec = spec
        self.expr = expr
        self.t = t
        self.xs = xs
        self.args = (t, *xs)
        self.Bx = [sum(_exact(spec.B[i, j]) * xs[j] for j in range(spec.d) if spec.B[i, j] != 0)
                   for i in range(spec.d)]
        self._exprs: dict = {}
        self._compiled: dict = {}
        self._lock = threading.RLock()

    def Y(self, e):
        return sp.diff(e, self.t) + sum(c * sp.diff(e, x) for c, x in zip(self.Bx, self.xs) if c != 0)

    def apply(self, op: str, e):
        if op == "Y":
            return self.Y(e)
        if op == "t":
            return sp.diff(e, self.t)
        if op.startswith("x"):
            return sp.diff(e, self.xs[int(op[1:]) - 1])
        raise ValueError(f"unknown operator {op!r}")

    def word_expr(self, word: Word):
        word = tuple(word)
        with self._lock:
            if word not in self._exprs:
                e = self.expr if not word else self.apply(word[0], self.word_expr(word[1:]))
                self._exprs[word] = e
            return self._exprs[word]

    @staticmethod
    def kb_word(k: int, beta) -> Word:
        word = ("Y",) * k
        for j, b in enumerate(beta):
            word += (f"x{j + 1}",) * b
        return word

    def compiled(self, word: Word, precise: bool):
        key = (tuple(word), precise)
        with self._lock:
            fn = self._compiled.get(key)
            if fn is None:
                e = self.word_expr(word)
                fn = sp.lambdify(self.args, e, modules="mpmath" if precise else [{"erf": _np_erf}, "numpy"])
                self._compiled[key] = fn
            return fn

    def call(self, word: Word, z, precise: bool):
        z = np.asarray(z)
        if z.shape[-1] != self.spec.d + 1:
            raise DimensionMismatch(f"point has {z.shape[-1]} coordinates, field needs {self.spec.d + 1}")
        fn = self.compiled(word, precise)
        if precise:
            return mpmath.mpf(fn(*[mpmath.mpf(c) for c in z]))
        with np.errstate(all="ignore"):
            return _spread(fn(*np.moveaxis(z, -1, 0)), z)


def from_sympy(spec: GroupSpec, expr, t, xs, *, name: str = "", smoothness=math.inf,
               tag: str = "smooth", singular=None, evaluator=None) -> ScalarField:
    """Field from a sympy expression in the symbols returned by :func:`coordinate_symbols`."""
    oracle = _SymbolicOracle(spec, expr, t, xs)

    def make(precise: bool) -> ScalarField:
        def ev(z):
            return oracle.call((), z, precise)

        def dv(k, beta, z):
            return oracle.call(oracle.kb_word(k, beta), z, precise)

        def wv(word, z):
            return oracle.call(word, z, precise)

        return ScalarField(evaluator=ev, derivative_oracle=dv, smoothness=smoothness, tag=tag,
                           word_oracle=wv, singular=singular, name=name)

    coarse = make(False)
    if evaluator is not None:
        coarse = replace(coarse, evaluator=evaluator)
    return replace(coarse, precise=make(True))


# --- Kinked example fields: u = |x2 - c|^p on the prototype group ------------


def _abs_power_derivative(y, c, p, m):
    """m-th derivative of |y - c|^p."""
    coef = math.prod(p - i for i in range(m))
    if isinstance(y, mpmath.mpf):
        s = y - c
        if coef == 0:
            return mpmath.mpf(0)
        sgn = mpmath.sign(s)
        return coef * abs(s) ** (p - m) * sgn ** m
    s = np.asarray(y, dtype=float) - c
    if coef == 0:
        return np.zeros_like(s)[()]
    with np.errstate(all="ignore"):
        return (coef * np.abs(s) ** (p - m) * np.sign(s) ** m)[()]


def abs_power_field(spec: GroupSpec, c: float = 0.0, p: float = 1.0, name: str = "") -> ScalarField:
    """u = |x2 - c|^p on the prototype group, with hand-derived oracles.

    Y acts on functions of x2 as x1 d/dx2 and annihilates x1, hence
    Y^k d^beta u = x1^k g^(k + beta_2)(x2) when beta_1 = 0 and 0 otherwise.
    """
    if spec.d != 2 or spec.B[1, 0] != 1.0:
        raise ConfigError("abs-type example fields are defined on the prototype group only")
    cc = mpmath.mpf(c)
    pp = mpmath.mpf(p) if p != int(p) else int(p)

    def make(precise: bool) -> ScalarField:
        def ev(z):
            if precise:
                return abs(z[2] - cc) ** pp
            z = np.asarray(z, dtype=float)
            return np.abs(z[..., 2] - c) ** p

        def dv(k, beta, z):
            beta = tuple(beta)
            if precise:
                if beta[0] != 0:
                    return mpmath.mpf(0)
                return z[1] ** k * _abs_power_derivative(mpmath.mpf(z[2]), cc, pp, k + beta[1])
            zz = np.asarray(z, dtype=float)
            if beta[0] != 0:
                return np.zeros(zz.shape[:-1])[()]
            return zz[..., 1] ** k * _abs_power_derivative(zz[..., 2], c, p, k + beta[1])

        return ScalarField(
            evaluator=ev,
            derivative_oracle=dv,
            smoothness=2 * p - 1 if p > 1 else 1,
            tag=f"kink at x2={c}",
            singular=lambda z: np.abs(np.asarray(z, dtype=float)[..., 2] - c) < 1e-12,
            name=name,
        )

    return replace(make(False), precise=make(True))


# --- Gaussian-smoothed |x2| -------------------------------------------------


def gauss_smoothed_abs_quadrature(z) -> float:
    """Direct quadrature of E|x2 + x1^2 N(0,1)| (reference for the closed form)."""
    from scipy import integrate

    _, x1, x2 = (float(c) for c in z)
    if x1 == 0.0:
        return abs(x2)
    var = x1 ** 4
    dens = lambda y: math.exp(-((y - x2) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var) * abs(y)
    width = 12 * math.sqrt(var)
    pts = [0.0] if x2 - width < 0.0 < x2 + width else None
    val, _ = integrate.quad(dens, x2 - width, x2 + width, points=pts, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def gauss_smoothed_abs_field(spec: GroupSpec, name: str = "gauss_smoothed_abs") -> ScalarField:
    """E|x2 + x1^2 Z|, Z standard normal: sigma sqrt(2/pi) e^{-x2^2/2sigma^2} + x2 erf(x2/(sigma sqrt 2))."""
    if spec.d != 2:
        raise ConfigError("gauss_smoothed_abs is defined on the prototype group only")
    t, xs = coordinate_symbols(2)
    x1, x2 = xs
    sigma = x1 ** 2
    expr = sigma * sp.sqrt(2 / sp.pi) * sp.exp(-x2 ** 2 / (2 * sigma ** 2)) + x2 * sp.erf(x2 / (sigma * sp.sqrt(2)))
    raw = sp.lambdify((t, x1, x2), expr, modules=["numpy", {"erf": _np_erf}])

    def ev(z):
        z = np.asarray(z, dtype=float)
        with np.errstate(all="ignore"):
            val = raw(z[..., 0], z[..., 1], z[..., 2])
        return np.where(z[..., 1] == 0.0, np.abs(z[..., 2]), val)[()]

    field = from_sympy(spec, expr, t, xs, name=name, smoothness=2, tag="smooth off x1=0",
                       singular=lambda z: np.abs(np.asarray(z, dtype=float)[..., 1]) < 1e-3)
    return replace(field, evaluator=ev)


def _np_erf(x):
    from scipy.special import erf

    return erf(x)


# --- Registry ---------------------------------------------------------------

_PROTOTYPE_ONLY = {"sin_cos_poly", "abs_x2", "abs_x2_3half", "transport", "gauss_smoothed_abs", "sin_t_x1x2"}


def _parse_mono(spec: GroupSpec, name: str):
    try:
        _, beta_s, k_s = name.split(":")
        beta = tuple(int(b) for b in beta_s.split(",")) if beta_s else ()
        k = int(k_s)
    except ValueError as exc:
        raise ConfigError(f"monomial fields are named mono:<b1,...,bd>:<k>, got {name!r}") from exc
    if len(beta) != spec.d:
        raise ConfigError(f"monomial {name!r} has {len(beta)} exponents, group has d={spec.d}")
    return beta, k


def get_field(name: str, spec: GroupSpec, c: float = 0.0) -> ScalarField:
    """Look up a built-in field by name.

    Names: sin_cos_poly, sin_t_x1x2, abs_x2, abs_x2_3half, transport,
    gauss_smoothed_abs, and coordinate monomials ``mono:<beta>:<k>`` for
    t^k x^beta on any group.
    """
    if name in _PROTOTYPE_ONLY and spec.d != 2:
        raise ConfigError(f"field {name!r} needs a d=2 group, got d={spec.d}")
    if name == "abs_x2":
        return abs_power_field(spec, c=c, p=1, name=name)
    if name == "abs_x2_3half":
        return abs_power_field(spec, c=c, p=1.5, name=name)
    if name == "gauss_smoothed_abs":
        return gauss_smoothed_abs_field(spec, name=name)
    t, xs = coordinate_symbols(spec.d)
    if name == "sin_cos_poly":
        expr = sp.sin(xs[0]) + sp.cos(xs[1]) + t ** 2
    elif name == "sin_t_x1x2":
        expr = sp.sin(t) + xs[0] * xs[1]
    elif name == "transport":
        expr = sp.sin(xs[1] - t * xs[0])
    elif name.startswith("mono:"):
        beta, k = _parse_mono(spec, name)
        expr = t ** k * sp.Mul(*[x ** b for x, b in zip(xs, beta)])
    else:
        raise ConfigError(f"unknown field {name!r}")
    return from_sympy(spec, expr, t, xs, name=name)


def field_names() -> list[str]:
    return sorted(_PROTOTYPE_ONLY) + ["mono:<beta>:<k>"]


def derived_field(spec: GroupSpec, u: ScalarField, k: int, beta) -> ScalarField:
    """The field Y^k d^beta u, evaluated through the oracle of ``u``."""
    if u.derivative_oracle is None:
        raise ValueError("derived fields need a derivative oracle")
    beta = tuple(beta)
    prec = derived_field(spec, u.precise, k, beta) if u.precise is not None else None
    weight = 2 * k + sum(q * b for q, b in zip(spec.dilation_exponents, beta))
    return ScalarField(
        evaluator=lambda z: u.derivative_oracle(k, beta, z),
        smoothness=u.smoothness - weight,
        tag=u.tag,
        precise=prec,
        singular=u.singular,
        name=f"Y^{k} d^{beta} {u.name}",
    )
