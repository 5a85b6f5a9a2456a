"""Multi-indices weighted by the Kolmogorov layer structure.

A multi-index is a plain tuple of ``d`` nonnegative ints. A Taylor term is
the pair ``(k, beta)`` standing for ``Y^k d^beta``.
"""
from __future__ import annotations

import itertools
import math
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch, LevelOutOfRange
from .group import GroupSpec


class TaylorTermIndex(NamedTuple):
    k: int
    beta: tuple[int, ...]


def _check(spec: GroupSpec, beta) -> tuple[int, ...]:
    beta = tuple(int(b) for b in beta)
    if len(beta) != spec.d:
        raise DimensionMismatch(f"multi-index has length {len(beta)}, group has d={spec.d}")
    if any(b < 0 for b in beta):
        raise ValueError(f"multi-index entries must be nonnegative: {beta}")
    return beta


def length(beta) -> int:
    return sum(beta)


def factorial(beta) -> int:
    return math.prod(math.factorial(b) for b in beta)


def b_length(spec: GroupSpec, beta) -> int:
    """Weighted length: a layer-i entry counts 2i+1."""
    beta = _check(spec, beta)
    return sum(q * b for q, b in zip(spec.dilation_exponents, beta))


def level_project(spec: GroupSpec, beta, i: int) -> tuple[int, ...]:
    beta = _check(spec, beta)
    if not 0 <= i <= spec.r:
        raise LevelOutOfRange(f"level {i} outside 0..{spec.r}")
    sl = spec.layer_slice(i)
    return tuple(b if sl.start <= j < sl.stop else 0 for j, b in enumerate(beta))


def _betas_up_to(spec: GroupSpec, budget: int):
    """All beta with b_length(beta) <= budget."""
    q = spec.dilation_exponents

    def rec(j, left):
        if j == spec.d:
            yield ()
            return
        for b in range(left // q[j] + 1):
            for rest in rec(j + 1, left - b * q[j]):
                yield (b,) + rest

    return rec(0, budget)


def enumerate_terms(spec: GroupSpec, n: int) -> list[TaylorTermIndex]:
    """All (k, beta) with 2k + |beta|_B <= n.

    Ordered by 2k + |beta|_B, then k, then beta lexicographically. The order
    is part of the contract: coefficient tables and CSV output rely on it.
    """
    if n < 0:
        return []
    terms = [
        TaylorTermIndex(k, beta)
        for k in range(n // 2 + 1)
        for beta in _betas_up_to(spec, n - 2 * k)
    ]
    terms.sort(key=lambda term: (2 * term.k + b_length(spec, term.beta), term.k, term.beta))
    return terms


def monomial(spec: GroupSpec, beta, v):
    """prod_j v_j^beta_j with 0^0 = 1; broadcasts over leading axes of ``v``."""
    beta = _check(spec, beta)
    v = np.asarray(v)
    if v.shape[-1] != spec.d:
        raise DimensionMismatch(f"vector has {v.shape[-1]} entries, group has d={spec.d}")
    out = 1
    for j, b in enumerate(beta):
        if b:
            out = out * v[..., j] ** b
    if isinstance(out, int):
        return np.ones(v.shape[:-1], dtype=v.dtype)[()] if v.dtype != object else 1
    return out


def permutation_term_count(weights, n: int) -> int:
    """Number of terms of the non-commutative (word-indexed) Taylor polynomial.

    Counts the constant plus every word ``(i_1, ..., i_k)`` over the basis
    with total weight ``sum(weights[i_j]) <= n``.
    """
    weights = tuple(weights)
    count = 1
    for k in range(1, n + 1):
        count += sum(1 for word in itertools.product(weights, repeat=k) if sum(word) <= n)
    return count
