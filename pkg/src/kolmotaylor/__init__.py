"""Intrinsic Taylor expansions on homogeneous Kolmogorov groups."""
from __future__ import annotations

from .calculus import (
    TaylorPoly,
    bonfiglioli_prototype,
    lie_derivative_fd,
    mean_value_residual,
    mixed_derivative,
    remainder,
    taylor_eval,
    taylor_poly,
    time_derivative,
)
from .errors import KolmoError
from .fields import ScalarField, derived_field, field_names, from_sympy, get_field
from .group import (
    GroupSpec,
    compose,
    dilate,
    distance,
    exp_B,
    increment,
    inverse,
    norm,
    prototype,
    validate,
)
from .multiindex import TaylorTermIndex, b_length, enumerate_terms, level_project, monomial
from .paths import S_closed_form, S_tilde, connect, flow_X, flow_Y, gamma_iterative, pivot_columns
from .regularity import SeminormEstimate, classify_C0alpha, seminorm_X

__version__ = "0.1.0"

__all__ = [
    "GroupSpec",
    "KolmoError",
    "S_closed_form",
    "S_tilde",
    "ScalarField",
    "SeminormEstimate",
    "TaylorPoly",
    "TaylorTermIndex",
    "b_length",
    "bonfiglioli_prototype",
    "classify_C0alpha",
    "compose",
    "connect",
    "derived_field",
    "dilate",
    "distance",
    "enumerate_terms",
    "exp_B",
    "field_names",
    "flow_X",
    "flow_Y",
    "from_sympy",
    "gamma_iterative",
    "get_field",
    "increment",
    "inverse",
    "level_project",
    "lie_derivative_fd",
    "mean_value_residual",
    "mixed_derivative",
    "monomial",
    "norm",
    "pivot_columns",
    "prototype",
    "remainder",
    "seminorm_X",
    "taylor_eval",
    "taylor_poly",
    "time_derivative",
    "validate",
]
