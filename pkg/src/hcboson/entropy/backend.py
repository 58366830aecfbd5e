"""Entropy backend selection: compiled kernel when built, numpy otherwise.

Set HCBOSON_BACKEND=compiled|reference to force a choice (forcing
"compiled" when the extension is missing is an error).
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import ValidationError
from . import _reference

try:
    from . import _kernels
    HAVE_COMPILED = True
except ImportError:  # extension not built; the numpy route covers everything
    _kernels = None
    HAVE_COMPILED = False

_ENV_VAR = "HCBOSON_BACKEND"


def get_backend(name: str | None = None):
    """Resolve a backend module exposing fact_entropy / exact_entropy."""
    if name is None:
        name = os.environ.get(_ENV_VAR, "auto")
    if name in (None, "", "auto"):
        return _kernels if HAVE_COMPILED else _reference
    if name == "compiled":
        if not HAVE_COMPILED:
            raise ValidationError(
                "compiled entropy backend requested but the extension is not "
                "built; run `python setup.py build_ext --inplace` or reinstall")
        return _kernels
    if name == "reference":
        return _reference
    raise ValidationError(f"unknown entropy backend {name!r}")


def backend_name(module) -> str:
    return "compiled" if module is _kernels and _kernels is not None else "reference"


def prepare_factorized(bits: np.ndarray, d0: np.ndarray, d1: np.ndarray):
    """rem / order arrays shared by both backends for the factorized route."""
    dim, n = bits.shape
    sums = np.where(bits == 1, d1.sum(), d0.sum())
    rem = np.ones((n + 1, dim))
    for k in range(n - 1, -1, -1):
        rem[k] = rem[k + 1] * sums[:, k]
    order = np.argsort(-np.maximum(d0, d1), kind="stable").astype(np.int64)
    return rem, order


def prepare_exact(bits: np.ndarray, C0: np.ndarray, C1: np.ndarray):
    d0 = np.abs(C0) ** 2
    d1 = np.abs(C1) ** 2
    return prepare_factorized(bits, d0, d1)
