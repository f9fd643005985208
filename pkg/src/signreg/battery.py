"""Named test functions and designs used by the CLI and the approximation checks.

Every function is monotone and either convex or concave on ``[0, 1]``.
"""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np

from .core import Design
from .errors import StructuralError

__all__ = ["DESIGN_KINDS", "FUNCTIONS", "get_function", "make_design"]


def _power(p: float) -> Callable[[float], float]:
    return lambda t: float(t) ** p


def _logistic(t: float) -> float:
    # Left half of the logistic curve, convex on [0, 1].
    return 1.0 / (1.0 + math.exp(-(4.0 * t - 4.0)))


FUNCTIONS: dict[str, Callable[[float], float]] = {
    "x^0.3": _power(0.3),
    "sqrt": math.sqrt,
    "x^0.7": _power(0.7),
    "identity": lambda t: float(t),
    "x^1.5": _power(1.5),
    "square": _power(2.0),
    "cube": _power(3.0),
    "x^4": _power(4.0),
    "exp": math.exp,
    "exp(3x)": lambda t: math.exp(3.0 * t),
    "exp(-2x)": lambda t: math.exp(-2.0 * t),
    "log1p": math.log1p,
    "logistic": _logistic,
    "1-(1-x)^2": lambda t: 1.0 - (1.0 - t) ** 2,
    "(1-x)^2": lambda t: (1.0 - t) ** 2,
    "-sqrt": lambda t: -math.sqrt(t),
    "pl-convex": lambda t: max(t, 3.0 * t - 1.2),
    "pl-concave": lambda t: min(2.0 * t, 0.5 * t + 0.3),
    "pl-decreasing": lambda t: max(1.0 - 2.0 * t, 0.4 - 0.2 * t),
    "sqrt(1-x)": lambda t: math.sqrt(max(1.0 - t, 0.0)),
}

DESIGN_KINDS = ("equispaced", "quadratic", "random", "clustered", "tied")


def get_function(name: str) -> Callable[[float], float]:
    if name not in FUNCTIONS:
        raise StructuralError(f"unknown function {name!r}; choose from {sorted(FUNCTIONS)}")
    return FUNCTIONS[name]


def make_design(kind: str, n: int, seed: int = 0) -> Design:
    """An ``n``-point design on ``[0, 1]``."""
    if n < 2:
        raise StructuralError("n must be >= 2")
    i = np.arange(1, n + 1)
    rng = np.random.default_rng(seed)
    if kind == "equispaced":
        x = i / n
    elif kind == "quadratic":
        x = (i / n) ** 2
    elif kind == "random":
        x = np.sort(rng.uniform(0.0, 1.0, n))
    elif kind == "clustered":
        centres = rng.choice([0.15, 0.8], size=n)
        x = np.sort(np.clip(centres + 0.05 * rng.standard_normal(n), 0.0, 1.0))
    elif kind == "tied":
        x = np.sort(np.ceil(i / n * 10.0) / 10.0)
    else:
        raise StructuralError(f"unknown design kind {kind!r}; choose from {DESIGN_KINDS}")
    return Design(x, (0.0, 1.0))
