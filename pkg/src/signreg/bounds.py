"""Risk-bound calculators.

All bounds are stated up to unknown numerical constants; ``kappa`` (for the
generic oracle bound) and ``C`` (for the closed-form shape-class bounds) are
configuration with default 1. Infinite noise scales propagate as ``inf``.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .errors import RefusalError, StructuralError

__all__ = [
    "BOUND_CASES",
    "BoundConfig",
    "beta_from_alpha",
    "bound_Bn",
    "c_alpha",
    "ln_bracket",
    "ln_solver",
    "optimize_p",
    "qbeta_closed_form",
    "qbeta_sigma",
    "rate_term",
]

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
P_TOL = 1e-10
GRID_POINTS = 10_000


@dataclass(frozen=True)
class BoundConfig:
    kappa: float = 1.0
    C: float = 1.0

    def __post_init__(self):
        if not (self.kappa > 0 and self.C > 0):
            raise StructuralError("kappa and C must be positive")


def _s(p: float) -> float:
    if not 1.0 <= p <= 2.0:
        raise StructuralError("p must lie in [1, 2]")
    return 1.0 - 1.0 / p


def rate_term(sigma: float, D: float, n: float, p: float) -> float:
    """``sigma * (D / n)^(1 - 1/p)``."""
    if not (1 <= D <= n):
        raise StructuralError("need 1 <= D <= n")
    if sigma < 0:
        raise StructuralError("sigma must be nonnegative")
    s = _s(p)
    if math.isinf(sigma):
        return math.inf
    return sigma * (D / n) ** s


def _log_obj(moment_fn, D, n):
    def obj(p):
        sig = moment_fn(p)
        if sig is None or math.isnan(sig) or sig < 0:
            raise StructuralError(f"moment function returned {sig!r} at p={p}")
        if math.isinf(sig):
            return math.inf
        if sig == 0:
            return -math.inf
        return math.log(sig) + (1.0 - 1.0 / p) * math.log(D / n)

    return obj


def _golden(obj, lo, hi, tol=P_TOL):
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = obj(c), obj(d)
    while hi - lo > tol:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = obj(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = obj(d)
    return (c, fc) if fc <= fd else (d, fd)


def _minimize_over_p(obj) -> tuple[float, float]:
    grid = np.linspace(1.0, 2.0, GRID_POINTS)
    vals = np.array([obj(float(p)) for p in grid])
    i = int(np.argmin(vals))
    best_p, best = float(grid[i]), float(vals[i])
    if math.isinf(best) and best > 0:
        return 1.0, math.inf
    lo, hi = float(grid[max(i - 1, 0)]), float(grid[min(i + 1, GRID_POINTS - 1)])
    p, v = _golden(obj, lo, hi)
    if v < best:
        best_p, best = p, v
    return best_p, best


def optimize_p(moment_fn: Callable[[float], float], D: float, n: float) -> tuple[float, float]:
    """Minimize ``rate_term(sigma_p, D, n, p)`` over ``p`` in [1, 2].

    A dense grid locates the basin and golden-section search on the log
    objective refines it to a ``1e-10`` bracket. Returns ``(p*, value)``; the
    value is ``inf`` when every moment is infinite.
    """
    if not (1 <= D <= n):
        raise StructuralError("need 1 <= D <= n")
    p, logv = _minimize_over_p(_log_obj(moment_fn, D, n))
    if math.isinf(logv):
        return (p, 0.0) if logv < 0 else (1.0, math.inf)
    return p, rate_term(moment_fn(p), D, n, p)


def qbeta_sigma(beta: float) -> Callable[[float], float]:
    """``p -> (2 / (2 - p))^(beta / p)``, infinite at ``p = 2``."""
    if not beta > 0:
        raise StructuralError("beta must be positive")

    def sigma(p: float) -> float:
        if p >= 2.0:
            return math.inf
        return (2.0 / (2.0 - p)) ** (beta / p)

    return sigma


def _ln_equation(L: float) -> float:
    return L - math.log(L) - 1.0


def ln_solver(beta: float, n: float, D: float) -> float:
    """Solve ``log(n / D) / beta = L - log L - 1`` for ``L >= 2`` by bisection."""
    if not beta > 0 or not (1 <= D <= n):
        raise StructuralError("need beta > 0 and 1 <= D <= n")
    target = math.log(n / D) / beta
    base = _ln_equation(2.0)
    if target < base - 1e-15:
        raise RefusalError(f"no solution: n/D = {n / D:g} is below (e/2)^beta = {(math.e / 2) ** beta:g}")
    if target <= base:
        return 2.0
    lo, hi = 2.0, 4.0
    while _ln_equation(hi) < target:
        lo, hi = hi, 2.0 * hi
    while hi - lo > 1e-12 * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if _ln_equation(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ln_bracket(beta: float, n: float, D: float) -> tuple[float, float, bool]:
    """Lower and upper brackets for the solution and whether their hypothesis holds."""
    base = math.log(n / D) / beta + 1.0
    return base, math.e / (math.e - 1.0) * base, n / D >= math.exp(beta * (math.e - 2.0))


def qbeta_closed_form(beta: float, n: float, D: float) -> float:
    """``sqrt(D (e L_n)^beta / n)``."""
    L = ln_solver(beta, n, D)
    return math.sqrt(D * (math.e * L) ** beta / n)


def beta_from_alpha(alpha: float) -> float:
    if not 0 < alpha <= 1:
        raise StructuralError("alpha must lie in (0, 1]")
    return (1.0 + 3.0 * alpha) / (1.0 + alpha)


def c_alpha(alpha: float, A: float) -> float:
    if not 0 < alpha <= 1 or A <= 0:
        raise StructuralError("need alpha in (0, 1] and A > 0")
    return (2.0 ** (1.0 - alpha) * A / alpha) ** (1.0 / (1.0 + alpha))


# ---------------------------------------------------------------------------
# Shape-class bounds
# ---------------------------------------------------------------------------


def _term(sigma: float, sig_exp: float, base: float, base_exp: float) -> float:
    """``sigma^sig_exp * base^base_exp``, zero when ``base`` is zero."""
    if base < 0:
        raise StructuralError("variation inputs must be nonnegative")
    if base == 0:
        return 0.0
    if math.isinf(sigma):
        return math.inf
    if math.isinf(base):
        return math.inf if base_exp > 0 else sigma**sig_exp
    return sigma**sig_exp * base**base_exp


def _sig_pow(sigma, base, s):
    if math.isinf(sigma):
        return math.inf
    return sigma * base**s


def _need(inputs: dict, *names):
    missing = [k for k in names if inputs.get(k) is None]
    if missing:
        raise StructuralError(f"missing inputs: {', '.join(missing)}")
    return [inputs[k] for k in names]


def _monotone(inp, s, sigma, n):
    k, VJ = _need(inp, "k", "V_J")
    return _term(sigma, 1 / (s + 1), VJ / n, s / (s + 1)) + _sig_pow(sigma, (3 * k - 1) / n, s)


def _cc_equispaced(inp, s, sigma, n):
    k, W, V = _need(inp, "k", "W", "V")
    return _term(sigma, 2 / (s + 2), math.sqrt(W) / n, 2 * s / (s + 2)) + _sig_pow(sigma, (7 * k - 2) / n, s) + V / n


def _cc_derivative(inp, s, sigma, n):
    Vp, length = _need(inp, "V_prime", "length")
    return _term(sigma, 2 / (s + 2), Vp * length / n**2, s / (s + 2)) + _sig_pow(sigma, 1.0 / n, s)


def _cc_modulus(inp, s, sigma, n):
    V, w0, A, alpha = _need(inp, "V", "w0", "A", "alpha")
    if A < 1:
        raise StructuralError("this bound needs a modulus with A >= 1")
    beta = beta_from_alpha(alpha)
    return _term(sigma, beta / (s + beta), c_alpha(alpha, A) * V / n**beta, s / (s + beta)) + V * w0 + _sig_pow(sigma, 1.0 / n, s)


def _single_index(inp, s, sigma, n):
    V, m = _need(inp, "V", "m")
    return _term(sigma, 1 / (s + 1), V * (m + 1) / n, s / (s + 1)) + _sig_pow(sigma, (m + 1) / n, s)


_SHAPE_CASES = {
    "monotone": _monotone,
    "convex-concave-equispaced": _cc_equispaced,
    "convex-concave-derivative": _cc_derivative,
    "convex-concave-modulus": _cc_modulus,
    "single-index": _single_index,
}

BOUND_CASES = ("linear-space", "extremal") + tuple(_SHAPE_CASES)


def bound_Bn(case: str, inputs: dict, cfg: BoundConfig = BoundConfig()) -> float:
    """Evaluate a closed-form risk bound.

    Common inputs: ``n`` and either ``sigma`` with ``p`` (fixed order) or
    ``moment_fn`` (``p -> sigma_p``, the bound is then minimized over ``p``).

    * ``linear-space``: ``d``, optional ``approx_error``; returns
      ``3 approx_error + kappa inf_p sigma_p (min(d+1, n)/n)^s``.
    * ``extremal``: ``D``; returns ``kappa inf_p sigma_p (D/n)^s``.
    * ``monotone``: ``k``, ``V_J``.
    * ``convex-concave-equispaced``: ``k``, ``W``, ``V``.
    * ``convex-concave-derivative``: ``V_prime``, ``length``.
    * ``convex-concave-modulus``: ``V``, ``w0``, ``A`` (>= 1), ``alpha``.
    * ``single-index``: ``V``, ``m``.

    Shape-class cases are multiplied by ``C``.
    """
    if case not in BOUND_CASES:
        raise StructuralError(f"unknown case {case!r}; expected one of {BOUND_CASES}")
    (n,) = _need(inputs, "n")
    if n < 1:
        raise StructuralError("n must be positive")
    moment_fn = inputs.get("moment_fn")
    if moment_fn is None:
        sigma, p = _need(inputs, "sigma", "p")
        if sigma < 0:
            raise StructuralError("sigma must be nonnegative")

        def single(fn):
            return fn(float(sigma), float(p))

    else:

        def single(fn):
            best = math.inf
            grid = np.linspace(1.0, 2.0, 1001)
            vals = [fn(moment_fn(float(q)), float(q)) for q in grid]
            i = int(np.argmin(vals))
            best = vals[i]
            if math.isinf(best):
                return math.inf
            lo, hi = float(grid[max(i - 1, 0)]), float(grid[min(i + 1, 1000)])
            _, v = _golden(lambda q: fn(moment_fn(q), q), lo, hi)
            return min(best, v)

    if case == "linear-space":
        (d,) = _need(inputs, "d")
        approx = float(inputs.get("approx_error", 0.0))
        D = min(d + 1, n)
        return 3.0 * approx + cfg.kappa * single(lambda sig, q: rate_term(sig, D, n, q))
    if case == "extremal":
        (D,) = _need(inputs, "D")
        return cfg.kappa * single(lambda sig, q: rate_term(sig, D, n, q))
    fn = _SHAPE_CASES[case]
    return cfg.C * single(lambda sig, q: fn(inputs, _s(q), sig, n))
