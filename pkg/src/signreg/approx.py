"""Approximation of monotone and convex-concave functions by simple shapes.

Two families of constructions live here:

* piecewise-constant approximants of monotone value vectors (block means on
  near-equal index blocks, with a variation-driven allocation of blocks to the
  pieces of a partition);
* continuous piecewise-linear interpolants of monotone convex-concave
  functions on an interval, with error certificates relative to a probability
  ``Q`` that is either the empirical design measure or the uniform measure.

Functions are plain callables. One-sided derivatives may be supplied as
callables ``df_right(x)`` / ``df_left(x)`` returning extended reals; when
omitted they are estimated by one-sided differences with step
``FD_STEP``.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .core import Design, FunctionOnDesign, as_values
from .errors import ContractError, StructuralError

__all__ = [
    "FD_STEP",
    "InterpolationResult",
    "LinearIndexReport",
    "Modulus",
    "VariationIndexReport",
    "VariationReport",
    "block_mean_approx",
    "block_mean_certificate",
    "block_sizes",
    "interpolant_error_bounds",
    "j_variation",
    "k_linear_interpolation",
    "linear_index",
    "mean_abs_deviation",
    "measure_error",
    "modulus_from_design",
    "piecewise_constant_approx",
    "variation_index",
]

FD_STEP = 1e-6
BISECT_WIDTH = 1e-12


# ---------------------------------------------------------------------------
# Piecewise-constant approximation
# ---------------------------------------------------------------------------


def mean_abs_deviation(values) -> float:
    """Average absolute deviation from the mean; never above half the range."""
    v = as_values(values)
    if v.size == 0:
        raise StructuralError("need at least one value")
    m = math.fsum(v) / v.size
    return math.fsum(np.abs(v - m)) / v.size


def _monotone_direction(v: np.ndarray) -> int:
    d = np.diff(v)
    if np.all(d >= 0):
        return 1
    if np.all(d <= 0):
        return -1
    return 0


def block_sizes(n: int, K: int) -> list[int]:
    """Sizes of ``min(K, n)`` consecutive blocks: ``q`` first, then ``r`` blocks of ``q + 1``."""
    if n < 1 or K < 1:
        raise StructuralError("n and K must be positive")
    K = min(K, n)
    q, r = divmod(n, K)
    return [q] * (K - r) + [q + 1] * r


def block_mean_approx(values, K: int) -> FunctionOnDesign:
    """Block means of a monotone vector on ``min(K, n)`` near-equal index blocks.

    Blocks are index ranges. On a design with tied abscissas a boundary may
    fall inside a tie, in which case the approximant is defined per index.
    """
    v = as_values(values)
    if K < 1:
        raise StructuralError("K must be >= 1")
    if _monotone_direction(v) == 0:
        raise ContractError("block_mean_approx needs a monotone value vector")
    out = np.empty_like(v)
    start = 0
    for size in block_sizes(v.size, K):
        out[start : start + size] = math.fsum(v[start : start + size]) / size
        start += size
    return FunctionOnDesign(out)


def block_mean_certificate(values, K: int) -> float:
    v = as_values(values)
    if K >= v.size:
        return 0.0
    return (1.0 / K + 1.0 / v.size) * abs(float(v[-1] - v[0])) / 2.0


@dataclass(frozen=True)
class VariationReport:
    total_variation: float
    j_variation: float
    pieces: tuple[tuple[int, int], ...]
    counts: tuple[int, ...]
    variations: tuple[float, ...]


def _check_pieces(pieces, n) -> tuple[tuple[int, int], ...]:
    out = tuple((int(a), int(b)) for a, b in pieces)
    expected = 0
    for a, b in out:
        if a != expected or b < a:
            raise StructuralError("pieces must be contiguous half-open index ranges starting at 0")
        expected = b
    if expected != n:
        raise StructuralError(f"pieces cover {expected} indices, expected {n}")
    return out


def j_variation(values, pieces, variations: Sequence[float] | None = None) -> VariationReport:
    """Design-weighted variation ``(sum_J sqrt(n_J V_J / n))^2`` and total variation ``sum_J V_J``.

    ``V_J`` defaults to the range of the values inside piece ``J``; pass
    ``variations`` to use the range of the underlying function over the whole
    interval instead.
    """
    v = as_values(values)
    n = v.size
    pieces = _check_pieces(pieces, n)
    counts = tuple(b - a for a, b in pieces)
    if variations is None:
        variations = tuple(float(v[a:b].max() - v[a:b].min()) if b > a else 0.0 for a, b in pieces)
    else:
        variations = tuple(float(x) for x in variations)
        if len(variations) != len(pieces):
            raise StructuralError("one variation per piece is required")
    root = math.fsum(math.sqrt(c * var / n) for c, var in zip(counts, variations))
    return VariationReport(math.fsum(variations), root * root, pieces, counts, variations)


@dataclass(frozen=True)
class PiecewiseConstantResult:
    approximant: FunctionOnDesign
    certificate: float
    measured: float
    allocation: tuple[int, ...]
    n_pieces: int
    max_pieces: int
    report: VariationReport


def piecewise_constant_approx(values, pieces, gamma: float, variations=None) -> PiecewiseConstantResult:
    """Allocate ``K_J`` blocks to each piece and apply :func:`block_mean_approx` piecewise.

    ``K_J = ceil(gamma * sqrt((n_J / n) (V_J / V_var)))`` with at least one
    block. The certified design error is ``V_var / gamma`` and at most
    ``floor(k + gamma)`` constant pieces are used, ``k`` being the number of
    pieces of the partition.
    """
    if not gamma > 0:
        raise StructuralError("gamma must be positive")
    v = as_values(values)
    rep = j_variation(v, pieces, variations)
    out = np.empty_like(v)
    alloc = []
    for (a, b), var in zip(rep.pieces, rep.variations):
        seg = v[a:b]
        if b == a:
            alloc.append(0)
            continue
        if _monotone_direction(seg) == 0:
            raise ContractError(f"values are not monotone on piece [{a}, {b})")
        if rep.j_variation == 0.0:
            out[a:b] = seg.min()
            alloc.append(1)
            continue
        K = max(1, math.ceil(gamma * math.sqrt((b - a) / v.size * var / rep.j_variation)))
        out[a:b] = block_mean_approx(seg, K).values
        alloc.append(min(K, b - a))
    k = len(rep.pieces)
    measured = math.fsum(np.abs(v - out)) / v.size
    return PiecewiseConstantResult(
        FunctionOnDesign(out),
        rep.j_variation / gamma,
        measured,
        tuple(alloc),
        int(sum(alloc)),
        int(math.floor(k + gamma)),
        rep,
    )


# ---------------------------------------------------------------------------
# Linear index and variation index
# ---------------------------------------------------------------------------


def _ratio(num: float, den: float) -> float:
    """``num / den`` for nonnegative extended reals with ``0/0 = 1`` and ``x/inf = 0``."""
    if den == 0.0:
        return 1.0 if num == 0.0 else math.inf
    if math.isinf(den):
        return 1.0 if math.isinf(num) else 0.0
    return num / den


@dataclass(frozen=True)
class LinearIndexReport:
    gamma: float
    d_right_a: float
    d_left_b: float
    chord_slope: float


def _fd_right(f, x, h=FD_STEP, hi=math.inf):
    # Shrink the step near the right end so f is only evaluated inside the interval.
    if hi - h < x < hi:
        h = hi - x
    return (f(x + h) - f(x)) / h


def _fd_left(f, x, h=FD_STEP, lo=-math.inf):
    if lo < x < lo + h:
        h = x - lo
    return (f(x) - f(x - h)) / h


def linear_index(f: Callable[[float], float], a: float, b: float, d_right_a: float | None = None, d_left_b: float | None = None) -> LinearIndexReport:
    """How far a monotone convex-concave ``f`` on ``[a, b]`` is from its chord (0 iff affine).

    A flat chord (``f(a) = f(b)``) gets index 0.
    """
    if not a < b:
        raise StructuralError("need a < b")
    dr = _fd_right(f, a, hi=b) if d_right_a is None else float(d_right_a)
    dl = _fd_left(f, b, lo=a) if d_left_b is None else float(d_left_b)
    delta = (f(b) - f(a)) / (b - a)
    if delta == 0.0:
        return LinearIndexReport(0.0, dr, dl, 0.0)
    lo, hi = min(abs(dr), abs(dl)), max(abs(dr), abs(dl))
    D = abs(delta)
    gamma = 1.0 - 0.5 * (_ratio(lo, D) + _ratio(D, hi))
    return LinearIndexReport(min(1.0, max(0.0, gamma)), dr, dl, delta)


@dataclass(frozen=True)
class VariationIndexReport:
    W: float
    triples: tuple[tuple[int, float, float], ...]
    holder_bound: float


def variation_index(
    f: Callable[[float], float],
    breakpoints: Sequence[float],
    design: Design,
    derivatives: Sequence[tuple[float, float]] | None = None,
) -> VariationIndexReport:
    """``[sum_J (n_J V_J Gamma_J / n)^(1/3)]^3`` over intervals ``[u_i, u_{i+1})`` (last one closed).

    ``derivatives[i]`` optionally gives ``(f'_r(u_i), f'_l(u_{i+1}))``.
    """
    u = [float(t) for t in breakpoints]
    if len(u) < 2 or any(u[i] >= u[i + 1] for i in range(len(u) - 1)):
        raise StructuralError("breakpoints must be strictly increasing with at least two entries")
    x = design.points
    n = design.n
    triples = []
    for i in range(len(u) - 1):
        lo, hi = u[i], u[i + 1]
        last = i == len(u) - 2
        nJ = int(np.sum((x >= lo) & ((x <= hi) if last else (x < hi))))
        VJ = abs(f(hi) - f(lo))
        d = derivatives[i] if derivatives is not None else (None, None)
        GJ = linear_index(f, lo, hi, d[0], d[1]).gamma
        triples.append((nJ, VJ, GJ))
    W = math.fsum((nJ * VJ * GJ / n) ** (1.0 / 3.0) for nJ, VJ, GJ in triples) ** 3
    holder = math.fsum(t[1] for t in triples) * math.fsum(t[2] for t in triples)
    return VariationIndexReport(W, tuple(triples), holder)


# ---------------------------------------------------------------------------
# Moduli of measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Modulus:
    """Nonnegative, nondecreasing, concave ``w`` on ``[0, inf)`` with ``Q(I) <= w(len(I))``.

    Either affine-shaped, ``w(u) = w0 + A (u / length)^alpha``, or tabulated
    on a grid starting at 0 and extended linearly with its last slope.
    """

    w0: float
    A: float | None = None
    alpha: float | None = None
    length: float | None = None
    grid: tuple[float, ...] | None = None
    table: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.w0 < 0:
            raise ContractError("w(0) must be nonnegative")
        if self.grid is None:
            if self.A is None or self.alpha is None or self.length is None:
                raise StructuralError("affine modulus needs A, alpha and length")
            if self.A < 0 or not 0 < self.alpha <= 1 or not self.length > 0:
                raise ContractError("affine modulus needs A >= 0, alpha in (0, 1], length > 0")
        else:
            g = np.asarray(self.grid, dtype=float)
            t = np.asarray(self.table, dtype=float)
            if g.ndim != 1 or g.shape != t.shape or g.size < 2 or g[0] != 0.0 or np.any(np.diff(g) <= 0):
                raise StructuralError("tabulated modulus needs an increasing grid starting at 0")
            if t[0] != self.w0:
                raise StructuralError("table must start at w0")
            slopes = np.diff(t) / np.diff(g)
            if np.any(slopes < 0):
                raise ContractError("tabulated modulus must be nondecreasing")
            if np.any(np.diff(slopes) > 1e-12 * (1.0 + np.max(np.abs(slopes)))):
                raise ContractError("tabulated modulus must be concave")

    @classmethod
    def affine(cls, w0: float, A: float, alpha: float, length: float) -> Modulus:
        return cls(float(w0), float(A), float(alpha), float(length))

    @classmethod
    def tabulated(cls, grid: Sequence[float], table: Sequence[float]) -> Modulus:
        return cls(float(table[0]), grid=tuple(float(t) for t in grid), table=tuple(float(t) for t in table))

    @property
    def is_affine(self) -> bool:
        return self.grid is None

    def __call__(self, u: float) -> float:
        u = float(u)
        if u < 0:
            raise StructuralError("modulus argument must be nonnegative")
        if math.isinf(u):
            return math.inf if (self.is_affine and self.A > 0) or (not self.is_affine and self._last_slope() > 0) else self._sup()
        if self.is_affine:
            return self.w0 + self.A * (u / self.length) ** self.alpha
        g, t = np.asarray(self.grid), np.asarray(self.table)
        if u <= g[-1]:
            return float(np.interp(u, g, t))
        return float(t[-1] + self._last_slope() * (u - g[-1]))

    def _last_slope(self) -> float:
        g, t = self.grid, self.table
        return (t[-1] - t[-2]) / (g[-1] - g[-2])

    def _sup(self) -> float:
        return self.w0 + (self.A if self.is_affine else self.table[-1] - self.w0)

    def psi(self, x: float) -> float:
        """``int_0^x (w(t) - w(0)) / t dt``."""
        if x <= 0:
            return 0.0
        if math.isinf(x):
            return math.inf
        if self.is_affine:
            return self.A * x**self.alpha / (self.alpha * self.length**self.alpha)
        val, _ = quad(lambda s: (self(s) - self.w0) / s if s > 0 else 0.0, 0.0, x, limit=200, points=[p for p in self.grid if 0 < p < x] or None)
        return float(val)

    def to_dict(self) -> dict:
        if self.is_affine:
            return {"shape": "affine", "w0": self.w0, "A": self.A, "alpha": self.alpha, "length": self.length}
        return {"shape": "tabulated", "grid": list(self.grid), "table": list(self.table)}


def _design_masses(x: np.ndarray):
    u, counts = np.unique(x, return_counts=True)
    cum = np.concatenate([[0], np.cumsum(counts)])
    return u, counts, cum


def modulus_from_design(
    design: Design,
    a: float | None = None,
    b: float | None = None,
    generator: tuple[float, float] | None = None,
    alphas: Sequence[float] | None = None,
) -> Modulus:
    """A modulus for the empirical measure ``n^-1 sum delta_{x_i}`` on ``[a, b]``.

    * ``generator=(A, alpha)``: the design is ``x_i = g^{-1}(i/n)`` for an
      increasing ``g`` with continuity modulus ``A (u / (b - a))^alpha``; the
      result is ``1/n`` plus that modulus.
    * equispaced designs with spacing ``h``: ``1/n + u / (n h)``.
    * otherwise ``w0`` is the largest atom and, for each ``alpha`` on a grid,
      ``A`` is the smallest value dominating every interval mass; the ``alpha``
      with the smallest area ``A L / (1 + alpha)`` wins.
    """
    if design.dim != 1:
        raise StructuralError("moduli are defined for 1-D designs")
    x = design.points
    n = design.n
    if a is None or b is None:
        if design.domain is not None:
            a, b = design.domain
        else:
            a, b = float(x[0]), float(x[-1])
    L = float(b - a)
    if not L > 0:
        raise StructuralError("need a nondegenerate interval")
    if generator is not None:
        A, alpha = generator
        return Modulus.affine(1.0 / n, A, alpha, L)
    u, counts, cum = _design_masses(x)
    if n >= 2 and u.size == n:
        h = np.diff(x)
        if np.allclose(h, h[0], rtol=1e-12, atol=0.0):
            return Modulus.affine(1.0 / n, L / (n * float(h[0])), 1.0, L)
    w0 = float(counts.max()) / n
    if u.size == 1:
        return Modulus.affine(w0, 0.0, 1.0, L)
    i, j = np.triu_indices(u.size, k=1)
    mass = (cum[j + 1] - cum[i]) / n
    span = (u[j] - u[i]) / L
    excess = mass - w0
    grid = np.asarray(alphas if alphas is not None else np.linspace(0.01, 1.0, 100), dtype=float)
    best = None
    for alpha in grid:
        A = float(np.max(excess / span**alpha))
        A = max(A, 0.0)
        # Guard against rounding in the final comparison.
        A = math.nextafter(A, math.inf) if A > 0 else 0.0
        area = A / (1.0 + alpha)
        if best is None or area < best[0]:
            best = (area, A, float(alpha))
    return Modulus.affine(w0, best[1], best[2], L)


# ---------------------------------------------------------------------------
# K-linear interpolation
# ---------------------------------------------------------------------------


@dataclass
class _Oriented:
    """``f`` mapped to a nondecreasing convex ``g`` on the same interval."""

    f: Callable[[float], float]
    a: float
    b: float
    negate: bool
    reflect: bool
    dr: Callable[[float], float]
    dl: Callable[[float], float]

    def _x(self, t):
        return self.a + self.b - t if self.reflect else t

    def g(self, t):
        v = self.f(self._x(t))
        return -v if self.negate else v

    def g_right(self, t):
        # Reflection swaps the sides and flips the sign.
        if self.reflect:
            d = -self.dl(self._x(t))
        else:
            d = self.dr(t)
        return -d if self.negate else d

    def g_left(self, t):
        if self.reflect:
            d = -self.dr(self._x(t))
        else:
            d = self.dl(t)
        return -d if self.negate else d

    def to_original(self, knots: np.ndarray) -> np.ndarray:
        return np.sort(self.a + self.b - knots) if self.reflect else knots


def _derivs(f, df_right, df_left, a=-math.inf, b=math.inf):
    dr = df_right if df_right is not None else (lambda x: _fd_right(f, x, hi=b))
    dl = df_left if df_left is not None else (lambda x: _fd_left(f, x, lo=a))
    return dr, dl


def _check_convex_concave(f, a, b, samples: int = 129) -> tuple[int, int]:
    xs = np.linspace(a, b, samples)
    ys = np.array([f(t) for t in xs], dtype=float)
    scale = 1e-9 * (1.0 + float(np.max(np.abs(ys))))
    d1 = np.diff(ys)
    if np.all(d1 >= -scale):
        mono = 1
    elif np.all(d1 <= scale):
        mono = -1
    else:
        raise ContractError("function is not monotone on the interval")
    d2 = np.diff(ys, 2)
    if np.all(d2 >= -scale):
        conv = 1
    elif np.all(d2 <= scale):
        conv = -1
    else:
        raise ContractError("function is neither convex nor concave on the interval (second-order test failed)")
    return mono, conv


def _orient(f, a, b, df_right, df_left) -> _Oriented:
    dr, dl = _derivs(f, df_right, df_left, a, b)
    mono, conv = _check_convex_concave(f, a, b)
    if f(b) != f(a):
        mono = 1 if f(b) > f(a) else -1
    # Convexity from the endpoint slopes when they disagree with the sampled test.
    ra, lb = dr(a), dl(b)
    if ra != lb:
        conv = 1 if ra < lb else -1
    if mono > 0 and conv > 0:
        return _Oriented(f, a, b, False, False, dr, dl)
    if mono < 0 and conv < 0:
        return _Oriented(f, a, b, True, False, dr, dl)
    if mono < 0 and conv > 0:
        return _Oriented(f, a, b, False, True, dr, dl)
    return _Oriented(f, a, b, True, True, dr, dl)


def _subdivide_slope(o: _Oriented, lo: float, hi: float, K: int) -> list[float]:
    """Knots on ``[lo, hi]`` with ``(a_i - a_{i-1})(g'_l(a_i) - g'_r(a_{i-1})) <= tau``."""
    tau = (o.g_left(hi) - o.g_right(lo)) * (hi - lo) / K**2
    knots = [lo]
    while knots[-1] < hi and len(knots) <= 4 * K + 4:
        s = knots[-1]
        base = o.g_right(s)

        def crit(x):
            return (x - s) * (o.g_left(x) - base)

        if crit(hi) <= tau:
            knots.append(hi)
            break
        left, right = s, hi
        while right - left > BISECT_WIDTH * max(1.0, abs(hi - lo)):
            mid = 0.5 * (left + right)
            if crit(mid) <= tau:
                left = mid
            else:
                right = mid
        if left <= s:
            left = right
        knots.append(left)
    if knots[-1] != hi:
        knots.append(hi)
    # Bisection tolerance can leave a sliver piece; merge extras into the last piece.
    while len(knots) - 1 > K:
        del knots[-2]
    return knots


def _subdivide_increment(o: _Oriented, lo: float, hi: float, K: int) -> list[float]:
    g_lo, g_hi = o.g(lo), o.g(hi)
    knots = [lo]
    for i in range(1, K):
        target = g_lo + (g_hi - g_lo) * i / K
        knots.append(brentq(lambda t: o.g(t) - target, knots[-1], hi, xtol=BISECT_WIDTH))
    knots.append(hi)
    return knots


def _pad(knots: list[float], K: int) -> list[float]:
    knots = sorted(set(knots))
    while len(knots) - 1 < K:
        gaps = np.diff(knots)
        j = int(np.argmax(gaps))
        knots.insert(j + 1, 0.5 * (knots[j] + knots[j + 1]))
    return knots


@dataclass
class InterpolationResult:
    knots: np.ndarray
    values: np.ndarray
    certificate: float
    certificates: dict
    measured: float
    mode: str
    delta: float | None = None
    split_point: float | None = None
    extras: dict = field(default_factory=dict)

    def __call__(self, x):
        return np.interp(x, self.knots, self.values)

    @property
    def n_pieces(self) -> int:
        return len(self.knots) - 1

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "knots": [float(t) for t in self.knots],
            "values": [float(t) for t in self.values],
            "certificate": float(self.certificate),
            "certificates": {k: float(v) for k, v in self.certificates.items()},
            "measured_error": float(self.measured),
            "delta": None if self.delta is None else float(self.delta),
            "split_point": None if self.split_point is None else float(self.split_point),
        }


def measure_error(f, approx: Callable, a: float, b: float, Q) -> float:
    """``int_[a,b] |f - approx| dQ`` for ``Q`` a design (empirical measure) or ``"uniform"``."""
    if isinstance(Q, str):
        if Q != "uniform":
            raise StructuralError(f"unknown measure {Q!r}")
        total = 0.0
        knots = getattr(approx, "knots", None)
        pts = [a] + ([float(t) for t in knots if a < t < b] if knots is not None else []) + [b]
        for lo, hi in zip(pts[:-1], pts[1:]):
            val, _ = quad(lambda t: abs(f(t) - float(approx(t))), lo, hi, limit=200, epsabs=1e-13, epsrel=1e-11)
            total += val
        return total / (b - a)
    if isinstance(Q, Design):
        x = Q.points
        inside = x[(x >= a) & (x <= b)]
        if inside.size == 0:
            return 0.0
        diffs = np.array([abs(f(t) - float(approx(t))) for t in inside])
        return math.fsum(diffs) / Q.n
    raise StructuralError("Q must be a Design or 'uniform'")


def _mass_open(Q, lo: float, hi: float) -> float:
    if isinstance(Q, str):
        return 1.0  # uniform probability on [a, b]: every open subinterval of it has mass <= 1
    x = Q.points
    return float(np.sum((x > lo) & (x < hi))) / Q.n


def _uniform_modulus(a, b) -> Modulus:
    return Modulus.affine(0.0, 1.0, 1.0, b - a)


def k_linear_interpolation(
    f: Callable[[float], float],
    a: float,
    b: float,
    K: int,
    Q="uniform",
    mode: str = "i",
    modulus: Modulus | None = None,
    df_right: Callable[[float], float] | None = None,
    df_left: Callable[[float], float] | None = None,
) -> InterpolationResult:
    """Continuous piecewise-linear interpolant of a monotone convex-concave ``f`` with certificate.

    ``mode="i"`` uses a slope-balanced subdivision into ``K`` pieces and needs
    finite endpoint derivatives. ``mode="ii"`` splits at the point where the
    slope crosses ``delta``, subdivides the flat part by slope and the steep
    part into equal ``f``-increments (``2K`` pieces), and needs a modulus of
    ``Q`` (derived from the design when omitted).
    """
    if K < 1:
        raise StructuralError("K must be >= 1")
    if not a < b:
        raise StructuralError("need a < b")
    if mode not in ("i", "ii"):
        raise StructuralError("mode must be 'i' or 'ii'")
    o = _orient(f, a, b, df_right, df_left)
    d_lo, d_hi = o.g_right(a), o.g_left(b)
    V = abs(o.g(b) - o.g(a))
    if mode == "i":
        if not (math.isfinite(d_lo) and math.isfinite(d_hi)):
            raise ContractError("mode (i) needs finite one-sided derivatives at both ends")
        if d_lo == d_hi:
            knots = _pad([a, b], K)
        else:
            knots = _pad(_subdivide_slope(o, a, b, K), K)
        cert = abs(d_hi - d_lo) * (b - a) / (4.0 * K**2)
        certs = {"slope_variation": cert}
        delta = split = None
    else:
        if modulus is None:
            modulus = _uniform_modulus(a, b) if isinstance(Q, str) else modulus_from_design(Q, a, b)
        certs = {}
        if V == 0.0 or d_lo == d_hi:
            knots = _pad([a, b], 2 * K)
            certs["affine_or_constant"] = V * modulus.w0 if V > 0 else 0.0
            delta = split = None
        else:
            if modulus.is_affine and modulus.A > 0:
                alpha, A = modulus.alpha, modulus.A
                dstar = (V / (b - a)) * (2.0 ** (1 - alpha) * A * K ** (1 - alpha) / alpha) ** (1.0 / (1 + alpha))
            else:
                dstar = V / (b - a)
            delta = min(max(dstar, d_lo), d_hi)
            if delta <= 0:
                delta = min(V / (b - a), d_hi)
            # c = sup{x : g'_l(x) <= delta}
            if o.g_left(b) <= delta:
                split = b
            else:
                left, right = a, b
                while right - left > BISECT_WIDTH * max(1.0, b - a):
                    mid = 0.5 * (left + right)
                    if o.g_left(mid) <= delta:
                        left = mid
                    else:
                        right = mid
                split = left
            knots = [a]
            if split > a:
                knots = _subdivide_slope(o, a, split, K)
            if split < b:
                knots = knots[:-1] + _subdivide_increment(o, split, b, K) if split > a else _subdivide_increment(o, a, b, K)
            knots = _pad(knots, 2 * K)
            w0 = modulus.w0
            general = (
                V * w0
                + (delta - d_lo) * (b - a) / (4.0 * K**2)
                + (V / K) * (modulus.psi(V / (2 * K * delta)) - (modulus.psi(V / (2 * K * d_hi)) if math.isfinite(d_hi) else 0.0))
            )
            certs["general"] = general
            if modulus.is_affine and modulus.A >= 1:
                alpha, A = modulus.alpha, modulus.A
                certs["power"] = V * (w0 + (2.0 ** (1 - alpha) * A / (alpha * K ** (1 + 3 * alpha))) ** (1.0 / (1 + alpha)))
                if alpha == 1.0 and A == 1.0:
                    gamma = linear_index(o.g, a, b, d_lo, d_hi).gamma
                    certs["linear_index"] = V * (w0 + gamma / K**2)
        cert = min(certs.values())
    tk = np.asarray(knots, dtype=float)
    tv = np.array([o.g(t) for t in tk])
    # Map back to the original orientation.
    if o.reflect:
        tk = (a + b) - tk[::-1]
        tv = tv[::-1]
    if o.negate:
        tv = -tv
    tk[0], tk[-1] = a, b
    tv = np.array([f(t) for t in tk])
    res = InterpolationResult(tk, tv, float(cert), certs, 0.0, mode, delta, None)
    if split is not None:
        res.split_point = float(a + b - split) if o.reflect else float(split)
    res.measured = measure_error(f, res, a, b, Q)
    return res


# ---------------------------------------------------------------------------
# Single-interval chord bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChordBounds:
    R1: float
    R2: float
    R3: float
    measured: float

    @property
    def best(self) -> float:
        return min(self.R1, self.R2, self.R3)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.R1, self.R2, self.R3)


def interpolant_error_bounds(
    f: Callable[[float], float],
    a: float,
    b: float,
    Q="uniform",
    modulus: Modulus | None = None,
    df_right: Callable[[float], float] | None = None,
    df_left: Callable[[float], float] | None = None,
) -> ChordBounds:
    """Three upper bounds on ``int_[a,b] |f - l| dQ`` for the chord ``l`` of ``f``."""
    if not a < b:
        raise StructuralError("need a < b")
    dr, dl = _derivs(f, df_right, df_left, a, b)
    _check_convex_concave(f, a, b)
    if modulus is None:
        modulus = _uniform_modulus(a, b) if isinstance(Q, str) else modulus_from_design(Q, a, b)
    fa, fb = f(a), f(b)
    delta = (fb - fa) / (b - a)
    ra, lb = float(dr(a)), float(dl(b))

    def chord(t):
        return fa + delta * (t - a)

    mass = _mass_open(Q, a, b)
    spread = abs(lb - ra)
    if mass == 0.0:
        R1 = 0.0
    else:
        R1 = spread * (b - a) / 4.0 * mass
    if fa == fb:
        R2 = 0.0
    else:
        area, _ = quad(lambda t: abs(f(t) - chord(t)), a, b, limit=200, epsabs=1e-14, epsrel=1e-12)
        R2 = abs(fb - fa) * modulus(area / abs(fb - fa))
    wmid = modulus((b - a) / 2.0)
    if ra == lb:
        R3 = 0.0
    elif math.isinf(lb) and math.isfinite(ra):
        R3 = abs(ra - delta) * (b - a) * wmid
    elif math.isinf(ra) and math.isfinite(lb):
        R3 = abs(lb - delta) * (b - a) * wmid
    elif math.isfinite(spread) and spread > 0:
        R3 = abs(ra - delta) * abs(delta - lb) / spread * (b - a) * wmid
    else:
        R3 = abs(fb - fa) * wmid
    measured = measure_error(f, chord, a, b, Q)
    return ChordBounds(R1, R2, R3, measured)
