"""The sign statistic, its mean, and per-class sup-oracles.

For a response vector ``y`` and candidates ``f``, ``g``::

    T(f, g) = sum_i (f_i - y_i) * sgn(f_i - g_i)

The sup-oracle of a class maximizes ``T(f, g)`` over class members ``g``. Only
the sign pattern ``s = sgn(f - g)`` matters, so every oracle below is a search
over realizable sign patterns.

Monotone classes are handled with a dynamic program over *symbolic levels*:
with ``u_0 < ... < u_{q-1}`` the distinct values of ``f``, level ``2t + 1``
stands for ``g = u_t`` and even levels for the open gaps between them. Any
monotone ``g`` maps onto a monotone level sequence with the same signs, and
any monotone level sequence is realized by a real monotone ``g``.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .classes import (
    FixedPartitionConstant,
    LinearSpan1D,
    MonotoneEither,
    Nondecreasing,
    Nonincreasing,
    PiecewiseMonotone,
    PiecewiseMonotoneConvexConcave,
    ShapeClass,
    SingleIndexMonotone,
)
from .core import Design, FunctionOnDesign, as_values, tie_groups
from .errors import RefusalError, StructuralError

__all__ = [
    "EPSILON_SCALE",
    "SupResult",
    "brute_force_sup_T",
    "lambda_mean",
    "pattern_feasible_max",
    "pattern_is_realizable",
    "pattern_value",
    "sign_vector",
    "sup_T",
    "t_statistic",
]

EPSILON_SCALE = 2.0**-40
BRUTE_FORCE_MAX_N = 12


@dataclass(frozen=True)
class SupResult:
    """Value of a sup-oracle together with a class member attaining it.

    ``exact`` is False when the float witness only approaches the supremum; in
    that case ``epsilon`` bounds the gap.
    """

    value: float
    witness: FunctionOnDesign
    exact: bool = True
    pattern: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int8))
    epsilon: float = 0.0


def sign_vector(f, g, tol: float = 0.0) -> np.ndarray:
    """Entrywise sign of ``f - g`` with a dead band ``[-tol, tol]`` mapped to 0."""
    fv, gv = as_values(f), as_values(g)
    if fv.shape != gv.shape:
        raise StructuralError("length mismatch")
    if tol < 0:
        raise StructuralError("tol must be nonnegative")
    d = fv - gv
    return ((d > tol).astype(np.int8) - (d < -tol).astype(np.int8)).astype(np.int8)


def pattern_value(r: np.ndarray, s: np.ndarray) -> float:
    """``sum r_i s_i`` rounded once (exact sum of exact products)."""
    return math.fsum(np.asarray(r, dtype=float) * np.asarray(s, dtype=float))


def t_statistic(y, f, g) -> float:
    """``sum (f_i - y_i) sgn(f_i - g_i)``."""
    yv, fv, gv = as_values(y), as_values(f), as_values(g)
    if not (yv.shape == fv.shape == gv.shape):
        raise StructuralError("length mismatch")
    return pattern_value(fv - yv, sign_vector(fv, gv))


def lambda_mean(fstar, f, g) -> float:
    """Expectation of :func:`t_statistic` when ``y = fstar + centred noise``."""
    return t_statistic(fstar, f, g)


# ---------------------------------------------------------------------------
# Symbolic-level dynamic programs
# ---------------------------------------------------------------------------


def _levels(fv: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    u = np.unique(fv)
    pos = 2 * np.searchsorted(u, fv) + 1
    return u, pos, 2 * len(u) + 1


def _level_to_value(levels: np.ndarray, u: np.ndarray) -> np.ndarray:
    q = len(u)
    out = np.empty(len(levels))
    pad = 1.0 + float(np.max(np.abs(u)))
    for j, lev in enumerate(levels):
        t, odd = divmod(int(lev), 2)
        if odd:
            out[j] = u[t]
        elif t == 0:
            out[j] = u[0] - pad
        elif t == q:
            out[j] = u[q - 1] + pad
        else:
            out[j] = 0.5 * (u[t - 1] + u[t])
    return out


def _group_gains(r: np.ndarray, pos: np.ndarray, nlev: int, groups: Sequence[np.ndarray]) -> np.ndarray:
    """``gain[j, l] = sum_{i in group j} r_i sgn(pos_i - l)``."""
    gains = np.empty((len(groups), nlev))
    for j, idx in enumerate(groups):
        w = np.bincount(pos[idx], weights=r[idx], minlength=nlev)
        c = np.cumsum(w)
        gains[j] = (c[-1] - c) - (c - w)
    return gains


def _dp_path(gains: np.ndarray, increasing: bool) -> tuple[float, np.ndarray]:
    """Best monotone level path through the rows of ``gains``."""
    m, nlev = gains.shape
    if not increasing:
        value, path = _dp_path(gains[:, ::-1], True)
        return value, (nlev - 1) - path
    back = np.empty((m, nlev), dtype=np.int64)
    cur = gains[0].copy()
    idx = np.arange(nlev)
    for j in range(1, m):
        # Running argmax of the previous row (first maximizer on ties).
        better = np.empty(nlev, dtype=bool)
        run_val = np.maximum.accumulate(cur)
        better[0] = True
        better[1:] = cur[1:] > run_val[:-1]
        arg = np.maximum.accumulate(np.where(better, idx, 0))
        back[j] = arg
        cur = gains[j] + run_val
    path = np.empty(m, dtype=np.int64)
    path[-1] = int(np.argmax(cur))
    for j in range(m - 1, 0, -1):
        path[j - 1] = back[j, path[j]]
    return float(cur[path[-1]]), path


def _dp_ends(gains: np.ndarray, increasing: bool) -> np.ndarray:
    """Best value of a monotone path over rows ``0..b`` for every ``b``."""
    if not increasing:
        gains = gains[:, ::-1]
    cur = gains[0].copy()
    out = np.empty(gains.shape[0])
    out[0] = cur.max()
    for j in range(1, gains.shape[0]):
        cur = gains[j] + np.maximum.accumulate(cur)
        out[j] = cur.max()
    return out


# ---------------------------------------------------------------------------
# Closed-form oracles for monotone f
# ---------------------------------------------------------------------------


def _blocks_of(fg: np.ndarray) -> list[tuple[int, int]]:
    return tie_groups(fg)


def _fast_same_direction(R: np.ndarray, fg: np.ndarray) -> tuple[float, np.ndarray]:
    """Nondecreasing ``g`` against nondecreasing ``f`` (group level).

    Inside each constant block of ``f`` the pattern is ``+ ... 0 ... -``; blocks
    do not interact.
    """
    s = np.zeros(len(R), dtype=np.int8)
    total = 0.0
    for a, b in _blocks_of(fg):
        P = np.concatenate([[0.0], np.cumsum(R[a:b])])
        L = b - a
        best, best_ab = -math.inf, (0, 0)
        arg_alpha = 0
        for beta in range(L + 1):
            if P[beta] > P[arg_alpha]:
                arg_alpha = beta
            val = P[arg_alpha] + P[beta] - P[L]
            if val > best:
                best, best_ab = val, (arg_alpha, beta)
        alpha, beta = best_ab
        s[a : a + alpha] = 1
        s[a + beta : b] = -1
        total += best
    return total, s


def _fast_cross_direction(R: np.ndarray, fg: np.ndarray) -> tuple[float, np.ndarray]:
    """Nonincreasing ``g`` against nondecreasing ``f`` (group level).

    The pattern is ``- ... 0 ... +`` globally and the zero stretch must sit in a
    single constant block of ``f``.
    """
    m = len(R)
    P = np.concatenate([[0.0], np.cumsum(R)])
    best, best_ab = math.inf, (0, 0)
    for a, b in _blocks_of(fg):
        arg_alpha = a
        for beta in range(a, b + 1):
            if P[beta] < P[arg_alpha]:
                arg_alpha = beta
            val = P[arg_alpha] + P[beta]
            if val < best:
                best, best_ab = val, (arg_alpha, beta)
    alpha, beta = best_ab
    s = np.zeros(m, dtype=np.int8)
    s[:alpha] = -1
    s[beta:] = 1
    return P[m] - best, s


def _witness_same_direction(fg: np.ndarray, s: np.ndarray) -> np.ndarray:
    vals = np.unique(fg)
    gap = float(np.min(np.diff(vals))) / 3.0 if len(vals) > 1 else 1.0
    return fg - gap * s


def _witness_cross_direction(fg: np.ndarray, s: np.ndarray) -> np.ndarray:
    hi = float(np.max(fg)) + 1.0 + abs(float(np.max(fg)))
    lo = float(np.min(fg)) - 1.0 - abs(float(np.min(fg)))
    return np.where(s < 0, hi, np.where(s > 0, lo, fg))


# ---------------------------------------------------------------------------
# Public oracle
# ---------------------------------------------------------------------------


def _expand(groups: list[tuple[int, int]], per_group: np.ndarray, n: int, dtype=float) -> np.ndarray:
    out = np.empty(n, dtype=dtype)
    for (a, b), v in zip(groups, per_group):
        out[a:b] = v
    return out


def _finish(fv: np.ndarray, r: np.ndarray, g: np.ndarray, pattern: np.ndarray, cls: ShapeClass) -> SupResult:
    realized = sign_vector(fv, g)
    value = pattern_value(r, pattern)
    exact = bool(np.array_equal(realized, pattern))
    eps = 0.0 if exact else EPSILON_SCALE * max(1.0, float(np.sum(np.abs(r))))
    return SupResult(value, FunctionOnDesign(g, cls), exact, pattern.astype(np.int8), eps)


def _monotone_oracle(cls, fv, r, design, method):
    groups = design.groups()
    fg = np.array([fv[a] for a, _ in groups])
    R = np.array([math.fsum(r[a:b]) for a, b in groups])
    n = len(fv)
    want_up = isinstance(cls, (Nondecreasing, MonotoneEither))
    want_down = isinstance(cls, (Nonincreasing, MonotoneEither))

    if method == "general":
        idx = [np.arange(a, b) for a, b in groups]
        u, pos, nlev = _levels(fv)
        gains = _group_gains(r, pos, nlev, idx)
        cands = []
        if want_up:
            cands.append(_dp_path(gains, True))
        if want_down:
            cands.append(_dp_path(gains, False))
        _, path = max(cands, key=lambda t: t[0])
        gvals = _level_to_value(path, u)
        g = _expand(groups, gvals, n)
        return _finish(fv, r, g, sign_vector(fv, g), cls)

    # Closed forms; reduce nonincreasing f to nondecreasing by negation.
    flip = bool(np.any(np.diff(fg) < 0))
    fg2, R2 = (-fg, -R) if flip else (fg, R)
    if flip:
        want_up, want_down = want_down, want_up
    cands = []
    if want_up:
        val, s = _fast_same_direction(R2, fg2)
        cands.append((val, s, _witness_same_direction(fg2, s)))
    if want_down:
        val, s = _fast_cross_direction(R2, fg2)
        cands.append((val, s, _witness_cross_direction(fg2, s)))
    _, s, gw = max(cands, key=lambda t: t[0])
    if flip:
        gw, s = -gw, -s
    g = _expand(groups, gw, n)
    return _finish(fv, r, g, _expand(groups, s, n, np.int8), cls)


def _piecewise_oracle(cls: PiecewiseMonotone, fv, r, design):
    groups = design.groups()
    m, n, k = len(groups), len(fv), cls.k
    idx = [np.arange(a, b) for a, b in groups]
    u, pos, nlev = _levels(fv)
    gains = _group_gains(r, pos, nlev, idx)
    seg = np.full((m, m), -math.inf)
    for a in range(m):
        seg[a, a:] = np.maximum(_dp_ends(gains[a:], True), _dp_ends(gains[a:], False))
    # best[c][b]: groups 0..b-1 split into at most c segments.
    best = np.full((k + 1, m + 1), -math.inf)
    choice = np.zeros((k + 1, m + 1), dtype=np.int64)
    best[:, 0] = 0.0
    for c in range(1, k + 1):
        for b in range(1, m + 1):
            cand = best[c - 1, :b] + seg[:b, b - 1]
            a = int(np.argmax(cand))
            best[c, b], choice[c, b] = cand[a], a
            if best[c - 1, b] >= best[c, b]:
                best[c, b], choice[c, b] = best[c - 1, b], -1
    # Reconstruct segments.
    cuts = []
    c, b = k, m
    while b > 0:
        a = choice[c, b]
        if a < 0:
            c -= 1
            continue
        cuts.append((int(a), b))
        b, c = int(a), c - 1
    gvals = np.empty(m)
    for a, b in reversed(cuts):
        sub = gains[a:b]
        up, down = _dp_path(sub, True), _dp_path(sub, False)
        _, path = up if up[0] >= down[0] else down
        gvals[a:b] = _level_to_value(path, u)
    # Adjacent segments may share levels; a jump between segments is allowed.
    g = _expand(groups, gvals, n)
    return _finish(fv, r, g, sign_vector(fv, g), cls)


def _partition_oracle(cls: FixedPartitionConstant, fv, r):
    g = fv.copy()
    s = np.zeros(len(fv), dtype=np.int8)
    for a, b in cls.blocks:
        tot = math.fsum(r[a:b])
        sg = (tot > 0) - (tot < 0)
        s[a:b] = sg
        g[a:b] = fv[a] - sg * (1.0 + abs(fv[a]))
    return _finish(fv, r, g, s, cls)


def _linear_span_oracle(cls: LinearSpan1D, fv, r):
    f0 = cls.f0_array
    a = cls.coefficient(fv)
    sg0 = np.sign(f0).astype(np.int8)
    tot = pattern_value(r, sg0)
    sigma = (tot > 0) - (tot < 0)
    b = a - sigma * (1.0 + abs(a))
    g = b * f0
    return _finish(fv, r, g, (sigma * sg0).astype(np.int8), cls)


def _single_index_oracle(cls: SingleIndexMonotone, fv, r, design):
    u, pos, nlev = _levels(fv)
    seen: dict[bytes, tuple[float, np.ndarray]] = {}
    best_val, best_g = -math.inf, None
    for theta in cls.directions():
        z = design.points @ theta
        order = np.argsort(z, kind="stable")
        zs = z[order]
        breaks = np.flatnonzero(zs[1:] != zs[:-1]) + 1
        key = order.tobytes() + breaks.tobytes()
        if key in seen:
            continue
        idx = np.split(order, breaks)
        gains = _group_gains(r, pos, nlev, idx)
        cands = [_dp_path(gains, True), _dp_path(gains, False)]
        val, path = max(cands, key=lambda t: t[0])
        seen[key] = (val, path)
        if val > best_val:
            gv = _level_to_value(path, u)
            g = np.empty(len(fv))
            for grp, v in zip(idx, gv):
                g[grp] = v
            best_val, best_g = val, g
    return _finish(fv, r, best_g, sign_vector(fv, best_g), cls)


def pattern_feasible_max(cls: ShapeClass, f, r, design: Design, method: str = "auto") -> SupResult:
    """Maximize ``sum r_i s_i`` over patterns ``s = sgn(f - g)`` with ``g`` in ``cls``.

    ``method="general"`` forces the symbolic-level dynamic program for the
    monotone classes instead of the per-block closed forms.
    """
    fv = cls.check(f, design)
    rv = as_values(r)
    if rv.shape != fv.shape:
        raise StructuralError("r and f must have equal lengths")
    if isinstance(cls, (Nondecreasing, Nonincreasing, MonotoneEither)):
        return _monotone_oracle(cls, fv, rv, design, method)
    if isinstance(cls, PiecewiseMonotone):
        return _piecewise_oracle(cls, fv, rv, design)
    if isinstance(cls, FixedPartitionConstant):
        return _partition_oracle(cls, fv, rv)
    if isinstance(cls, LinearSpan1D):
        return _linear_span_oracle(cls, fv, rv)
    if isinstance(cls, SingleIndexMonotone):
        return _single_index_oracle(cls, fv, rv, design)
    if isinstance(cls, PiecewiseMonotoneConvexConcave):
        raise RefusalError("no sup-oracle is implemented for piecewise monotone-convex-concave classes")
    raise RefusalError(f"unsupported class {cls.describe()}")


def sup_T(cls: ShapeClass, design: Design, y, f, method: str = "auto") -> SupResult:
    """``sup_g T(f, g)`` over ``g`` in ``cls``; never negative since ``g = f`` gives 0."""
    fv, yv = as_values(f), as_values(y)
    if fv.shape != yv.shape:
        raise StructuralError("f and y must have equal lengths")
    return pattern_feasible_max(cls, fv, fv - yv, design, method)


# ---------------------------------------------------------------------------
# Brute force reference
# ---------------------------------------------------------------------------

_INF = None  # marker for an unbounded side


class _Interval:
    """Interval of exact rationals with open/closed ends; ``None`` means unbounded."""

    __slots__ = ("hi", "hi_open", "lo", "lo_open")

    def __init__(self, lo=None, lo_open=True, hi=None, hi_open=True):
        self.lo, self.lo_open, self.hi, self.hi_open = lo, lo_open, hi, hi_open

    @classmethod
    def from_sign(cls, fval: Fraction, s: int) -> _Interval:
        # s = sgn(f - g): +1 -> g < f, 0 -> g = f, -1 -> g > f.
        if s > 0:
            return cls(None, True, fval, True)
        if s < 0:
            return cls(fval, True, None, True)
        return cls(fval, False, fval, False)

    def meet(self, other: _Interval) -> _Interval:
        lo, lo_open = self.lo, self.lo_open
        if other.lo is not None and (lo is None or other.lo > lo or (other.lo == lo and other.lo_open)):
            lo, lo_open = other.lo, other.lo_open
        hi, hi_open = self.hi, self.hi_open
        if other.hi is not None and (hi is None or other.hi < hi or (other.hi == hi and other.hi_open)):
            hi, hi_open = other.hi, other.hi_open
        return _Interval(lo, lo_open, hi, hi_open)

    def empty(self) -> bool:
        if self.lo is None or self.hi is None:
            return False
        return self.lo > self.hi or (self.lo == self.hi and (self.lo_open or self.hi_open))

    def pick(self) -> Fraction:
        if self.lo is None and self.hi is None:
            return Fraction(0)
        if self.lo is None:
            return self.hi - 1 if self.hi_open else self.hi
        if self.hi is None:
            return self.lo + 1 if self.lo_open else self.lo
        if not self.lo_open:
            return self.lo
        if not self.hi_open:
            return self.hi
        return (self.lo + self.hi) / 2


def _chain_witness(cons: list[_Interval], increasing: bool) -> list[Fraction] | None:
    """Monotone sequence with one value per constraint interval, or None."""
    if not increasing:
        neg = [_Interval(None if c.hi is None else -c.hi, c.hi_open, None if c.lo is None else -c.lo, c.lo_open) for c in cons]
        res = _chain_witness(neg, True)
        return None if res is None else [-v for v in res]
    m = len(cons)
    # Suffix upper bounds.
    upper = [None] * m
    acc = _Interval()
    for j in range(m - 1, -1, -1):
        acc = acc.meet(_Interval(None, True, cons[j].hi, cons[j].hi_open))
        upper[j] = acc
    out: list[Fraction] = []
    prev = None
    for j in range(m):
        box = cons[j].meet(upper[j])
        if prev is not None:
            box = box.meet(_Interval(prev, False, None, True))
        if box.empty():
            return None
        prev = box.pick()
        out.append(prev)
    return out


def _grouped_constraints(fvals, s, groups):
    cons = []
    for a, b in groups:
        if any(s[i] != s[a] for i in range(a, b)):
            return None
        cons.append(_Interval.from_sign(fvals[a], s[a]))
    return cons


def _realize(cls: ShapeClass, fvals: list[Fraction], s: Sequence[int], design: Design):
    """Explicit exact witness ``g`` (per index) for the sign pattern, or None."""
    n = len(fvals)
    if isinstance(cls, LinearSpan1D):
        f0 = [Fraction(t) for t in cls.f0]
        a = Fraction(cls.coefficient(np.array([float(v) for v in fvals])))
        box = _Interval()
        for i in range(n):
            if f0[i] == 0:
                if s[i] != 0:
                    return None
                continue
            si = s[i] if f0[i] > 0 else -s[i]
            # si = sgn(a - b)
            box = box.meet(_Interval.from_sign(a, si))
            if box.empty():
                return None
        b = box.pick()
        return [b * t for t in f0]
    if isinstance(cls, FixedPartitionConstant):
        g = [None] * n
        for a_, b_ in cls.blocks:
            box = _Interval()
            for i in range(a_, b_):
                box = box.meet(_Interval.from_sign(fvals[i], s[i]))
            if box.empty():
                return None
            v = box.pick()
            for i in range(a_, b_):
                g[i] = v
        return g
    groups = design.groups()
    cons = _grouped_constraints(fvals, s, groups)
    if cons is None:
        return None

    def expand(per_group):
        g = [None] * n
        for (a_, b_), v in zip(groups, per_group):
            for i in range(a_, b_):
                g[i] = v
        return g

    if isinstance(cls, (Nondecreasing, Nonincreasing, MonotoneEither)):
        dirs = []
        if isinstance(cls, (Nondecreasing, MonotoneEither)):
            dirs.append(True)
        if isinstance(cls, (Nonincreasing, MonotoneEither)):
            dirs.append(False)
        for d in dirs:
            w = _chain_witness(cons, d)
            if w is not None:
                return expand(w)
        return None
    if isinstance(cls, PiecewiseMonotone):
        m = len(cons)
        for nseg in range(1, min(cls.k, m) + 1):
            for cuts in itertools.combinations(range(1, m), nseg - 1):
                bounds = (0,) + cuts + (m,)
                pieces = []
                for a_, b_ in zip(bounds[:-1], bounds[1:]):
                    w = _chain_witness(cons[a_:b_], True) or _chain_witness(cons[a_:b_], False)
                    if w is None:
                        break
                    pieces.extend(w)
                else:
                    return expand(pieces)
        return None
    raise RefusalError(f"brute force does not support {cls.describe()}")


def pattern_is_realizable(cls: ShapeClass, f, s, design: Design) -> bool:
    """Exact feasibility of a sign pattern (independent of the dynamic programs)."""
    fvals = [Fraction(float(v)) for v in as_values(f)]
    return _realize(cls, fvals, list(int(t) for t in s), design) is not None


@lru_cache(maxsize=16)
def _all_patterns(n: int) -> np.ndarray:
    return np.array(list(itertools.product((1, 0, -1), repeat=n)), dtype=np.int8)


def brute_force_sup_T(cls: ShapeClass, design: Design, y, f, max_n: int = BRUTE_FORCE_MAX_N) -> SupResult:
    """Enumerate every sign vector and keep the best one with an explicit witness."""
    fv = cls.check(f, design)
    yv = as_values(y)
    n = len(fv)
    if n > max_n:
        raise RefusalError(f"brute force is capped at n <= {max_n} (got {n})")
    r = fv - yv
    pats = _all_patterns(n)
    approx = pats.astype(float) @ r
    order = np.argsort(-approx, kind="stable")
    fvals = [Fraction(float(v)) for v in fv]
    scale = float(np.sum(np.abs(r)))
    slack = 1e-9 * (1.0 + scale)
    best = None
    first_feasible = None
    for k in order:
        if first_feasible is not None and approx[k] < first_feasible - slack:
            break
        s = pats[k]
        g = _realize(cls, fvals, s, design)
        if g is None:
            continue
        val = pattern_value(r, s)
        if first_feasible is None:
            first_feasible = approx[k]
        if best is None or val > best[0]:
            best = (val, s, g)
    val, s, g = best
    gv = np.array([float(t) for t in g])
    exact = bool(np.array_equal(sign_vector(fv, gv), s))
    return SupResult(val, FunctionOnDesign(gv, cls), exact, s.copy(), 0.0 if exact else EPSILON_SCALE * (1 + scale))
