"""Exhaustive certification of extremal degrees on finite base sets.

Given a reference function ``fbar`` and a generator class, the level-set
family ``{f > fbar}`` (or ``{f < fbar}``) restricted to a finite set of base
points is enumerated exactly, and shattering of subsets is checked by brute
force. Certificates are always relative to the finite base set.

Feasibility of a pattern is decided with rational arithmetic. For 1-D
generators built from ``r``-monotone pieces (``r`` in {1, 2}) a pattern is
realizable on a run of consecutive points iff no forbidden pair (``r = 1``) or
triple (``r = 2``) occurs; the explicit witness is the greatest monotone or
convex minorant of the upper-constrained points, extended steeply past them.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .classes import (
    FixedPartitionConstant,
    MonotoneEither,
    Nondecreasing,
    Nonincreasing,
    PiecewiseMonotone,
    PiecewiseMonotoneConvexConcave,
    ShapeClass,
)
from .errors import ContractError, RefusalError, StructuralError

__all__ = [
    "MAX_BASE_POINTS",
    "MAX_PLANAR_POINTS",
    "AllFunctions",
    "BlockConstant",
    "DegreeCertificate",
    "LevelSetFamily",
    "PlanarFamily",
    "RMonotonePieces",
    "alternating_pattern_check",
    "degree_upper_check",
    "generator_from_class",
    "linear_space_degree",
    "observed_vc_dimension",
    "piecewise_degree_bound",
    "planar_realizable_subsets",
    "r_monotone_det",
    "random_piecewise_baseline",
    "random_planar_baseline",
    "realizable_subsets",
    "realize_pattern",
    "single_index_bound",
    "single_index_degree_check",
    "tuple_coefficients",
    "tuple_pattern_realizable",
]

MAX_BASE_POINTS = 20
MAX_PLANAR_POINTS = 12
RELATIVE_NOTE = "degree certified relative to the finite base set only"


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---------------------------------------------------------------------------
# r-monotone determinants
# ---------------------------------------------------------------------------


def _bareiss_det(rows: list[list[Fraction]]) -> Fraction:
    a = [row[:] for row in rows]
    n = len(a)
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def r_monotone_det(points: Sequence, values: Sequence) -> Fraction:
    """Alternant determinant with rows ``(1, v, ..., v^(r-1), f(v))`` over ``r + 1`` points.

    Nonnegative on every increasing tuple iff ``f`` is ``r``-nondecreasing.
    Computed exactly.
    """
    v = [_frac(t) for t in points]
    f = [_frac(t) for t in values]
    if len(v) != len(f):
        raise StructuralError("one value per point is required")
    r = len(v) - 1
    if r < 1:
        raise StructuralError("need at least two points")
    if any(v[i] >= v[i + 1] for i in range(r)):
        raise StructuralError("points must be strictly increasing")
    if r == 1:
        return f[1] - f[0]
    if r == 2:
        return f[0] * (v[2] - v[1]) - f[1] * (v[2] - v[0]) + f[2] * (v[1] - v[0])
    rows = [[vi**j for j in range(r)] + [fi] for vi, fi in zip(v, f)]
    return _bareiss_det(rows)


def tuple_coefficients(points: Sequence) -> list[Fraction]:
    """Coefficients ``c_i`` with ``L_v(f) = sum c_i f(v_i)``."""
    r = len(points) - 1
    return [r_monotone_det(points, [1 if j == i else 0 for j in range(r + 1)]) for i in range(r + 1)]


def tuple_pattern_realizable(points: Sequence, positive: Sequence[bool], increasing: bool = True) -> bool:
    """Is there ``f`` with ``L_v(f) >= 0`` (or ``<= 0``) and ``f(v_i) > 0`` exactly where ``positive[i]``?

    With a single tuple the constraint is one linear inequality, so the answer
    follows from the sign of each coefficient against its sign constraint.
    """
    coef = tuple_coefficients(points)
    if not increasing:
        coef = [-c for c in coef]
    unattained = False
    for c, pos in zip(coef, positive):
        if c == 0:
            continue
        if (c > 0) == bool(pos):
            return True  # term unbounded above
        if pos:
            unattained = True  # negative coefficient, strictly positive value: sup 0 not reached
    return not unattained


def alternating_pattern_check(r: int, trials: int = 20, seed: int = 0) -> dict:
    """For random increasing ``(r+1)``-tuples, list every sign pattern that is not realizable.

    Returns the blocked patterns per direction across all trials; the
    alternating patterns are expected to be the only ones.
    """
    if r < 1:
        raise StructuralError("r must be >= 1")
    rng = np.random.default_rng(seed)
    alt_up = tuple((i % 2) == ((r + 1) % 2) for i in range(r + 1))
    alt_down = tuple(not t for t in alt_up)
    blocked_up: set[tuple[bool, ...]] = set()
    blocked_down: set[tuple[bool, ...]] = set()
    for _ in range(trials):
        pts = sorted(set(int(t) for t in rng.integers(-50, 50, size=4 * (r + 1))))[: r + 1]
        while len(pts) < r + 1:
            pts.append(pts[-1] + 1)
        pts = [Fraction(p, int(rng.integers(1, 7))) for p in pts]
        pts = sorted(set(pts))
        if len(pts) < r + 1:
            continue
        for pattern in itertools.product([False, True], repeat=r + 1):
            if not tuple_pattern_realizable(pts, pattern, True):
                blocked_up.add(pattern)
            if not tuple_pattern_realizable(pts, pattern, False):
                blocked_down.add(pattern)
    return {
        "r": r,
        "alternating_up": alt_up,
        "alternating_down": alt_down,
        "blocked_up": sorted(blocked_up),
        "blocked_down": sorted(blocked_down),
        "holds": alt_up in blocked_up and alt_down in blocked_down,
    }


# ---------------------------------------------------------------------------
# Generators and families on 1-D base sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RMonotonePieces:
    """Functions ``r``-monotone on each of at most ``k`` intervals (no continuity)."""

    r: int = 1
    k: int = 1
    directions: tuple[int, ...] = (1, -1)

    def __post_init__(self):
        if self.r not in (1, 2):
            raise RefusalError("level-set enumeration is implemented for r in {1, 2}")
        if self.k < 1:
            raise StructuralError("k must be >= 1")
        if not set(self.directions) <= {1, -1} or not self.directions:
            raise StructuralError("directions must be a nonempty subset of {1, -1}")

    def describe(self) -> str:
        return f"r={self.r}-monotone on <= {self.k} pieces, directions {list(self.directions)}"


@dataclass(frozen=True)
class AllFunctions:
    def describe(self) -> str:
        return "all functions"


@dataclass(frozen=True)
class BlockConstant:
    """Functions constant on fixed blocks of base-point indices (half-open)."""

    blocks: tuple[tuple[int, int], ...]

    def describe(self) -> str:
        return f"constant on {len(self.blocks)} fixed blocks"


def generator_from_class(cls: ShapeClass):
    """Map a 1-D shape class to an enumerable generator.

    The convex-concave class maps to the larger class of functions convex or
    concave on each piece, which is where the degree bound is stated.
    """
    if isinstance(cls, Nondecreasing):
        return RMonotonePieces(1, 1, (1,))
    if isinstance(cls, Nonincreasing):
        return RMonotonePieces(1, 1, (-1,))
    if isinstance(cls, MonotoneEither):
        return RMonotonePieces(1, 1)
    if isinstance(cls, PiecewiseMonotone):
        return RMonotonePieces(1, int(cls.k))
    if isinstance(cls, PiecewiseMonotoneConvexConcave):
        return RMonotonePieces(2, int(cls.k))
    if isinstance(cls, FixedPartitionConstant):
        return BlockConstant(cls.blocks)
    raise RefusalError(f"no level-set enumerator for {cls.describe()}")


@dataclass(frozen=True)
class LevelSetFamily:
    """``{f > fbar}`` (direction ``"above"``) or ``{f < fbar}`` (``"below"``) on base points."""

    base_points: tuple[Fraction, ...]
    fbar: tuple[Fraction, ...]
    generator: object
    direction: str = "above"

    def __post_init__(self):
        pts = tuple(_frac(t) for t in self.base_points)
        vals = tuple(_frac(t) for t in self.fbar)
        if len(pts) != len(vals):
            raise StructuralError("one reference value per base point is required")
        if any(pts[i] >= pts[i + 1] for i in range(len(pts) - 1)):
            raise StructuralError("base points must be strictly increasing")
        if self.direction not in ("above", "below"):
            raise StructuralError("direction must be 'above' or 'below'")
        object.__setattr__(self, "base_points", pts)
        object.__setattr__(self, "fbar", vals)
        if not _member(self.generator, pts, vals):
            raise ContractError("reference function is not a member of the generator class")

    @property
    def size(self) -> int:
        return len(self.base_points)

    def dual(self) -> LevelSetFamily:
        """``{-f > -fbar}`` is ``{f < fbar}``: swap direction and negate the reference."""
        return LevelSetFamily(self.base_points, tuple(-t for t in self.fbar), self.generator, "below" if self.direction == "above" else "above")


def _run_is_r_monotone(pts, vals, r, direction) -> bool:
    for i in range(len(pts) - r):
        d = r_monotone_det(pts[i : i + r + 1], vals[i : i + r + 1])
        if d * direction < 0:
            return False
    return True


def _segmentations(n: int, k: int):
    for pieces in range(1, min(k, n) + 1):
        for cuts in itertools.combinations(range(1, n), pieces - 1):
            bounds = (0,) + cuts + (n,)
            yield [(bounds[i], bounds[i + 1]) for i in range(pieces)]


def _member(gen, pts, vals) -> bool:
    if isinstance(gen, AllFunctions):
        return True
    if isinstance(gen, BlockConstant):
        _check_blocks(gen.blocks, len(pts))
        return all(all(vals[i] == vals[a] for i in range(a, b)) for a, b in gen.blocks)
    if isinstance(gen, RMonotonePieces):
        return _piece_split(gen, pts, vals) is not None
    raise StructuralError(f"unknown generator {gen!r}")


def _piece_split(gen: RMonotonePieces, pts, vals):
    """A segmentation into at most ``k`` runs with a direction each, or ``None``."""
    n = len(pts)
    ok = {}
    for a in range(n):
        for b in range(a + 1, n + 1):
            ok[a, b] = [d for d in gen.directions if _run_is_r_monotone(pts[a:b], vals[a:b], gen.r, d)]
    # fewest pieces covering [0, j)
    best = [math.inf] * (n + 1)
    back = [None] * (n + 1)
    best[0] = 0
    for b in range(1, n + 1):
        for a in range(b):
            if ok[a, b] and best[a] + 1 < best[b]:
                best[b] = best[a] + 1
                back[b] = (a, ok[a, b][0])
    if best[n] > gen.k:
        return None
    out, b = [], n
    while b > 0:
        a, d = back[b]
        out.append((a, b, d))
        b = a
    return out[::-1]


def _check_blocks(blocks, n):
    expected = 0
    for a, b in blocks:
        if a != expected or b <= a:
            raise StructuralError("blocks must be contiguous, nonempty and start at 0")
        expected = b
    if expected != n:
        raise StructuralError(f"blocks cover {expected} points, expected {n}")


# Forbidden configurations. A configuration is (indices, required membership in S).


def _forbidden(pts, vals, r: int, direction: int, above: bool) -> list[tuple[tuple[int, ...], tuple[bool, ...]]]:
    """Pair or triple configurations whose presence makes a run infeasible.

    Derived for nondecreasing / convex runs; the other direction follows by
    negating both ``f`` and ``fbar``, which swaps above and below.
    """
    if direction < 0:
        vals = [-t for t in vals]
        above = not above
    n = len(pts)
    out = []
    if r == 1:
        for i in range(n):
            for j in range(i + 1, n):
                if above and vals[i] >= vals[j]:
                    out.append(((i, j), (True, False)))
                if not above and vals[i] >= vals[j]:
                    out.append(((i, j), (False, True)))
        return out
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(j + 1, n):
                # side > 0: middle point strictly above the chord of the outer two
                side = vals[j] * (pts[l] - pts[i]) - vals[i] * (pts[l] - pts[j]) - vals[l] * (pts[j] - pts[i])
                if above and side >= 0:
                    out.append(((i, j, l), (False, True, False)))
                if not above and side >= 0:
                    out.append(((i, j, l), (True, False, True)))
    return out


def _active(bits: np.ndarray, cfg) -> np.ndarray:
    idx, req = cfg
    acc = bits[idx[0]] if req[0] else ~bits[idx[0]]
    for i, q in zip(idx[1:], req[1:]):
        acc = acc & (bits[i] if q else ~bits[i])
    return acc


def _run_ok_mask(mask: int, a: int, b: int, configs) -> bool:
    for idx, req in configs:
        if idx[0] >= a and idx[-1] < b and all(((mask >> i) & 1) == q for i, q in zip(idx, req)):
            return False
    return True


@dataclass(frozen=True)
class RealizableFamily:
    """Realizable subsets as bitmasks over base-point indices (bit ``i`` is point ``i``)."""

    size: int
    masks: np.ndarray

    def subsets(self) -> set[frozenset[int]]:
        return {frozenset(i for i in range(self.size) if (int(m) >> i) & 1) for m in self.masks}

    def __len__(self) -> int:
        return int(self.masks.size)

    def __contains__(self, mask: int) -> bool:
        return bool(np.any(self.masks == mask))


def realizable_subsets(family: LevelSetFamily) -> RealizableFamily:
    """All subsets ``S`` of the base points with ``S = {f > fbar}`` (or ``<``) for some class member."""
    n = family.size
    if n > MAX_BASE_POINTS:
        raise RefusalError(f"base set has {n} points; the cap is {MAX_BASE_POINTS}")
    all_masks = np.arange(1 << n, dtype=np.int64)
    gen = family.generator
    if isinstance(gen, AllFunctions):
        return RealizableFamily(n, all_masks)
    if isinstance(gen, BlockConstant):
        masks = set()
        for choice in itertools.product([False, True], repeat=len(gen.blocks)):
            m = 0
            for on, (a, b) in zip(choice, gen.blocks):
                if on:
                    m |= ((1 << (b - a)) - 1) << a
            masks.add(m)
        return RealizableFamily(n, np.array(sorted(masks), dtype=np.int64))
    if not isinstance(gen, RMonotonePieces):
        raise StructuralError(f"unknown generator {gen!r}")
    above = family.direction == "above"
    bits = [((all_masks >> i) & 1).astype(bool) for i in range(n)]
    configs = {d: _forbidden(family.base_points, family.fbar, gen.r, d, above) for d in gen.directions}
    by_lo = {d: [[] for _ in range(n)] for d in gen.directions}
    for d, cfgs in configs.items():
        for cfg in cfgs:
            by_lo[d][cfg[0][0]].append(cfg)
    # acc[d][hi]: configurations with lowest index >= a and highest index == hi are active
    acc = {d: [np.zeros(1 << n, dtype=bool) for _ in range(n)] for d in gen.directions}
    # suffix[p][a]: suffix starting at a coverable by at most p valid runs
    suffix = [[None] * (n + 1) for _ in range(gen.k + 1)]
    true = np.ones(1 << n, dtype=bool)
    for p in range(gen.k + 1):
        suffix[p][n] = true
    for a in range(n - 1, -1, -1):
        for d in gen.directions:
            for cfg in by_lo[d][a]:
                acc[d][cfg[0][-1]] |= _active(bits, cfg)
        bad = {d: np.zeros(1 << n, dtype=bool) for d in gen.directions}
        valid = []
        for b in range(a + 1, n + 1):
            ok = np.zeros(1 << n, dtype=bool)
            for d in gen.directions:
                bad[d] |= acc[d][b - 1]
                ok |= ~bad[d]
            valid.append(ok)
        suffix[0][a] = np.zeros(1 << n, dtype=bool)
        for p in range(1, gen.k + 1):
            cover = np.zeros(1 << n, dtype=bool)
            for b in range(a + 1, n + 1):
                cover |= valid[b - a - 1] & suffix[p - 1][b]
            suffix[p][a] = cover
    return RealizableFamily(n, all_masks[suffix[gen.k][0]])


# ---------------------------------------------------------------------------
# Explicit witnesses
# ---------------------------------------------------------------------------


def _chord(pts, vals, u, v, x):
    return (vals[u] * (pts[v] - x) + vals[v] * (x - pts[u])) / (pts[v] - pts[u])


def _minorant(pts, vals, support, x_index):
    """Greatest convex minorant of the support points, evaluated at a point inside their span."""
    x = pts[x_index]
    best = None
    for u in support:
        if pts[u] > x:
            continue
        for v in support:
            if pts[v] < x:
                continue
            val = vals[u] if u == v else _chord(pts, vals, u, v, x)
            if best is None or val < best:
                best = val
    return best


def _steep_extend(pts, out, vals, span_lo, span_hi, above_targets, lower_targets):
    """Extend convex values linearly beyond ``[span_lo, span_hi]`` with slopes steep enough.

    ``lower_targets`` are indices outside the span needing ``out > vals`` (strict)
    and ``above_targets`` those needing ``out >= vals``.
    """
    n = len(pts)
    if span_hi > span_lo:
        left_slope = (out[span_lo + 1] - out[span_lo]) / (pts[span_lo + 1] - pts[span_lo])
        right_slope = (out[span_hi] - out[span_hi - 1]) / (pts[span_hi] - pts[span_hi - 1])
    else:
        left_slope = right_slope = Fraction(0)
    lo_cands = [left_slope]
    for i in range(span_lo):
        lo_cands.append((vals[i] - out[span_lo]) / (pts[i] - pts[span_lo]))
    left = min(lo_cands) - 1
    hi_cands = [right_slope]
    for i in range(span_hi + 1, n):
        hi_cands.append((vals[i] - out[span_hi]) / (pts[i] - pts[span_hi]))
    right = max(hi_cands) + 1
    for i in range(span_lo):
        out[i] = out[span_lo] + left * (pts[i] - pts[span_lo])
    for i in range(span_hi + 1, n):
        out[i] = out[span_hi] + right * (pts[i] - pts[span_hi])
    return out


def _witness_convex(pts, vals, S: set[int], above: bool):
    """Convex values with the requested pattern, or ``None`` when infeasible."""
    n = len(pts)
    top = max(vals) + 1 if vals else Fraction(1)
    if above:
        U = [i for i in range(n) if i not in S]
        if not U:
            return [top] * n
        lo, hi = U[0], U[-1]
        out = [None] * n
        for i in range(lo, hi + 1):
            out[i] = _minorant(pts, vals, U, i)
        return _steep_extend(pts, out, vals, lo, hi, [], [])
    upper = sorted(S)
    if not upper:
        return [top] * n
    lo, hi = upper[0], upper[-1]
    out = [None] * n
    for i in range(lo, hi + 1):
        out[i] = _minorant(pts, vals, upper, i)
    gaps = [out[i] - vals[i] for i in range(lo, hi + 1) if i not in S]
    if gaps and min(gaps) <= 0:
        return None
    eps = min(gaps) / 2 if gaps else Fraction(1)
    for i in range(lo, hi + 1):
        out[i] -= eps
    return _steep_extend(pts, out, vals, lo, hi, [], [])


def _witness_monotone(pts, vals, S: set[int], above: bool):
    n = len(pts)
    top = max(vals) + 1
    bottom = min(vals) - 1
    out = []
    if above:
        for i in range(n):
            ups = [vals[u] for u in range(i, n) if u not in S]
            out.append(min(ups + [top]))
    else:
        for i in range(n):
            downs = [vals[u] for u in range(i + 1) if u not in S]
            out.append(max(downs + [bottom]))
    return out


def _run_witness(pts, vals, S: set[int], r: int, direction: int, above: bool):
    if direction < 0:
        w = _run_witness(pts, [-t for t in vals], S, r, 1, not above)
        return None if w is None else [-t for t in w]
    return _witness_monotone(pts, vals, S, above) if r == 1 else _witness_convex(pts, vals, S, above)


def _pattern_of(values, fbar, above: bool) -> int:
    m = 0
    for i, (v, f) in enumerate(zip(values, fbar)):
        if (v > f) if above else (v < f):
            m |= 1 << i
    return m


def realize_pattern(family: LevelSetFamily, mask: int) -> list[Fraction] | None:
    """An explicit class member whose level set on the base points is ``mask``, or ``None``.

    The returned values are verified exactly for both the pattern and class
    membership before being returned.
    """
    n = family.size
    pts, vals = list(family.base_points), list(family.fbar)
    above = family.direction == "above"
    gen = family.generator
    if isinstance(gen, AllFunctions):
        step = 1 if above else -1
        out = [v + step if (mask >> i) & 1 else v for i, v in enumerate(vals)]
    elif isinstance(gen, BlockConstant):
        out = []
        for a, b in gen.blocks:
            inside = [(mask >> i) & 1 for i in range(a, b)]
            if len(set(inside)) > 1:
                return None
            shift = (1 if above else -1) if inside[0] else 0
            out.extend(vals[i] + shift for i in range(a, b))
    else:
        configs = {d: _forbidden(pts, vals, gen.r, d, above) for d in gen.directions}
        best = [math.inf] * (n + 1)
        back: list = [None] * (n + 1)
        best[0] = 0
        for b in range(1, n + 1):
            for a in range(b):
                for d in gen.directions:
                    if best[a] + 1 < best[b] and _run_ok_mask(mask, a, b, configs[d]):
                        best[b], back[b] = best[a] + 1, (a, d)
        if best[n] > gen.k:
            return None
        runs, b = [], n
        while b > 0:
            a, d = back[b]
            runs.append((a, b, d))
            b = a
        out = []
        for a, b, d in reversed(runs):
            S = {i - a for i in range(a, b) if (mask >> i) & 1}
            w = _run_witness(pts[a:b], vals[a:b], S, gen.r, d, above)
            if w is None:
                return None
            out.extend(w)
    if _pattern_of(out, vals, above) != mask or not _member(gen, tuple(pts), tuple(out)):
        raise AssertionError("witness construction failed verification")
    return out


# ---------------------------------------------------------------------------
# Shattering
# ---------------------------------------------------------------------------


@dataclass
class DegreeCertificate:
    claimed_degree: int
    tested_size: int
    shattered: bool
    exhaustive: bool
    family_size: int
    base_size: int
    witness_subset: tuple[int, ...] | None = None
    witness_patterns: list = field(default_factory=list)
    observed_dimension: int | None = None
    direction: str | None = None
    note: str = RELATIVE_NOTE

    @property
    def certified(self) -> bool:
        return not self.shattered

    def to_dict(self) -> dict:
        return {
            "claimed_degree": self.claimed_degree,
            "tested_size": self.tested_size,
            "shattered": self.shattered,
            "certified": self.certified,
            "exhaustive": self.exhaustive,
            "family_size": self.family_size,
            "base_size": self.base_size,
            "direction": self.direction,
            "observed_dimension": self.observed_dimension,
            "witness_subset": None if self.witness_subset is None else list(self.witness_subset),
            "witness_patterns": [
                {"pattern": list(p), "values": [str(v) for v in vals] if vals is not None else None} for p, vals in self.witness_patterns
            ],
            "note": self.note,
        }


def _find_shattered(masks: np.ndarray, n: int, size: int) -> tuple[int, ...] | None:
    if size > n or masks.size < (1 << size):
        return None
    if size == 0:
        return () if masks.size else None
    for combo in itertools.combinations(range(n), size):
        sel = 0
        for i in combo:
            sel |= 1 << i
        if np.unique(masks & sel).size == (1 << size):
            return combo
    return None


def observed_vc_dimension(fam: RealizableFamily) -> int:
    """Largest size of a shattered subset of the base set (``-1`` for an empty family)."""
    if fam.masks.size == 0:
        return -1
    d = 0
    while _find_shattered(fam.masks, fam.size, d + 1) is not None:
        d += 1
    return d


def degree_upper_check(family, claimed_degree: int, with_dimension: bool = True) -> DegreeCertificate:
    """Check exhaustively that no subset of size ``claimed_degree + 1`` is shattered.

    ``family`` is a :class:`LevelSetFamily` or a :class:`PlanarFamily`.
    When a subset is shattered its patterns are realized by explicit members.
    """
    if isinstance(family, PlanarFamily):
        fam = planar_realizable_subsets(family)
    else:
        fam = realizable_subsets(family)
    size = claimed_degree + 1
    hit = _find_shattered(fam.masks, fam.size, size)
    cert = DegreeCertificate(
        claimed_degree,
        size,
        hit is not None,
        True,
        len(fam),
        fam.size,
        direction=family.direction,
        observed_dimension=observed_vc_dimension(fam) if with_dimension else None,
    )
    if hit is not None:
        cert.witness_subset = hit
        sel = sum(1 << i for i in hit)
        seen = {}
        for m in fam.masks:
            key = int(m) & sel
            if key not in seen:
                seen[key] = int(m)
        for key in sorted(seen):
            pattern = tuple(i for i in hit if (key >> i) & 1)
            vals = realize_pattern(family, seen[key]) if isinstance(family, LevelSetFamily) else planar_witness(family, seen[key])
            cert.witness_patterns.append((pattern, vals))
    return cert


def piecewise_degree_bound(r: int, k: int, K: int) -> int:
    """Degree bound ``(r+1)k + r(K-1)`` for piecewise polynomials in piecewise r-monotone classes."""
    if min(r, k, K) < 1:
        raise StructuralError("r, k and K must be >= 1")
    return (r + 1) * k + r * (K - 1)


def linear_space_degree(d: int) -> int:
    """Degree bound ``d + 1`` for a linear space of dimension ``d``."""
    if d < 1:
        raise StructuralError("dimension must be >= 1")
    return d + 1


def single_index_bound(m: int, K: int) -> int:
    if m < 1 or K < 1:
        raise StructuralError("m and K must be >= 1")
    return (m + 1) * K


# ---------------------------------------------------------------------------
# Planar single-index families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanarFamily:
    """``{x : phi(<x, theta>) > fbar(x)}`` over monotone ``phi`` and all directions ``theta``.

    ``fbar(x) = levels[j]`` when ``<x, ref_direction>`` falls in slab ``j``;
    slabs are delimited by the increasing ``cuts`` (slab ``j`` is
    ``(cuts[j-1], cuts[j]]``).
    """

    points: tuple[tuple[Fraction, Fraction], ...]
    ref_direction: tuple[Fraction, Fraction]
    cuts: tuple[Fraction, ...]
    levels: tuple[Fraction, ...]
    direction: str = "above"

    def __post_init__(self):
        pts = tuple((_frac(p[0]), _frac(p[1])) for p in self.points)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "ref_direction", (_frac(self.ref_direction[0]), _frac(self.ref_direction[1])))
        object.__setattr__(self, "cuts", tuple(_frac(c) for c in self.cuts))
        object.__setattr__(self, "levels", tuple(_frac(c) for c in self.levels))
        if len(self.levels) != len(self.cuts) + 1:
            raise StructuralError("need one level per slab (len(cuts) + 1)")
        if any(self.cuts[i] >= self.cuts[i + 1] for i in range(len(self.cuts) - 1)):
            raise StructuralError("cuts must be increasing")
        if self.ref_direction == (0, 0):
            raise StructuralError("reference direction must be nonzero")
        if self.direction not in ("above", "below"):
            raise StructuralError("direction must be 'above' or 'below'")

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def K(self) -> int:
        return len(self.levels)

    def slab_of(self, i: int) -> int:
        p = self.points[i]
        z = p[0] * self.ref_direction[0] + p[1] * self.ref_direction[1]
        return sum(1 for c in self.cuts if z > c)

    def fbar_values(self) -> list[Fraction]:
        return [self.levels[self.slab_of(i)] for i in range(self.size)]


def _arc_directions(points) -> list[tuple[Fraction, Fraction]]:
    """One direction inside each open arc between consecutive critical directions."""
    crit = set()
    for (x1, y1), (x2, y2) in itertools.combinations(points, 2):
        dx, dy = x2 - x1, y2 - y1
        if dx == 0 and dy == 0:
            continue
        g = abs(dx) + abs(dy)
        crit.add((-dy / g, dx / g))
        crit.add((dy / g, -dx / g))
    if not crit:
        return [(Fraction(1), Fraction(0))]

    def half(d):
        return 0 if (d[1] > 0 or (d[1] == 0 and d[0] > 0)) else 1

    import functools

    def cmp(p, q):
        hp, hq = half(p), half(q)
        if hp != hq:
            return hp - hq
        cross = p[0] * q[1] - p[1] * q[0]
        return -1 if cross > 0 else (1 if cross < 0 else 0)

    order = sorted(crit, key=functools.cmp_to_key(cmp))
    reps = []
    for i, d1 in enumerate(order):
        d2 = order[(i + 1) % len(order)]
        reps.append((d1[0] + d2[0], d1[1] + d2[1]))
    if len(order) == 2:
        # Two antipodal directions: the sums vanish; use the perpendiculars instead.
        d = order[0]
        reps = [(-d[1], d[0]), (d[1], -d[0])]
    return reps


def _nested_cut_choices(sorted_vals_count: int, n_levels: int):
    return itertools.combinations_with_replacement(range(sorted_vals_count + 1), n_levels)


def _planar_patterns(family: PlanarFamily, theta) -> dict[int, tuple]:
    """Realizable masks at direction ``theta`` with the nested cut choices producing them."""
    n = family.size
    above = family.direction == "above"
    proj = [p[0] * theta[0] + p[1] * theta[1] for p in family.points]
    distinct = sorted(set(proj))
    rank = [distinct.index(z) for z in proj]
    fb = family.fbar_values()
    lv = sorted(set(fb))
    out = {}
    # For "above" the selected set at level c is an upper ray, shrinking as c grows.
    # For "below" (phi < c) it is a lower ray, growing with c; use reversed ranks.
    for cuts in _nested_cut_choices(len(distinct), len(lv)):
        m = 0
        for i in range(n):
            c = cuts[lv.index(fb[i])]
            if above:
                sel = rank[i] >= c
            else:
                sel = rank[i] < c
            if sel:
                m |= 1 << i
        if above or list(cuts) == sorted(cuts):
            out.setdefault(m, (theta, cuts))
    return out


def planar_realizable_subsets(family: PlanarFamily) -> RealizableFamily:
    n = family.size
    if n > MAX_PLANAR_POINTS:
        raise RefusalError(f"planar base set has {n} points; the cap is {MAX_PLANAR_POINTS}")
    masks = set()
    for theta in _arc_directions(family.points):
        masks.update(_planar_patterns(family, theta))
    return RealizableFamily(n, np.array(sorted(masks), dtype=np.int64))


def planar_witness(family: PlanarFamily, mask: int):
    """Direction and link values at the projections realizing ``mask``, verified exactly."""
    fb = family.fbar_values()
    lv = sorted(set(fb))
    above = family.direction == "above"
    for theta in _arc_directions(family.points):
        pats = _planar_patterns(family, theta)
        if mask not in pats:
            continue
        _, cuts = pats[mask]
        proj = [p[0] * theta[0] + p[1] * theta[1] for p in family.points]
        distinct = sorted(set(proj))
        # Link value on each distinct projection: between consecutive levels according to the cuts.
        phi = []
        for rnk in range(len(distinct)):
            if above:
                passed = [j for j, c in enumerate(cuts) if rnk >= c]
                val = _between(lv, max(passed)) if passed else lv[0] - 1
            else:
                passed = [j for j, c in enumerate(cuts) if rnk < c]
                val = _between_low(lv, min(passed)) if passed else lv[-1] + 1
            phi.append(val)
        values = [phi[distinct.index(z)] for z in proj]
        got = sum(1 << i for i in range(family.size) if ((values[i] > fb[i]) if above else (values[i] < fb[i])))
        mono = all(phi[i] <= phi[i + 1] for i in range(len(phi) - 1)) or all(phi[i] >= phi[i + 1] for i in range(len(phi) - 1))
        if got != mask or not mono:
            raise AssertionError("planar witness failed verification")
        return [str(theta[0]), str(theta[1])] + values
    return None


def _between(levels, j):
    """A value above ``levels[j]`` and at most ``levels[j+1]``."""
    if j + 1 < len(levels):
        return (levels[j] + levels[j + 1]) / 2
    return levels[j] + 1


def _between_low(levels, j):
    """A value below ``levels[j]`` and at least ``levels[j-1]``."""
    if j > 0:
        return (levels[j] + levels[j - 1]) / 2
    return levels[j] - 1


def single_index_degree_check(family: PlanarFamily) -> DegreeCertificate:
    """Exhaustive check of the ``(m+1)K`` bound (``m = 2``) for a planar family."""
    return degree_upper_check(family, single_index_bound(2, family.K))


# ---------------------------------------------------------------------------
# Random reference functions
# ---------------------------------------------------------------------------


def random_piecewise_baseline(
    generator: RMonotonePieces, base_points: Sequence, K: int, rng: np.random.Generator, direction: str = "above", max_tries: int = 10_000
) -> LevelSetFamily:
    """A family whose reference is piecewise polynomial of degree ``r - 1`` on ``K`` index runs.

    Breakpoints and small integer coefficients are drawn at random; draws
    outside the generator class are rejected.
    """
    n = len(base_points)
    if not 1 <= K <= n:
        raise StructuralError("need 1 <= K <= number of base points")
    pts = [_frac(t) for t in base_points]
    for _ in range(max_tries):
        cuts = sorted(int(c) for c in rng.choice(np.arange(1, n), size=K - 1, replace=False)) if K > 1 else []
        bounds = [0] + cuts + [n]
        vals: list[Fraction] = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            level = Fraction(int(rng.integers(-6, 7)))
            slope = Fraction(int(rng.integers(-3, 4))) if generator.r == 2 else Fraction(0)
            vals.extend(level + slope * (pts[i] - pts[lo]) for i in range(lo, hi))
        if _member(generator, pts, vals):
            return LevelSetFamily(tuple(pts), tuple(vals), generator, direction)
    raise RefusalError(f"no member of {generator.describe()} found in {max_tries} draws")


def random_planar_baseline(n_points: int, K: int, rng: np.random.Generator, direction: str = "above", span: int = 9) -> PlanarFamily:
    """Distinct integer points with a monotone ``K``-level reference along a random direction."""
    if n_points > (span + 1) ** 2:
        raise StructuralError("too many points for the integer grid")
    if n_points > MAX_PLANAR_POINTS:
        raise RefusalError(f"planar enumeration is capped at {MAX_PLANAR_POINTS} points")
    cells = rng.choice((span + 1) ** 2, size=n_points, replace=False)
    points = tuple((int(c) // (span + 1), int(c) % (span + 1)) for c in cells)
    while True:
        ref = tuple(int(v) for v in rng.integers(-3, 4, size=2))
        if ref != (0, 0):
            break
    proj = sorted({ref[0] * x + ref[1] * y for x, y in points})
    cuts = sorted({Fraction(int(c)) + Fraction(1, 2) for c in rng.choice(proj, size=min(K - 1, len(proj)), replace=False)}) if K > 1 else []
    levels = sorted(Fraction(int(v)) for v in rng.integers(-5, 6, size=len(cuts) + 1))
    return PlanarFamily(points, ref, tuple(cuts), tuple(levels), direction)
