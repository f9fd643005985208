"""Approximate minimizers of the sign statistic over shape classes.

``minimize_T`` searches a finite sieve of class members and certifies the
returned fit by recomputing its sup-oracle value. Closed forms are used where
they are exact minimizers (fixed-partition regressograms and the sign
estimator on a one-dimensional linear span).

Monotone fits exploit a decomposition: for a nondecreasing ``f`` whose
constant blocks are ``B_1 < ... < B_J`` with values ``c_1 < ... < c_J``, the
sup-oracle of the nondecreasing class is ``sum_j block_cost(B_j, c_j)``.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import isotonic_regression

from .classes import (
    FixedPartitionConstant,
    LinearSpan1D,
    MonotoneEither,
    Nondecreasing,
    Nonincreasing,
    PiecewiseMonotone,
    ShapeClass,
    SingleIndexMonotone,
)
from .core import Design, FunctionOnDesign, as_values, tie_groups
from .errors import ContractError, RefusalError, StructuralError
from .signtest import sup_T

__all__ = [
    "STRATEGIES",
    "EstimateResult",
    "SieveConfig",
    "block_cost",
    "linear_span_1d",
    "lse_linear_1d",
    "minimize_T",
    "regressogram",
    "single_index_estimate",
    "value_grid",
]

STRATEGIES = ("ExactTiny", "RegressogramDP", "LocalSearch", "AngleGrid")
EXACT_TINY_MAX_N = 8
DP_MAX_GROUPS = 400


@dataclass(frozen=True)
class SieveConfig:
    strategy: str = "RegressogramDP"
    max_partitions: int = 8
    restarts: int = 4
    max_sweeps: int = 50
    n_directions: int = 720
    refine: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise StructuralError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        for name in ("max_partitions", "restarts", "max_sweeps", "n_directions", "refine"):
            if int(getattr(self, name)) < 1:
                raise StructuralError(f"{name} must be positive")


@dataclass(frozen=True)
class EstimateResult:
    fhat: FunctionOnDesign
    t_value: float
    slack_bound: float
    sieve_descriptor: str
    seed: int | None = None
    theta: tuple[float, float] | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "fhat": [float(v) for v in self.fhat.values],
            "t_value": float(self.t_value),
            "slack_bound": float(self.slack_bound),
            "sieve_descriptor": self.sieve_descriptor,
            "seed": self.seed,
        }
        if self.theta is not None:
            out["theta"] = [float(t) for t in self.theta]
        out.update(self.extras)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _yvec(y, design: Design) -> np.ndarray:
    yv = as_values(y)
    if yv.shape[0] != design.n:
        raise StructuralError(f"{yv.shape[0]} responses for {design.n} design points")
    return yv


def _certify(cls: ShapeClass, design: Design, y, f: np.ndarray, descriptor: str, seed, **extra) -> EstimateResult:
    res = sup_T(cls, design, y, f)
    return EstimateResult(FunctionOnDesign(f, cls), res.value, 0.0, descriptor, seed, **extra)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def regressogram(blocks, design: Design, y) -> EstimateResult:
    """Per-block response means; the exact minimizer over the fixed-partition class."""
    cls = blocks if isinstance(blocks, FixedPartitionConstant) else FixedPartitionConstant(tuple(blocks))
    yv = _yvec(y, design)
    cls.validate(design.n, design)
    f = np.empty(design.n)
    for a, b in cls.blocks:
        f[a:b] = math.fsum(yv[a:b]) / (b - a)
    return _certify(cls, design, yv, f, f"regressogram over {len(cls.blocks)} blocks", None)


def sign_coefficient(f0: np.ndarray, y: np.ndarray) -> float:
    """``sum y_i sgn(f0_i) / sum |f0_i|``."""
    denom = math.fsum(np.abs(f0))
    if denom <= 0.0:
        raise ContractError("f0 must not vanish on the whole design")
    return math.fsum(y * np.sign(f0)) / denom


def lse_coefficient(f0: np.ndarray, y: np.ndarray) -> float:
    denom = math.fsum(f0 * f0)
    if denom <= 0.0:
        raise ContractError("f0 must not vanish on the whole design")
    return math.fsum(y * f0) / denom


def linear_span_1d(f0: Sequence[float], design: Design, y) -> EstimateResult:
    """Sign estimator ``a_hat f0`` with ``a_hat = sum y_i sgn(f0_i) / sum |f0_i|``."""
    cls = LinearSpan1D(tuple(f0))
    yv = _yvec(y, design)
    f0v = cls.f0_array
    if f0v.shape != yv.shape:
        raise StructuralError("f0 and y must have equal lengths")
    a_hat = sign_coefficient(f0v, yv)
    return _certify(cls, design, yv, a_hat * f0v, "sign estimator on span(f0)", None, extras={"coefficient": a_hat})


def lse_linear_1d(f0: Sequence[float], design: Design, y) -> EstimateResult:
    """Least-squares coefficient on ``span(f0)``; a baseline for comparisons."""
    f0v = np.asarray(f0, dtype=float)
    yv = _yvec(y, design)
    a_ls = lse_coefficient(f0v, yv)
    cls = LinearSpan1D(tuple(f0v))
    return _certify(cls, design, yv, a_ls * f0v, "least squares on span(f0)", None, extras={"coefficient": a_ls})


# ---------------------------------------------------------------------------
# Monotone building blocks (group level)
# ---------------------------------------------------------------------------


def value_grid(y) -> np.ndarray:
    """Sorted candidate values: responses, midpoints of consecutive ones, and ``+-(max|y| + 1)``."""
    u = np.unique(as_values(y))
    mids = 0.5 * (u[1:] + u[:-1])
    outer = float(np.max(np.abs(u))) + 1.0
    return np.unique(np.concatenate([u, mids, [-outer, outer]]))


def block_cost(sizes: np.ndarray, ysums: np.ndarray, c) -> np.ndarray | float:
    """Sup-oracle contribution of one constant block of a nondecreasing fit.

    ``c`` may be a scalar or a vector of candidate block values.
    """
    c_arr = np.atleast_1d(np.asarray(c, dtype=float))
    R = c_arr[:, None] * sizes[None, :] - ysums[None, :]
    P = np.concatenate([np.zeros((len(c_arr), 1)), np.cumsum(R, axis=1)], axis=1)
    out = np.max(np.maximum.accumulate(P, axis=1) + P, axis=1) - P[:, -1]
    return out if np.ndim(c) else float(out[0])


@dataclass
class _Grouped:
    groups: list[tuple[int, int]]
    sizes: np.ndarray
    ysums: np.ndarray

    @classmethod
    def build(cls, design: Design, y: np.ndarray) -> _Grouped:
        groups = design.groups()
        sizes = np.array([b - a for a, b in groups], dtype=float)
        ysums = np.array([math.fsum(y[a:b]) for a, b in groups])
        return cls(groups, sizes, ysums)

    def expand(self, per_group: np.ndarray) -> np.ndarray:
        out = np.empty(int(self.sizes.sum()))
        for (a, b), v in zip(self.groups, per_group):
            out[a:b] = v
        return out


def _exact_tiny_up(sizes, ysums, grid) -> np.ndarray:
    """Best nondecreasing grid-valued step fit; exact over that finite set.

    Ties are broken by fewer blocks, then earlier breakpoints, then smaller values.
    """
    m, G = len(sizes), len(grid)
    cost = {}
    for a in range(m):
        for b in range(a + 1, m + 1):
            cost[a, b] = block_cost(sizes[a:b], ysums[a:b], grid)
    best: list[list[tuple | None]] = [[None] * G for _ in range(m + 1)]
    for b in range(1, m + 1):
        for v in range(G):
            cand = None
            for a in range(b):
                if a == 0:
                    prev = (0.0, 0, (), ())
                else:
                    prevs = [best[a][w] for w in range(v) if best[a][w] is not None]
                    if not prevs:
                        continue
                    prev = min(prevs)
                key = (prev[0] + cost[a, b][v], prev[1] + 1, prev[2] + (a,), prev[3] + (v,))
                if cand is None or key < cand:
                    cand = key
            best[b][v] = cand
    winner = min(k for k in best[m] if k is not None)
    starts, vals = winner[2], winner[3]
    out = np.empty(m)
    bounds = list(starts) + [m]
    for j, v in enumerate(vals):
        out[bounds[j] : bounds[j + 1]] = grid[v]
    return out


TIE_RTOL = 1e-9


def _tie_tol(ysums) -> float:
    return TIE_RTOL * (1.0 + float(np.sum(np.abs(ysums))))


def _argmin_tol(vals: np.ndarray, tol: float) -> int:
    """First index whose value is within ``tol`` of the minimum.

    Costs that agree in exact arithmetic can differ by rounding, and a plain
    argmin would then depend on a common shift of the data.
    """
    vals = np.asarray(vals)
    lo = np.min(vals)
    if not np.isfinite(lo):
        return int(np.argmin(vals))
    return int(np.flatnonzero(vals <= lo + tol)[0])


def _pava(sizes, ysums, increasing=True) -> np.ndarray:
    res = isotonic_regression(ysums / sizes, weights=sizes, increasing=increasing)
    return np.asarray(res.x, dtype=float)


def _polish_up(sizes, ysums, vals, grid, max_sweeps) -> np.ndarray:
    """Coordinate descent over block values, keeping blocks strictly increasing."""
    bounds = [0] + [j for j in range(1, len(vals)) if vals[j] != vals[j - 1]] + [len(vals)]
    cvals = [vals[bounds[j]] for j in range(len(bounds) - 1)]
    tol = _tie_tol(ysums)
    for _ in range(max_sweeps):
        moved = False
        for j in range(len(cvals)):
            lo = cvals[j - 1] if j > 0 else -math.inf
            hi = cvals[j + 1] if j + 1 < len(cvals) else math.inf
            a, b = bounds[j], bounds[j + 1]
            cand = grid[(grid > lo) & (grid < hi)]
            if cand.size == 0:
                continue
            costs = block_cost(sizes[a:b], ysums[a:b], cand)
            k = _argmin_tol(costs, tol)
            if costs[k] < block_cost(sizes[a:b], ysums[a:b], cvals[j]) - tol:
                cvals[j] = float(cand[k])
                moved = True
        if not moved:
            break
    out = np.empty(len(vals))
    for j, c in enumerate(cvals):
        out[bounds[j] : bounds[j + 1]] = c
    return out


def _regressogram_dp_up(sizes, ysums, cap, grid, max_sweeps) -> list[np.ndarray]:
    """One polished nondecreasing candidate per block count ``1..cap``."""
    m = len(sizes)
    if m > DP_MAX_GROUPS:
        raise RefusalError(f"RegressogramDP is capped at {DP_MAX_GROUPS} distinct abscissas (got {m})")
    tol = _tie_tol(ysums)
    N = np.concatenate([[0.0], np.cumsum(sizes)])
    S = np.concatenate([[0.0], np.cumsum(ysums)])
    mean = np.full((m + 1, m + 1), np.nan)
    phi = np.full((m + 1, m + 1), np.inf)
    for a in range(m):
        for b in range(a + 1, m + 1):
            mean[a, b] = (S[b] - S[a]) / (N[b] - N[a])
            phi[a, b] = block_cost(sizes[a:b], ysums[a:b], mean[a, b])
    layers = [None]
    cur = np.full((m + 1, m + 1), np.inf)  # cur[a, b]: last block [a, b)
    cur[0, 1:] = phi[0, 1:]
    back = [np.full((m + 1, m + 1), -1, dtype=np.int64)]
    layers.append(cur)
    for _ in range(2, min(cap, m) + 1):
        prev = layers[-1]
        nxt = np.full((m + 1, m + 1), np.inf)
        bk = np.full((m + 1, m + 1), -1, dtype=np.int64)
        for a in range(1, m):
            col = prev[:a, a]
            means_prev = mean[:a, a]
            for b in range(a + 1, m + 1):
                ok = np.isfinite(col) & (means_prev <= mean[a, b])
                if not ok.any():
                    continue
                vals = np.where(ok, col, np.inf)
                i = _argmin_tol(vals, tol)
                nxt[a, b] = vals[i] + phi[a, b]
                bk[a, b] = i
        layers.append(nxt)
        back.append(bk)
    out = []
    for j in range(1, len(layers)):
        last = layers[j][:, m]
        if not np.isfinite(last).any():
            continue
        a = _argmin_tol(last, tol)
        blocks = []
        b, layer = m, j
        while layer >= 1:
            blocks.append((a, b))
            prev_a = back[layer - 1][a, b] if layer >= 2 else -1
            b, a, layer = a, int(prev_a), layer - 1
        vals = np.empty(m)
        for a_, b_ in blocks:
            vals[a_:b_] = mean[a_, b_]
        out.append(_polish_up(sizes, ysums, vals, grid, max_sweeps))
    return out


# ---------------------------------------------------------------------------
# Strategies
# ---------------------------------------------------------------------------


def _best_by_T(cls, design, y, candidates: list[np.ndarray]) -> tuple[np.ndarray, float]:
    best, best_t = None, math.inf
    tol = _tie_tol(y)
    for f in candidates:
        t = sup_T(cls, design, y, f).value
        if t < best_t - tol:
            best, best_t = f, t
    return best, best_t


def _directional(cls: ShapeClass) -> list[bool]:
    if isinstance(cls, Nondecreasing):
        return [True]
    if isinstance(cls, Nonincreasing):
        return [False]
    return [True, False]


def _exact_tiny(cls, design, y, cfg):
    if design.n > EXACT_TINY_MAX_N:
        raise RefusalError(f"ExactTiny is limited to n <= {EXACT_TINY_MAX_N}")
    if not isinstance(cls, (Nondecreasing, Nonincreasing)):
        raise RefusalError("ExactTiny supports the nondecreasing and nonincreasing classes only")
    grp = _Grouped.build(design, y)
    grid = value_grid(y)
    if isinstance(cls, Nondecreasing):
        vals = _exact_tiny_up(grp.sizes, grp.ysums, grid)
    else:
        vals = -_exact_tiny_up(grp.sizes, -grp.ysums, -grid[::-1])
    return grp.expand(vals), f"ExactTiny grid of {len(grid)} values over {cls.describe()}"


def _regressogram_dp(cls, design, y, cfg):
    grp = _Grouped.build(design, y)
    grid = value_grid(y)
    cands: list[np.ndarray] = []

    def monotone_cands(sizes, ysums, up):
        if up:
            return _regressogram_dp_up(sizes, ysums, cfg.max_partitions, grid, cfg.max_sweeps)
        return [-v for v in _regressogram_dp_up(sizes, -ysums, cfg.max_partitions, -grid[::-1], cfg.max_sweeps)]

    if isinstance(cls, (Nondecreasing, Nonincreasing, MonotoneEither)):
        for up in _directional(cls):
            cands += [grp.expand(v) for v in monotone_cands(grp.sizes, grp.ysums, up)]
    elif isinstance(cls, PiecewiseMonotone):
        # Monotone fits are members too.
        for up in (True, False):
            cands += [grp.expand(v) for v in monotone_cands(grp.sizes, grp.ysums, up)]
        cands.append(grp.expand(_piecewise_pava(grp.sizes, grp.ysums, cls.k, grid, cfg.max_sweeps)))
    else:
        raise RefusalError(f"RegressogramDP does not support {cls.describe()}")
    f, _ = _best_by_T(cls, design, y, cands)
    return f, f"RegressogramDP(max_partitions={cfg.max_partitions}) over {cls.describe()}"


def _piecewise_pava(sizes, ysums, k, grid, max_sweeps) -> np.ndarray:
    """Segmentation into at most ``k`` monotone pieces.

    Each segment is fitted by isotonic regression, then its block values are
    polished; segment cost is the block-decomposed sup-oracle of the segment fit.
    """
    m = len(sizes)
    if m > DP_MAX_GROUPS:
        raise RefusalError(f"segmentation is capped at {DP_MAX_GROUPS} distinct abscissas (got {m})")
    tol = _tie_tol(ysums)
    seg_cost = np.full((m + 1, m + 1), np.inf)
    seg_fit: dict[tuple[int, int], np.ndarray] = {}
    for a in range(m):
        for b in range(a + 1, m + 1):
            best = None
            for up in (True, False):
                sgn = 1.0 if up else -1.0
                fit = sgn * _polish_up(
                    sizes[a:b], sgn * ysums[a:b], sgn * _pava(sizes[a:b], ysums[a:b], up), sgn * grid[:: int(sgn)], max_sweeps
                )
                cost = 0.0
                for s, e in tie_groups(fit):
                    cost += block_cost(sizes[a + s : a + e], sgn * ysums[a + s : a + e], sgn * fit[s])
                if best is None or cost < best[0] - tol:
                    best = (cost, fit)
            seg_cost[a, b] = best[0]
            seg_fit[a, b] = best[1]
    tol = _tie_tol(ysums)
    total = np.full((k + 1, m + 1), np.inf)
    arg = np.zeros((k + 1, m + 1), dtype=np.int64)
    total[0, 0] = 0.0
    for c in range(1, k + 1):
        total[c, 0] = 0.0
        for b in range(1, m + 1):
            vals = total[c - 1, :b] + seg_cost[:b, b]
            a = _argmin_tol(vals, tol)
            total[c, b], arg[c, b] = vals[a], a
    c = _argmin_tol(total[1:, m], tol) + 1
    out = np.empty(m)
    b = m
    while b > 0:
        a = int(arg[c, b])
        out[a:b] = seg_fit[a, b]
        b, c = a, c - 1
    return out


def _snap(vals: np.ndarray, grid: np.ndarray) -> np.ndarray:
    idx = np.clip(np.searchsorted(grid, vals), 1, len(grid) - 1)
    left, right = grid[idx - 1], grid[idx]
    return np.where(np.abs(vals - left) <= np.abs(right - vals), left, right)


def _local_search(cls, design, y, cfg):
    if not isinstance(cls, (Nondecreasing, Nonincreasing, MonotoneEither, PiecewiseMonotone)):
        raise RefusalError(f"LocalSearch does not support {cls.describe()}")
    grp = _Grouped.build(design, y)
    grid = value_grid(y)
    m = len(grp.sizes)

    def T(vals):
        return sup_T(cls, design, y, grp.expand(vals)).value

    def member(vals):
        return cls.contains(grp.expand(vals), design)

    best_vals, best_t = None, math.inf
    for restart in range(cfg.restarts):
        if restart == 0:
            fits = []
            for up in _directional(cls):
                fits.append(_snap(_pava(grp.sizes, grp.ysums, up), grid))
            vals = min(fits, key=T)
        else:
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, restart]))
            vals = np.sort(rng.choice(grid, size=m))
            if isinstance(cls, Nonincreasing) or (not isinstance(cls, Nondecreasing) and rng.random() < 0.5):
                vals = vals[::-1].copy()
        t = T(vals)
        for _ in range(cfg.max_sweeps):
            improved = False
            # Single-coordinate moves.
            for j in range(m):
                best_local = (t, None)
                for v in grid:
                    if v == vals[j]:
                        continue
                    trial = vals.copy()
                    trial[j] = v
                    if member(trial):
                        tt = T(trial)
                        if tt < best_local[0]:
                            best_local = (tt, trial)
                if best_local[1] is not None:
                    t, vals, improved = best_local[0], best_local[1], True
            # Whole-block moves.
            for s, e in tie_groups(vals):
                best_local = (t, None)
                for v in grid:
                    if v == vals[s]:
                        continue
                    trial = vals.copy()
                    trial[s:e] = v
                    if member(trial):
                        tt = T(trial)
                        if tt < best_local[0]:
                            best_local = (tt, trial)
                if best_local[1] is not None:
                    t, vals, improved = best_local[0], best_local[1], True
            if not improved:
                break
        if t < best_t:
            best_vals, best_t = vals, t
    return grp.expand(best_vals), f"LocalSearch(restarts={cfg.restarts}, max_sweeps={cfg.max_sweeps}) over {cls.describe()}"


def minimize_T(cls: ShapeClass, design: Design, y, cfg: SieveConfig | None = None) -> EstimateResult:
    """Approximate minimizer of ``f -> sup_T(cls, f)`` over a sieve chosen by ``cfg``."""
    cfg = cfg or SieveConfig()
    yv = _yvec(y, design)
    if isinstance(cls, FixedPartitionConstant):
        res = regressogram(cls, design, yv)
        return EstimateResult(res.fhat, res.t_value, 0.0, res.sieve_descriptor, cfg.seed)
    if isinstance(cls, LinearSpan1D):
        res = linear_span_1d(cls.f0, design, yv)
        return EstimateResult(res.fhat, res.t_value, 0.0, res.sieve_descriptor, cfg.seed, extras=res.extras)
    if isinstance(cls, SingleIndexMonotone):
        if cfg.strategy != "AngleGrid":
            raise RefusalError("the single-index class requires the AngleGrid strategy")
        return single_index_estimate(design, yv, cfg, cls)
    if design.dim != 1:
        raise StructuralError("this class needs a 1-D design")
    if cfg.strategy == "ExactTiny":
        f, desc = _exact_tiny(cls, design, yv, cfg)
    elif cfg.strategy == "RegressogramDP":
        f, desc = _regressogram_dp(cls, design, yv, cfg)
    elif cfg.strategy == "LocalSearch":
        f, desc = _local_search(cls, design, yv, cfg)
    else:
        raise RefusalError("AngleGrid applies to the single-index class only")
    return _certify(cls, design, yv, f, desc, cfg.seed)


# ---------------------------------------------------------------------------
# Single index
# ---------------------------------------------------------------------------


def single_index_estimate(design: Design, y, cfg: SieveConfig | None = None, cls: SingleIndexMonotone | None = None) -> EstimateResult:
    """Monotone single-index fit over a uniform grid of directions (planar designs).

    For every distinct projection order, monotone link fits in both directions
    become candidates. All candidates are certified by the full sup-oracle when
    ``n <= 8``; otherwise the ``cfg.refine`` best by their one-dimensional
    statistic are.
    """
    cfg = cfg or SieveConfig(strategy="AngleGrid")
    if design.dim != 2:
        raise RefusalError("single-index estimation is implemented for planar designs only")
    if design.n < 2:
        raise StructuralError("need at least two points")
    cls = cls or SingleIndexMonotone(2, cfg.n_directions)
    yv = _yvec(y, design)
    seen = set()
    cands = []  # (surrogate, order index, theta, f)
    for j, theta in enumerate(cls.directions()):
        z = design.points @ theta
        order = np.argsort(z, kind="stable")
        zs = z[order]
        key = order.tobytes() + (zs[1:] == zs[:-1]).tobytes()
        if key in seen:
            continue
        seen.add(key)
        d1 = Design(zs)
        ys = yv[order]
        fits = []
        for one_dim in (Nondecreasing(), Nonincreasing()):
            if d1.n <= EXACT_TINY_MAX_N:
                fs, _ = _exact_tiny(one_dim, d1, ys, cfg)
            else:
                grp = _Grouped.build(d1, ys)
                fs = grp.expand(_pava(grp.sizes, grp.ysums, isinstance(one_dim, Nondecreasing)))
            surrogate = sup_T(MonotoneEither(), d1, ys, fs).value
            f = np.empty(design.n)
            f[order] = fs
            fits.append((surrogate, len(cands) + len(fits), tuple(theta), f))
        cands.extend(fits)
    if design.n > EXACT_TINY_MAX_N:
        cands = sorted(cands, key=lambda c: (c[0], c[1]))[: cfg.refine]
    best = None
    for surrogate, idx, theta, f in cands:
        t = sup_T(cls, design, yv, f).value
        if best is None or t < best[0]:
            best = (t, theta, f)
    t, theta, f = best
    desc = f"AngleGrid({cls.n_directions} directions, refine={cfg.refine}) over {cls.describe()}"
    return EstimateResult(FunctionOnDesign(f, cls), t, 0.0, desc, cfg.seed, theta)
