"""Random instance generators and the oracle-equivalence suites behind ``signreg selftest``."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .classes import (
    FixedPartitionConstant,
    LinearSpan1D,
    MonotoneEither,
    Nondecreasing,
    PiecewiseMonotone,
    ShapeClass,
)
from .core import Design
from .estimators import SieveConfig, minimize_T
from .signtest import brute_force_sup_T, lambda_mean, sup_T, t_statistic

__all__ = ["SUP_CLASS_KINDS", "random_design", "random_sup_instance", "run_selftest", "sandwich_holds", "sup_instance_agrees"]

SUP_CLASS_KINDS = ("nondecreasing", "monotone", "piecewise-monotone-2", "fixed-partition", "linear-span")


def random_design(n: int, rng: np.random.Generator) -> Design:
    """Equispaced integers or a sorted draw with ties, each with probability 1/2."""
    if rng.random() < 0.5:
        return Design(np.sort(rng.integers(0, n, n)).astype(float))
    return Design(np.arange(n, dtype=float))


def _expand(design: Design, per_group: np.ndarray) -> np.ndarray:
    out = np.empty(design.n)
    for (a, b), v in zip(design.groups(), per_group):
        out[a:b] = v
    return out


def random_sup_instance(kind: str, rng: np.random.Generator, max_n: int = 8) -> tuple[ShapeClass, Design, np.ndarray, np.ndarray]:
    """``(class, design, y, f)`` with ``f`` a class member; half-integer values keep sums exact."""
    n = int(rng.integers(1, max_n + 1))
    design = random_design(n, rng)
    m = len(design.groups())
    v = rng.integers(-3, 4, m) * 0.5
    if kind == "nondecreasing":
        cls, f = Nondecreasing(), _expand(design, np.sort(v))
    elif kind == "monotone":
        cls, f = MonotoneEither(), _expand(design, np.sort(v) * (1 if rng.random() < 0.5 else -1))
    elif kind == "piecewise-monotone-2":
        c = int(rng.integers(0, m + 1))
        cls, f = PiecewiseMonotone(2), _expand(design, np.concatenate([np.sort(v[:c]), -np.sort(v[c:])]))
    elif kind == "fixed-partition":
        starts = [a for a, _ in design.groups()]
        cuts = sorted(set(rng.choice(starts, size=min(len(starts), 2), replace=False).tolist()) | {0})
        cls = FixedPartitionConstant(tuple(zip(cuts, cuts[1:] + [n])))
        f = np.empty(n)
        for a, b in cls.blocks:
            f[a:b] = rng.integers(-3, 4) * 0.5
    elif kind == "linear-span":
        f0 = rng.integers(-2, 3, n) * 1.0
        if not f0.any():
            f0[0] = 1.0
        cls = LinearSpan1D(tuple(f0))
        f = rng.integers(-2, 3) * 0.5 * cls.f0_array
    else:
        raise ValueError(f"unknown kind {kind!r}")
    y = rng.integers(-4, 5, n) * 0.25 if rng.random() < 0.7 else rng.normal(size=n)
    return cls, design, y, f


def sup_instance_agrees(cls, design, y, f) -> bool:
    """DP oracle value equals brute force and its witness is a member attaining it."""
    fast = sup_T(cls, design, y, f)
    slow = brute_force_sup_T(cls, design, y, f)
    return bool(
        fast.value == slow.value
        and fast.exact
        and cls.contains(fast.witness, design)
        and t_statistic(y, f, fast.witness) == fast.value
    )


def sandwich_holds(fstar, f, g) -> bool:
    """Both sandwich inequalities around ``lambda_mean``, checked in exact rational arithmetic.

    ``n l(u, v)`` is the exact sum of ``|u_i - v_i|``; the implementation's
    ``lambda_mean`` must equal the exact expectation.
    """
    fs, fv, gv = ([Fraction(float(t)) for t in vec] for vec in (fstar, f, g))

    def n_ell(u, v):
        return sum((abs(a - b) for a, b in zip(u, v)), Fraction(0))

    def sgn(t):
        return (t > 0) - (t < 0)

    lam_exact = sum(((a - s) * sgn(a - b) for a, b, s in zip(fv, gv, fs)), Fraction(0))
    lam = lambda_mean(np.asarray(fstar, float), np.asarray(f, float), np.asarray(g, float))
    lower_outer = n_ell(fs, fv) - 2 * n_ell(fs, gv)
    lower_inner = n_ell(fv, gv) - n_ell(fs, gv)
    upper = n_ell(fs, fv)
    return Fraction(lam) == lam_exact and lower_outer <= lower_inner <= lam_exact <= upper


def run_selftest(instances: int = 100, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    report = {}
    for kind in SUP_CLASS_KINDS:
        bad = sum(not sup_instance_agrees(*random_sup_instance(kind, rng)) for _ in range(instances))
        report[f"sup_oracle/{kind}"] = {"instances": instances, "failures": int(bad)}
    bad = 0
    for _ in range(instances):
        n = int(rng.integers(1, 51))
        fs, f, g = (rng.integers(-8, 9, n) / 8.0 for _ in range(3))
        bad += not sandwich_holds(fs, f, g)
    report["sandwich"] = {"instances": instances, "failures": int(bad)}
    bad = 0
    for _ in range(instances):
        cls, design, y, _ = random_sup_instance("fixed-partition", rng)
        res = minimize_T(cls, design, y, SieveConfig())
        means = np.concatenate([[math.fsum(y[a:b]) / (b - a)] * (b - a) for a, b in cls.blocks])
        bad += not (abs(res.t_value) <= 1e-10 and np.max(np.abs(res.fhat.values - means)) <= 1e-10)
    report["closed_form/regressogram"] = {"instances": instances, "failures": int(bad)}
    return report
