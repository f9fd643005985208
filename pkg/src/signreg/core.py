"""Fixed-design data model, losses and moment summaries."""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import StructuralError

__all__ = [
    "Design",
    "FunctionOnDesign",
    "MomentProfile",
    "Observations",
    "as_values",
    "ell_s_loss",
    "load_csv",
    "sigma_p",
    "tie_groups",
]


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def tie_groups(points: np.ndarray) -> list[tuple[int, int]]:
    """Half-open index ranges of runs of equal abscissas in a sorted 1-D design."""
    n = len(points)
    groups: list[tuple[int, int]] = []
    start = 0
    for i in range(1, n + 1):
        if i == n or points[i] != points[start]:
            groups.append((start, i))
            start = i
    return groups


@dataclass(frozen=True)
class Design:
    """Ordered design points.

    A 1-D design must be sorted nondecreasingly; duplicates are kept as distinct
    indices. Passing an ``(n, m)`` array gives an m-dimensional design (used by
    the single-index model), for which no ordering is imposed.
    """

    points: np.ndarray
    domain: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim not in (1, 2):
            raise StructuralError("design points must be a vector or an (n, m) array")
        if pts.shape[0] < 1:
            raise StructuralError("a design needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise StructuralError("design points must be finite")
        if pts.ndim == 1 and np.any(np.diff(pts) < 0):
            raise StructuralError("1-D design points must be sorted nondecreasingly")
        if self.domain is not None:
            lo, hi = float(self.domain[0]), float(self.domain[1])
            if not lo <= hi:
                raise StructuralError("domain must be an interval lo <= hi")
            if pts.ndim == 1 and (pts[0] < lo or pts[-1] > hi):
                raise StructuralError("design points fall outside the domain")
            object.__setattr__(self, "domain", (lo, hi))
        object.__setattr__(self, "points", _frozen(pts))

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return 1 if self.points.ndim == 1 else int(self.points.shape[1])

    def groups(self) -> list[tuple[int, int]]:
        """Runs of tied abscissas (1-D designs only)."""
        if self.dim != 1:
            raise StructuralError("tie groups are defined for 1-D designs only")
        return tie_groups(self.points)

    @classmethod
    def equispaced(cls, n: int, a: float = 0.0, b: float = 1.0) -> Design:
        """Points ``a + (b - a) i / n`` for ``i = 1..n``."""
        if n < 1:
            raise StructuralError("n must be positive")
        return cls(a + (b - a) * np.arange(1, n + 1) / n, (a, b))


@dataclass(frozen=True)
class Observations:
    y: np.ndarray

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1:
            raise StructuralError("responses must be a vector")
        object.__setattr__(self, "y", _frozen(y))

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    def check_aligned(self, design: Design) -> None:
        if self.n != design.n:
            raise StructuralError(f"{self.n} responses for {design.n} design points")


@dataclass(frozen=True)
class FunctionOnDesign:
    """A candidate function represented by its values on the design.

    ``class_tag`` is informational; membership is checked by the shape classes
    in :mod:`signreg.classes` because it may depend on the design.
    """

    values: np.ndarray
    class_tag: Any = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise StructuralError("function values must be a vector")
        object.__setattr__(self, "values", _frozen(v))

    def __len__(self) -> int:
        return int(self.values.shape[0])


def as_values(obj: FunctionOnDesign | Observations | Sequence[float] | np.ndarray) -> np.ndarray:
    """Return a float vector view of a function, observation set or sequence."""
    if isinstance(obj, FunctionOnDesign):
        return obj.values
    if isinstance(obj, Observations):
        return obj.y
    arr = np.asarray(obj, dtype=float)
    if arr.ndim != 1:
        raise StructuralError("expected a vector of values")
    return arr


@dataclass(frozen=True)
class MomentProfile:
    """Per-point absolute moments ``E|xi_i|^p`` at a fixed order ``p`` in [1, 2]."""

    p: float
    per_point_abs_moments: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self) -> None:
        if not 1.0 <= float(self.p) <= 2.0:
            raise StructuralError("moment order p must lie in [1, 2]")
        m = np.asarray(self.per_point_abs_moments, dtype=float)
        if m.ndim != 1 or m.size == 0:
            raise StructuralError("moments must be a nonempty vector")
        if np.any(np.isnan(m)) or np.any(m < 0):
            raise StructuralError("moments must be nonnegative (+inf allowed)")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "per_point_abs_moments", _frozen(m))

    @classmethod
    def from_sample(cls, p: float, errors: Iterable[float]) -> MomentProfile:
        """Profile whose entries are ``|xi_i|^p`` for an observed error vector."""
        e = np.abs(np.asarray(list(errors), dtype=float))
        return cls(p, e**p)


def ell_s_loss(f: Any, g: Any, s: float = 1.0) -> float:
    """Power-mean distance ``[mean |f_i - g_i|^s]^(1/s)`` between two value vectors."""
    fv, gv = as_values(f), as_values(g)
    if fv.shape != gv.shape:
        raise StructuralError(f"length mismatch: {fv.shape[0]} vs {gv.shape[0]}")
    if not s >= 1.0:
        raise StructuralError("loss exponent s must be >= 1")
    d = np.abs(fv - gv)
    if s == 1.0:
        return math.fsum(d) / d.size
    scale = float(d.max()) if d.size else 0.0
    if scale == 0.0:
        return 0.0
    # Factor out the max to avoid overflow for large s.
    return scale * (math.fsum((d / scale) ** s) / d.size) ** (1.0 / s)


def sigma_p(profile: MomentProfile) -> float:
    """``(mean E|xi_i|^p)^(1/p)``; infinite as soon as one moment is infinite."""
    m = profile.per_point_abs_moments
    if np.any(np.isinf(m)):
        return math.inf
    return (math.fsum(m) / m.size) ** (1.0 / profile.p)


def load_csv(path: str | Path) -> tuple[Design, Observations]:
    """Read a UTF-8 CSV with header ``x,y``.

    Rows are sorted by ``x`` (stable) so the resulting design is ordered; the
    response column follows the same permutation.
    """
    xs: list[float] = []
    ys: list[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames[:2]] != ["x", "y"]:
            raise StructuralError("CSV header must start with columns x,y")
        for lineno, row in enumerate(reader, start=2):
            try:
                xs.append(float(row["x"]))
                ys.append(float(row["y"]))
            except (TypeError, ValueError) as exc:
                raise StructuralError(f"line {lineno}: cannot parse numbers") from exc
    if not xs:
        raise StructuralError("CSV contains no data rows")
    order = np.argsort(np.asarray(xs), kind="stable")
    return Design(np.asarray(xs)[order]), Observations(np.asarray(ys)[order])
