"""Shape classes of candidate regression functions and their membership tests.

Membership is decided on the design: two indices sharing an abscissa must carry
the same value, since every class member is a function of ``x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .core import Design, as_values
from .errors import ContractError, StructuralError

__all__ = [
    "FixedPartitionConstant",
    "LinearSpan1D",
    "MonotoneEither",
    "Nondecreasing",
    "Nonincreasing",
    "PiecewiseMonotone",
    "PiecewiseMonotoneConvexConcave",
    "ShapeClass",
    "SingleIndexMonotone",
    "group_values",
    "min_convex_concave_pieces",
    "min_monotone_pieces",
    "parse_blocks",
]


def group_values(values: np.ndarray, groups: list[tuple[int, int]]) -> np.ndarray | None:
    """One value per tie group, or ``None`` when a group carries distinct values."""
    out = np.empty(len(groups))
    for j, (a, b) in enumerate(groups):
        if np.any(values[a:b] != values[a]):
            return None
        out[j] = values[a]
    return out


def min_monotone_pieces(seq: np.ndarray) -> int:
    """Fewest contiguous runs, each monotone in some direction, covering ``seq``.

    Greedy extension is optimal because every contiguous sub-run of a monotone
    run is monotone.
    """
    m = len(seq)
    if m == 0:
        return 0
    pieces, i = 0, 0
    while i < m:
        pieces += 1
        direction = 0
        j = i + 1
        while j < m:
            d = float(seq[j] - seq[j - 1])
            step = (d > 0) - (d < 0)
            if step != 0:
                if direction == 0:
                    direction = step
                elif step != direction:
                    break
            j += 1
        i = j
    return pieces


def _run_ok_convex_concave(xs: np.ndarray, vs: np.ndarray, tol: float) -> bool:
    if len(vs) <= 2:
        return True
    dv = np.diff(vs)
    if not (np.all(dv >= -tol) or np.all(dv <= tol)):
        return False
    slopes = dv / np.diff(xs)
    ds = np.diff(slopes)
    scale = tol * (1.0 + float(np.max(np.abs(slopes))))
    return bool(np.all(ds >= -scale) or np.all(ds <= scale))


def min_convex_concave_pieces(xs: np.ndarray, vs: np.ndarray, tol: float = 1e-12) -> int:
    """Fewest contiguous runs on which the points are monotone and convex or concave."""
    m = len(vs)
    pieces, i = 0, 0
    while i < m:
        pieces += 1
        j = i + 1
        while j < m and _run_ok_convex_concave(xs[i : j + 1], vs[i : j + 1], tol):
            j += 1
        i = j
    return pieces


@dataclass(frozen=True)
class ShapeClass:
    """Base class; subclasses implement :meth:`contains`."""

    name: ClassVar[str] = "abstract"

    def contains(self, f, design: Design) -> bool:  # pragma: no cover - abstract
        raise NotImplementedError

    def check(self, f, design: Design) -> np.ndarray:
        """Return the value vector or raise :class:`ContractError`."""
        v = as_values(f)
        if v.shape[0] != design.n:
            raise StructuralError(f"function has {v.shape[0]} values for {design.n} points")
        if not self.contains(v, design):
            raise ContractError(f"function is not a member of class {self.describe()}")
        return v

    def describe(self) -> str:
        return self.name

    def _grouped(self, f, design: Design) -> np.ndarray | None:
        v = as_values(f)
        if design.dim != 1 or v.shape[0] != design.n:
            return None
        return group_values(v, design.groups())


@dataclass(frozen=True)
class Nondecreasing(ShapeClass):
    name: ClassVar[str] = "nondecreasing"

    def contains(self, f, design):
        g = self._grouped(f, design)
        return g is not None and bool(np.all(np.diff(g) >= 0))


@dataclass(frozen=True)
class Nonincreasing(ShapeClass):
    name: ClassVar[str] = "nonincreasing"

    def contains(self, f, design):
        g = self._grouped(f, design)
        return g is not None and bool(np.all(np.diff(g) <= 0))


@dataclass(frozen=True)
class MonotoneEither(ShapeClass):
    """Monotone functions, either direction."""

    name: ClassVar[str] = "monotone"

    def contains(self, f, design):
        g = self._grouped(f, design)
        if g is None:
            return False
        d = np.diff(g)
        return bool(np.all(d >= 0) or np.all(d <= 0))


@dataclass(frozen=True)
class PiecewiseMonotone(ShapeClass):
    """Functions monotone on each cell of a partition into at most ``k`` intervals."""

    k: int = 1
    name: ClassVar[str] = "piecewise-monotone"

    def __post_init__(self):
        if int(self.k) < 1:
            raise StructuralError("k must be >= 1")

    def contains(self, f, design):
        g = self._grouped(f, design)
        return g is not None and min_monotone_pieces(g) <= self.k

    def describe(self):
        return f"{self.name}(k={self.k})"


@dataclass(frozen=True)
class PiecewiseMonotoneConvexConcave(ShapeClass):
    """Design-level test: at most ``k`` runs, each monotone and convex or concave.

    Continuity across runs is not checked on the design.
    """

    k: int = 1
    name: ClassVar[str] = "piecewise-monotone-convex-concave"

    def __post_init__(self):
        if int(self.k) < 1:
            raise StructuralError("k must be >= 1")

    def contains(self, f, design):
        g = self._grouped(f, design)
        if g is None:
            return False
        xs = np.array([design.points[a] for a, _ in design.groups()])
        return min_convex_concave_pieces(xs, g) <= self.k

    def describe(self):
        return f"{self.name}(k={self.k})"


def parse_blocks(config: str, n: int | None = None) -> tuple[tuple[int, int], ...]:
    """Parse ``"1-2,3"`` (1-based, inclusive) into half-open 0-based index blocks."""
    blocks = []
    for part in config.split(","):
        part = part.strip()
        if not part:
            raise StructuralError(f"empty block in {config!r}")
        try:
            if "-" in part:
                lo, hi = (int(t) for t in part.split("-", 1))
            else:
                lo = hi = int(part)
        except ValueError as exc:
            raise StructuralError(f"cannot parse block {part!r}") from exc
        blocks.append((lo - 1, hi))
    out = tuple(blocks)
    FixedPartitionConstant(out).validate(n if n is not None else out[-1][1])
    return out


@dataclass(frozen=True)
class FixedPartitionConstant(ShapeClass):
    """Functions constant on each block of a fixed contiguous index partition.

    ``blocks`` are half-open, 0-based ``(start, stop)`` pairs.
    """

    blocks: tuple[tuple[int, int], ...] = ()
    name: ClassVar[str] = "fixed-partition"

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple((int(a), int(b)) for a, b in self.blocks))

    def validate(self, n: int, design: Design | None = None) -> None:
        expected = 0
        for a, b in self.blocks:
            if a != expected:
                raise StructuralError("blocks must be contiguous and start at index 0")
            if b <= a:
                raise StructuralError("every block must be nonempty")
            expected = b
        if expected != n:
            raise StructuralError(f"blocks cover {expected} indices, expected {n}")
        if design is not None and design.dim == 1:
            pts = design.points
            for a, _ in self.blocks[1:]:
                if pts[a] == pts[a - 1]:
                    raise StructuralError("a block boundary splits tied abscissas")

    def contains(self, f, design):
        v = as_values(f)
        self.validate(v.shape[0], design)
        return all(bool(np.all(v[a:b] == v[a])) for a, b in self.blocks)

    def describe(self):
        return f"{self.name}({len(self.blocks)} blocks)"


@dataclass(frozen=True)
class LinearSpan1D(ShapeClass):
    """Multiples ``a * f0`` of a fixed vector."""

    f0: tuple[float, ...] = ()
    rtol: float = 1e-12
    name: ClassVar[str] = "linear-span"

    def __post_init__(self):
        f0 = tuple(float(t) for t in self.f0)
        if not f0 or all(t == 0.0 for t in f0):
            raise ContractError("f0 must not vanish on the whole design")
        object.__setattr__(self, "f0", f0)

    @property
    def f0_array(self) -> np.ndarray:
        return np.asarray(self.f0)

    def coefficient(self, f) -> float:
        v, f0 = as_values(f), self.f0_array
        return float(np.dot(v, f0) / np.dot(f0, f0))

    def contains(self, f, design):
        v, f0 = as_values(f), self.f0_array
        if v.shape != f0.shape:
            return False
        a = self.coefficient(v)
        scale = max(1.0, float(np.max(np.abs(v))))
        return bool(np.all(np.abs(v - a * f0) <= self.rtol * scale)) and bool(np.all(v[f0 == 0] == 0))


@dataclass(frozen=True)
class SingleIndexMonotone(ShapeClass):
    """``x -> phi(<theta, x>)`` with monotone ``phi``; ``theta`` restricted to an angle grid.

    Only planar designs (``m = 2``) are supported. Directions are the angles
    ``pi * j / n_directions``; both link directions are allowed, so the grid
    covers the full circle.
    """

    m: int = 2
    n_directions: int = 720
    name: ClassVar[str] = "single-index"

    def __post_init__(self):
        if self.m != 2:
            from .errors import RefusalError

            raise RefusalError("single-index class is implemented for m = 2 only")
        if self.n_directions < 1:
            raise StructuralError("n_directions must be positive")

    def directions(self) -> np.ndarray:
        ang = math.pi * np.arange(self.n_directions) / self.n_directions
        return np.column_stack([np.cos(ang), np.sin(ang)])

    def contains(self, f, design):
        v = as_values(f)
        if design.dim != 2 or v.shape[0] != design.n:
            return False
        for theta in self.directions():
            z = design.points @ theta
            order = np.argsort(z, kind="stable")
            zs, vs = z[order], v[order]
            same = zs[1:] == zs[:-1]
            if np.any(vs[1:][same] != vs[:-1][same]):
                continue
            d = np.diff(vs)
            if np.all(d >= 0) or np.all(d <= 0):
                return True
        return False

    def describe(self):
        return f"{self.name}(m={self.m}, {self.n_directions} directions)"
