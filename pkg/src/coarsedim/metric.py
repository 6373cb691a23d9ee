"""Finite metric spaces, scale-connected components and covers.

Distances are exact rationals stored as an integer matrix over a common
denominator, so that every comparison against a scale is an integer
comparison.  A chain at scale ``s`` takes steps of distance strictly
below ``s``; ties at distance exactly ``s`` never join components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InvalidArgumentError,
    InvalidCoverError,
    ResourceBudgetError,
)
from .rationals import format_rational, frac, parse_rational

_TRIANGLE_CHECK_LIMIT = 800
_DEN_LIMIT = 1 << 62


class UnionFind:
    """Disjoint sets with union by rank and path compression."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True

    def groups(self) -> list[list[int]]:
        by_root: dict[int, list[int]] = {}
        for i in range(len(self.parent)):
            by_root.setdefault(self.find(i), []).append(i)
        return [by_root[r] for r in sorted(by_root, key=lambda r: by_root[r][0])]


def _strict_threshold(scale: Fraction, denominator: int) -> int:
    """Smallest integer t with:  num < t  <=>  num/denominator < scale."""
    bound = scale * denominator
    if bound.denominator == 1:
        return int(bound)
    return math.floor(bound) + 1


class FiniteMetricSpace:
    """A finite point set with an exact, symmetric distance table.

    ``dist`` may be a mapping keyed by point pairs (either orientation) or a
    callable ``dist(x, y)``; values must be exact rationals.  Internally the
    table is an integer numpy matrix over a single common denominator.

    ``validate`` levels:

    * ``True`` - positivity, symmetry and the full triangle inequality
      (the triangle scan is cubic and refuses spaces above
      ``800`` points; pass ``"basic"`` there).
    * ``"basic"`` - positivity and symmetry only.
    * ``False`` - trust the caller entirely.
    """

    __slots__ = ("_points", "_index", "_num", "_den")

    def __init__(self, points: Sequence[Hashable], dist, *, validate=True):
        pts = tuple(points)
        if len(set(pts)) != len(pts):
            raise InvalidArgumentError("points must be distinct")
        self._points = pts
        self._index = {p: i for i, p in enumerate(pts)}
        n = len(pts)

        pair_values: dict[tuple[int, int], Fraction] = {}
        if isinstance(dist, Mapping):
            lookup = {}
            for (a, b), v in dist.items():
                lookup[(a, b)] = frac(v)
            for i in range(n):
                for j in range(i + 1, n):
                    key = (pts[i], pts[j])
                    rkey = (pts[j], pts[i])
                    if key in lookup:
                        v = lookup[key]
                        if rkey in lookup and lookup[rkey] != v:
                            raise InvalidArgumentError(
                                f"asymmetric table entry for {key}"
                            )
                    elif rkey in lookup:
                        v = lookup[rkey]
                    else:
                        raise InvalidArgumentError(f"missing distance for {key}")
                    pair_values[(i, j)] = v
        elif callable(dist):
            for i in range(n):
                for j in range(i + 1, n):
                    pair_values[(i, j)] = frac(dist(pts[i], pts[j]))
                    if validate is True:
                        back = frac(dist(pts[j], pts[i]))
                        if back != pair_values[(i, j)]:
                            raise InvalidArgumentError(
                                f"dist({pts[j]!r}, {pts[i]!r}) breaks symmetry"
                            )
        else:
            raise InvalidArgumentError("dist must be a mapping or callable")

        den = 1
        for v in pair_values.values():
            den = den * v.denominator // math.gcd(den, v.denominator)
            if den > _DEN_LIMIT:
                raise InvalidArgumentError(
                    "common denominator of distances exceeds the exact int64 range"
                )
        num = np.zeros((n, n), dtype=np.int64)
        for (i, j), v in pair_values.items():
            scaled = v.numerator * (den // v.denominator)
            num[i, j] = scaled
            num[j, i] = scaled
        self._num = num
        self._den = den
        if validate:
            self._validate(full=(validate is True))

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_matrix(
        cls,
        points: Sequence[Hashable],
        numerators: np.ndarray,
        denominator: int = 1,
        *,
        validate="basic",
    ) -> "FiniteMetricSpace":
        """Wrap a precomputed integer distance matrix (num / denominator)."""
        space = cls.__new__(cls)
        pts = tuple(points)
        if len(set(pts)) != len(pts):
            raise InvalidArgumentError("points must be distinct")
        mat = np.asarray(numerators)
        if mat.shape != (len(pts), len(pts)):
            raise InvalidArgumentError("matrix shape does not match point count")
        if denominator <= 0:
            raise InvalidArgumentError("denominator must be positive")
        space._points = pts
        space._index = {p: i for i, p in enumerate(pts)}
        space._num = mat
        space._den = int(denominator)
        if validate:
            space._validate(full=(validate is True))
        return space

    def _validate(self, *, full: bool) -> None:
        n = len(self._points)
        if np.any(np.diagonal(self._num) != 0):
            raise InvalidArgumentError("dist(x, x) must be 0")
        if not np.array_equal(self._num, self._num.T):
            raise InvalidArgumentError("distance matrix must be symmetric")
        off = self._num[~np.eye(n, dtype=bool)] if n else self._num
        if n > 1 and np.any(off <= 0):
            raise InvalidArgumentError("dist(x, y) must be positive for x != y")
        if full:
            if n > _TRIANGLE_CHECK_LIMIT:
                raise ResourceBudgetError(
                    f"triangle validation is cubic; {n} points exceeds the "
                    f"{_TRIANGLE_CHECK_LIMIT}-point budget (use validate='basic')"
                )
            m = self._num
            for k in range(n):
                if np.any(m > m[:, k : k + 1] + m[k : k + 1, :]):
                    bad = np.argwhere(m > m[:, k : k + 1] + m[k : k + 1, :])[0]
                    i, j = int(bad[0]), int(bad[1])
                    raise InvalidArgumentError(
                        f"triangle inequality fails for "
                        f"({self._points[i]!r}, {self._points[j]!r}, {self._points[k]!r})"
                    )

    # -- basic queries ---------------------------------------------------------

    @property
    def points(self) -> tuple:
        return self._points

    @property
    def denominator(self) -> int:
        return self._den

    @property
    def numerators(self) -> np.ndarray:
        """Integer distance matrix; ``distance = numerators / denominator``."""
        return self._num

    def __len__(self) -> int:
        return len(self._points)

    def __contains__(self, point) -> bool:
        return point in self._index

    def index(self, point) -> int:
        try:
            return self._index[point]
        except KeyError:
            raise InvalidArgumentError(f"unknown point {point!r}") from None

    def distance(self, x, y) -> Fraction:
        return Fraction(int(self._num[self.index(x), self.index(y)]), self._den)

    def diameter(self) -> Fraction:
        if len(self._points) < 2:
            return Fraction(0)
        return Fraction(int(self._num.max()), self._den)

    def subspace(self, points: Iterable[Hashable]) -> "FiniteMetricSpace":
        pts = tuple(points)
        idx = [self.index(p) for p in pts]
        return FiniteMetricSpace.from_matrix(
            pts, self._num[np.ix_(idx, idx)], self._den, validate=False
        )

    # -- serialization ---------------------------------------------------------

    def to_text(self) -> str:
        """Header ``points N`` then ``i j num/den`` for every pair i < j."""
        n = len(self._points)
        lines = [f"points {n}"]
        for i in range(n):
            for j in range(i + 1, n):
                value = Fraction(int(self._num[i, j]), self._den)
                lines.append(f"{i} {j} {format_rational(value)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FiniteMetricSpace":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("points "):
            raise InvalidArgumentError("expected 'points N' header")
        n = int(lines[0].split()[1])
        table: dict[tuple[int, int], Fraction] = {}
        for ln in lines[1:]:
            i_s, j_s, val = ln.split()
            table[(int(i_s), int(j_s))] = parse_rational(val)
        return cls(range(n), table)


@dataclass(frozen=True)
class ScaleChain:
    """An ordered walk whose consecutive steps are strictly below ``scale``."""

    scale: Fraction
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "scale", frac(self.scale))
        object.__setattr__(self, "points", tuple(self.points))
        if self.scale <= 0:
            raise InvalidArgumentError("chain scale must be positive")

    def validate(self, space: FiniteMetricSpace) -> None:
        for a, b in zip(self.points, self.points[1:]):
            if space.distance(a, b) >= self.scale:
                raise InvalidArgumentError(
                    f"chain step ({a!r}, {b!r}) has distance "
                    f"{space.distance(a, b)} >= scale {self.scale}"
                )


@dataclass(frozen=True)
class Cover:
    """A family of ``n + 1`` point classes intended to cover a space.

    Classes may overlap.  Coverage is only checkable against a concrete
    ambient point set, see :meth:`validate_covers`.
    """

    classes: tuple
    n: int

    def __post_init__(self):
        object.__setattr__(
            self, "classes", tuple(tuple(c) for c in self.classes)
        )
        if len(self.classes) != self.n + 1:
            raise InvalidCoverError(
                message=f"expected {self.n + 1} classes, got {len(self.classes)}"
            )

    def validate_covers(self, points: Iterable[Hashable]) -> None:
        covered = set()
        for cls_points in self.classes:
            covered.update(cls_points)
        for p in points:
            if p not in covered:
                raise InvalidCoverError(p)


def scale_components(
    space: FiniteMetricSpace, subset: Iterable[Hashable], scale
) -> list[list]:
    """Partition ``subset`` into its scale-connected components.

    Two points land in the same part exactly when a chain inside ``subset``
    with steps of distance strictly below ``scale`` joins them (equivalent to
    union-find over all pairs below the scale).  An empty subset yields an
    empty partition.  Parts and their members follow the ambient point order.
    """
    scale = frac(scale)
    if scale <= 0:
        raise InvalidArgumentError("scale must be positive")
    idx_list = sorted({space.index(p) for p in subset})
    if not idx_list:
        return []
    idx = np.asarray(idx_list, dtype=np.intp)
    sub = space.numerators[np.ix_(idx, idx)]
    threshold = _strict_threshold(scale, space.denominator)
    adjacency = sub < threshold
    m = len(idx_list)

    visited = np.zeros(m, dtype=bool)
    parts: list[list] = []
    for seed in range(m):
        if visited[seed]:
            continue
        member = np.zeros(m, dtype=bool)
        member[seed] = True
        frontier = np.asarray([seed], dtype=np.intp)
        while frontier.size:
            reach = adjacency[frontier].any(axis=0)
            fresh = reach & ~member
            member |= fresh
            frontier = np.flatnonzero(fresh)
        visited |= member
        parts.append([space.points[idx_list[i]] for i in np.flatnonzero(member)])
    return parts


def component_diameter_bound(
    space: FiniteMetricSpace, cover: Cover, scale
) -> Fraction:
    """Exact maximum diameter of any scale-component of any cover class.

    This is the pointwise least value a control function must dominate at
    this scale for this cover.
    """
    cover.validate_covers(space.points)
    best = 0
    for cls_points in cover.classes:
        for part in scale_components(space, cls_points, scale):
            if len(part) < 2:
                continue
            idx = np.asarray([space.index(p) for p in part], dtype=np.intp)
            local = int(space.numerators[np.ix_(idx, idx)].max())
            best = max(best, local)
    return Fraction(best, space.denominator)


@dataclass(frozen=True)
class ControlCheckEntry:
    scale: Fraction
    measured: Fraction
    allowed: Fraction | float
    passed: bool


@dataclass(frozen=True)
class ControlFunctionReport:
    entries: tuple[ControlCheckEntry, ...]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)


def verify_control_function(
    space: FiniteMetricSpace,
    control,
    n: int,
    cover_provider: Callable[[Fraction], Cover],
    scales: Iterable,
) -> ControlFunctionReport:
    """Check ``control`` dominates component diameters of provided covers.

    For each scale the provider must yield an ``(n + 1)``-class cover of the
    space; the scale passes when the exact component diameter bound is at
    most ``control(scale)``.
    """
    entries = []
    for raw in scales:
        s = frac(raw)
        cover = cover_provider(s)
        if cover.n != n:
            raise InvalidCoverError(
                message=f"cover at scale {s} has {cover.n + 1} classes, "
                f"expected {n + 1}"
            )
        measured = component_diameter_bound(space, cover, s)
        allowed = control(s)
        entries.append(
            ControlCheckEntry(s, measured, allowed, measured <= allowed)
        )
    return ControlFunctionReport(tuple(entries))
