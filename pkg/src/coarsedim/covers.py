"""Colored covers of integer lattices and cyclic tori, plus dilated-cube
certificates.

The lattice construction tiles each axis with period (n+1)*s, keeps the
initial stretch of length n*s and diagonally shifts class j by j*s.  Per
axis the discarded margins of the n+1 classes partition the period, so a
point can fail at most one class per coordinate and always lands in some
class; margins of width s block chains at scale s, so every component sits
inside one kept cube.  The construction self-certifies the target ratio
2*(n+1) on the requested window and raises loudly when the window and
scale make that target unattainable, rather than returning an uncertified
cover.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CertificationError,
    InvalidArgumentError,
    ResourceBudgetError,
)
from .metric import Cover, FiniteMetricSpace, UnionFind
from .rationals import frac

_WINDOW_BUDGET = 200_000


def certified_lattice_ratio(n: int) -> Fraction:
    """Target component/scale ratio the lattice construction certifies."""
    return Fraction(2 * (n + 1))


def certified_torus_ratio(n: int) -> Fraction:
    """Reflection-extension ratio: 2^n * (lattice ratio + 1)."""
    return Fraction(2 ** n) * (certified_lattice_ratio(n) + 1)


def _l1(x: Sequence[int], y: Sequence[int]) -> int:
    return sum(abs(a - b) for a, b in zip(x, y))


@dataclass(frozen=True)
class LatticeCover:
    """A certified (n+1)-class cover of a finite window of the lattice."""

    dimension: int
    scale: Fraction
    cover: Cover
    ratio: Fraction
    max_component_diameter: Fraction
    period: Fraction
    kept_side: Fraction


def _lattice_class_of(point, n: int, s: Fraction) -> list[int]:
    period = (n + 1) * s
    kept = n * s
    classes = []
    for j in range(n + 1):
        if all((Fraction(c) - j * s) % period < kept for c in point):
            classes.append(j)
    return classes


def lattice_cover(n: int, scale, window: Sequence[Iterable[int]]) -> LatticeCover:
    """Build and certify the shifted-cube cover on a finite lattice window.

    ``window`` is one iterable of integer coordinates per axis.  Coverage
    and the component bound ratio * scale are confirmed exhaustively; a
    failed certificate raises :class:`CertificationError`.
    """
    if n < 1:
        raise InvalidArgumentError("dimension must be >= 1")
    s = frac(scale)
    if s <= 0:
        raise InvalidArgumentError("scale must be positive")
    axes = [sorted(set(int(c) for c in axis)) for axis in window]
    if len(axes) != n:
        raise InvalidArgumentError(f"window must supply {n} axes")
    total = 1
    for axis in axes:
        total *= len(axis)
    if total > _WINDOW_BUDGET:
        raise ResourceBudgetError(
            f"window has {total} points, beyond the {_WINDOW_BUDGET} "
            f"certification budget; certify subwindows instead"
        )
    points = list(itertools.product(*axes))

    classes: list[list[tuple]] = [[] for _ in range(n + 1)]
    for p in points:
        hits = _lattice_class_of(p, n, s)
        if not hits:
            raise CertificationError(
                f"construction bug: point {p} is uncovered at scale {s}"
            )
        for j in hits:
            classes[j].append(p)
    cover = Cover(tuple(tuple(c) for c in classes), n)

    ratio = certified_lattice_ratio(n)
    bound = ratio * s
    worst = Fraction(0)
    for cls_points in classes:
        for part in _l1_components(cls_points, s):
            if len(part) < 2:
                continue
            diam = max(
                _l1(a, b) for a, b in itertools.combinations(part, 2)
            )
            worst = max(worst, Fraction(diam))
            if worst > bound:
                raise CertificationError(
                    f"component of diameter {diam} exceeds "
                    f"{ratio} * {s} = {bound}; violating component: "
                    f"{sorted(part)[:8]}..."
                )
    return LatticeCover(n, s, cover, ratio, worst, (n + 1) * s, n * s)


def _l1_components(points: Sequence[tuple], s: Fraction) -> list[list[tuple]]:
    """Scale components under the l1 metric, via neighbor offsets below s."""
    if not points:
        return []
    index = {p: i for i, p in enumerate(points)}
    n = len(points[0])
    max_step = math.ceil(s) - 1  # largest integer strictly below s
    if max_step < 1:
        return [[p] for p in points]
    offsets = [
        off
        for off in itertools.product(range(-max_step, max_step + 1), repeat=n)
        if any(off) and sum(abs(c) for c in off) <= max_step
    ]
    uf = UnionFind(len(points))
    for p in points:
        i = index[p]
        for off in offsets:
            q = tuple(a + b for a, b in zip(p, off))
            j = index.get(q)
            if j is not None:
                uf.union(i, j)
    return [[points[i] for i in grp] for grp in uf.groups()]


# -- cyclic tori ---------------------------------------------------------------


def centered_residues(k: int) -> list[int]:
    """Z_k as centered representatives.

    Odd k gives {-r..r} with r = k // 2; even k gives {-(r-1)..r}, since r
    and -r would name the same element.
    """
    r = k // 2
    low = -r if k % 2 == 1 else -(r - 1)
    return list(range(low, r + 1))


def cyclic_distance(k: int, a: int, b: int) -> int:
    d = (a - b) % k
    return min(d, k - d)


class ZkTorus:
    """Z_k^n with the l1 sum of cyclic word metrics, on centered tuples."""

    def __init__(self, k: int, n: int):
        if k < 2:
            raise InvalidArgumentError("cyclic order must be >= 2")
        self.k = k
        self.n = n
        self.r = k // 2
        self.points = list(itertools.product(centered_residues(k), repeat=n))

    def distance(self, x: Sequence[int], y: Sequence[int]) -> int:
        return sum(cyclic_distance(self.k, a, b) for a, b in zip(x, y))

    def diameter(self) -> int:
        return self.n * (self.k // 2)

    def negate(self, value: int) -> int:
        lifted = (-value) % self.k
        return lifted if lifted <= self.r else lifted - self.k

    def reflect(self, x: Sequence[int], lam: frozenset) -> tuple:
        """The sign-flip automorphism: coordinate i keeps its sign when
        i (1-based) lies in lam and is negated otherwise."""
        return tuple(
            c if (i + 1) in lam else self.negate(c) for i, c in enumerate(x)
        )

    def residue_index(self, x: Sequence[int]) -> int:
        """Packed little-endian id of the tuple inside the product group."""
        idx = 0
        stride = 1
        for c in x:
            idx += (c % self.k) * stride
            stride *= self.k
        return idx

    def metric_space(self) -> FiniteMetricSpace:
        pts = self.points
        num = np.zeros((len(pts), len(pts)), dtype=np.int64)
        for i, x in enumerate(pts):
            for j in range(i + 1, len(pts)):
                d = self.distance(x, pts[j])
                num[i, j] = d
                num[j, i] = d
        return FiniteMetricSpace.from_matrix(
            [tuple(p) for p in pts], num, 1, validate=False
        )


@dataclass(frozen=True)
class ReflectionCover:
    """A certified cover of Z_k^n obtained by restricting a lattice cover to
    the nonnegative orthant and spreading it with the sign-flip maps."""

    k: int
    dimension: int
    scale: Fraction
    cover: Cover
    base_cover: Cover
    bound_ratio: Fraction
    max_component_diameter: Fraction


def reflection_cover(n: int, k: int, scale) -> ReflectionCover:
    """Cover Z_k^n with components certified below 2^n * (C'+1) * scale.

    The lattice cover restricted to {0..r}^n (where the torus metric
    coincides with l1) gives the base classes; a point belongs to class j
    when some sign flip sends it into base class j.  Certification scans
    every component of every class exhaustively.
    """
    if k <= 1:
        raise InvalidArgumentError("k must exceed 1")
    s = frac(scale)
    torus = ZkTorus(k, n)
    r = torus.r
    base = lattice_cover(n, s, [range(r + 1) for _ in range(n)])
    base_classes = [set(c) for c in base.cover.classes]

    lambdas = [
        frozenset(sub)
        for size in range(n + 1)
        for sub in itertools.combinations(range(1, n + 1), size)
    ]
    classes: list[list[tuple]] = [[] for _ in range(n + 1)]
    for x in torus.points:
        for j in range(n + 1):
            if any(torus.reflect(x, lam) in base_classes[j] for lam in lambdas):
                classes[j].append(tuple(x))
    cover = Cover(tuple(tuple(c) for c in classes), n)
    cover.validate_covers([tuple(p) for p in torus.points])

    ratio = certified_torus_ratio(n)
    bound = ratio * s
    worst = Fraction(0)
    for cls_points in classes:
        for part in _torus_components(torus, cls_points, s):
            if len(part) < 2:
                continue
            diam = max(
                torus.distance(a, b)
                for a, b in itertools.combinations(part, 2)
            )
            worst = max(worst, Fraction(diam))
            if worst > bound:
                raise CertificationError(
                    f"torus component of diameter {diam} exceeds "
                    f"{ratio} * {s} = {bound}: {sorted(part)[:8]}"
                )
    return ReflectionCover(k, n, s, cover, base.cover, ratio, worst)


def _torus_components(torus: ZkTorus, points: Sequence[tuple], s: Fraction):
    index = {p: i for i, p in enumerate(points)}
    uf = UnionFind(len(points))
    pts = list(points)
    for i, x in enumerate(pts):
        for j in range(i + 1, len(pts)):
            if torus.distance(x, pts[j]) < s:
                uf.union(i, j)
    return [[pts[i] for i in grp] for grp in uf.groups()]


def reflection_separation_gap(n: int, k: int, scale) -> Fraction | None:
    """Smallest distance between sign-flip images of distinct components of
    a base class; the reflection construction needs this to stay >= scale.
    Returns None when every base class has a single component (vacuous)."""
    s = frac(scale)
    torus = ZkTorus(k, n)
    r = torus.r
    base = lattice_cover(n, s, [range(r + 1) for _ in range(n)])
    lambdas = [
        frozenset(sub)
        for size in range(n + 1)
        for sub in itertools.combinations(range(1, n + 1), size)
    ]
    best = None
    for cls_points in base.cover.classes:
        parts = _l1_components(list(cls_points), s)
        for a in range(len(parts)):
            for b in range(a + 1, len(parts)):
                for lam1 in lambdas:
                    img1 = [torus.reflect(x, lam1) for x in parts[a]]
                    for lam2 in lambdas:
                        img2 = [torus.reflect(y, lam2) for y in parts[b]]
                        d = min(
                            torus.distance(x, y) for x in img1 for y in img2
                        )
                        best = d if best is None else min(best, d)
    return Fraction(best) if best is not None else None


# -- dilated cubes -------------------------------------------------------------


@dataclass(frozen=True)
class DilatedCube:
    """A grid map multiplying the l1 metric by an exact constant."""

    dimension: int
    side: int
    image: dict
    constant: Fraction

    def grid(self) -> list[tuple]:
        return list(
            itertools.product(range(self.side + 1), repeat=self.dimension)
        )


def verify_dilated_cube(cube: DilatedCube, distance) -> bool:
    """Exact dilation equation over all grid pairs: no tolerance, rationals
    on both sides."""
    pts = cube.grid()
    for x, y in itertools.combinations(pts, 2):
        expected = cube.constant * _l1(x, y)
        if frac(distance(cube.image[x], cube.image[y])) != expected:
            return False
    return True


class LatticeWindow:
    """A finite box in Z^n with the l1 metric (dilated-cube test bed)."""

    def __init__(self, n: int, extent: int):
        self.n = n
        self.extent = extent

    def distance(self, x, y) -> int:
        return _l1(x, y)


def find_dilated_cube(space, n: int, side: int) -> DilatedCube | None:
    """Search the family's constructive cube candidates.

    Direct-sum truncations of Z_{k_i}^n summands propose, per summand, the
    grid embedded into that summand's coordinates (dilation s_i); a torus
    proposes the identity embedding; a lattice window proposes the largest
    integer scaling that fits.  Each proposal is verified exactly; absence
    of any verified candidate yields ``None``.  There is no generic search
    over arbitrary maps.
    """
    if side < 1:
        raise InvalidArgumentError("cube side must be >= 1")
    for cube, distance in _cube_candidates(space, n, side):
        if verify_dilated_cube(cube, distance):
            return cube
    return None


def _cube_candidates(space, n: int, side: int):
    from .direct_sum import DirectSumTruncation  # cycle-free late import

    if isinstance(space, DirectSumTruncation):
        shapes = getattr(space, "zk_shapes", None)
        if shapes is None:
            return
        for i, (k, dim) in enumerate(shapes, start=1):
            if dim != n:
                continue
            stride = space.strides[i - 1]

            def embed(x, _stride=stride, _k=k):
                idx = 0
                unit = _stride
                for c in x:
                    idx += (c % _k) * unit
                    unit *= _k
                return int(idx)

            image = {
                x: embed(x)
                for x in itertools.product(range(side + 1), repeat=n)
            }
            cube = DilatedCube(n, side, image, space.scales.value(i))
            yield cube, space.distance_by_index
    elif isinstance(space, ZkTorus):
        if space.n == n:
            image = {
                x: tuple(
                    c if c <= space.r else c - space.k
                    for c in (v % space.k for v in x)
                )
                for x in itertools.product(range(side + 1), repeat=n)
            }
            cube = DilatedCube(n, side, image, Fraction(1))
            yield cube, space.distance
    elif isinstance(space, LatticeWindow):
        if space.n == n:
            step = max(1, space.extent // side)
            image = {
                x: tuple(step * c for c in x)
                for x in itertools.product(range(side + 1), repeat=n)
            }
            yield DilatedCube(n, side, image, Fraction(step)), space.distance


@dataclass(frozen=True)
class ProductFamily:
    """Z^lattice_dim x (direct sum truncation), with the sum metric."""

    lattice_dim: int
    truncation: object  # DirectSumTruncation

    def distance(self, x, y) -> Fraction:
        (ax, ag), (bx, bg) = x, y
        return Fraction(_l1(ax, bx)) + self.truncation.distance_by_index(ag, bg)


def product_dilated_cube(
    family: ProductFamily, summand_index: int, side: int
) -> DilatedCube | None:
    """An (n + k)-cube from a lattice cube times a summand cube.

    The two factors only multiply into a single dilated cube when their
    constants agree, so the lattice factor walks in steps of s_i; both
    factors then dilate by s_i and the sum metric dilates the l1 metric of
    the product grid exactly.
    """
    trunc = family.truncation
    shapes = getattr(trunc, "zk_shapes", None)
    if shapes is None or not 1 <= summand_index <= len(shapes):
        return None
    k, gdim = shapes[summand_index - 1]
    n_total = family.lattice_dim + gdim
    scale_i = trunc.scales.value(summand_index)
    if scale_i.denominator != 1:
        return None
    step = scale_i.numerator
    stride = trunc.strides[summand_index - 1]

    image = {}
    for x in itertools.product(range(side + 1), repeat=n_total):
        lat = tuple(step * c for c in x[: family.lattice_dim])
        idx = 0
        unit = stride
        for c in x[family.lattice_dim :]:
            idx += (c % k) * unit
            unit *= k
        image[x] = (lat, int(idx))
    cube = DilatedCube(n_total, side, image, Fraction(step))
    return cube if verify_dilated_cube(cube, family.distance) else None


# -- two-sided report ----------------------------------------------------------


@dataclass(frozen=True)
class CoverEvidenceRow:
    scale: Fraction
    dimension: int
    certified_ratio: Fraction
    measured_diameter: Fraction
    passed: bool


@dataclass(frozen=True)
class CubeEvidenceRow:
    dimension: int
    side: int
    constant: Fraction | None
    verified: bool


@dataclass(frozen=True)
class DimensionReport:
    cover_rows: tuple
    cube_rows: tuple

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.cover_rows) and any(
            r.verified for r in self.cube_rows
        )


def dimension_report(family, n: int, scales: Iterable) -> DimensionReport:
    """Pair upper-bound cover certificates with lower-bound cube certificates.

    For a direct-sum family every scale row pulls the reflection cover back
    through the scale window and measures components on the truncation; cube
    rows report, per dimension m up to n + 1, the largest summand cube that
    verifies exactly (sides r_i, constants s_i).  A product family reports
    multiplied cubes only.  An empty scale list yields an empty report.
    """
    from .direct_sum import DirectSumTruncation, pullback_cover
    from .metric import component_diameter_bound

    scales = [frac(s) for s in scales]
    cover_rows: list[CoverEvidenceRow] = []
    cube_rows: list[CubeEvidenceRow] = []

    if isinstance(family, DirectSumTruncation):
        shapes = getattr(family, "zk_shapes", None)
        if shapes is None or any(dim != n for _, dim in shapes):
            raise InvalidArgumentError(
                "dimension_report needs a Z_k^n power family"
            )
        space = family.metric_space()
        ratio = certified_torus_ratio(n)
        for s in scales:
            window = family.scales.window_of(s)
            if window >= 1:
                k_w = shapes[window - 1][0]
                inner = s / family.scales.value(window)
                refl = reflection_cover(n, k_w, inner)
                torus = ZkTorus(k_w, n)
                id_classes = tuple(
                    tuple(torus.residue_index(p) for p in cls)
                    for cls in refl.cover.classes
                )
                summand_cover = Cover(id_classes, n)
            else:
                whole = tuple(range(family.summands[0].group.order))
                summand_cover = Cover(tuple(whole for _ in range(n + 1)), n)
            pulled = pullback_cover(family, s, summand_cover)
            measured = component_diameter_bound(space, pulled, s)
            cover_rows.append(
                CoverEvidenceRow(s, n, ratio, measured, measured <= ratio * s)
            )
        for m in range(1, n + 2):
            best: CubeEvidenceRow | None = None
            for i, (k, _) in enumerate(shapes, start=1):
                side = k // 2
                if m == n and side >= 1:
                    cube = find_dilated_cube(family, n, side)
                    if cube is not None and (best is None or side > best.side):
                        best = CubeEvidenceRow(m, side, cube.constant, True)
            cube_rows.append(
                best if best is not None else CubeEvidenceRow(m, 0, None, False)
            )
    elif isinstance(family, ProductFamily):
        shapes = getattr(family.truncation, "zk_shapes", ())
        m_total = family.lattice_dim + (shapes[0][1] if shapes else 0)
        best = CubeEvidenceRow(m_total, 0, None, False)
        for i, (k, _) in enumerate(shapes, start=1):
            side = k // 2
            cube = product_dilated_cube(family, i, side)
            if cube is not None and side > best.side:
                best = CubeEvidenceRow(m_total, side, cube.constant, True)
        cube_rows.append(best)
    else:
        raise InvalidArgumentError(f"unknown family {type(family).__name__}")

    return DimensionReport(tuple(cover_rows), tuple(cube_rows))
