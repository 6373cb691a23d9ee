"""Finitely supported direct sums of finite groups with the scale-weighted
quasi-ultrametric norm.

The norm of an element is s_k * |top coordinate|, where k is the largest
supported index and the scale sequence grows fast enough
(s_i >= s_{i-1} * diam(G_{i-1}) + 1) that distinct top indices dominate
everything below them.  Truncations to finitely many summands are genuine
finite groups carrying the restricted metric, since the norm of an element
depends only on its own support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InvalidArgumentError,
    InvalidCoverError,
    InvalidScaleError,
    ResourceBudgetError,
)
from .metric import Cover, FiniteMetricSpace
from .groups import (
    FiniteGroupTable,
    WeightedGeneratingSet,
    check_proper_norm_axioms,
    norm_diameter,
    word_norm_table,
)
from .rationals import frac, parse_rational


@dataclass(frozen=True)
class SummandSpec:
    """One summand: a finite group with a proper norm whose minimum positive
    value is at least 1 (distinct elements are at distance >= 1)."""

    group: FiniteGroupTable
    norm: tuple
    diameter: Fraction

    def __post_init__(self):
        norm = tuple(frac(v) for v in self.norm)
        object.__setattr__(self, "norm", norm)
        object.__setattr__(self, "diameter", frac(self.diameter))
        if len(norm) != self.group.order:
            raise InvalidArgumentError("norm table size mismatch")
        if norm[0] != 0:
            raise InvalidArgumentError("identity must have norm 0")
        positives = [v for v in norm[1:]]
        if any(v < 1 for v in positives):
            raise InvalidArgumentError(
                "summand norms must be >= 1 on nonidentity elements"
            )
        if self.diameter != (max(norm) if len(norm) > 1 else Fraction(0)):
            raise InvalidArgumentError("stored diameter disagrees with the norm")

    @classmethod
    def from_generators(
        cls, group: FiniteGroupTable, gens: WeightedGeneratingSet
    ) -> "SummandSpec":
        table = word_norm_table(group, gens)
        check_proper_norm_axioms(group, table)
        return cls(group, tuple(table), norm_diameter(table))


class ScaleSequence:
    """The scale sequence s_1, s_2, ... attached to a summand list.

    Defaults to the minimal admissible values (equality in the recurrence,
    s_1 = 1), which keep truncation diameters as small as possible; callers
    may override individual entries upward.  One extra value past the last
    summand is generated so the top scale window exists.
    """

    def __init__(
        self,
        diameters: Sequence,
        overrides: Mapping[int, object] | None = None,
        *,
        enforce: bool = True,
    ):
        diams = [frac(d) for d in diameters]
        if any(d < 1 for d in diams):
            raise InvalidArgumentError("summand diameters must be >= 1")
        over = {int(i): frac(v) for i, v in (overrides or {}).items()}
        values: list[Fraction] = []
        for i in range(1, len(diams) + 2):
            minimal = (
                Fraction(1)
                if i == 1
                else values[-1] * diams[i - 2] + 1
            )
            chosen = over.get(i, minimal)
            if enforce and chosen < minimal:
                raise InvalidArgumentError(
                    f"s_{i} = {chosen} violates the growth recurrence "
                    f"(needs >= {minimal})"
                )
            values.append(chosen)
        self._values = tuple(values)
        self.valid = all(
            v >= (Fraction(1) if i == 0 else self._values[i - 1] * diams[i - 1] + 1)
            for i, v in enumerate(self._values[: len(diams) + 1])
        )

    def __len__(self) -> int:
        return len(self._values)

    def value(self, i: int) -> Fraction:
        """s_i for 1 <= i <= number of summands + 1."""
        if not 1 <= i <= len(self._values):
            raise InvalidArgumentError(f"scale index {i} out of range")
        return self._values[i - 1]

    @property
    def values(self) -> tuple:
        return self._values

    def window_of(self, scale) -> int:
        """The index i with s_i < scale <= s_{i+1}; scales at or below s_1
        give 0, scales beyond the last generated value are rejected.
        A scale exactly equal to some s_i belongs to the lower window.
        """
        s = frac(scale)
        if s <= 0:
            raise InvalidArgumentError("scale must be positive")
        if s <= self._values[0]:
            return 0
        for i in range(len(self._values) - 1):
            if self._values[i] < s <= self._values[i + 1]:
                return i + 1
        raise InvalidScaleError(
            f"scale {s} beyond the top window (s_{len(self._values)} = "
            f"{self._values[-1]})"
        )


@dataclass(frozen=True)
class DirectSumElement:
    """A finitely supported tuple; ``support`` maps summand index (1-based)
    to a nonidentity element id of that summand."""

    support: tuple

    def __post_init__(self):
        items = tuple(sorted((int(i), int(e)) for i, e in dict(self.support).items()))
        object.__setattr__(self, "support", items)
        for i, e in items:
            if i < 1:
                raise InvalidArgumentError("summand indices are 1-based")
            if e == 0:
                raise InvalidArgumentError(
                    f"support at index {i} stores the identity"
                )

    @classmethod
    def from_dict(cls, mapping: Mapping[int, int]) -> "DirectSumElement":
        return cls(tuple(mapping.items()))

    @property
    def top_index(self) -> int:
        """k(g): the largest supported index, 0 for the identity."""
        return self.support[-1][0] if self.support else 0

    def coordinate(self, i: int) -> int:
        for j, e in self.support:
            if j == i:
                return e
        return 0


IDENTITY_ELEMENT = DirectSumElement(())


def quasi_norm(
    summands: Sequence[SummandSpec], scales: ScaleSequence, g: DirectSumElement
) -> Fraction:
    """s_{k(g)} times the norm of the top coordinate; 0 exactly on the
    identity (convention k = 0)."""
    k = g.top_index
    if k == 0:
        return Fraction(0)
    if k > len(summands):
        raise InvalidArgumentError(f"support index {k} beyond the summand list")
    return scales.value(k) * summands[k - 1].norm[g.coordinate(k)]


class DirectSumTruncation:
    """The finite subgroup of a direct sum supported on summands 1..m.

    Elements are packed little-endian mixed-radix indices; all group and
    norm data are vectorized numpy tables over a common denominator so that
    exhaustive scans stay exact and fast.
    """

    def __init__(
        self,
        summands: Sequence[SummandSpec],
        scales: ScaleSequence | None = None,
        *,
        size_budget: int = 2_000_000,
    ):
        if not summands:
            raise InvalidArgumentError("need at least one summand")
        self.summands = tuple(summands)
        self.scales = scales or ScaleSequence(
            [s.diameter for s in self.summands]
        )
        if len(self.scales) < len(self.summands) + 1:
            raise InvalidArgumentError("scale sequence too short")
        size = 1
        for s in self.summands:
            size *= s.group.order
        if size > size_budget:
            raise ResourceBudgetError(
                f"truncation has {size} elements, beyond the {size_budget} budget"
            )
        self.size = size
        self.strides = []
        acc = 1
        for s in self.summands:
            self.strides.append(acc)
            acc *= s.group.order

        # Common denominator of every value s_i * |coordinate norm|.
        den = 1
        for i, s in enumerate(self.summands, start=1):
            scale_i = self.scales.value(i)
            for v in s.norm:
                den = math.lcm(den, (scale_i * v).denominator)
        self._den = den

        ids = np.arange(size)
        norm_num = np.zeros(size, dtype=np.int64)
        k_table = np.zeros(size, dtype=np.int16)
        self._digits = []
        # Later summands overwrite earlier ones: the top supported index
        # alone determines the norm.
        for i, s in enumerate(self.summands, start=1):
            digits = ((ids // self.strides[i - 1]) % s.group.order).astype(np.int32)
            self._digits.append(digits)
            scale_i = self.scales.value(i)
            snorm_scaled = np.array(
                [int(scale_i * v * den) for v in s.norm], dtype=np.int64
            )
            supported = digits != 0
            norm_num[supported] = snorm_scaled[digits[supported]]
            k_table[supported] = i
        self._norm_num = norm_num
        self._k_table = k_table

    # -- element plumbing -------------------------------------------------------

    @property
    def denominator(self) -> int:
        return self._den

    @property
    def norm_numerators(self) -> np.ndarray:
        return self._norm_num

    @property
    def top_index_table(self) -> np.ndarray:
        return self._k_table

    def index_of(self, g: DirectSumElement) -> int:
        idx = 0
        for i, e in g.support:
            if i > len(self.summands):
                raise InvalidArgumentError(f"index {i} beyond truncation")
            if not 0 <= e < self.summands[i - 1].group.order:
                raise InvalidArgumentError(f"coordinate {e} out of range")
            idx += self.strides[i - 1] * e
        return idx

    def element_at(self, idx: int) -> DirectSumElement:
        support = {}
        for i, s in enumerate(self.summands, start=1):
            digit = (idx // self.strides[i - 1]) % s.group.order
            if digit:
                support[i] = int(digit)
        return DirectSumElement.from_dict(support)

    def norm_by_index(self, idx) -> Fraction:
        return Fraction(int(self._norm_num[idx]), self._den)

    def mul_indices(self, a, b):
        """Vectorized componentwise product of packed indices."""
        a = np.asarray(a)
        b = np.asarray(b)
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        for i, s in enumerate(self.summands):
            da = (a // self.strides[i]) % s.group.order
            db = (b // self.strides[i]) % s.group.order
            out += self.strides[i] * s.group.mul_table[da, db].astype(np.int64)
        return out

    def inv_indices(self, a):
        a = np.asarray(a)
        out = np.zeros(a.shape, dtype=np.int64)
        for i, s in enumerate(self.summands):
            da = (a // self.strides[i]) % s.group.order
            out += self.strides[i] * s.group.inv_table[da].astype(np.int64)
        return out

    def distance_by_index(self, a: int, b: int) -> Fraction:
        diff = int(self.mul_indices(self.inv_indices(a), b))
        return self.norm_by_index(diff)

    # -- bulk tables -------------------------------------------------------------

    def max_distance_numerator(self) -> int:
        m = len(self.summands)
        top = self.scales.value(m) * self.summands[m - 1].diameter
        return int(top * self._den)

    def distance_matrix(self) -> tuple[np.ndarray, int]:
        """Full pairwise distance table as (integer matrix, denominator).

        Built summand by summand in row blocks; the dtype is the smallest
        signed integer type that holds the largest possible distance.
        """
        bound = self.max_distance_numerator()
        dtype = np.int8
        for cand in (np.int8, np.int16, np.int32, np.int64):
            if bound <= np.iinfo(cand).max:
                dtype = cand
                break
        n = self.size
        out = np.zeros((n, n), dtype=dtype)
        block = max(1, 2 ** 24 // max(n, 1))
        den = self._den
        summand_dist = []
        for i, s in enumerate(self.summands, start=1):
            scale_i = self.scales.value(i)
            tab = np.zeros((s.group.order, s.group.order), dtype=np.int64)
            for a in range(s.group.order):
                prod = s.group.mul_table[s.group.inv(a)]
                tab[a] = [int(scale_i * s.norm[int(p)] * den) for p in prod]
            summand_dist.append(tab.astype(dtype))
        for start in range(0, n, block):
            stop = min(n, start + block)
            acc = np.zeros((stop - start, n), dtype=dtype)
            for i in range(len(self.summands) - 1, -1, -1):
                rows = self._digits[i][start:stop]
                cols = self._digits[i]
                local = summand_dist[i][rows[:, None], cols[None, :]]
                if i == len(self.summands) - 1:
                    acc = local.copy()
                else:
                    undecided = acc == 0
                    acc[undecided] = local[undecided]
            out[start:stop] = acc
        return out, den

    def metric_space(self) -> FiniteMetricSpace:
        num, den = self.distance_matrix()
        return FiniteMetricSpace.from_matrix(
            tuple(range(self.size)), num, den, validate=False
        )


def truncation_from_zk_powers(
    ks: Sequence[int], n: int, overrides: Mapping[int, object] | None = None
) -> DirectSumTruncation:
    """Truncated sum of Z_{k_1}^n, Z_{k_2}^n, ... with unit word norms and
    minimal scales; the standard family for the dimension experiments."""
    summands = []
    for k in ks:
        group = FiniteGroupTable.direct_product(
            *[FiniteGroupTable.cyclic(k) for _ in range(n)]
        )
        gens = {}
        stride = 1
        for _ in range(n):
            gens[stride] = 1  # +e_i; inverses added by symmetric()
            stride *= k
        wgs = WeightedGeneratingSet.symmetric(group, gens)
        summands.append(SummandSpec.from_generators(group, wgs))
    scales = ScaleSequence([s.diameter for s in summands], overrides)
    trunc = DirectSumTruncation(summands, scales)
    trunc.zk_shapes = tuple((int(k), int(n)) for k in ks)  # family metadata
    return trunc


# -- axiom verification ------------------------------------------------------


@dataclass(frozen=True)
class NormAxiomReport:
    identity_ok: bool
    symmetry_ok: bool
    subadditivity_ok: bool
    properness_ok: bool
    pairs_checked: int
    counterexample: tuple | None

    @property
    def passed(self) -> bool:
        return (
            self.identity_ok
            and self.symmetry_ok
            and self.subadditivity_ok
            and self.properness_ok
        )


def verify_quasi_norm_axioms(
    trunc: DirectSumTruncation,
    *,
    subadditivity: object = "exhaustive",
    seed: int = 0,
    pair_budget: int = 40_000_000,
) -> NormAxiomReport:
    """Check the four proper-norm axioms on a truncation.

    Definiteness and inversion symmetry are always exhaustive.
    Subadditivity is exhaustive when ``subadditivity="exhaustive"`` (raising
    a budget error when the pair count is out of reach) or sampled on the
    given number of deterministic pseudo-random pairs.  Properness is the
    ball-cardinality bound: fewer than prod_{j<i} |G_j| elements of norm
    below s_i, for every i.
    """
    norm = trunc.norm_numerators
    identity_ok = bool(norm[0] == 0 and np.all(norm[1:] > 0))
    inv_all = trunc.inv_indices(np.arange(trunc.size))
    symmetry_ok = bool(np.array_equal(norm[inv_all], norm))

    counterexample = None
    if subadditivity == "exhaustive":
        total = trunc.size * trunc.size
        if total > pair_budget:
            raise ResourceBudgetError(
                f"{total} pairs exceed the exhaustive budget {pair_budget}; "
                f"pass an integer sample count instead"
            )
        subadd_ok = True
        pairs = total
        ids = np.arange(trunc.size)
        for a in range(trunc.size):
            prod = trunc.mul_indices(np.int64(a), ids)
            bad = norm[prod] > norm[a] + norm
            if np.any(bad):
                b = int(np.flatnonzero(bad)[0])
                counterexample = (a, b)
                subadd_ok = False
                break
    else:
        samples = int(subadditivity)
        rng = np.random.default_rng(seed)
        g = rng.integers(0, trunc.size, size=samples, dtype=np.int64)
        h = rng.integers(0, trunc.size, size=samples, dtype=np.int64)
        prod = trunc.mul_indices(g, h)
        bad = norm[prod] > norm[g] + norm[h]
        subadd_ok = not bool(np.any(bad))
        if not subadd_ok:
            j = int(np.flatnonzero(bad)[0])
            counterexample = (int(g[j]), int(h[j]))
        pairs = samples

    properness_ok = True
    running = 1
    for i in range(1, len(trunc.summands) + 1):
        s_i = trunc.scales.value(i)
        threshold = s_i * trunc.denominator
        count = int(np.count_nonzero(norm < threshold))
        if count > running:
            properness_ok = False
            break
        running *= trunc.summands[i - 1].group.order

    return NormAxiomReport(
        identity_ok, symmetry_ok, subadd_ok, properness_ok, pairs, counterexample
    )


@dataclass(frozen=True)
class UltrametricReport:
    triples_checked: int
    violations: int
    worst: tuple | None

    @property
    def passed(self) -> bool:
        return self.violations == 0


def quasi_ultrametric_check(
    trunc: DirectSumTruncation,
    *,
    triples: object = "exhaustive",
    seed: int = 0,
    exhaustive_budget: int = 400,
) -> UltrametricReport:
    """Check d(g1,g2) <= max(d(g2,g3), d(g1,g3)) over triples whose three
    top indices are pairwise distinct (the lemma's hypothesis; triples with
    a repeated top index are skipped).
    """
    k = trunc.top_index_table
    if triples == "exhaustive":
        n = trunc.size
        if n > exhaustive_budget:
            raise ResourceBudgetError(
                f"exhaustive triple scan refused for {n} elements"
            )
        num, _ = trunc.distance_matrix()
        num = num.astype(np.int64)
        checked = 0
        violations = 0
        worst = None
        for g3 in range(n):
            col = num[:, g3]
            bound = np.maximum(col[:, None], col[None, :])
            distinct = (
                (k[:, None] != k[None, :])
                & (k[:, None] != k[g3])
                & (k[None, :] != k[g3])
            )
            checked += int(np.count_nonzero(distinct))
            bad = distinct & (num > bound)
            if np.any(bad):
                violations += int(np.count_nonzero(bad))
                if worst is None:
                    i, j = map(int, np.argwhere(bad)[0])
                    worst = (i, j, g3)
        return UltrametricReport(checked, violations, worst)

    # Stratified sampling: most elements share the top index, so rejection
    # sampling of distinct-k triples would almost always reject.  Sampling
    # an ordered k-triple with probability proportional to the product of
    # its stratum sizes, then uniformly inside each stratum, is uniform
    # over ordered triples with pairwise distinct top indices.
    wanted = int(triples)
    rng = np.random.default_rng(seed)
    strata = {}
    for value in np.unique(k):
        strata[int(value)] = np.flatnonzero(k == value).astype(np.int64)
    values = sorted(strata)
    if len(values) < 3:
        raise InvalidArgumentError(
            "fewer than three distinct top indices; no admissible triples"
        )
    combos = [
        (a, b, c)
        for a in values
        for b in values
        for c in values
        if a != b and a != c and b != c
    ]
    weights = np.array(
        [len(strata[a]) * len(strata[b]) * len(strata[c]) for a, b, c in combos],
        dtype=np.float64,
    )
    weights /= weights.sum()
    combo_ids = rng.choice(len(combos), size=wanted, p=weights)
    picks = np.empty((3, wanted), dtype=np.int64)
    for cid in range(len(combos)):
        mask = combo_ids == cid
        count = int(np.count_nonzero(mask))
        if not count:
            continue
        for slot, value in enumerate(combos[cid]):
            pool = strata[value]
            picks[slot, mask] = pool[rng.integers(0, len(pool), size=count)]
    g1, g2, g3 = picks
    norm = trunc.norm_numerators
    inv1 = trunc.inv_indices(g1)
    inv2 = trunc.inv_indices(g2)
    d12 = norm[trunc.mul_indices(inv1, g2)]
    d23 = norm[trunc.mul_indices(inv2, g3)]
    d13 = norm[trunc.mul_indices(inv1, g3)]
    bad = d12 > np.maximum(d23, d13)
    violations = int(np.count_nonzero(bad))
    worst = None
    if violations:
        j = int(np.flatnonzero(bad)[0])
        worst = (int(g1[j]), int(g2[j]), int(g3[j]))
    return UltrametricReport(wanted, violations, worst)


def pullback_cover(
    trunc: DirectSumTruncation, scale, summand_cover: Cover
) -> Cover:
    """Pull a cover of the scale window's summand back through the projection.

    For scales in (s_i, s_{i+1}] the class V_j collects the elements whose
    i-th coordinate lies in U_j; in the top sub-window
    (s_i * diam(G_i), s_i * diam(G_i) + 1] every class is the whole group,
    and at or below s_1 the projection to the trivial summand G_0 makes every
    class the whole truncation as well.  Scales beyond the generated
    sequence raise :class:`InvalidScaleError`.
    """
    s = frac(scale)
    i = trunc.scales.window_of(s)  # may raise InvalidScaleError
    all_points = tuple(range(trunc.size))
    if i == 0:
        classes = tuple(all_points for _ in summand_cover.classes)
        return Cover(classes, summand_cover.n)
    spec = trunc.summands[i - 1]
    summand_cover.validate_covers(range(spec.group.order))
    special_low = trunc.scales.value(i) * spec.diameter
    if s > special_low:
        classes = tuple(all_points for _ in summand_cover.classes)
        return Cover(classes, summand_cover.n)
    digits = trunc._digits[i - 1]
    classes = []
    for cls_ids in summand_cover.classes:
        mask = np.isin(digits, np.asarray(sorted(int(x) for x in cls_ids)))
        classes.append(tuple(int(x) for x in np.flatnonzero(mask)))
    return Cover(tuple(classes), summand_cover.n)


# -- serialization -------------------------------------------------------------


def load_truncation_spec(text: str, loader) -> DirectSumTruncation:
    """Parse a direct-sum spec: lines ``summand <group-file>`` in order plus
    optional ``scale i num/den`` overrides.  ``loader(path)`` must return the
    text of a group file, whose generators default to all nonidentity
    elements of weight 1 unless a ``weights`` suffix names a weight file."""
    summands = []
    overrides = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "summand":
            group = FiniteGroupTable.from_text(loader(parts[1]))
            if len(parts) >= 3:
                wgs = WeightedGeneratingSet.from_lines(group, loader(parts[2]))
            else:
                wgs = WeightedGeneratingSet.symmetric(
                    group, {g: 1 for g in range(1, group.order)}
                )
            summands.append(SummandSpec.from_generators(group, wgs))
        elif parts[0] == "scale":
            overrides[int(parts[1])] = parse_rational(parts[2])
        else:
            raise InvalidArgumentError(f"unknown spec directive {parts[0]!r}")
    scales = ScaleSequence([s.diameter for s in summands], overrides)
    return DirectSumTruncation(summands, scales)
