"""Proper norms on finite groups from weighted generating sets.

Groups are explicit multiplication tables with element 0 as the identity.
Norms come from single-source shortest paths on the Cayley graph; one sweep
produces the full norm table, which every downstream consumer needs anyway.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    InsufficientChainError,
    InvalidArgumentError,
    NotGeneratedError,
    PreconditionError,
    ResourceBudgetError,
)
from .metric import FiniteMetricSpace, ScaleChain, scale_components
from .rationals import format_rational, frac, parse_rational

_ASSOC_CHECK_LIMIT = 1024


class FiniteGroupTable:
    """A finite group given by its multiplication table.

    Element ids are ``0 .. order-1`` with 0 the identity.  ``validate=True``
    checks the identity, inverse and (for orders up to 1024) the full
    associativity law; ``"basic"`` skips associativity, for tables known
    correct by construction such as direct products of validated groups.
    """

    __slots__ = ("_mul", "_inv")

    def __init__(self, mul, *, validate=True):
        table = np.asarray(mul, dtype=np.int32)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise InvalidArgumentError("multiplication table must be square")
        m = table.shape[0]
        if m == 0:
            raise InvalidArgumentError("group must be nonempty")
        if np.any(table < 0) or np.any(table >= m):
            raise InvalidArgumentError("table entries out of range")
        self._mul = table
        inv = np.full(m, -1, dtype=np.int32)
        rows, cols = np.nonzero(table == 0)
        for a, b in zip(rows, cols):
            inv[a] = b
        self._inv = inv
        if validate:
            self._validate(full=(validate is True))

    def _validate(self, *, full: bool) -> None:
        m = self.order
        ids = np.arange(m)
        if not np.array_equal(self._mul[0], ids) or not np.array_equal(
            self._mul[:, 0], ids
        ):
            raise InvalidArgumentError("element 0 must act as the identity")
        if np.any(self._inv < 0):
            raise InvalidArgumentError("some element has no inverse")
        if np.any(self._mul[ids, self._inv[ids]] != 0) or np.any(
            self._mul[self._inv[ids], ids] != 0
        ):
            raise InvalidArgumentError("inverse law fails")
        # Latin-square sanity: each row and column is a permutation.
        if any(len(set(map(int, row))) != m for row in self._mul):
            raise InvalidArgumentError("a row repeats an element")
        if any(len(set(map(int, col))) != m for col in self._mul.T):
            raise InvalidArgumentError("a column repeats an element")
        if full:
            if m > _ASSOC_CHECK_LIMIT:
                raise ResourceBudgetError(
                    f"full associativity check refused for order {m} "
                    f"(> {_ASSOC_CHECK_LIMIT}); use validate='basic'"
                )
            mul = self._mul
            for a in range(m):
                if not np.array_equal(mul[mul[a]], mul[a][mul]):
                    raise InvalidArgumentError(
                        f"associativity fails for left factor {a}"
                    )

    @property
    def order(self) -> int:
        return int(self._mul.shape[0])

    @property
    def mul_table(self) -> np.ndarray:
        return self._mul

    @property
    def inv_table(self) -> np.ndarray:
        return self._inv

    def mul(self, a: int, b: int) -> int:
        return int(self._mul[a, b])

    def inv(self, a: int) -> int:
        return int(self._inv[a])

    def __len__(self) -> int:
        return self.order

    # -- constructors ----------------------------------------------------------

    @classmethod
    def cyclic(cls, k: int) -> "FiniteGroupTable":
        if k < 1:
            raise InvalidArgumentError("cyclic order must be >= 1")
        ids = np.arange(k)
        table = (ids[:, None] + ids[None, :]) % k
        return cls(table, validate=(k <= _ASSOC_CHECK_LIMIT) or "basic")

    @classmethod
    def direct_product(cls, *factors: "FiniteGroupTable") -> "FiniteGroupTable":
        """Componentwise product; element id is mixed-radix little endian."""
        if not factors:
            raise InvalidArgumentError("need at least one factor")
        total = 1
        for g in factors:
            total *= g.order
        table = np.zeros((total, total), dtype=np.int32)
        ids = np.arange(total)
        stride = 1
        for g in factors:
            digits = (ids // stride) % g.order
            table += stride * np.asarray(
                g.mul_table[np.ix_(digits, digits)], dtype=np.int32
            )
            stride *= g.order
        return cls(table, validate="basic")

    # -- serialization ---------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"order {self.order}"]
        for row in self._mul:
            lines.append(" ".join(str(int(x)) for x in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FiniteGroupTable":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("order "):
            raise InvalidArgumentError("expected 'order m' header")
        m = int(lines[0].split()[1])
        if len(lines) != m + 1:
            raise InvalidArgumentError(f"expected {m} table rows")
        rows = [[int(tok) for tok in ln.split()] for ln in lines[1:]]
        return cls(rows)


@dataclass(frozen=True)
class WeightedGeneratingSet:
    """Symmetric generators with positive weights, w(s) = w(s^-1)."""

    group: FiniteGroupTable
    weight: dict

    def __post_init__(self):
        weights = {}
        for g, w in self.weight.items():
            g = int(g)
            w = frac(w)
            if g == 0:
                if w != 0:
                    raise InvalidArgumentError("identity weight must be 0")
                continue
            if w <= 0:
                raise InvalidArgumentError(f"generator {g} needs positive weight")
            weights[g] = w
        for g, w in weights.items():
            gi = self.group.inv(g)
            if gi not in weights or weights[gi] != w:
                raise InvalidArgumentError(
                    f"weights must satisfy w(s) = w(s^-1); generator {g} fails"
                )
        object.__setattr__(self, "weight", weights)

    @classmethod
    def symmetric(
        cls, group: FiniteGroupTable, pairs: Mapping[int, object]
    ) -> "WeightedGeneratingSet":
        """Build from one weight per generator, adding inverses automatically."""
        weights = {}
        for g, w in pairs.items():
            g = int(g)
            weights[g] = frac(w)
            weights[group.inv(g)] = frac(w)
        return cls(group, weights)

    @property
    def generators(self) -> tuple:
        return tuple(sorted(self.weight))

    def to_lines(self) -> str:
        return "\n".join(
            f"{g} {format_rational(self.weight[g])}" for g in self.generators
        ) + "\n"

    @classmethod
    def from_lines(
        cls, group: FiniteGroupTable, text: str
    ) -> "WeightedGeneratingSet":
        weights = {}
        for ln in text.splitlines():
            ln = ln.strip()
            if not ln:
                continue
            gid, val = ln.split()
            weights[int(gid)] = parse_rational(val)
        return cls(group, weights)


def _dijkstra_norms(
    group: FiniteGroupTable, weights: Mapping[int, Fraction]
) -> list:
    """Single-source shortest path from the identity; None = unreachable."""
    m = group.order
    dist: list = [None] * m
    dist[0] = Fraction(0)
    heap = [(Fraction(0), 0)]
    gens = sorted(weights.items())
    mul = group.mul_table
    while heap:
        d, x = heapq.heappop(heap)
        if dist[x] != d:
            continue
        for g, w in gens:
            y = int(mul[x, g])
            nd = d + w
            if dist[y] is None or nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def word_norm_table(
    group: FiniteGroupTable, gens: WeightedGeneratingSet
) -> list:
    """Minimal weighted factorization cost for every element (one sweep).

    Raises :class:`NotGeneratedError` naming the first unreachable element.
    """
    if gens.group is not group:
        raise InvalidArgumentError("generating set belongs to another group")
    table = _dijkstra_norms(group, gens.weight)
    for x, v in enumerate(table):
        if v is None:
            raise NotGeneratedError(x)
    return table


def word_norm(group: FiniteGroupTable, gens: WeightedGeneratingSet, g: int):
    return word_norm_table(group, gens)[int(g)]


def norm_diameter(norm_table: Sequence) -> Fraction:
    return max(norm_table) if norm_table else Fraction(0)


def check_proper_norm_axioms(
    group: FiniteGroupTable, norm_table: Sequence
) -> None:
    """Assert the four proper-norm axioms exhaustively; raise on any failure.

    Finiteness of sublevel sets is automatic on a finite group, checked here
    as nonnegativity plus definiteness.
    """
    m = group.order
    norms = list(norm_table)
    if norms[0] != 0:
        raise InvalidArgumentError("norm of the identity must be 0")
    if any(norms[x] <= 0 for x in range(1, m)):
        raise InvalidArgumentError("norm must be positive off the identity")
    inv = group.inv_table
    if any(norms[x] != norms[int(inv[x])] for x in range(m)):
        raise InvalidArgumentError("norm breaks symmetry under inversion")
    den = 1
    for v in norms:
        den = den * v.denominator // _gcd(den, v.denominator)
    scaled = np.array([int(v * den) for v in norms], dtype=np.int64)
    mul = group.mul_table
    for a in range(m):
        lhs = scaled[mul[a]]
        if np.any(lhs > scaled[a] + scaled):
            b = int(np.argmax(lhs - (scaled[a] + scaled)))
            raise InvalidArgumentError(
                f"subadditivity fails at ({a}, {b}): "
                f"norm(a*b) > norm(a) + norm(b)"
            )


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def extend_norm(
    prev_group: FiniteGroupTable,
    prev_norm: Sequence,
    next_group: FiniteGroupTable,
    embedding: Sequence[int],
    new_generators: Iterable[int],
    new_weights: Mapping[int, object],
) -> list:
    """Extend a norm along one chain step with heavy new generators.

    Every nonidentity element of the embedded base acts as a generator
    weighted by its existing norm, and the new generators (with their
    inverses) carry the supplied weights.  When each new weight is at least
    the diameter of the base norm, the resulting word norm restricts to the
    base norm exactly; that restriction is re-verified here element by
    element.
    """
    prev_norm = [frac(v) for v in prev_norm]
    if len(prev_norm) != prev_group.order:
        raise InvalidArgumentError("norm table size mismatch")
    emb = [int(e) for e in embedding]
    if len(emb) != prev_group.order or len(set(emb)) != len(emb):
        raise InvalidArgumentError("embedding must be injective")
    for a in range(prev_group.order):
        for b in range(prev_group.order):
            if next_group.mul(emb[a], emb[b]) != emb[prev_group.mul(a, b)]:
                raise InvalidArgumentError(
                    f"embedding is not a homomorphism at ({a}, {b})"
                )
    diam = norm_diameter(prev_norm)
    embedded = set(emb)
    weights: dict[int, Fraction] = {}
    for s in new_generators:
        s = int(s)
        if s in embedded:
            raise InvalidArgumentError(
                f"new generator {s} already lies in the embedded base"
            )
        w = frac(new_weights[s]) if s in new_weights else None
        if w is None:
            raise InvalidArgumentError(f"missing weight for generator {s}")
        if w < diam:
            raise PreconditionError(
                f"weight {w} of generator {s} is below the base diameter "
                f"{diam}; the restriction guarantee would not hold"
            )
        weights[s] = w
        weights[next_group.inv(s)] = w
    for a in range(1, prev_group.order):
        weights[emb[a]] = prev_norm[a]

    table = _dijkstra_norms(next_group, weights)
    for x, v in enumerate(table):
        if v is None:
            raise NotGeneratedError(x)
    for a in range(prev_group.order):
        if table[emb[a]] != prev_norm[a]:
            raise PreconditionError(
                f"extension failed to restrict: element {a} got {table[emb[a]]}"
                f" instead of {prev_norm[a]}"
            )
    return table


@dataclass(frozen=True)
class AscendingChain:
    """A one-step ascending chain of finite subgroups.

    ``groups[i]`` embeds into ``groups[i+1]`` via ``embeddings[i]``, and each
    step is generated by the embedded predecessor together with the single
    element ``new_generators[i]``.
    """

    groups: tuple
    embeddings: tuple
    new_generators: tuple

    def __post_init__(self):
        groups = tuple(self.groups)
        embeddings = tuple(tuple(int(x) for x in e) for e in self.embeddings)
        gens = tuple(int(g) for g in self.new_generators)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "embeddings", embeddings)
        object.__setattr__(self, "new_generators", gens)
        if len(embeddings) != len(groups) - 1 or len(gens) != len(groups) - 1:
            raise InvalidArgumentError(
                "need one embedding and one new generator per step"
            )
        for i, emb in enumerate(embeddings):
            small, big = groups[i], groups[i + 1]
            if small.order >= big.order:
                raise InvalidArgumentError(
                    f"step {i}: chain must strictly ascend"
                )
            if len(emb) != small.order or len(set(emb)) != len(emb):
                raise InvalidArgumentError(f"step {i}: embedding not injective")
            if emb[0] != 0:
                raise InvalidArgumentError(f"step {i}: embedding must fix 1")
            for a in range(small.order):
                for b in range(small.order):
                    if big.mul(emb[a], emb[b]) != emb[small.mul(a, b)]:
                        raise InvalidArgumentError(
                            f"step {i}: embedding is not a homomorphism"
                        )
            generated = _closure(big, set(emb) | {gens[i]})
            if len(generated) != big.order:
                raise InvalidArgumentError(
                    f"step {i}: base plus one generator does not generate"
                )

    def __len__(self) -> int:
        return len(self.groups)


def _closure(group: FiniteGroupTable, seed: set) -> set:
    seen = set(seed) | {0}
    frontier = list(seen)
    while frontier:
        nxt = []
        for a in frontier:
            for b in seed:
                c = group.mul(a, b)
                if c not in seen:
                    seen.add(c)
                    nxt.append(c)
        frontier = nxt
    return seen


@dataclass(frozen=True)
class CardinalityCheck:
    passed: bool
    sizes: tuple
    required: tuple


def chain_cardinality_check(chain: AscendingChain) -> CardinalityCheck:
    """A one-step chain must satisfy |G_i| >= 2^i at every level."""
    sizes = tuple(g.order for g in chain.groups)
    required = tuple(2 ** i for i in range(len(sizes)))
    passed = all(s >= r for s, r in zip(sizes, required))
    return CardinalityCheck(passed, sizes, required)


def elementary_abelian_two_chain(depth: int) -> AscendingChain:
    """The chain (Z_2)^0 < (Z_2)^1 < ... < (Z_2)^depth with basis generators.

    Element ids are bitmasks, the step embedding is the identity on masks and
    the new generator of step i is the basis bit 2**(i-1).  Only practical
    for small depth; larger constructions use the structural family below.
    """
    if depth < 1:
        raise InvalidArgumentError("depth must be >= 1")
    if depth > 12:
        raise ResourceBudgetError("explicit tables beyond (Z_2)^12 are too large")
    groups = []
    for i in range(depth + 1):
        m = 1 << i
        ids = np.arange(m)
        groups.append(
            FiniteGroupTable(ids[:, None] ^ ids[None, :], validate="basic")
        )
    embeddings = [list(range(1 << i)) for i in range(depth)]
    gens = [1 << i for i in range(depth)]
    return AscendingChain(tuple(groups), tuple(embeddings), tuple(gens))


def cyclic_doubling_chain(orders: Sequence[int]) -> AscendingChain:
    """Chain of cyclic groups Z_{k_1} < Z_{k_2} < ... with k | k' embeddings."""
    groups = [FiniteGroupTable.cyclic(1)]
    embeddings: list[list[int]] = []
    gens: list[int] = []
    prev = 1
    for k in orders:
        if k % prev != 0 or k <= prev:
            raise InvalidArgumentError("orders must strictly ascend by divisibility")
        groups.append(FiniteGroupTable.cyclic(k))
        step = k // prev
        embeddings.append([a * step for a in range(prev)])
        gens.append(1)
        prev = k
    return AscendingChain(tuple(groups), tuple(embeddings), tuple(gens))


class TwoTorsionCubeFamily:
    """The ascending family (Z_2)^1 < (Z_2)^2 < ... without explicit tables.

    Elements of level i are subsets of the first i basis vectors, encoded as
    bitmasks.  With basis generators carrying positive weights the word norm
    of a mask is exactly the sum of the weights of its set bits, so norms,
    diameters and witnesses are available in closed form at any level.  The
    adversarial construction needs levels in the hundreds, far beyond any
    multiplication table.
    """

    def level_size(self, i: int) -> int:
        return 1 << i

    @staticmethod
    def mask_norm(mask: int, weights: Sequence[Fraction]) -> Fraction:
        total = Fraction(0)
        j = 0
        while mask:
            if mask & 1:
                total += weights[j]
            mask >>= 1
            j += 1
        return total

    @staticmethod
    def diameter(weights: Sequence[Fraction]) -> Fraction:
        return sum(weights, Fraction(0))

    @staticmethod
    def lex_least_witness(
        weights: Sequence[Fraction], threshold: Fraction
    ) -> int | None:
        """Least coordinate tuple (b_1, b_2, ...) whose weight sum exceeds
        ``threshold``; None when even the full mask fails."""
        total = sum(weights, Fraction(0))
        if total <= threshold:
            return None
        suffix = list(itertools.accumulate(reversed(weights), initial=Fraction(0)))
        suffix.reverse()  # suffix[j] = sum of weights[j:]
        kept = Fraction(0)
        mask = 0
        for j, w in enumerate(weights):
            if kept + suffix[j + 1] > threshold:
                continue  # bit j can stay 0
            mask |= 1 << j
            kept += w
        assert kept > threshold
        return mask


@dataclass(frozen=True)
class AdversarialRound:
    index: int
    scale: Fraction          # J_r
    target: Fraction         # f(J_r)
    group_level: int         # i_r, the chain level housing the witness
    witness: int
    witness_norm: Fraction


@dataclass(frozen=True)
class AdversarialMetricResult:
    rounds: tuple
    generator_weights: tuple  # weight of each chain generator, in order
    family: bool              # True when built over TwoTorsionCubeFamily

    @property
    def witnesses(self) -> list:
        return [(r.scale, r.witness) for r in self.rounds]


def _require_increasing_divergent(f) -> None:
    if not getattr(f, "diverges", False):
        raise InvalidArgumentError(
            "the target function must be increasing and divergent"
        )
    probe = [f(x) for x in (0, 1, 2, 5, 13)]
    if any(b < a for a, b in zip(probe, probe[1:])):
        raise InvalidArgumentError("the target function must be nondecreasing")


def adversarial_metric(f, chain, rounds: int) -> AdversarialMetricResult:
    """Build a weighted norm along ``chain`` defeating ``f`` as a
    0-dimensional control function.

    Round r assigns weight J_r to every not-yet-weighted generator up to
    some level i_r, where i_r is minimal such that an element of norm above
    f(J_r) appears; the lexicographically least such element is the round's
    witness, and J_{r+1} = diam + 1 at level i_r.  Each witness is joined to
    the identity by generator steps of size at most J_r, so it lies in the
    identity's component at any scale just above J_r while its norm exceeds
    f(J_r).
    """
    if rounds < 1:
        raise InvalidArgumentError("need at least one round")
    _require_increasing_divergent(f)
    if isinstance(chain, TwoTorsionCubeFamily):
        return _adversarial_family(f, chain, rounds)
    if isinstance(chain, AscendingChain):
        return _adversarial_tables(f, chain, rounds)
    raise InvalidArgumentError(
        "chain must be an AscendingChain or TwoTorsionCubeFamily"
    )


def _adversarial_family(
    f, family: TwoTorsionCubeFamily, rounds: int
) -> AdversarialMetricResult:
    weights: list[Fraction] = []
    out = []
    scale = Fraction(1)
    for r in range(1, rounds + 1):
        target = frac(f(scale))
        # extend levels, all new generators at weight J_r, until the top
        # norm (= running diameter) exceeds the target
        while family.diameter(weights) <= target:
            weights.append(scale)
        level = len(weights)
        witness = family.lex_least_witness(weights, target)
        norm = family.mask_norm(witness, weights)
        out.append(AdversarialRound(r, scale, target, level, witness, norm))
        scale = family.diameter(weights) + 1
    return AdversarialMetricResult(tuple(out), tuple(weights), True)


def _adversarial_tables(
    f, chain: AscendingChain, rounds: int
) -> AdversarialMetricResult:
    # Map every level into the top group so levels share element ids.
    top = chain.groups[-1]
    into_top: list[list[int]] = [[] for _ in chain.groups]
    into_top[-1] = list(range(top.order))
    for j in range(len(chain.groups) - 2, -1, -1):
        emb = chain.embeddings[j]
        into_top[j] = [into_top[j + 1][emb[a]] for a in range(chain.groups[j].order)]
    gen_in_top = [
        into_top[i + 1][chain.new_generators[i]]
        for i in range(len(chain.embeddings))
    ]

    # Per round, one flat extension from the previous round's group: all the
    # generators picked up on the way carry weight J_r, which dominates the
    # base diameter because J_r exceeds it by construction.
    weights_assigned: list[Fraction] = []
    base_level = 0
    base_norm: list = [Fraction(0)]
    out = []
    scale = Fraction(1)
    for r in range(1, rounds + 1):
        target = frac(f(scale))
        found = None
        level = base_level
        norm = base_norm
        while found is None:
            if level == len(chain.groups) - 1:
                raise InsufficientChainError(r - 1, tuple(out))
            level += 1
            base_ids = into_top[base_level]
            next_ids = into_top[level]
            position = {pid: pos for pos, pid in enumerate(next_ids)}
            emb_positions = [position[pid] for pid in base_ids]
            new_positions = [
                position[gen_in_top[j]] for j in range(base_level, level)
            ]
            norm = extend_norm(
                _table_on(top, base_ids),
                base_norm,
                _table_on(top, next_ids),
                emb_positions,
                new_positions,
                {p: scale for p in new_positions},
            )
            over = [x for x in range(len(norm)) if norm[x] > target]
            if over:
                found = min(over)
        weights_assigned.extend([scale] * (level - base_level))
        out.append(AdversarialRound(r, scale, target, level, found, norm[found]))
        base_level = level
        base_norm = norm
        scale = norm_diameter(norm) + 1
    return AdversarialMetricResult(tuple(out), tuple(weights_assigned), False)


def _table_on(group: FiniteGroupTable, ids: Sequence[int]) -> FiniteGroupTable:
    """Multiplication table of the subgroup given by ``ids`` (0 first)."""
    pos = {g: i for i, g in enumerate(ids)}
    m = len(ids)
    table = [[pos[group.mul(ids[a], ids[b])] for b in range(m)] for a in range(m)]
    return FiniteGroupTable(table, validate="basic")


def verify_adversarial_rounds(
    result: AdversarialMetricResult, f
) -> list[ScaleChain]:
    """Re-verify every round of an adversarial construction.

    For each round this checks witness_norm > f(J_r) and certifies, through
    :func:`scale_components` on the witness's generator path, that the
    witness shares the identity's component at any scale just above J_r
    (generator steps have size exactly J_r, so J_r + 1/2 is used).
    Returns the verified chains.
    """
    if not result.family:
        raise InvalidArgumentError(
            "verification helper currently covers the structural family"
        )
    weights = [frac(w) for w in result.generator_weights]
    chains = []
    for rnd in result.rounds:
        if not rnd.witness_norm > frac(f(rnd.scale)):
            raise InvalidArgumentError(
                f"round {rnd.index}: witness norm fails to exceed the target"
            )
        path = [0]
        acc = 0
        for j in range(rnd.group_level):
            if rnd.witness >> j & 1:
                acc |= 1 << j
                path.append(acc)
        pts = list(dict.fromkeys(path))
        dist = {
            (x, y): TwoTorsionCubeFamily.mask_norm(x ^ y, weights)
            for x, y in itertools.combinations(pts, 2)
        }
        space = FiniteMetricSpace(pts, dist, validate="basic")
        probe_scale = rnd.scale + Fraction(1, 2)
        parts = scale_components(space, pts, probe_scale)
        home = next(p for p in parts if 0 in p)
        if rnd.witness not in home:
            raise InvalidArgumentError(
                f"round {rnd.index}: witness separated from the identity"
            )
        chain = ScaleChain(probe_scale, tuple(path))
        chain.validate(space)
        chains.append(chain)
    return chains
