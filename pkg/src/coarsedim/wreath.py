"""Lamplighter groups over the free group on two letters.

An element is a finitely supported assignment of nonidentity lamp states
(values in a small finite group H, default Z_2) to vertices of the Cayley
tree of the free group, together with a cursor vertex.  The generating set
is the four free-group letters plus one lamp generator per H generator,
all at unit weight.

Word lengths come from a closed walk computation in the tree: the minimal
walk from the identity that visits every lit vertex and ends at the cursor
traverses the Steiner tree T of {identity, cursor} u support, using every
edge twice except those on the identity-cursor path.  Because the ambient
graph is a tree, 2 * |edges(T)| equals the cyclic sum of consecutive
distances once the terminals are sorted in depth-first (lexicographic)
order, so no tree is ever materialized.  A breadth-first oracle over the
actual generating set stays available for cross-checking at small radius.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import InvalidArgumentError, ResourceBudgetError
from .groups import FiniteGroupTable, WeightedGeneratingSet, word_norm_table
from .rationals import frac

# letters: a, a^-1, b, b^-1; inverse flips the low bit
_LETTERS = ("a", "A", "b", "B")
_INV = (1, 0, 3, 2)


def reduce_word(letters: Iterable[int]) -> tuple:
    out: list[int] = []
    for x in letters:
        if out and out[-1] == _INV[x]:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


@dataclass(frozen=True)
class FreeGroupElement:
    """A freely reduced word over {a, a^-1, b, b^-1}."""

    word: tuple

    def __post_init__(self):
        word = tuple(int(x) for x in self.word)
        object.__setattr__(self, "word", word)
        for x in word:
            if not 0 <= x <= 3:
                raise InvalidArgumentError(f"letter id {x} out of range")
        for u, v in zip(word, word[1:]):
            if v == _INV[u]:
                raise InvalidArgumentError("word is not freely reduced")

    @classmethod
    def parse(cls, text: str) -> "FreeGroupElement":
        try:
            return cls(tuple(_LETTERS.index(ch) for ch in text.strip()))
        except ValueError as exc:
            raise InvalidArgumentError(f"bad free-group word {text!r}") from exc

    def __str__(self) -> str:
        return "".join(_LETTERS[x] for x in self.word) or "e"

    def __mul__(self, other: "FreeGroupElement") -> "FreeGroupElement":
        return FreeGroupElement(reduce_word(self.word + other.word))

    def inverse(self) -> "FreeGroupElement":
        return FreeGroupElement(tuple(_INV[x] for x in reversed(self.word)))

    def __len__(self) -> int:
        return len(self.word)


F2_IDENTITY = FreeGroupElement(())


def tree_distance(u: tuple, v: tuple) -> int:
    """|u| + |v| - 2 * (longest common prefix), the free-group word metric."""
    lcp = 0
    for x, y in zip(u, v):
        if x != y:
            break
        lcp += 1
    return len(u) + len(v) - 2 * lcp


def _steiner_cyclic_sum(terminals: Sequence[tuple]) -> int:
    """Twice the edge count of the Steiner tree spanning ``terminals``.

    Valid because lexicographic order on reduced words is a depth-first
    order of the Cayley tree, under which the cyclic sum of consecutive
    distances walks every Steiner edge exactly twice.
    """
    if len(terminals) < 2:
        return 0
    ordered = sorted(set(terminals))
    total = 0
    for q, q_next in zip(ordered, ordered[1:]):
        total += tree_distance(q, q_next)
    total += tree_distance(ordered[-1], ordered[0])
    return total


class LamplighterGroup:
    """H wr F_2 for a small finite lamp group H (default Z_2)."""

    def __init__(self, lamp_group: FiniteGroupTable | None = None):
        self.lamp_group = lamp_group or FiniteGroupTable.cyclic(2)
        gens = WeightedGeneratingSet.symmetric(
            self.lamp_group, {g: 1 for g in range(1, self.lamp_group.order)}
        )
        self.lamp_norm = [int(v) for v in word_norm_table(self.lamp_group, gens)]
        self.identity = LamplighterElement((), F2_IDENTITY)

    # -- group structure ---------------------------------------------------

    def multiply(
        self, x: "LamplighterElement", y: "LamplighterElement"
    ) -> "LamplighterElement":
        lamps = dict(x.lamps)
        for v, h in y.lamps:
            shifted = reduce_word(x.cursor.word + v)
            combined = self.lamp_group.mul(lamps.get(shifted, 0), h)
            if combined:
                lamps[shifted] = combined
            else:
                lamps.pop(shifted, None)
        return _raw_element(tuple(sorted(lamps.items())), x.cursor * y.cursor)

    def inverse(self, x: "LamplighterElement") -> "LamplighterElement":
        cursor_inv = x.cursor.inverse()
        lamps = {}
        for v, h in x.lamps:
            lamps[reduce_word(cursor_inv.word + v)] = self.lamp_group.inv(h)
        return _raw_element(tuple(sorted(lamps.items())), cursor_inv)

    def generators(self) -> list["LamplighterElement"]:
        moves = [
            LamplighterElement((), FreeGroupElement((letter,)))
            for letter in range(4)
        ]
        toggles = [
            LamplighterElement((((), h),), F2_IDENTITY)
            for h in range(1, self.lamp_group.order)
        ]
        return moves + toggles

    # -- metric -------------------------------------------------------------

    def word_length(self, x: "LamplighterElement") -> int:
        """Exact word length: lamp costs plus the minimal covering walk."""
        terminals = [(), x.cursor.word] + [v for v, _ in x.lamps]
        walk = _steiner_cyclic_sum(terminals) - len(x.cursor.word)
        return walk + sum(self.lamp_norm[h] for _, h in x.lamps)

    def distance(
        self, x: "LamplighterElement", y: "LamplighterElement"
    ) -> int:
        """d(x, y) = |x^-1 y|, computed in absolute coordinates: the walk
        runs from x's cursor to y's cursor visiting every vertex where the
        lamp assignments differ."""
        xl = dict(x.lamps)
        yl = dict(y.lamps)
        diff_cost = 0
        diff_vertices = []
        for v in xl.keys() | yl.keys():
            h = self.lamp_group.mul(
                self.lamp_group.inv(xl.get(v, 0)), yl.get(v, 0)
            )
            if h:
                diff_cost += self.lamp_norm[h]
                diff_vertices.append(v)
        terminals = [x.cursor.word, y.cursor.word] + diff_vertices
        walk = _steiner_cyclic_sum(terminals) - tree_distance(
            x.cursor.word, y.cursor.word
        )
        return walk + diff_cost

    # -- enumeration ----------------------------------------------------------

    def ball(self, radius: int) -> dict:
        """Every element of word length at most ``radius``, with lengths,
        by breadth-first search over the unit generating set."""
        if radius < 0:
            raise InvalidArgumentError("radius must be nonnegative")
        gens = self.generators()
        lengths = {self.identity: 0}
        frontier = [self.identity]
        for depth in range(1, radius + 1):
            nxt = []
            for x in frontier:
                for g in gens:
                    y = self.multiply(x, g)
                    if y not in lengths:
                        lengths[y] = depth
                        nxt.append(y)
            frontier = nxt
        return lengths


@dataclass(frozen=True)
class LamplighterElement:
    """(lamps, cursor): finitely many nonidentity lamp values on tree
    vertices, plus the cursor position."""

    lamps: tuple  # sorted ((vertex word, lamp value id), ...)
    cursor: FreeGroupElement

    def __post_init__(self):
        lamps = tuple(sorted((tuple(v), int(h)) for v, h in self.lamps))
        object.__setattr__(self, "lamps", lamps)
        seen = set()
        for v, h in lamps:
            if h == 0:
                raise InvalidArgumentError("lamp values must be nonidentity")
            if v in seen:
                raise InvalidArgumentError(f"vertex {v} listed twice")
            seen.add(v)
            FreeGroupElement(v)  # validates reduction

    @property
    def in_kernel(self) -> bool:
        return len(self.cursor.word) == 0


def _raw_element(lamps: tuple, cursor: FreeGroupElement) -> LamplighterElement:
    """Trusted constructor for canonical data from multiply/inverse; skips
    the per-vertex validation, which dominates bulk enumeration otherwise."""
    el = object.__new__(LamplighterElement)
    object.__setattr__(el, "lamps", lamps)
    object.__setattr__(el, "cursor", cursor)
    return el


def growth_function(radius: int, *, budget: int = 10) -> int:
    """|B_{F_2}(radius)| by explicit enumeration of reduced words."""
    if radius < 0:
        raise InvalidArgumentError("radius must be nonnegative")
    if radius > budget:
        raise ResourceBudgetError(
            f"radius {radius} beyond the enumeration budget {budget}"
        )
    count = 1
    frontier: list[tuple] = [()]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for letter in range(4):
                if w and letter == _INV[w[-1]]:
                    continue
                nxt.append(w + (letter,))
        count += len(nxt)
        frontier = nxt
    return count


# -- kernel component exploration ------------------------------------------------


@dataclass(frozen=True)
class KernelComponentResult:
    scale: Fraction
    component_size: int
    component_diameter: Fraction
    boundary_touched: bool
    exact: bool
    lamp_vertex_count: int


def _kernel_moves(group: LamplighterGroup, scale: Fraction, move_budget: int):
    """Kernel elements of word length strictly below ``scale``.

    A kernel move toggles a finite lamp pattern and returns the cursor, so
    its cost is the lamp total plus a closed walk through the support; the
    supports are enumerated by growing subsets of the tree ball of radius
    (scale - 1) / 2 with branch-and-bound on the walk cost.
    """
    if scale <= 1:
        return []
    max_depth = int((scale - 1) // 2)
    vertices = [()]
    frontier = [()]
    for _ in range(max_depth):
        nxt = []
        for w in frontier:
            for letter in range(4):
                if w and letter == _INV[w[-1]]:
                    continue
                nxt.append(w + (letter,))
        vertices.extend(nxt)
        frontier = nxt
    vertices.sort()
    lamp_values = list(range(1, group.lamp_group.order))

    moves = []

    def emit(support: list) -> None:
        for assignment in itertools.product(lamp_values, repeat=len(support)):
            lamp_cost = sum(group.lamp_norm[h] for h in assignment)
            walk = _steiner_cyclic_sum([()] + support)
            if lamp_cost + walk < scale:
                moves.append(
                    LamplighterElement(
                        tuple(zip(support, assignment)), F2_IDENTITY
                    )
                )
                if len(moves) > move_budget:
                    raise ResourceBudgetError(
                        f"more than {move_budget} kernel moves below scale "
                        f"{scale}"
                    )

    def grow(start: int, support: list) -> None:
        for idx in range(start, len(vertices)):
            cand = support + [vertices[idx]]
            # cheapest possible cost of any extension: one lamp per vertex
            # plus the closed walk through the current support
            if len(cand) + _steiner_cyclic_sum([()] + cand) >= scale:
                continue
            emit(cand)
            grow(idx + 1, cand)

    grow(0, [])
    return moves


def kernel_zero_dim_control(
    scale,
    budget,
    *,
    lamp_group: FiniteGroupTable | None = None,
    move_budget: int = 1 << 20,
    pair_budget: int = 4_000_000,
) -> KernelComponentResult:
    """Diameter of the identity's scale-component inside the kernel.

    The kernel (cursor at the identity) is a group under the induced metric
    and the metric is left invariant, so every component is a translate of
    the identity's; its diameter is therefore a lower bound for any
    0-dimensional control function of the kernel at this scale.  The
    exploration stays inside the ball of word length ``budget``; if any
    member could step outside it, the result is flagged as boundary-touched
    and stands as a lower bound only.

    Diameters are exhaustive over pairs when the component is small.  For a
    two-element lamp group whose component turns out to be the full power
    set of its lit-vertex union V, the diameter equals the distance from
    the empty configuration to the fully lit one: symmetric differences
    range over all subsets of V and the cost of a subset is monotone under
    inclusion.  Anything else is reported inexact.
    """
    scale = frac(scale)
    if scale <= 0:
        raise InvalidArgumentError("scale must be positive")
    budget = frac(budget)
    group = LamplighterGroup(lamp_group)
    moves = _kernel_moves(group, scale, move_budget)
    max_move = max((group.word_length(m) for m in moves), default=0)

    members = {group.identity}
    norms = {group.identity: 0}
    frontier = [group.identity]
    boundary = False
    while frontier:
        nxt = []
        for x in frontier:
            for mv in moves:
                y = group.multiply(x, mv)
                if y in members:
                    continue
                length = group.word_length(y)
                if length > budget:
                    boundary = True
                    continue
                members.add(y)
                norms[y] = length
                nxt.append(y)
        frontier = nxt
    if not boundary:
        # a member close enough to the edge could still have unexplored
        # neighbors beyond the ball even if none were generated
        top = max(norms.values())
        boundary = top + max_move > budget

    union_vertices = sorted({v for x in members for v, _ in x.lamps})
    size = len(members)

    exact = True
    if size * (size - 1) // 2 <= pair_budget:
        diameter = 0
        ordered = sorted(members, key=lambda e: (len(e.lamps), e.lamps))
        for i in range(len(ordered)):
            for j in range(i + 1, len(ordered)):
                d = group.distance(ordered[i], ordered[j])
                if d > diameter:
                    diameter = d
    elif group.lamp_group.order == 2 and size == 1 << len(union_vertices):
        full = LamplighterElement(
            tuple((v, 1) for v in union_vertices), F2_IDENTITY
        )
        if full not in members:
            raise AssertionError("power-set detection inconsistency")
        diameter = group.distance(group.identity, full)
    else:
        diameter = max(norms.values())  # crude lower bound via the identity
        exact = False

    return KernelComponentResult(
        scale,
        size,
        Fraction(diameter),
        boundary,
        exact,
        len(union_vertices),
    )
