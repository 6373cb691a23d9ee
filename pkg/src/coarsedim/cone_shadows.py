"""Finite-scale shadows of the ultrametric-cone circle of ideas.

This is the one module that leaves rational arithmetic: logarithms are
evaluated with mpmath at 40 decimal digits and quantized to dyadic
rationals with denominator 2**50, and every inequality that a rounding
error could flip carries an explicit slack of 2**-40 applied only in the
direction that avoids reporting a spurious counterexample (results inside
the slack are flagged marginal).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import InvalidArgumentError
from .metric import FiniteMetricSpace
from .rationals import frac

_QUANT = 1 << 50
SLACK = Fraction(1, 1 << 40)
_TRIANGLE_LIMIT = 600


def _mp(value) -> mpmath.mpf:
    value = frac(value)
    with mpmath.workdps(40):
        return mpmath.mpf(value.numerator) / mpmath.mpf(value.denominator)


def _log_base(value: Fraction, base: Fraction) -> mpmath.mpf:
    with mpmath.workdps(40):
        return mpmath.log(_mp(value)) / mpmath.log(_mp(base))


def quantized_log1p(distance, base) -> Fraction:
    """log_base(1 + distance) rounded to the nearest multiple of 2**-50."""
    d = frac(distance)
    if d == 0:
        return Fraction(0)
    with mpmath.workdps(40):
        val = _log_base(1 + d, frac(base))
        return Fraction(int(mpmath.nint(val * _QUANT)), _QUANT)


def log_base_constant(base, argument=2) -> Fraction:
    """log_base(argument) as a quantized dyadic rational."""
    base = frac(base)
    if base <= 1:
        raise InvalidArgumentError("base must exceed 1")
    with mpmath.workdps(40):
        val = _log_base(frac(argument), base)
        return Fraction(int(mpmath.nint(val * _QUANT)), _QUANT)


def log_rescale(space: FiniteMetricSpace, base=10) -> FiniteMetricSpace:
    """Replace every distance d by log_base(1 + d).

    Concavity of the logarithm preserves the triangle inequality, with a
    strict margin whenever both legs are positive; the quantized output is
    re-validated exhaustively on spaces small enough for the cubic scan.
    """
    base = frac(base)
    if base <= 1:
        raise InvalidArgumentError("log base must exceed 1")
    den = space.denominator
    cache: dict[int, int] = {}

    def quantize(num: int) -> int:
        got = cache.get(num)
        if got is None:
            got = int(quantized_log1p(Fraction(num, den), base) * _QUANT)
            cache[num] = got
        return got

    old = space.numerators
    n = len(space)
    new = np.zeros((n, n), dtype=np.int64)
    for num in np.unique(old):
        new[old == num] = quantize(int(num))
    level = True if n <= _TRIANGLE_LIMIT else "basic"
    return FiniteMetricSpace.from_matrix(space.points, new, _QUANT, validate=level)


# -- ultrametric defect --------------------------------------------------------


@dataclass(frozen=True)
class DefectSample:
    x: object
    y: object
    z: object
    d_xy: Fraction
    max_side: Fraction
    defect: Fraction


@dataclass(frozen=True)
class UltrametricDefectProfile:
    samples: tuple

    def __post_init__(self):
        # triangle sanity: defect <= min(d(x,z), d(y,z)) <= max_side
        for s in self.samples:
            if s.defect > min(s.d_xy, s.max_side):
                raise InvalidArgumentError(
                    f"defect sample {s} violates the triangle sanity bound"
                )

    def to_csv_rows(self) -> list[dict]:
        return [
            {
                "x": s.x,
                "y": s.y,
                "z": s.z,
                "d_xy": s.d_xy,
                "max_side": s.max_side,
                "defect": s.defect,
            }
            for s in self.samples
        ]


@dataclass(frozen=True)
class DefectResult:
    defect: Fraction
    degenerate: bool
    worst: tuple | None
    profile: UltrametricDefectProfile | None


def _min_over_third(num: np.ndarray) -> np.ndarray:
    """M[i, j] = min over z of max(d(i, z), d(j, z)), exact integer matrix."""
    n = num.shape[0]
    out = np.empty((n, n), dtype=np.int64)
    buf = np.empty((n, n), dtype=np.int64)
    for i in range(n):
        np.maximum(num[i][None, :], num, out=buf)
        buf.min(axis=1, out=out[i])
    return out


def ultrametric_defect(
    space: FiniteMetricSpace, *, profile_size: int = 0
) -> DefectResult:
    """Exact supremum of d(x, y) - max(d(x, z), d(y, z)) over ordered triples.

    Zero certifies an ultrametric space.  Fewer than three points is
    degenerate and reports zero.  The scan works pairwise: for each pair the
    inner maximum is minimized over the third point, which is exactly the
    triple supremum restricted to that pair.
    """
    n = len(space)
    if n < 3:
        return DefectResult(Fraction(0), True, None, None)
    num = np.asarray(space.numerators, dtype=np.int64)
    m = _min_over_third(num)
    gap = num - m
    np.fill_diagonal(gap, np.iinfo(np.int64).min)
    best = int(gap.max())
    i, j = map(int, divmod(int(gap.argmax()), n))
    z = int(np.maximum(num[i], num[j]).argmin())
    defect = Fraction(max(best, 0), space.denominator)
    worst = (space.points[i], space.points[j], space.points[z])

    profile = None
    if profile_size > 0:
        flat = gap.ravel()
        order = np.argsort(flat, kind="stable")[::-1][: profile_size * 2]
        samples = []
        seen = set()
        for pos in order:
            a, b = map(int, divmod(int(pos), n))
            if a == b or (b, a) in seen:
                continue
            seen.add((a, b))
            zz = int(np.maximum(num[a], num[b]).argmin())
            samples.append(
                DefectSample(
                    space.points[a],
                    space.points[b],
                    space.points[zz],
                    Fraction(int(num[a, b]), space.denominator),
                    Fraction(int(m[a, b]), space.denominator),
                    Fraction(int(gap[a, b]), space.denominator),
                )
            )
            if len(samples) >= profile_size:
                break
        profile = UltrametricDefectProfile(tuple(samples))
    return DefectResult(defect, False, worst, profile)


# -- epsilon hypothesis --------------------------------------------------------


@dataclass(frozen=True)
class EpsilonForm:
    """The vanishing correction d -> log(2) / log(d/2 + 1) plus a constant.

    ``constant`` is the additive k; :meth:`constant_value` resolves it to a
    quantized rational (it may be specified as a logarithm so checks against
    log-rescaled spaces stay consistent).  At d = 0 the correction is
    treated as +infinity, making the inequality vacuous there.
    """

    constant: Fraction
    constant_is_log_base: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "constant", frac(self.constant))
        if self.constant_is_log_base is not None:
            object.__setattr__(
                self, "constant_is_log_base", frac(self.constant_is_log_base)
            )

    @classmethod
    def with_log_constant(cls, base, argument=2) -> "EpsilonForm":
        return cls(log_base_constant(base, argument), frac(base))

    def constant_value(self) -> Fraction:
        return self.constant

    def epsilon_at(self, d) -> mpmath.mpf | None:
        """epsilon(d), or None (meaning +infinity) at d = 0."""
        d = frac(d)
        if d < 0:
            raise InvalidArgumentError("distances are nonnegative")
        if d == 0:
            return None
        with mpmath.workdps(40):
            return mpmath.log(2) / mpmath.log(_mp(d) / 2 + 1)

    def vanishes(self, grid=(10, 100, 10_000, 10 ** 8)) -> bool:
        values = [self.epsilon_at(frac(g)) for g in grid]
        return all(
            b < a for a, b in zip(values, values[1:])
        ) and values[-1] < mpmath.mpf("0.25")


@dataclass(frozen=True)
class EpsilonCheckResult:
    passed: bool
    marginal: bool
    worst: tuple | None
    pairs_checked: int


def _epsilon_pair_ok(
    d: Fraction, max_side: Fraction, eps: EpsilonForm
) -> tuple[bool, bool]:
    """(holds, marginal) for d <= (1 + eps(d)) * max_side + k, with slack."""
    e = eps.epsilon_at(d)
    if e is None:
        return True, False
    with mpmath.workdps(40):
        rhs = (1 + e) * _mp(max_side) + _mp(eps.constant_value())
        lhs = _mp(d)
        if lhs <= rhs:
            return True, False
        if lhs <= rhs + _mp(SLACK):
            return True, True
        return False, False


def epsilon_hypothesis_check(
    space: FiniteMetricSpace, eps: EpsilonForm
) -> EpsilonCheckResult:
    """Check d(x,y) <= (1 + eps(d(x,y))) * max(d(x,z), d(y,z)) + k for every
    ordered triple.

    Per pair the binding third point is the one minimizing the inner
    maximum, so the scan is pairwise with an exact inner minimization;
    verdicts within the 2**-40 slack count as satisfied but flag the result
    marginal.
    """
    n = len(space)
    num = np.asarray(space.numerators, dtype=np.int64)
    if n < 3:
        return EpsilonCheckResult(True, False, None, 0)
    m = _min_over_third(num)
    den = space.denominator
    pair_values = {}
    for i in range(n):
        for j in range(i + 1, n):
            pair_values.setdefault((int(num[i, j]), int(m[i, j])), (i, j))
    marginal = False
    worst_pair = None
    worst_margin = None
    for (d_num, m_num), (i, j) in sorted(pair_values.items()):
        d = Fraction(d_num, den)
        side = Fraction(m_num, den)
        ok, is_marginal = _epsilon_pair_ok(d, side, eps)
        marginal = marginal or is_marginal
        if not ok:
            e = eps.epsilon_at(d)
            with mpmath.workdps(40):
                margin = _mp(d) - ((1 + e) * _mp(side) + _mp(eps.constant_value()))
            if worst_margin is None or margin > worst_margin:
                worst_margin = margin
                worst_pair = (i, j)
    if worst_pair is not None:
        i, j = worst_pair
        z = int(np.maximum(num[i], num[j]).argmin())
        worst = (space.points[i], space.points[j], space.points[z])
        return EpsilonCheckResult(False, marginal, worst, len(pair_values))
    return EpsilonCheckResult(True, marginal, None, len(pair_values))


# -- reduction primitives for monotone rescales of integer spaces ---------------


@dataclass(frozen=True)
class PairFloorStats:
    """Per realized distance value v, the minimum over pairs at distance v
    of min_z max(d(x,z), d(y,z)), on an integer-valued space.

    Both the ultrametric defect and the epsilon hypothesis of a monotone
    rescale depend on pairs only through (v, that minimum): minima commute
    with monotone maps, the rescaled correction is constant on each v, and
    the right-hand side is increasing in the inner maximum.  The entries
    must be exact; how they were certified is the caller's business.
    """

    entries: tuple  # ((v: Fraction, floor: Fraction), ...)

    def __post_init__(self):
        entries = tuple(
            (frac(v), frac(f)) for v, f in self.entries
        )
        object.__setattr__(self, "entries", entries)
        for v, f in entries:
            if not 0 < f <= v or f < v / 2:
                raise InvalidArgumentError(
                    f"floor {f} impossible for distance {v}: the triangle "
                    f"inequality forces d/2 <= floor <= d"
                )


def rescaled_defect_from_stats(stats: PairFloorStats, base) -> Fraction:
    """Exact defect of the log_base(1+d) rescale, from the pair floors."""
    base = frac(base)
    best = Fraction(0)
    for v, f in stats.entries:
        gap = quantized_log1p(v, base) - quantized_log1p(f, base)
        best = max(best, gap)
    return best


def rescaled_defect_bound_exact(stats: PairFloorStats) -> bool:
    """Rational certificate that the rescaled defect is at most log(2):
    log(1+v) - log(1+f) <= log 2 iff 1 + v <= 2 * (1 + f), checked exactly."""
    return all(1 + v <= 2 * (1 + f) for v, f in stats.entries)


def rescaled_epsilon_check_from_stats(
    stats: PairFloorStats, eps: EpsilonForm, base
) -> EpsilonCheckResult:
    """Epsilon hypothesis for the log rescale, evaluated on the pair floors."""
    base = frac(base)
    marginal = False
    worst = None
    for v, f in stats.entries:
        d_resc = quantized_log1p(v, base)
        m_resc = quantized_log1p(f, base)
        ok, is_marginal = _epsilon_pair_ok(d_resc, m_resc, eps)
        marginal = marginal or is_marginal
        if not ok:
            worst = (v, f)
            return EpsilonCheckResult(False, marginal, worst, len(stats.entries))
    return EpsilonCheckResult(True, marginal, None, len(stats.entries))
