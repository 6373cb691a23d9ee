"""Control functions and their transport along coarse embeddings.

A control function is a monotone map on nonnegative reals.  Closed forms
stay symbolic so that compositions produced by :func:`transport_control`
evaluate exactly whenever their parameters allow it; every evaluation is
clamped at zero, which also realizes the generalized-inverse convention
of returning 0 below the range of the inverted function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import InvalidArgumentError, OutOfRangeError
from .rationals import format_rational, frac, parse_rational


def _pow_maybe_exact(base: Fraction, exponent: Fraction):
    """base ** exponent, exact Fraction when the exponent is an integer."""
    if exponent.denominator == 1:
        return base ** exponent.numerator
    return float(base) ** float(exponent)


def _clamp(value):
    if isinstance(value, Fraction):
        return value if value > 0 else Fraction(0)
    return value if value > 0.0 else 0.0


class ControlFunction:
    """Base class; concrete forms implement ``_raw`` and ``describe``."""

    def __call__(self, s):
        return _clamp(self._raw(frac(s)))

    def _raw(self, s: Fraction):
        raise NotImplementedError

    def to_line(self) -> str:
        raise NotImplementedError

    def upper_inverse(self, t):
        """sup{x >= 0 : f(x) <= t}; 0 below the range by convention."""
        raise InvalidArgumentError(
            f"{type(self).__name__} does not support generalized inversion"
        )

    @property
    def diverges(self) -> bool:
        """True when the form provably tends to infinity."""
        return False


@dataclass(frozen=True)
class LinearControl(ControlFunction):
    """slope * s + offset with slope > 0."""

    slope: Fraction
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "slope", frac(self.slope))
        object.__setattr__(self, "offset", frac(self.offset))
        if self.slope <= 0:
            raise InvalidArgumentError("linear control needs slope > 0")

    def _raw(self, s: Fraction) -> Fraction:
        return self.slope * s + self.offset

    @property
    def is_identity(self) -> bool:
        return self.slope == 1 and self.offset == 0

    @property
    def diverges(self) -> bool:
        return True

    def upper_inverse(self, t) -> Fraction:
        return _clamp((frac(t) - self.offset) / self.slope)

    def to_line(self) -> str:
        return (
            f"linear C={format_rational(self.slope)} "
            f"k={format_rational(self.offset)}"
        )


IDENTITY = LinearControl(Fraction(1), Fraction(0))


@dataclass(frozen=True)
class PolynomialControl(ControlFunction):
    """sum_i coeffs[i] * s**i; nonconstant coefficients must be nonnegative
    so monotonicity on the nonnegative axis is guaranteed analytically."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(frac(c) for c in self.coeffs)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coeffs", coeffs)
        if not coeffs:
            raise InvalidArgumentError("polynomial needs at least one coefficient")
        if any(c < 0 for c in coeffs[1:]):
            raise InvalidArgumentError(
                "polynomial control requires nonnegative nonconstant coefficients"
            )

    def _raw(self, s: Fraction) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * s + c
        return acc

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def diverges(self) -> bool:
        return self.degree >= 1 and any(c > 0 for c in self.coeffs[1:])

    def to_line(self) -> str:
        return "polynomial " + " ".join(format_rational(c) for c in self.coeffs)


@dataclass(frozen=True)
class LogAffineControl(ControlFunction):
    """scale * log_base(1 + s) + offset with base > 1, scale > 0."""

    base: Fraction
    scale: Fraction = Fraction(1)
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "base", frac(self.base))
        object.__setattr__(self, "scale", frac(self.scale))
        object.__setattr__(self, "offset", frac(self.offset))
        if self.base <= 1:
            raise InvalidArgumentError("log base must exceed 1")
        if self.scale <= 0:
            raise InvalidArgumentError("log-affine control needs scale > 0")

    def _raw(self, s: Fraction) -> float:
        return (
            float(self.scale) * math.log1p(float(s)) / math.log(float(self.base))
            + float(self.offset)
        )

    @property
    def diverges(self) -> bool:
        return True

    def upper_inverse(self, t):
        exponent = (frac(t) - self.offset) / self.scale
        return _clamp(_pow_maybe_exact(self.base, exponent) - 1)

    def to_line(self) -> str:
        return (
            f"logaffine base={format_rational(self.base)} "
            f"C={format_rational(self.scale)} b={format_rational(self.offset)}"
        )


@dataclass(frozen=True)
class PowerAffineControl(ControlFunction):
    """(base ** exponent) * (1 + s) ** power + offset.

    Produced by transporting a linear control through logarithmic
    contraction/dilatation profiles; evaluates exactly when ``exponent``
    is an integer and ``power`` a nonnegative integer.
    """

    base: Fraction
    exponent: Fraction
    power: Fraction
    offset: Fraction

    def __post_init__(self):
        for name in ("base", "exponent", "power", "offset"):
            object.__setattr__(self, name, frac(getattr(self, name)))
        if self.base <= 0:
            raise InvalidArgumentError("power-affine base must be positive")
        if self.power < 0:
            raise InvalidArgumentError(
                "power-affine control requires a nonnegative power"
            )

    def _raw(self, s: Fraction):
        lead = _pow_maybe_exact(self.base, self.exponent)
        grow = _pow_maybe_exact(1 + s, self.power)
        if isinstance(lead, Fraction) and isinstance(grow, Fraction):
            return lead * grow + self.offset
        return float(lead) * float(grow) + float(self.offset)

    @property
    def diverges(self) -> bool:
        return self.power > 0

    def as_polynomial(self) -> PolynomialControl:
        """Exact polynomial form, defined for integer exponent and power."""
        if self.exponent.denominator != 1 or self.power.denominator != 1:
            raise InvalidArgumentError("no exact polynomial form exists")
        lead = self.base ** self.exponent.numerator
        p = self.power.numerator
        coeffs = [lead * math.comb(p, i) for i in range(p + 1)]
        coeffs[0] += self.offset
        return PolynomialControl(tuple(coeffs))

    def to_line(self) -> str:
        return (
            f"power base={format_rational(self.base)} "
            f"q={format_rational(self.exponent)} "
            f"p={format_rational(self.power)} "
            f"offset={format_rational(self.offset)}"
        )


@dataclass(frozen=True)
class TabulatedControl(ControlFunction):
    """Sorted samples, piecewise constant from the right between them.

    For a monotone target this is the safe over-approximation: the value at
    ``x`` is the sample value at the next sampled abscissa.  Queries beyond
    the last sample raise :class:`OutOfRangeError`.
    """

    samples: tuple

    def __post_init__(self):
        samples = tuple(
            (frac(x), frac(y)) for x, y in self.samples
        )
        object.__setattr__(self, "samples", samples)
        if not samples:
            raise InvalidArgumentError("tabulated control needs samples")
        xs = [x for x, _ in samples]
        ys = [y for _, y in samples]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise InvalidArgumentError("sample abscissae must strictly increase")
        if any(b < a for a, b in zip(ys, ys[1:])):
            raise InvalidArgumentError("tabulated control must be monotone")

    def _raw(self, s: Fraction):
        for x, y in self.samples:
            if s <= x:
                return y
        raise OutOfRangeError(
            f"argument {s} beyond last sample {self.samples[-1][0]}"
        )

    def upper_inverse(self, t):
        t = frac(t)
        if t >= self.samples[-1][1]:
            raise OutOfRangeError(
                f"inverse query {t} at or beyond the top sampled value "
                f"{self.samples[-1][1]} is unbounded"
            )
        best = Fraction(0)
        for x, y in self.samples:
            if y <= t:
                best = x
        return best

    def to_line(self) -> str:
        body = " ".join(
            f"{format_rational(x)}:{format_rational(y)}" for x, y in self.samples
        )
        return "tabulated " + body


def parse_control(line: str) -> ControlFunction:
    """Parse the one-line tagged serialization of any control form."""
    parts = line.split()
    if not parts:
        raise InvalidArgumentError("empty control line")
    tag, rest = parts[0], parts[1:]
    if tag == "linear":
        kv = _parse_kv(rest, {"C", "k"})
        return LinearControl(kv["C"], kv["k"])
    if tag == "polynomial":
        return PolynomialControl(tuple(parse_rational(tok) for tok in rest))
    if tag == "logaffine":
        kv = _parse_kv(rest, {"base", "C", "b"})
        return LogAffineControl(kv["base"], kv["C"], kv["b"])
    if tag == "power":
        kv = _parse_kv(rest, {"base", "q", "p", "offset"})
        return PowerAffineControl(kv["base"], kv["q"], kv["p"], kv["offset"])
    if tag == "tabulated":
        samples = []
        for tok in rest:
            x, _, y = tok.partition(":")
            samples.append((parse_rational(x), parse_rational(y)))
        return TabulatedControl(tuple(samples))
    raise InvalidArgumentError(f"unknown control form {tag!r}")


def _parse_kv(tokens: Iterable[str], keys: set) -> dict:
    out = {}
    for tok in tokens:
        key, _, val = tok.partition("=")
        if key not in keys:
            raise InvalidArgumentError(f"unexpected key {key!r}")
        out[key] = parse_rational(val)
    missing = keys - out.keys()
    if missing:
        raise InvalidArgumentError(f"missing keys {sorted(missing)}")
    return out


_PROBE_GRID = tuple(Fraction(k) for k in (0, 1, 2, 3, 5, 8, 13, 21, 55, 144))


@dataclass(frozen=True)
class CoarseEmbeddingProfile:
    """Contraction/dilatation pair squeezing an embedding:
    rho_minus(d(x,y)) <= d(f x, f y) <= rho_plus(d(x,y)).

    ``divergence_verified`` records whether rho_minus provably diverges;
    for tabulated forms this cannot be decided and is flagged False.
    """

    rho_plus: ControlFunction
    rho_minus: ControlFunction

    def __post_init__(self):
        for x in _PROBE_GRID:
            try:
                lo, hi = self.rho_minus(x), self.rho_plus(x)
            except OutOfRangeError:
                break
            if lo > hi:
                raise InvalidArgumentError(
                    f"rho_minus({x}) = {lo} exceeds rho_plus({x}) = {hi}"
                )

    @property
    def divergence_verified(self) -> bool:
        return self.rho_minus.diverges

    @property
    def is_identity(self) -> bool:
        return (
            isinstance(self.rho_plus, LinearControl)
            and isinstance(self.rho_minus, LinearControl)
            and self.rho_plus.is_identity
            and self.rho_minus.is_identity
        )


def identity_profile() -> CoarseEmbeddingProfile:
    return CoarseEmbeddingProfile(IDENTITY, IDENTITY)


def _compose_poly_linear(poly: PolynomialControl, inner: LinearControl) -> tuple:
    """Coefficients of poly(inner.slope * s + inner.offset), exact."""
    acc = [Fraction(0)]
    for c in reversed(poly.coeffs):
        # acc = acc * (C s + k) + c
        nxt = [Fraction(0)] * (len(acc) + 1)
        for i, a in enumerate(acc):
            nxt[i + 1] += a * inner.slope
            nxt[i] += a * inner.offset
        nxt[0] += c
        acc = nxt
    while len(acc) > 1 and acc[-1] == 0:
        acc.pop()
    return tuple(acc)


def transport_control(
    d_y: ControlFunction,
    profile: CoarseEmbeddingProfile,
    grid: Iterable | None = None,
) -> ControlFunction:
    """Pull a control function back through a coarse embedding.

    Returns the composition ``upper_inverse(rho_minus) . d_y . rho_plus``.
    The result is closed form whenever all three parts are (identity,
    linear, or log-affine with a shared base); otherwise a tabulated
    function is built on the caller-supplied ``grid``.
    """
    if profile.is_identity:
        return d_y
    rp, rm = profile.rho_plus, profile.rho_minus

    if isinstance(rp, LinearControl) and isinstance(rm, LinearControl):
        if isinstance(d_y, LinearControl):
            slope = d_y.slope * rp.slope / rm.slope
            offset = (d_y.slope * rp.offset + d_y.offset - rm.offset) / rm.slope
            return LinearControl(slope, offset)
        if isinstance(d_y, PolynomialControl):
            coeffs = list(_compose_poly_linear(d_y, rp))
            coeffs = [c / rm.slope for c in coeffs]
            coeffs[0] -= rm.offset / rm.slope
            return PolynomialControl(tuple(coeffs))

    if (
        isinstance(rp, LogAffineControl)
        and isinstance(rm, LogAffineControl)
        and rp.base == rm.base
        and isinstance(d_y, LinearControl)
    ):
        base = rm.base
        power = d_y.slope * rp.scale / rm.scale
        exponent = (d_y.slope * rp.offset + d_y.offset - rm.offset) / rm.scale
        return PowerAffineControl(base, exponent, power, Fraction(-1))

    if grid is None:
        raise InvalidArgumentError(
            "no closed-form composition for these forms; supply an "
            "evaluation grid for a tabulated result"
        )
    samples = []
    for raw in grid:
        x = frac(raw)
        value = rm.upper_inverse(d_y(rp(x)))
        if isinstance(value, float):
            value = Fraction(value)
        samples.append((x, value))
    samples.sort()
    ys = [y for _, y in samples]
    monotone = [max(ys[: i + 1]) for i in range(len(ys))]
    return TabulatedControl(tuple((x, y) for (x, _), y in zip(samples, monotone)))
