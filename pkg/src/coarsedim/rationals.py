"""Exact rational helpers.

All distances, norms, weights and scales in this library are
:class:`fractions.Fraction` values.  Floats are rejected at construction
boundaries so that comparisons near pass/fail thresholds stay exact;
the only modules that leave rational arithmetic are the logarithmic
rescaling paths, which are explicit about it.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import InvalidArgumentError

Rational = Fraction


def frac(value) -> Fraction:
    """Coerce ``value`` to an exact Fraction.

    Accepts int, Fraction and strings like ``"3/4"`` or ``"7"``.  Floats are
    rejected: silently converting them would smuggle rounding error into
    exact comparisons.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidArgumentError(f"cannot parse rational {value!r}") from exc
    if isinstance(value, float):
        raise InvalidArgumentError(
            f"float {value!r} rejected; pass an int, Fraction or 'p/q' string"
        )
    raise InvalidArgumentError(f"cannot interpret {value!r} as a rational")


def format_rational(value: Fraction) -> str:
    """Canonical ``num/den`` text form (always carries the denominator)."""
    value = frac(value)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: str) -> Fraction:
    """Inverse of :func:`format_rational`; also accepts bare integers."""
    return frac(text)
