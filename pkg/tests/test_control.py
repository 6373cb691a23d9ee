"""Control-function forms, generalized inverses and transport."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from coarsedim.control import (
    CoarseEmbeddingProfile,
    LinearControl,
    LogAffineControl,
    PolynomialControl,
    PowerAffineControl,
    TabulatedControl,
    identity_profile,
    parse_control,
    transport_control,
)
from coarsedim.errors import InvalidArgumentError, OutOfRangeError

rationals = st.fractions(
    min_value=Fraction(-5), max_value=Fraction(5), max_denominator=6
)
positive_rationals = st.fractions(
    min_value=Fraction(1, 6), max_value=Fraction(5), max_denominator=6
)


# -- form basics ------------------------------------------------------------------


def test_linear_eval_and_clamp():
    f = LinearControl(2, -3)
    assert f(5) == 7
    assert f(1) == 0  # raw value -1 clamps to 0


def test_linear_needs_positive_slope():
    with pytest.raises(InvalidArgumentError):
        LinearControl(0)


def test_polynomial_exact_eval():
    f = PolynomialControl((1, 0, 2))
    assert f(Fraction(3, 2)) == 1 + 2 * Fraction(9, 4)


def test_polynomial_monotonicity_guard():
    with pytest.raises(InvalidArgumentError):
        PolynomialControl((0, -1))


def test_log_affine_values():
    f = LogAffineControl(10)
    assert f(9) == pytest.approx(1.0)
    assert f(0) == pytest.approx(0.0)
    with pytest.raises(InvalidArgumentError):
        LogAffineControl(1)


def test_tabulated_right_constant_and_range():
    f = TabulatedControl(((1, 2), (3, 5), (6, 6)))
    assert f(0) == 2       # before the first sample: first value
    assert f(1) == 2
    assert f(2) == 5       # constant from the right
    assert f(6) == 6
    with pytest.raises(OutOfRangeError):
        f(7)
    with pytest.raises(InvalidArgumentError):
        TabulatedControl(((0, 3), (1, 2)))  # not monotone


def test_parse_roundtrip():
    for f in (
        LinearControl(3, 0),
        PolynomialControl((Fraction(1, 2), 2)),
        LogAffineControl(10, 2, Fraction(1, 3)),
        PowerAffineControl(10, 1, 3, -1),
        TabulatedControl(((0, 0), (2, 3))),
    ):
        line = f.to_line()
        back = parse_control(line)
        assert back == f, line
    with pytest.raises(InvalidArgumentError):
        parse_control("mystery 1 2")


# -- generalized inverse -----------------------------------------------------------


def test_upper_inverse_below_range_is_zero():
    f = LinearControl(1, 5)  # range starts at 5
    assert f.upper_inverse(3) == 0


def test_tabulated_upper_inverse():
    f = TabulatedControl(((0, 1), (2, 3), (5, 9)))
    assert f.upper_inverse(3) == 2   # sup of the sublevel set
    assert f.upper_inverse(0) == 0   # below range
    with pytest.raises(OutOfRangeError):
        f.upper_inverse(9)           # unbounded sublevel set


@settings(max_examples=50, deadline=None)
@given(
    slope=positive_rationals,
    offset=rationals,
    t=st.fractions(min_value=0, max_value=20, max_denominator=8),
    x=st.fractions(min_value=0, max_value=20, max_denominator=8),
)
def test_inverse_sandwich_linear(slope, offset, t, x):
    f = LinearControl(slope, offset)
    inv_t = f.upper_inverse(t)
    assert slope * inv_t + offset <= max(t, offset)  # f(inv(t)) <= t on range
    if f(x) == slope * x + offset:  # x above the clamp region
        assert f.upper_inverse(slope * x + offset) == x


def test_inverse_sandwich_log_affine():
    f = LogAffineControl(10, 1, 0)
    for x in (0, 9, 99, Fraction(3, 2)):
        t = Fraction(math.floor(f(x) * 2 ** 30), 2 ** 30)
        recovered = f.upper_inverse(t)
        assert abs(float(recovered) - float(x)) < 1e-6
    assert f.upper_inverse(2) == 99  # exact for integer exponents


# -- transport ---------------------------------------------------------------------


def test_identity_profile_is_identity_transport():
    d_y = PolynomialControl((1, 2, 3))
    assert transport_control(d_y, identity_profile()) is d_y


def test_linear_profile_transport_example():
    # contraction x/2, dilatation 2x, linear bound 3s: composition is 12s
    profile = CoarseEmbeddingProfile(
        LinearControl(2), LinearControl(Fraction(1, 2))
    )
    out = transport_control(LinearControl(3), profile)
    assert isinstance(out, LinearControl)
    for s in range(0, 30, 3):
        # oracle: direct composition rho_minus^-1(D(rho_plus(s)))
        assert out(s) == profile.rho_minus.upper_inverse(
            LinearControl(3)(profile.rho_plus(s))
        )
    assert out(5) == 60


def test_polynomial_through_linear_profile():
    profile = CoarseEmbeddingProfile(LinearControl(2, 1), LinearControl(1))
    d_y = PolynomialControl((1, 0, 1))  # 1 + s^2
    out = transport_control(d_y, profile)
    assert isinstance(out, PolynomialControl)
    for s in (0, 1, Fraction(7, 2), 9):
        assert out(s) == d_y(2 * s + 1)  # inverse of the identity contraction


def test_log_profile_produces_power_form():
    log10 = LogAffineControl(10)
    profile = CoarseEmbeddingProfile(log10, log10)
    out = transport_control(LinearControl(3, 1), profile)
    assert isinstance(out, PowerAffineControl)
    # 10^1 * (1+s)^3 - 1, exactly
    assert out(Fraction(1, 2)) == 10 * Fraction(27, 8) - 1
    poly = out.as_polynomial()
    assert poly(7) == out(7)


def test_transport_fallback_requires_grid():
    d_y = LinearControl(Fraction(1, 2))
    profile = CoarseEmbeddingProfile(
        TabulatedControl(((0, 0), (10, 7))),
        TabulatedControl(((0, 0), (5, 2), (10, 6))),
    )
    with pytest.raises(InvalidArgumentError):
        transport_control(d_y, profile)
    out = transport_control(d_y, profile, grid=[0, 1, 5])
    assert isinstance(out, TabulatedControl)
    for x in (0, 1, 5):
        assert out(x) == profile.rho_minus.upper_inverse(
            d_y(profile.rho_plus(x))
        )


def test_profile_validation():
    with pytest.raises(InvalidArgumentError):
        CoarseEmbeddingProfile(LinearControl(1), LinearControl(2))  # lo > hi
    profile = CoarseEmbeddingProfile(
        LinearControl(60), TabulatedControl(((0, 0), (100, 50)))
    )
    assert not profile.divergence_verified  # tabulated: cannot certify
    assert identity_profile().divergence_verified
