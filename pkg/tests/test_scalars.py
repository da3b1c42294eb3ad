"""Scalar field: canonical forms, arithmetic, evaluation, printing."""

from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qeuclid.scalars import (
    SC_ONE,
    SC_ZERO,
    FieldAt,
    FieldQ,
    Scalar,
    field_h,
    field_k,
    frac_sqrt,
    qpow,
    spow,
)

S = spow(1)
FIELD = FieldQ()


def test_constants_evaluate_to_frozen_values():
    # independently computed at s0 = 2: h = 2 - 1/2, k = 4 - 1/4
    assert field_h(FIELD).eval(F(2)) == F(3, 2)
    assert field_k(FIELD).eval(F(2)) == F(15, 4)
    assert qpow(-2).eval(F(2)) == F(1, 16)
    assert qpow(F(1, 2)).eval(F(3, 2)) == F(3, 2)


def test_simplification_cancels_common_factors():
    assert (S * S - 1) / (S - 1) == S + 1
    assert 1 / (S - 1) + 1 / (S + 1) == 2 * S / (S * S - 1)
    # q^3 - q over q^2 - q reduces to q + 1
    assert (qpow(3) - qpow(1)) / (qpow(2) - qpow(1)) == qpow(1) + 1


def test_inverse_roundtrip():
    h = field_h(FIELD)
    assert h * (1 / h) == SC_ONE
    assert (1 / h) * h == 1


def test_zero_and_bool():
    assert not SC_ZERO
    assert SC_ONE
    assert (S - S) == 0
    assert not (S - S)


def test_power_negative_exponent():
    assert qpow(1) ** -2 == qpow(-2)
    assert (S + 1) ** 0 == SC_ONE


def test_rational_extraction():
    assert Scalar.from_fraction(F(3, 2)).as_fraction() == F(3, 2)
    assert SC_ZERO.as_fraction() == 0
    with pytest.raises(ValueError):
        (S + 1).as_fraction()


def test_sqrt_exact_cases():
    x = (qpow(1) - 1) ** 2 / qpow(1)
    r = x.sqrt()
    assert r is not None and r * r == x
    assert r == field_h(FIELD)
    assert (S + 1).sqrt() is None
    assert Scalar.from_fraction(F(9, 4)).sqrt() == Scalar.from_fraction(F(3, 2))
    assert Scalar.from_fraction(2).sqrt() is None


def test_frac_sqrt():
    assert frac_sqrt(F(9, 16)) == F(3, 4)
    assert frac_sqrt(F(2)) is None
    assert frac_sqrt(F(-4)) is None


def test_printing_q_syntax():
    assert str(field_h(FIELD)) == "(q - 1)/q^(1/2)"
    assert str(field_k(FIELD)) == "(q^2 - 1)/q"
    assert str(SC_ZERO) == "0"
    assert str(-qpow(1)) == "-q"
    assert str((qpow(1) + 1) / (qpow(1) - 1)) == "(q + 1)/(q - 1)"
    assert str(Scalar.from_fraction(F(-3, 2))) == "-3/2"
    assert str(2 * S / (qpow(1) - 1)) == "2*q^(1/2)/(q - 1)"


def test_eval_pole_raises():
    with pytest.raises(ZeroDivisionError):
        (1 / (S - 1)).eval(F(1))


def test_field_at_matches_symbolic_eval():
    fa = FieldAt(F(7, 5))
    h_sym = field_h(FIELD).eval(F(7, 5))
    assert field_h(fa) == h_sym
    assert fa.s_power(-3) == F(125, 343)


def test_field_at_rejects_degenerate_points():
    for bad in (0, 1, -1):
        with pytest.raises(ValueError):
            FieldAt(F(bad))


# small scalars built from s-powers and rationals
_scalars = st.builds(
    lambda k, a, b: spow(k) * F(a, b),
    st.integers(-4, 4),
    st.integers(-9, 9),
    st.integers(1, 9),
).map(lambda x: x + 1) | st.builds(
    lambda a: Scalar.from_fraction(F(a)), st.integers(-20, 20)
)


@settings(max_examples=150, deadline=None)
@given(_scalars, _scalars, _scalars)
def test_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a
    assert a * b == b * a
    assert a - a == SC_ZERO
    if a != 0:
        assert a * (1 / a) == SC_ONE


@settings(max_examples=150, deadline=None)
@given(_scalars, _scalars)
def test_eval_is_a_homomorphism(a, b):
    s0 = F(13, 8)
    assert (a * b).eval(s0) == a.eval(s0) * b.eval(s0)
    assert (a + b).eval(s0) == a.eval(s0) + b.eval(s0)


@settings(max_examples=100, deadline=None)
@given(_scalars)
def test_square_then_sqrt_roundtrip(a):
    sq = a * a
    r = sq.sqrt()
    assert r is not None
    assert r * r == sq
