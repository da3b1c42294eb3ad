"""Expression grammar: parsing, printing, round trips, error reporting."""

from fractions import Fraction as F
from random import Random

import pytest

from qeuclid.grammar import ParseError, parse_expr, parse_scalar, poly_str, word_str
from qeuclid.ncengine import Generator, NcPoly, Registry
from qeuclid.scalars import FieldAt, FieldQ, qpow
from util_random import random_poly

FQ = FieldQ()


def _registry():
    return Registry(
        [
            Generator("d[0]", "diag", (0,), 0, invertible=True),
            Generator("L+[-1,0]", "L+", (-1, 0), 1),
            Generator("sqrtp0", "root", (0,), 2, invertible=True),
            Generator("sqrtP[1]", "root", (1,), 3, invertible=True),
            Generator("p[-1]", "p", (-1,), 4),
            Generator("p[0]", "p", (0,), 5),
            Generator("p[1]", "p", (1,), 6),
        ],
        aliases={"L-[1,0]": "d[0]"},
    )


REG = _registry()


def _gen_poly(name, exp=1):
    return NcPoly(FQ, {((REG.gen(name).rank, exp),): FQ.one()})


def test_parse_scalar_basics():
    assert parse_scalar("q", FQ) == qpow(1)
    assert parse_scalar("q^(1/2)", FQ) == qpow(F(1, 2))
    assert parse_scalar("q^(-3/2)", FQ) == qpow(F(-3, 2))
    assert parse_scalar("(q - 1)/q^(1/2)", FQ) == (qpow(1) - 1) / qpow(F(1, 2))
    assert parse_scalar("-3/2", FQ) == FQ.from_fraction(F(-3, 2))
    assert parse_scalar("2*q + 1", FQ) == 2 * qpow(1) + 1
    assert parse_scalar("q^-1", FQ) == qpow(-1)
    assert parse_scalar("(q + 1)^2", FQ) == (qpow(1) + 1) ** 2
    assert parse_scalar("2^-2", FQ) == FQ.from_fraction(F(1, 4))


def test_parse_scalar_eval_field():
    fa = FieldAt(F(3, 2))
    assert parse_scalar("q", fa) == F(9, 4)
    assert parse_scalar("q^(1/2)", fa) == F(3, 2)
    assert parse_scalar("1/2 + q", fa) == F(11, 4)


def test_parse_expr_words():
    p1 = _gen_poly("p[1]")
    pm1 = _gen_poly("p[-1]")
    assert parse_expr("p[1]*p[-1]", FQ, REG) == p1 * pm1
    assert parse_expr("p[1]^3", FQ, REG) == p1 * p1 * p1
    assert parse_expr("sqrtP[1]^-2", FQ, REG) == _gen_poly("sqrtP[1]", -2)
    assert parse_expr("q^(1/2)*p[0]^2 - p[-1]*p[1]", FQ, REG) == (
        (_gen_poly("p[0]") * _gen_poly("p[0]")).scale(qpow(F(1, 2)))
        - _gen_poly("p[-1]") * _gen_poly("p[1]")
    )


def test_parse_alias_resolves_to_same_letter():
    assert parse_expr("L-[1,0]", FQ, REG) == parse_expr("d[0]", FQ, REG)


def test_parse_division_by_scalar_only():
    assert parse_expr("p[1]/2", FQ, REG) == _gen_poly("p[1]").scale(FQ.from_fraction(F(1, 2)))
    with pytest.raises(ParseError):
        parse_expr("p[1]/p[0]", FQ, REG)
    with pytest.raises(ParseError):
        parse_expr("p[1]/0", FQ, REG)


def test_parse_errors_have_positions():
    with pytest.raises(ParseError) as ei:
        parse_expr("p[1] + ", FQ, REG)
    assert ei.value.pos == 7
    with pytest.raises(ParseError) as ei:
        parse_expr("p[1] @ 2", FQ, REG)
    assert ei.value.pos == 5
    with pytest.raises(ParseError) as ei:
        parse_expr("p[7]", FQ, REG)
    assert "p[7]" in str(ei.value)
    with pytest.raises(ParseError):
        parse_expr("p[1]^-1", FQ, REG)  # not invertible
    with pytest.raises(ParseError):
        parse_scalar("p[1]", FQ)
    with pytest.raises(ParseError):
        parse_expr("(p[1] + p[0]", FQ, REG)


def test_print_basic_forms():
    assert poly_str(NcPoly.zero(FQ), REG, FQ) == "0"
    assert poly_str(NcPoly.one(FQ), REG, FQ) == "1"
    p1, p0 = _gen_poly("p[1]"), _gen_poly("p[0]")
    assert poly_str(p1, REG, FQ) == "p[1]"
    assert poly_str(-p1, REG, FQ) == "-p[1]"
    assert poly_str(p1.scale(qpow(1) + 1), REG, FQ) == "(q + 1)*p[1]"
    assert poly_str(p1.scale(qpow(1) / (qpow(1) - 1)), REG, FQ) == "q/(q - 1)*p[1]"
    assert word_str(((REG.gen("sqrtp0").rank, -2),), REG) == "sqrtp0^-2"
    # higher-degree words print first
    expr = p0 + p1 * p1
    assert poly_str(expr, REG, FQ) == "p[1]^2 + p[0]"


def test_print_sign_handling():
    p1 = _gen_poly("p[1]")
    expr = -p1.scale(qpow(1) - 1) + NcPoly.one(FQ)
    s = poly_str(expr, REG, FQ)
    assert s == "-(q - 1)*p[1] + 1"
    assert parse_expr(s, FQ, REG) == expr


@pytest.mark.parametrize("seed", range(4))
def test_roundtrip_random_exact(seed):
    rng = Random(seed)
    for _ in range(60):
        poly = random_poly(rng, REG, FQ)
        text = poly_str(poly, REG, FQ)
        assert parse_expr(text, FQ, REG) == poly, text


def test_roundtrip_random_eval():
    fa = FieldAt(F(7, 5))
    rng = Random(99)
    for _ in range(60):
        poly = random_poly(rng, REG, fa)
        text = poly_str(poly, REG, fa)
        assert parse_expr(text, fa, REG) == poly, text


def test_roundtrip_scalars_through_matrix_json():
    from qeuclid.linalg import SparseMat

    m = SparseMat((0, 1), (0, 1), {(0, 1): (qpow(1) - 1) / (qpow(3) + 2)}, FQ)
    obj = m.to_json()
    back = SparseMat.from_json(obj, FQ)
    assert back == m
