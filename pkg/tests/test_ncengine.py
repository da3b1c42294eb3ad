"""Rewrite engine mechanics on small hand-built presentations."""

from fractions import Fraction as F

import pytest

from qeuclid.ncengine import (
    DegreeCapExceeded,
    Generator,
    NcPoly,
    Registry,
    RewriteSystem,
    RuleError,
    W_ONE,
    comm,
    measure,
    w_degree,
    w_letter,
    w_mul,
)
from qeuclid.scalars import FieldQ, qpow

FQ = FieldQ()
Q = qpow(1)


def _toy_registry():
    gens = [
        Generator("d", "diag", (0,), 0, invertible=True),
        Generator("r", "root", (), 1, invertible=True),
        Generator("x", "p", (1,), 2),
        Generator("y", "p", (2,), 3),
        Generator("z", "p", (3,), 4),
    ]
    return Registry(gens)


def _qplane():
    """x y = q y x on the two lowest p letters, r commutes up to q with x."""
    reg = _toy_registry()
    rs = RewriteSystem(reg, FQ)
    one = FQ.one()
    # out-of-order words y x and z x, z y swap with factor 1/q
    for hi, lo in ((3, 2), (4, 2), (4, 3)):
        rs.add_pair_rule(hi, 1, lo, 1, {w_mul(w_letter(lo), w_letter(hi)): 1 / Q})
    # p r -> (1/q) r p for every p letter, with all sign variants
    for p in (2, 3, 4):
        rs.add_pair_rule(p, 1, 1, 1, {w_mul(w_letter(1), w_letter(p)): 1 / Q}, add_sign_variants=True)
    return reg, rs


def test_word_multiplication_merges_and_cancels():
    assert w_mul(((2, 1),), ((2, 1),)) == ((2, 2),)
    assert w_mul(((1, 1),), ((1, -1),)) == W_ONE
    assert w_mul(((2, 1), (1, 2)), ((1, -2), (2, 1))) == ((2, 2),)
    assert w_mul(W_ONE, ((2, 3),)) == ((2, 3),)


def test_measure_orders_bands():
    reg = _toy_registry()
    lhs = measure(w_mul(w_letter(3), w_letter(2)), reg)  # y x
    rhs = measure(w_mul(w_letter(2), w_letter(3)), reg)  # x y
    assert rhs < lhs
    # moving a p letter past a diag letter shrinks the left context
    assert measure(((0, 1), (2, 1)), reg) < measure(((2, 1), (0, 1)), reg)


def test_normal_form_qplane():
    reg, rs = _qplane()
    yx = {w_mul(w_letter(3), w_letter(2)): FQ.one()}
    nf = rs.normal_form(yx)
    assert nf == {((2, 1), (3, 1)): 1 / Q}
    # y^2 x picks up 1/q twice
    y2x = {((3, 2), (2, 1)): FQ.one()}
    assert rs.normal_form(y2x) == {((2, 1), (3, 2)): 1 / Q ** 2}


def test_power_rule_involution():
    reg = _toy_registry()
    rs = RewriteSystem(reg, FQ)
    one = FQ.one()
    rs.add_power_rule(0, 2, {W_ONE: one})
    rs.add_power_rule(0, -1, {w_letter(0): one})
    assert rs.normal_form({((0, 5),): one}) == {((0, 1),): one}
    assert rs.normal_form({((0, -3),): one}) == {((0, 1),): one}
    assert rs.normal_form({((0, 2),): one}) == {W_ONE: one}


def test_sign_variants_generated():
    reg, rs = _qplane()
    one = FQ.one()
    # x r^-1 must use the derived variant: x r^-1 = q r^-1 x
    nf = rs.normal_form({((2, 1), (1, -1)): one})
    assert nf == {((1, -1), (2, 1)): Q}
    nf2 = rs.normal_form({((2, 3), (1, -2)): one})
    assert nf2 == {((1, -2), (2, 3)): Q ** 6}


def test_rule_must_decrease_measure():
    reg = _toy_registry()
    rs = RewriteSystem(reg, FQ)
    with pytest.raises(RuleError):
        # sorted pair rewritten to the inverted pair would not terminate
        rs.add_pair_rule(2, 1, 3, 1, {w_mul(w_letter(3), w_letter(2)): FQ.one()})


def test_duplicate_rule_rejected():
    reg, rs = _qplane()
    with pytest.raises(RuleError):
        rs.add_pair_rule(3, 1, 2, 1, {w_mul(w_letter(2), w_letter(3)): FQ.one()})


def test_negative_power_of_noninvertible_rejected():
    reg = _toy_registry()
    rs = RewriteSystem(reg, FQ)
    with pytest.raises(RuleError):
        rs.add_pair_rule(3, 1, 2, 1, {((2, -1),): FQ.one()})


def test_zero_test_with_denominator_clearing():
    reg, rs = _qplane()
    one = FQ.one()
    # r^-1 x r - (1/q) x reduces to zero only after clearing r^-1
    x = NcPoly.letter(FQ, 2)
    r = NcPoly.letter(FQ, 1)
    rinv = NcPoly.letter(FQ, 1, -1)
    expr = rinv * x * r - x.scale(1 / Q)
    assert rs.is_zero_mod(expr.terms)
    assert not rs.is_zero_mod((rinv * x * r).terms)


def test_degree_cap():
    reg, rs = _qplane()
    with pytest.raises(DegreeCapExceeded):
        rs.reduce_word(((3, 2), (2, 2)), degree_cap=3)


def test_overlaps_clean_for_consistent_rules():
    reg, rs = _qplane()
    assert rs.check_overlaps() == []


def test_overlaps_catch_inconsistent_rules():
    reg = _toy_registry()
    rs = RewriteSystem(reg, FQ)
    one = FQ.one()
    # the correction term in z x needs y x -> x y with factor 1 to close;
    # the factor q makes the z y x overlap diverge
    rs.add_pair_rule(3, 1, 2, 1, {w_mul(w_letter(2), w_letter(3)): Q})
    rs.add_pair_rule(4, 1, 3, 1, {w_mul(w_letter(3), w_letter(4)): one})
    rs.add_pair_rule(
        4, 1, 2, 1,
        {w_mul(w_letter(2), w_letter(4)): one, ((3, 2),): one},
    )
    bad = rs.check_overlaps()
    assert ((4, 1), (3, 1), (2, 1)) in bad


def test_ncpoly_algebra():
    x = NcPoly.letter(FQ, 2)
    y = NcPoly.letter(FQ, 3)
    assert (x + y) - y == x
    assert (x * y).terms == {((2, 1), (3, 1)): FQ.one()}
    assert comm(x, x).terms == {}
    assert not (x - x)
    assert (x * x).terms == {((2, 2),): FQ.one()}
    assert NcPoly.one(FQ) * x == x


def test_registry_aliases():
    gens = [Generator("a", "p", (1,), 0), Generator("b", "p", (2,), 1)]
    reg = Registry(gens, aliases={"a_alt": "a"})
    assert reg.gen("a_alt") is reg.gen("a")
    with pytest.raises(KeyError):
        reg.gen("missing")
    with pytest.raises(ValueError):
        Registry(gens, aliases={"a": "b"})
