"""Sparse matrices: products, tensor products, RREF, serialization."""

from fractions import Fraction as F

import pytest

from qeuclid.linalg import SparseMat, concat_labels, kron_all, rref
from qeuclid.scalars import FieldAt, FieldQ, qpow

FA = FieldAt(F(3, 2))
FQ = FieldQ()


def _mat(rows, cols, entries, field=FA):
    return SparseMat(rows, cols, entries, field)


def test_identity_and_product():
    labels = (-1, 0, 1)
    eye = SparseMat.identity(labels, FA)
    m = _mat(labels, labels, {(-1, 1): F(2), (0, 0): F(3)})
    assert eye @ m == m
    assert m @ eye == m


def test_product_contracts_middle_label():
    a = _mat((0, 1), ("x",), {(0, "x"): F(2), (1, "x"): F(5)})
    b = _mat(("x",), (0, 1), {("x", 0): F(7)})
    ab = a @ b
    assert ab.get(0, 0) == 14
    assert ab.get(1, 0) == 35
    assert ab.get(0, 1) == 0


def test_kron_concatenates_labels():
    assert concat_labels(1, 2) == (1, 2)
    assert concat_labels((1, 2), 3) == (1, 2, 3)
    v = (-1, 1)
    a = _mat(v, v, {(-1, 1): F(2)})
    b = SparseMat.identity(v, FA)
    k = a.kron(b)
    assert k.rows[0] == (-1, -1)
    assert k.get((-1, -1), (1, -1)) == F(2)
    assert k.get((-1, 1), (1, 1)) == F(2)
    assert kron_all([b, b, b]).rows[0] == (-1, -1, -1)


def test_trace_and_zero():
    labels = (0, 1)
    m = _mat(labels, labels, {(0, 0): F(1, 2), (1, 1): F(1, 3), (0, 1): F(9)})
    assert m.trace() == F(5, 6)
    assert (m - m).is_zero()


def test_matvec():
    labels = (-1, 0, 1)
    m = _mat(labels, labels, {(-1, 1): F(2), (0, 0): F(3)})
    out = m.matvec({1: F(4), 0: F(1)})
    assert out == {-1: F(8), 0: F(3)}
    out_row = m.vecmat({-1: F(1)})
    assert out_row == {1: F(2)}


def test_shape_mismatch_raises():
    a = _mat((0,), (0, 1), {})
    with pytest.raises(ValueError):
        a @ a


def test_rref_finds_pivots_in_column_order():
    cols = ["w1", "w2", "w3"]
    rows = [
        {"w1": F(2), "w2": F(2)},
        {"w1": F(1), "w2": F(1), "w3": F(1)},
    ]
    red, pivots = rref(rows, cols, FA)
    assert pivots == ["w1", "w3"]
    assert red[0] == {"w1": F(1), "w2": F(1)}
    assert red[1] == {"w3": F(1)}


def test_rref_symbolic_field():
    q = qpow(1)
    cols = ["a", "b"]
    rows = [{"a": q - 1, "b": q * q - 1}]
    red, pivots = rref(rows, cols, FQ)
    assert pivots == ["a"]
    assert red[0]["b"] == q + 1


def test_rref_drops_dependent_rows():
    cols = ["a", "b"]
    rows = [{"a": F(1), "b": F(2)}, {"a": F(2), "b": F(4)}]
    red, pivots = rref(rows, cols, FA)
    assert len(red) == 1


def test_json_roundtrip_with_explicit_parser():
    labels = (-1, 1)
    m = _mat(labels, labels, {(-1, 1): F(2, 3)})
    obj = m.to_json()
    back = SparseMat.from_json(obj, FA, parse=lambda s: F(s))
    assert back == m
    assert back.to_json() == obj


def test_json_tuple_labels():
    pairs = ((-1, 1), (1, -1))
    m = _mat(pairs, pairs, {((-1, 1), (1, -1)): F(5)})
    obj = m.to_json()
    assert obj["rows"] == [[-1, 1], [1, -1]]
    back = SparseMat.from_json(obj, FA, parse=lambda s: F(s))
    assert back == m
