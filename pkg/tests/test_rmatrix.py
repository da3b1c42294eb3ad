"""Braid matrix layer: weights, metric, R-hat entries, projectors, identities."""

from fractions import Fraction as F

import pytest

from qeuclid.rmatrix import (
    build_metric,
    build_rdata,
    build_rhat,
    characteristic_residual,
    index_labels,
    metric_residuals,
    projector_residuals,
    projector_trace_values,
    rho_weights,
    ybe_residual,
)
from qeuclid.scalars import FieldAt, FieldQ, qpow

FQ = FieldQ()


def test_labels():
    assert index_labels(3) == (-1, 0, 1)
    assert index_labels(4) == (-2, -1, 1, 2)
    assert index_labels(5) == (-2, -1, 0, 1, 2)
    with pytest.raises(ValueError):
        index_labels(2)


def test_rho_weights():
    assert rho_weights(3) == {-1: F(1, 2), 0: 0, 1: F(-1, 2)}
    assert rho_weights(5) == {-2: F(3, 2), -1: F(1, 2), 0: 0, 1: F(-1, 2), 2: F(-3, 2)}
    assert rho_weights(4) == {-2: 1, -1: 0, 1: 0, 2: -1}
    assert rho_weights(6) == {-3: 2, -2: 1, -1: 0, 1: 0, 2: -1, 3: -2}


def test_metric_entries_frozen():
    g3 = build_metric(3, FQ)
    assert g3.get(-1, 1) == qpow(F(-1, 2))
    assert g3.get(0, 0) == 1
    assert g3.get(1, -1) == qpow(F(1, 2))
    assert g3.get(1, 1) == 0
    g4 = build_metric(4, FQ)
    assert g4.get(-2, 2) == qpow(-1)
    assert g4.get(-1, 1) == 1
    assert g4.get(2, -2) == qpow(1)


def test_rhat_entries_frozen_dim3():
    r = build_rhat(3, FQ)
    q = qpow(1)
    k = q - 1 / q
    assert r.get((1, 1), (1, 1)) == q
    assert r.get((-1, -1), (-1, -1)) == q
    assert r.get((0, 0), (0, 0)) == 1
    assert r.get((0, 1), (1, 0)) == 1
    assert r.get((1, -1), (-1, 1)) == 1 / q
    assert r.get((1, -1), (1, -1)) == 0
    assert r.get((0, 1), (0, 1)) == k
    assert r.get((-1, 1), (-1, 1)) == k - k / q
    assert r.get((-1, 1), (0, 0)) == -k * qpow(F(-1, 2))
    assert r.get((0, 0), (-1, 1)) == -k * qpow(F(-1, 2))


def test_rhat_entries_frozen_dim4():
    r = build_rhat(4, FQ)
    q = qpow(1)
    k = q - 1 / q
    # the two isotropic middle labels carry no deformation between them
    assert r.get((-1, 1), (-1, 1)) == 0
    assert r.get((1, -1), (1, -1)) == 0
    assert r.get((-1, 1), (1, -1)) == 1 / q
    assert r.get((-1, 1), (-2, 2)) == -k / q
    assert r.get((-2, 2), (-2, 2)) == k - k * qpow(-2)


def test_omega_and_trace_norm():
    rd = build_rdata(3, FQ)
    assert rd.omega(1) == qpow(F(1, 2)) + qpow(F(-1, 2))
    assert rd.omega(0) == 2
    assert rd.trace_norm == qpow(1) + 1 + qpow(-1)
    rd4 = build_rdata(4, FQ)
    assert rd4.trace_norm == qpow(2) + 2 + qpow(-2)


@pytest.mark.parametrize("N", [3, 4])
def test_identities_exact(N):
    rd = build_rdata(N, FQ)
    assert ybe_residual(rd).is_zero()
    assert characteristic_residual(rd).is_zero()
    assert all(m.is_zero() for m in projector_residuals(rd).values())


@pytest.mark.parametrize("N", [3, 4, 5])
def test_projector_traces(N):
    rd = build_rdata(N, FQ)
    tr = projector_trace_values(rd)
    assert tr["anti"] == F(N * (N - 1), 2)
    assert tr["sym"] == F(N * (N + 1), 2) - 1
    assert tr["trace"] == 1


@pytest.mark.parametrize("N", [3, 4, 5])
def test_metric_identities_exact(N):
    rd = build_rdata(N, FQ)
    res = metric_residuals(rd)
    assert res["inverse"].is_zero()
    assert not res["covariance_col"]
    assert not res["covariance_row"]


def test_identities_at_evaluation_points():
    for s0 in (F(3, 2), F(7, 5)):
        rd = build_rdata(5, FieldAt(s0))
        assert ybe_residual(rd).is_zero()
        assert characteristic_residual(rd).is_zero()
        assert all(m.is_zero() for m in projector_residuals(rd).values())
        assert projector_trace_values(rd) == {"anti": 10, "sym": 14, "trace": 1}


def test_inverse_is_two_sided():
    rd = build_rdata(4, FQ)
    from qeuclid.linalg import SparseMat

    eye = SparseMat.identity(rd.rhat.rows, FQ)
    assert rd.rhat @ rd.rhat_inv == eye
    assert rd.rhat_inv @ rd.rhat == eye


def test_json_output_is_deterministic():
    rd = build_rdata(3, FQ)
    assert rd.rhat.to_json() == rd.rhat.to_json()
    entry = rd.rhat.to_json()["entries"][0]
    assert isinstance(entry[2], str)
