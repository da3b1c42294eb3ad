"""Braid matrix, metric, and spectral projectors for the orthogonal deformation.

Vector indices run over signed labels -n..n with 0 present only in odd
dimension N.  The weight vector rho fixes everything else: the metric
pairs i with -i and scales by q^(-rho_i); the braid matrix R-hat acts on
pairs of labels and decomposes into symmetric, antisymmetric, and trace
projectors with eigenvalues q, -1/q, and q^(1-N).

All exponents are half-integers, stored as Fractions and turned into
field elements through field.s_power (s is the square root of q), so the
same construction serves both the symbolic field and exact evaluation
points.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Tuple

from .linalg import SparseMat
from .scalars import Field, field_k


def index_labels(N: int) -> Tuple[int, ...]:
    """Signed labels in increasing order; 0 only when N is odd."""
    if N < 3:
        raise ValueError("dimension must be at least 3")
    n = N // 2
    neg = list(range(-n, 0))
    pos = list(range(1, n + 1))
    return tuple(neg + ([0] if N % 2 else []) + pos)


def rho_weights(N: int) -> Dict[int, Fraction]:
    """Half the sum of positive roots, componentwise on the labels."""
    base = Fraction(1, 2) if N % 2 else Fraction(1)
    rho: Dict[int, Fraction] = {}
    for i in index_labels(N):
        if i == 0:
            rho[i] = Fraction(0)
        elif i > 0:
            rho[i] = base - i
        else:
            rho[i] = -(base + i)
    return rho


def _qp(field: Field, exponent: Fraction):
    """q**exponent for a half-integer exponent."""
    two = 2 * Fraction(exponent)
    if two.denominator != 1:
        raise ValueError(f"exponent {exponent} is not a half-integer")
    return field.s_power(int(two))


def build_metric(N: int, field: Field) -> SparseMat:
    """g_ij = q^(-rho_i) delta_(i,-j); equals its own inverse transpose."""
    rho = rho_weights(N)
    labels = index_labels(N)
    data = {(i, -i): _qp(field, -rho[i]) for i in labels}
    return SparseMat(labels, labels, data, field)


def build_rhat(N: int, field: Field) -> SparseMat:
    """Braid matrix on V (x) V, indexed by flat label pairs.

    Entries accumulate: the isotropic correction at ((-j, j), (i, -i))
    lands on top of the 1/q swap entry when j = -i.
    """
    labels = index_labels(N)
    rho = rho_weights(N)
    q = field.s_power(2)
    qinv = field.s_power(-2)
    one = field.one()
    k = field_k(field)
    pairs = tuple((a, b) for a in labels for b in labels)
    data: dict = {}

    def add(row, col, val):
        cur = data.get((row, col))
        data[(row, col)] = val if cur is None else cur + val

    for i in labels:
        if i != 0:
            add((i, i), (i, i), q)
        else:
            add((0, 0), (0, 0), one)
    for a in labels:
        for b in labels:
            if a != b and a != -b:
                add((a, b), (b, a), one)
    for i in labels:
        if i != 0:
            add((-i, i), (i, -i), qinv)
    for i in labels:
        for j in labels:
            if i < j:
                add((i, j), (i, j), k)
                add((-j, j), (i, -i), -k * _qp(field, rho[j] - rho[i]))
    return SparseMat(pairs, pairs, data, field)


def _shifted(m: SparseMat, c) -> SparseMat:
    """m - c * identity on the same labels."""
    return m - SparseMat.identity(m.rows, m.field).scale(c)


@dataclass
class RData:
    """Everything downstream construction needs about one dimension."""

    N: int
    field: Field
    labels: Tuple[int, ...]
    rho: Dict[int, Fraction]
    g: SparseMat
    rhat: SparseMat
    rhat_inv: SparseMat
    proj_sym: SparseMat
    proj_anti: SparseMat
    proj_trace: SparseMat
    trace_norm: object  # Q_N = sum_c q^(-2 rho_c)

    def qpow(self, exponent) -> object:
        return _qp(self.field, Fraction(exponent))

    def omega(self, a: int):
        return self.qpow(self.rho[a]) + self.qpow(-self.rho[a])


def build_rdata(N: int, field: Field) -> RData:
    labels = index_labels(N)
    rho = rho_weights(N)
    g = build_metric(N, field)
    rhat = build_rhat(N, field)
    q = field.s_power(2)
    qinv = field.s_power(-2)
    qt = field.s_power(2 * (1 - N))  # trace eigenvalue q^(1-N)
    one = field.one()

    # Lagrange interpolation on the three eigenvalues.
    eye = SparseMat.identity(rhat.rows, field)
    m_q = _shifted(rhat, q)
    m_a = _shifted(rhat, -qinv)
    m_t = _shifted(rhat, qt)
    ps = (m_a @ m_t).scale(one / ((q + qinv) * (q - qt)))
    pa = (m_q @ m_t).scale(one / ((-qinv - q) * (-qinv - qt)))
    pt = (m_q @ m_a).scale(one / ((qt - q) * (qt + qinv)))

    # The trace projector must match its closed form g g / Q_N.
    qn = field.zero()
    for c in labels:
        qn = qn + _qp(field, -2 * rho[c])
    pt_direct = {}
    for (i, j) in rhat.rows:
        if j != -i:
            continue
        gi = g.get(i, -i)
        for (k_, l) in rhat.rows:
            if l != -k_:
                continue
            pt_direct[((i, j), (k_, l))] = gi * g.get(k_, l) / qn
    if SparseMat(rhat.rows, rhat.rows, pt_direct, field) != pt:
        raise AssertionError("trace projector disagrees with metric closed form")

    kk = field_k(field)
    correction = kk + field.s_power(2 * (N - 1)) - qt
    rinv = _shifted(rhat, kk) + pt.scale(correction)
    if rinv @ rhat != eye:
        raise AssertionError("braid matrix inverse failed")
    return RData(
        N=N,
        field=field,
        labels=labels,
        rho=rho,
        g=g,
        rhat=rhat,
        rhat_inv=rinv,
        proj_sym=ps,
        proj_anti=pa,
        proj_trace=pt,
        trace_norm=qn,
    )


# -- identity checks (shared by the test suite and the verifier) ----------


def ybe_residual(rd: RData) -> SparseMat:
    """(R12 R23 R12 - R23 R12 R23) on V (x) V (x) V."""
    eye = SparseMat.identity(rd.labels, rd.field)
    r12 = rd.rhat.kron(eye)
    r23 = eye.kron(rd.rhat)
    return (r12 @ r23 @ r12) - (r23 @ r12 @ r23)


def characteristic_residual(rd: RData) -> SparseMat:
    """(R - q)(R + 1/q)(R - q^(1-N)) must vanish."""
    f = rd.field
    m = _shifted(rd.rhat, f.s_power(2))
    m = m @ _shifted(rd.rhat, -f.s_power(-2))
    return m @ _shifted(rd.rhat, f.s_power(2 * (1 - rd.N)))


def projector_residuals(rd: RData) -> Dict[str, SparseMat]:
    """Idempotence, mutual orthogonality, completeness, spectral sum."""
    f = rd.field
    eye = SparseMat.identity(rd.rhat.rows, f)
    ps, pa, pt = rd.proj_sym, rd.proj_anti, rd.proj_trace
    out = {
        "sym_idem": ps @ ps - ps,
        "anti_idem": pa @ pa - pa,
        "trace_idem": pt @ pt - pt,
        "sym_anti": ps @ pa,
        "sym_trace": ps @ pt,
        "anti_trace": pa @ pt,
        "complete": ps + pa + pt - eye,
        "spectral": rd.rhat
        - (ps.scale(f.s_power(2)) + pa.scale(-f.s_power(-2)) + pt.scale(f.s_power(2 * (1 - rd.N)))),
        "inverse_spectral": rd.rhat_inv
        - (ps.scale(f.s_power(-2)) + pa.scale(-f.s_power(2)) + pt.scale(f.s_power(2 * (rd.N - 1)))),
    }
    return out


def projector_trace_values(rd: RData) -> Dict[str, object]:
    return {
        "anti": rd.proj_anti.trace(),
        "sym": rd.proj_sym.trace(),
        "trace": rd.proj_trace.trace(),
    }


def metric_residuals(rd: RData) -> Dict[str, object]:
    """Metric inversion and braid covariance of the metric."""
    f = rd.field
    eye = SparseMat.identity(rd.labels, f)
    gg = rd.g @ rd.g
    qt = f.s_power(2 * (1 - rd.N))
    gvec = {(i, -i): rd.g.get(i, -i) for i in rd.labels}
    rg = rd.rhat.matvec(gvec)
    col = {k: rg.get(k, f.zero()) - qt * v for k, v in gvec.items()}
    col.update({k: v for k, v in rg.items() if k not in gvec})
    gr = rd.rhat.vecmat(gvec)
    row = {k: gr.get(k, f.zero()) - qt * v for k, v in gvec.items()}
    row.update({k: v for k, v in gr.items() if k not in gvec})
    return {
        "inverse": gg - eye,
        "covariance_col": {k: v for k, v in col.items() if v},
        "covariance_row": {k: v for k, v in row.items() if v},
    }
