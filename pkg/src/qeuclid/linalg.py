"""Sparse label-indexed linear algebra over an exact coefficient field.

Matrices here are indexed by arbitrary hashable labels rather than
integer offsets, because the natural index sets of the objects we build
are signed weight labels like -n..n (0 omitted in even dimension) and
tuples of those.  Tensor products concatenate label tuples, so an
operator on V (x) V is indexed by flat pairs (i, j) and composing with
further factors keeps indices flat.

Entries live in whatever field the caller passes (symbolic rational
functions or exact rationals at an evaluation point); only nonzero
entries are stored.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Callable, Iterable, Optional, Sequence

Label = Any


def as_tuple(label: Label) -> tuple:
    return label if isinstance(label, tuple) else (label,)


def concat_labels(a: Label, b: Label) -> tuple:
    return as_tuple(a) + as_tuple(b)


class SparseMat:
    """Immutable sparse matrix with labelled rows and columns."""

    __slots__ = ("rows", "cols", "data", "field", "_row_index")

    def __init__(self, rows: Sequence[Label], cols: Sequence[Label], data: dict, field):
        self.rows = tuple(rows)
        self.cols = tuple(cols)
        self.data = {k: v for k, v in data.items() if v}
        self.field = field
        self._row_index = None

    @staticmethod
    def identity(labels: Sequence[Label], field) -> "SparseMat":
        one = field.one()
        return SparseMat(labels, labels, {(l, l): one for l in labels}, field)

    @staticmethod
    def zero(rows: Sequence[Label], cols: Sequence[Label], field) -> "SparseMat":
        return SparseMat(rows, cols, {}, field)

    def get(self, r: Label, c: Label):
        return self.data.get((r, c), self.field.zero())

    def _rows_of(self) -> dict:
        if self._row_index is None:
            idx: dict = {}
            for (r, c), v in self.data.items():
                idx.setdefault(r, []).append((c, v))
            self._row_index = idx
        return self._row_index

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other: "SparseMat") -> "SparseMat":
        self._check_shape(other)
        out = dict(self.data)
        for k, v in other.data.items():
            cur = out.get(k)
            out[k] = v if cur is None else cur + v
        return SparseMat(self.rows, self.cols, out, self.field)

    def __sub__(self, other: "SparseMat") -> "SparseMat":
        return self + other.scale(self.field.from_fraction(-1))

    def scale(self, c) -> "SparseMat":
        return SparseMat(
            self.rows, self.cols, {k: c * v for k, v in self.data.items()}, self.field
        )

    def __matmul__(self, other: "SparseMat") -> "SparseMat":
        if self.cols != other.rows:
            raise ValueError("shape mismatch in matrix product")
        rows_b = other._rows_of()
        out: dict = {}
        for (r, k), v in self.data.items():
            for c, w in rows_b.get(k, ()):
                key = (r, c)
                cur = out.get(key)
                term = v * w
                out[key] = term if cur is None else cur + term
        return SparseMat(self.rows, other.cols, out, self.field)

    def transpose(self) -> "SparseMat":
        return SparseMat(
            self.cols, self.rows, {(c, r): v for (r, c), v in self.data.items()}, self.field
        )

    def kron(self, other: "SparseMat") -> "SparseMat":
        rows = tuple(concat_labels(a, b) for a in self.rows for b in other.rows)
        cols = tuple(concat_labels(a, b) for a in self.cols for b in other.cols)
        data: dict = {}
        for (r1, c1), v in self.data.items():
            for (r2, c2), w in other.data.items():
                data[(concat_labels(r1, r2), concat_labels(c1, c2))] = v * w
        return SparseMat(rows, cols, data, self.field)

    def trace(self):
        acc = self.field.zero()
        for r in self.rows:
            acc = acc + self.data.get((r, r), self.field.zero())
        return acc

    def is_zero(self) -> bool:
        return not self.data

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMat):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and self.data == other.data
        )

    def __hash__(self):
        raise TypeError("SparseMat is not hashable")

    def _check_shape(self, other: "SparseMat"):
        if self.rows != other.rows or self.cols != other.cols:
            raise ValueError("label mismatch between matrices")

    # -- vectors ----------------------------------------------------------

    def matvec(self, vec: dict) -> dict:
        """Apply to a column vector given as {col_label: value}."""
        out: dict = {}
        for (r, c), v in self.data.items():
            w = vec.get(c)
            if w is None:
                continue
            term = v * w
            cur = out.get(r)
            acc = term if cur is None else cur + term
            if acc:
                out[r] = acc
            elif cur is not None:
                del out[r]
        return {k: v for k, v in out.items() if v}

    def vecmat(self, vec: dict) -> dict:
        """Apply a row vector {row_label: value} from the left."""
        return self.transpose().matvec(vec)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        row_pos = {l: i for i, l in enumerate(self.rows)}
        col_pos = {l: i for i, l in enumerate(self.cols)}
        entries = sorted(
            ((row_pos[r], col_pos[c], self.field.to_str(v)) for (r, c), v in self.data.items())
        )
        return {
            "rows": [_label_json(l) for l in self.rows],
            "cols": [_label_json(l) for l in self.cols],
            "entries": [
                [_label_json(self.rows[i]), _label_json(self.cols[j]), s]
                for i, j, s in entries
            ],
        }

    @staticmethod
    def from_json(obj: dict, field, parse: Optional[Callable[[str], Any]] = None) -> "SparseMat":
        if parse is None:
            parse = _default_parser(field)
        rows = [_label_unjson(l) for l in obj["rows"]]
        cols = [_label_unjson(l) for l in obj["cols"]]
        data = {}
        for r, c, s in obj["entries"]:
            data[(_label_unjson(r), _label_unjson(c))] = parse(s)
        return SparseMat(rows, cols, data, field)

    def __repr__(self):
        return f"SparseMat({len(self.rows)}x{len(self.cols)}, {len(self.data)} entries)"


def _label_json(label: Label):
    if isinstance(label, tuple):
        return [_label_json(x) for x in label]
    return label


def _label_unjson(obj):
    if isinstance(obj, list):
        return tuple(_label_unjson(x) for x in obj)
    return obj


def _default_parser(field) -> Callable[[str], Any]:
    from . import grammar

    def parse(s: str):
        return grammar.parse_scalar(s, field)

    return parse


def kron_all(mats: Sequence[SparseMat]) -> SparseMat:
    out = mats[0]
    for m in mats[1:]:
        out = out.kron(m)
    return out


def rref(rows: list[dict], col_order: Sequence, field) -> tuple[list[dict], list]:
    """Reduced row echelon form of sparse rows over an exact field.

    rows are {column_key: coefficient} dicts; col_order fixes which
    columns are eliminated first, so pivots land on the earliest
    possible key.  Returns the nonzero reduced rows together with the
    pivot key of each, in column order.
    """
    pos = {c: i for i, c in enumerate(col_order)}
    work = [dict(r) for r in rows if r]
    reduced: list[tuple[int, dict]] = []  # (pivot position, row)
    for row in work:
        for ppos, prow in reduced:
            pc = col_order[ppos]
            coeff = row.get(pc)
            if coeff:
                for c, v in prow.items():
                    cur = row.get(c)
                    acc = (cur - coeff * v) if cur is not None else -(coeff * v)
                    if acc:
                        row[c] = acc
                    elif cur is not None:
                        del row[c]
        row = {c: v for c, v in row.items() if v}
        if not row:
            continue
        ppos = min(pos[c] for c in row)
        pc = col_order[ppos]
        inv = field.one() / row[pc]
        row = {c: inv * v for c, v in row.items()}
        for qpos, qrow in reduced:
            coeff = qrow.get(pc)
            if coeff:
                for c, v in row.items():
                    cur = qrow.get(c)
                    acc = (cur - coeff * v) if cur is not None else -(coeff * v)
                    if acc:
                        qrow[c] = acc
                    elif cur is not None:
                        del qrow[c]
        reduced.append((ppos, row))
    reduced.sort(key=lambda t: t[0])
    return [r for _, r in reduced], [col_order[p] for p, _ in reduced]


def nullspace_rank(rows: list[dict], col_order: Sequence, field) -> int:
    """Rank of the row span; handy for independence checks."""
    red, _ = rref(rows, col_order, field)
    return len(red)
