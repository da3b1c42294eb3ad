"""Presented algebras: deformed Euclidean space, matrix quantum group, cross product.

Generators are banded, lowest rank first:

    diagonal letters d[i]  <  lower triangular L-[i,j]  <  upper L+[i,j]
    <  scaling roots (sqrtp0, sqrtP[a])  <  coordinates p[i]

Normal words are sorted along this order, so the rewrite rules pull
triangular letters left and coordinates right.  The diagonal of the two
triangular matrices is shared: L+[i,i] and L-[-i,-i] are aliases of the
single invertible letter d[i], which is what the antipode relations
force.  Diagonal letters are ranked with inverse pairs adjacent
(d[0] < d[1] < d[-1] < d[2] < ...) so that sorting plus the pairing
rules cancels separated inverse pairs.

Only the triangular entries L[i,j] with i + j >= 0 are letters.  The
antipode pairing makes the mirror entry (-j,-i) a polynomial in the
kept ones (a diagonal-dressed mirror plus lower products), and keeping
both as letters would leave two distinct normal words for one element.
The mirror entries stay reachable through ``lentry``, which returns the
derived polynomial.

Rule provenance:

* coordinate exchange comes from the antisymmetric projector of the
  braid matrix, row reduced so each out-of-order pair gets one rule;
* diagonal exchange is the weight action of the torus letters, checked
  a posteriori by the relation families;
* triangular-triangular exchange comes from row reducing the full RLL
  and antipode (orthogonality) relation families at degree two, after
  substituting the mirror polynomials;
* coordinate-triangular exchange is the cross product formula, one rule
  per pair, from braid matrix entries;
* root exchange past triangular letters is bootstrapped: crossing the
  known square of each root through a formal matrix row gives its
  exchange matrix, and the root's own exchange is the triangular square
  root of that, solved level by level (the radii do not exchange
  diagonally, the honest exchange mixes in lower triangular letters).

Everything is verified at construction time: projector identities,
representation checks of every relation family, the square property of
the bootstrap, and the measure-decrease of every installed rule.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .linalg import SparseMat, rref
from .ncengine import (
    Generator,
    NcPoly,
    Registry,
    RewriteSystem,
    Terms,
    W_ONE,
    measure,
    w_letter,
    w_mul,
    word_sort_key,
)
from .rmatrix import RData, build_rdata
from .scalars import Field, FieldAt, FieldQ


class Presentation:
    def __init__(self, name: str, rdata: RData, registry: Registry, rules: RewriteSystem,
                 relations: Dict[str, List[Terms]], lband: Optional["LBand"] = None):
        self.name = name
        self.rdata = rdata
        self.N = rdata.N
        self.field = rdata.field
        self.registry = registry
        self.rules = rules
        self.relations = relations
        self.lband = lband

    # -- element helpers ---------------------------------------------------

    def poly(self, name: str, exp: int = 1) -> NcPoly:
        g = self.registry.gen(name)
        return NcPoly.letter(self.field, g.rank, exp)

    def zero(self) -> NcPoly:
        return NcPoly.zero(self.field)

    def one(self) -> NcPoly:
        return NcPoly.one(self.field)

    def scalar(self, c) -> NcPoly:
        return NcPoly.scalar(self.field, c)

    def lentry(self, family: str, i: int, j: int) -> NcPoly:
        """Matrix entry of the triangular generator matrices; 0 off support.

        Kept entries are letters, mirror entries come back as the derived
        polynomials, so every index pair on the triangular support works.
        """
        if self.lband is None:
            raise ValueError(f"presentation {self.name} carries no triangular band")
        terms = self.lband.entry(family, i, j)
        if terms is None:
            return self.zero()
        return NcPoly(self.field, dict(terms))

    def nf(self, x, *, zero_mode: bool = False, degree_cap: int = 64) -> NcPoly:
        terms = x.terms if isinstance(x, NcPoly) else x
        return NcPoly(self.field, self.rules.normal_form(terms, zero_mode=zero_mode, degree_cap=degree_cap))

    def is_zero(self, x, *, degree_cap: int = 96) -> bool:
        terms = x.terms if isinstance(x, NcPoly) else x
        return self.rules.is_zero_mod(terms, degree_cap=degree_cap)

    def parse(self, text: str) -> NcPoly:
        from .grammar import parse_expr

        return parse_expr(text, self.field, self.registry)

    def show(self, x) -> str:
        from .grammar import poly_str

        poly = x if isinstance(x, NcPoly) else NcPoly(self.field, x)
        return poly_str(poly, self.registry, self.field)

    def check_relations_vanish(self, *, degree_cap: int = 96) -> List[str]:
        bad = []
        for fam, rows in self.relations.items():
            for idx, row in enumerate(rows):
                if not self.is_zero(row, degree_cap=degree_cap):
                    bad.append(f"{fam}[{idx}]")
        return bad

    def __repr__(self):
        return f"Presentation({self.name}, N={self.N}, {len(self.registry)} generators)"


# -- registry construction ----------------------------------------------------


def _kept(i: int, j: int) -> bool:
    return i + j >= 0


def _gen_specs(N: int, *, with_l: bool, with_roots: bool, with_p: bool):
    from .rmatrix import index_labels

    labels = index_labels(N)
    n = N // 2
    specs: List[Tuple[str, str, tuple, bool, int]] = []
    aliases: Dict[str, str] = {}
    if with_l:
        for i in sorted(labels, key=lambda i: (abs(i), i < 0)):
            specs.append((f"d[{i}]", "diag", (i,), True, 0))
            aliases[f"L+[{i},{i}]"] = f"d[{i}]"
            aliases[f"L-[{-i},{-i}]"] = f"d[{i}]"
        minus = sorted(((i, j) for i in labels for j in labels if i > j and _kept(i, j)),
                       key=lambda t: (t[0] - t[1], t[0]))
        for i, j in minus:
            specs.append((f"L-[{i},{j}]", "L-", (i, j), False, i - j))
        plus = sorted(((i, j) for i in labels for j in labels if i < j and _kept(i, j)),
                      key=lambda t: (t[1] - t[0], t[0]))
        for i, j in plus:
            specs.append((f"L+[{i},{j}]", "L+", (i, j), False, j - i))
    if with_roots:
        for a in range(1, n + 1):
            specs.append((f"sqrtP[{a}]", "root", (a,), True, 0))
        if N % 2:
            # last among the roots so its inverse powers sit next to
            # p[0], which they absorb
            specs.append(("sqrtp0", "root", (0,), True, 0))
    if with_p:
        for i in sorted(labels, key=lambda i: (i != 0, i)):
            specs.append((f"p[{i}]", "p", (i,), False, 0))
    gens = [
        Generator(name, kind, idx, rank, inv, mass)
        for rank, (name, kind, idx, inv, mass) in enumerate(specs)
    ]
    return Registry(gens, aliases)


# -- term helpers --------------------------------------------------------------


def _add_term(terms: Terms, w, c) -> None:
    if w is None or not c:
        return
    cur = terms.get(w)
    acc = c if cur is None else cur + c
    if acc:
        terms[w] = acc
    elif cur is not None:
        del terms[w]


def _mul_into(acc: Terms, t1: Terms, t2: Terms, c) -> None:
    for w1, c1 in t1.items():
        for w2, c2 in t2.items():
            _add_term(acc, w_mul(w1, w2), c * c1 * c2)


# -- coordinate relations -------------------------------------------------------


def _pp_rows(rd: RData, reg: Registry) -> List[Terms]:
    """Antisymmetric projector annihilates coordinate pairs."""
    prank = {i: reg.gen(f"p[{i}]").rank for i in rd.labels}
    by_row: Dict[tuple, Terms] = {}
    for (r, c), v in rd.proj_anti.data.items():
        k, l = c
        w = w_mul(w_letter(prank[k]), w_letter(prank[l]))
        _add_term(by_row.setdefault(r, {}), w, v)
    return [terms for _, terms in sorted(by_row.items()) if terms]


# -- triangular band ------------------------------------------------------------


class LBand:
    """Triangular-letter infrastructure shared by the matrix presentations.

    Construction installs the diagonal pairing and sorting rules and the
    diagonal-past-triangular weight exchange, then derives the mirror
    entries (i + j < 0) from the antipode pairing, level by level.  The
    quadratic exchange rules are row reduced afterwards, on rows with
    the mirrors already substituted.
    """

    def __init__(self, rd: RData, reg: Registry, rs: RewriteSystem):
        self.rd = rd
        self.reg = reg
        self.rs = rs
        self.field = rd.field
        self._install_d_rules()
        self._install_dk_rules()
        self.derived: Dict[str, Dict[Tuple[int, int], Terms]] = {
            "+": self._derive_mirrors("+"),
            "-": self._derive_mirrors("-"),
        }

    # -- entries ----------------------------------------------------------

    def entry(self, family: str, i: int, j: int) -> Optional[Terms]:
        """Terms of the matrix entry, or None off the triangular support."""
        if i == j:
            d = i if family == "+" else -i
            return {w_letter(self.reg.gen(f"d[{d}]").rank): self.field.one()}
        if (family == "+") != (i < j):
            return None
        if _kept(i, j):
            return {w_letter(self.reg.gen(f"L{family}[{i},{j}]").rank): self.field.one()}
        return self.derived[family][(i, j)]

    # -- diagonal rules -----------------------------------------------------

    def _install_d_rules(self) -> None:
        rs, reg, field = self.rs, self.reg, self.field
        dgens = [g for g in reg.gens if g.kind == "diag"]
        one = field.one()
        for a in dgens:
            i = a.index[0]
            if i == 0:
                rs.add_power_rule(a.rank, 2, {W_ONE: one})
                rs.add_power_rule(a.rank, -1, {w_letter(a.rank): one})
                continue
            partner = reg.gen(f"d[{-i}]").rank
            rs.add_power_rule(a.rank, -1, {w_letter(partner): one})
            if i > 0:
                rs.add_pair_rule(a.rank, 1, partner, 1, {W_ONE: one})
                rs.add_pair_rule(partner, 1, a.rank, 1, {W_ONE: one})
        for a in dgens:
            for b in dgens:
                if a.rank > b.rank and a.index[0] != -b.index[0]:
                    rhs = {w_mul(w_letter(b.rank), w_letter(a.rank)): one}
                    rs.add_pair_rule(a.rank, 1, b.rank, 1, rhs)

    # -- diagonal weight action ----------------------------------------------

    def _install_dk_rules(self) -> None:
        rs, reg, rd = self.rs, self.reg, self.rd

        def delta(x, y):
            return 1 if x == y else 0

        for g in reg.gens:
            if g.kind not in ("L-", "L+"):
                continue
            a, b = g.index
            for dg in reg.gens:
                if dg.kind != "diag":
                    continue
                i = dg.index[0]
                f = (delta(i, b) - delta(i, -b)) - (delta(i, a) - delta(i, -a))
                rhs = {w_mul(w_letter(dg.rank), w_letter(g.rank)): rd.qpow(-f)}
                rs.add_pair_rule(g.rank, 1, dg.rank, 1, rhs)

    # -- mirror entries -------------------------------------------------------

    def _derive_mirrors(self, family: str) -> Dict[Tuple[int, int], Terms]:
        """Solve the antipode pairing for the entries with i + j < 0.

        The pairing row for the kept mirror (J, I) contains the wanted
        entry once, multiplied by an invertible diagonal letter; all
        other terms are entries of strictly lower level or the kept
        mirror itself, so solving level by level terminates.
        """
        rd, reg, rs = self.rd, self.reg, self.rs
        labels = rd.labels
        out: Dict[Tuple[int, int], Terms] = {}
        self.derived = getattr(self, "derived", {})
        self.derived[family] = out
        dropped = sorted(
            (
                (i, j)
                for i in labels
                for j in labels
                if i != j and not _kept(i, j) and (family == "+") == (i < j)
            ),
            key=lambda t: abs(t[0] - t[1]),
        )
        for a, b in dropped:
            J, I = -b, -a
            if family == "+":
                hs = [h for h in labels if J <= h < I]
            else:
                hs = [h for h in labels if I < h <= J]
            acc: Terms = {}
            for h in hs:
                e1 = self.entry(family, -h, -J)
                e2 = self.entry(family, h, I)
                if e1 is None or e2 is None:
                    continue
                _mul_into(acc, e1, e2, rd.qpow(rd.rho[J] - rd.rho[h]))
            dinv = reg.gen(f"d[{-I if family == '+' else I}]").rank
            coeff = -rd.qpow(rd.rho[I] - rd.rho[J])
            terms: Terms = {}
            for w, c in acc.items():
                _add_term(terms, w_mul(w, w_letter(dinv)), coeff * c)
            out[(a, b)] = rs.normal_form(terms)
        return out


# -- quadratic relation rows ------------------------------------------------------


def _rll_rows(rd: RData, lb: LBand) -> Dict[str, List[Terms]]:
    labels = rd.labels
    rhat, rinv = rd.rhat, rd.rhat_inv
    out: Dict[str, List[Terms]] = {"rll_pp": [], "rll_mm": [], "rll_pm": []}

    def pair(terms, fam1, a1, fam2, a2, c):
        e1 = lb.entry(fam1, *a1)
        if e1 is None:
            return
        e2 = lb.entry(fam2, *a2)
        if e2 is None:
            return
        _mul_into(terms, e1, e2, c)

    for j in labels:
        for k in labels:
            for l in labels:
                for m in labels:
                    terms: Terms = {}
                    for (rr, cc), v in rhat.data.items():
                        b, a = rr
                        if cc == (l, m):
                            pair(terms, "+", (j, a), "+", (k, b), v)
                    for (rr, cc), v in rhat.data.items():
                        if rr == (k, j):
                            a, b = cc
                            pair(terms, "+", (b, m), "+", (a, l), -v)
                    if terms:
                        out["rll_pp"].append(terms)

    for i in labels:
        for j in labels:
            for k in labels:
                for l in labels:
                    terms = {}
                    for (rr, cc), v in rinv.data.items():
                        if rr == (i, j):
                            b, a = cc
                            pair(terms, "-", (a, k), "-", (b, l), v)
                    for (rr, cc), v in rinv.data.items():
                        a, b = rr
                        if cc == (l, k):
                            pair(terms, "-", (j, b), "-", (i, a), -v)
                    if terms:
                        out["rll_mm"].append(terms)

    for a in labels:
        for b in labels:
            for i in labels:
                for j in labels:
                    terms = {}
                    for (rr, cc), v in rinv.data.items():
                        h, c = rr
                        if cc == (b, j):
                            pair(terms, "+", (a, c), "-", (i, h), v)
                    for (rr, cc), v in rinv.data.items():
                        if rr == (i, a):
                            c, h = cc
                            pair(terms, "-", (h, j), "+", (c, b), -v)
                    if terms:
                        out["rll_pm"].append(terms)
    return out


def _orth_rows(rd: RData, lb: LBand) -> Dict[str, List[Terms]]:
    labels = rd.labels
    f = rd.field
    rows: Dict[str, List[Terms]] = {"orth_p": [], "orth_m": []}
    for j in labels:
        for i in labels:
            fams = (
                ("+", lambda h: (rd.qpow(rd.rho[j] - rd.rho[h]), (-h, -j), (h, i))),
                ("+", lambda h: (rd.qpow(rd.rho[h] - rd.rho[i]), (j, h), (-i, -h))),
                ("-", lambda h: (rd.qpow(rd.rho[j] - rd.rho[h]), (-h, -j), (h, i))),
                ("-", lambda h: (rd.qpow(rd.rho[h] - rd.rho[i]), (j, h), (-i, -h))),
            )
            for fam, build in fams:
                terms: Terms = {}
                for h in labels:
                    c, a1, a2 = build(h)
                    e1 = lb.entry(fam, *a1)
                    e2 = lb.entry(fam, *a2)
                    if e1 is None or e2 is None:
                        continue
                    _mul_into(terms, e1, e2, c)
                if i == j:
                    _add_term(terms, W_ONE, -f.one())
                if terms:
                    rows["orth_p" if fam == "+" else "orth_m"].append(terms)
    return rows


def _lband_relations(rd: RData, lb: LBand) -> Dict[str, List[Terms]]:
    rows = _rll_rows(rd, lb)
    rows.update(_orth_rows(rd, lb))
    return rows


# -- representation checks -----------------------------------------------------


def _rep_matrices(rd: RData) -> Dict[Tuple[str, int, int], SparseMat]:
    """Vector representation of the triangular generators.

    rho(L+^i_k)^j_h = Rhat^{ij}_{hk} and rho(L-^a_l)^x_y = (Rhat^-1)^{ax}_{yl};
    the diagonal aliases must agree, which is asserted here.
    """
    labels = rd.labels
    f = rd.field
    reps: Dict[Tuple[str, int, int], SparseMat] = {}
    for i in labels:
        for k in labels:
            if i <= k:
                data = {}
                for (rr, cc), v in rd.rhat.data.items():
                    if rr[0] == i and cc[1] == k:
                        data[(rr[1], cc[0])] = v
                reps[("+", i, k)] = SparseMat(labels, labels, data, f)
            if i >= k:
                data = {}
                for (rr, cc), v in rd.rhat_inv.data.items():
                    if rr[0] == i and cc[1] == k:
                        data[(rr[1], cc[0])] = v
                reps[("-", i, k)] = SparseMat(labels, labels, data, f)
    for i in labels:
        if reps[("+", i, i)] != reps[("-", -i, -i)]:
            raise AssertionError(f"diagonal alias mismatch in the vector representation at {i}")
    return reps


def _rep_check_lrows(rd: RData, reg: Registry, rows: List[Terms]) -> None:
    """Every triangular relation must vanish in the vector representation."""
    reps = _rep_matrices(rd)
    by_rank: Dict[int, SparseMat] = {}
    for g in reg.gens:
        if g.kind == "diag":
            by_rank[g.rank] = reps[("+", g.index[0], g.index[0])]
        elif g.kind in ("L-", "L+"):
            fam = "+" if g.kind == "L+" else "-"
            by_rank[g.rank] = reps[(fam, g.index[0], g.index[1])]
    eye = SparseMat.identity(rd.labels, rd.field)
    for row in rows:
        acc = SparseMat.zero(rd.labels, rd.labels, rd.field)
        for w, c in row.items():
            m = eye
            for rank, e in w:
                if e < 0 or rank not in by_rank:
                    raise AssertionError("relation row contains a non-triangular letter")
                for _ in range(e):
                    m = m @ by_rank[rank]
            acc = acc + m.scale(c)
        if not acc.is_zero():
            raise AssertionError("triangular relation fails in the vector representation")


# -- rule installation ----------------------------------------------------------


def _rows_to_rules(rs: RewriteSystem, rows: List[Terms], *, context: str) -> None:
    """Row reduce relation rows and install each pivot as a rule."""
    rows = [r for r in rows if r]
    cols = sorted({w for row in rows for w in row},
                  key=lambda w: measure(w, rs.registry), reverse=True)
    red, pivots = rref(rows, cols, rs.field)
    for row, pivot in zip(red, pivots):
        rhs = {w: -c for w, c in row.items() if w != pivot}
        if len(pivot) == 2:
            (r1, e1), (r2, e2) = pivot
            if e1 == 1 and e2 == 1:
                rs.add_pair_rule(r1, 1, r2, 1, rhs)
                continue
        if len(pivot) == 1:
            rank, e = pivot[0]
            if e >= 2:
                rs.add_power_rule(rank, e, rhs)
                continue
        raise AssertionError(f"{context}: pivot {pivot} is not a two-unit word or a power")


def _strip_d_prefix(rs: RewriteSystem, row: Terms) -> Terms:
    """Clear invertible diagonal letters off the row's leading word.

    A row of the shape (D - c) * W with D a diagonal monomial cannot be
    cleared (stripping D reproduces the row up to a unit); such rows are
    returned as they are and must be resolved by the completion loop.
    """
    reg = rs.registry
    best = row
    for _ in range(8):
        if not row:
            return row
        top = max(row, key=lambda w: measure(w, reg))
        pre = []
        for rank, e in top:
            if reg.is_diag(rank):
                pre.append((rank, e))
            else:
                break
        if not pre:
            return row
        inv = tuple((rank, -e) for rank, e in reversed(pre))
        moved: Terms = {}
        for w, c in row.items():
            _add_term(moved, w_mul(inv, w), c)
        row = rs.normal_form(moved)
    return best


def _rule_shape(pivot) -> Optional[str]:
    if len(pivot) == 2:
        (r1, e1), (r2, e2) = pivot
        if e1 == 1 and e2 == 1:
            return "pair"
    if len(pivot) == 1 and pivot[0][1] >= 1:
        # threshold 1 is a vanishing letter (the inner antidiagonal
        # entries collapse for even dimension)
        return "power"
    return None


def _install_kk_rules(rs: RewriteSystem, relations: Dict[str, List[Terms]]) -> None:
    """Complete the quadratic relation rows to rewrite rules.

    With the mirror entries substituted, a row can lead with a product
    of three or more letters, which is not a rule shape.  Those rows are
    consequences of the two-letter rows: install the installable pivots,
    renormalize what is left under the new rules, and repeat until the
    rows are exhausted.
    """
    rows: List[Terms] = []
    for fam in ("rll_pp", "rll_mm", "rll_pm", "orth_p", "orth_m"):
        rows.extend(relations[fam])
    for _ in range(20):
        seen = set()
        work: List[Terms] = []
        for r in rows:
            r = _strip_d_prefix(rs, rs.normal_form(r))
            if not r:
                continue
            key = tuple(sorted((w, rs.field.to_str(c)) for w, c in r.items()))
            if key not in seen:
                seen.add(key)
                work.append(r)
        if not work:
            return
        cols = sorted({w for row in work for w in row},
                      key=lambda w: measure(w, rs.registry), reverse=True)
        red, pivots = rref(work, cols, rs.field)
        rest: List[Terms] = []
        progress = False
        for row, pivot in zip(red, pivots):
            shape = _rule_shape(pivot)
            if shape is None:
                rest.append(row)
                continue
            rhs = {w: -c for w, c in row.items() if w != pivot}
            if shape == "pair":
                (r1, _), (r2, _) = pivot
                rs.add_pair_rule(r1, 1, r2, 1, rhs)
            else:
                rs.add_power_rule(pivot[0][0], pivot[0][1], rhs)
            progress = True
        if not rest:
            return
        if not progress:
            raise AssertionError("triangular relations do not complete to pair rules")
        rows = rest
    raise AssertionError("triangular relation completion did not converge")


def _diag_rule(rs: RewriteSystem, hi: int, lo: int, factor, *, variants: bool = True) -> None:
    rhs = {w_mul(w_letter(lo), w_letter(hi)): factor}
    rs.add_pair_rule(hi, 1, lo, 1, rhs, add_sign_variants=variants)


# -- coordinate-triangular exchange ------------------------------------------------


def _cross_rule_table(rd: RData, reg: Registry, lb: LBand, family: str) -> Dict[Tuple[int, int], Terms]:
    """p[j] * L^i_k  ->  sum over (h, m) of M^{hj}_{mk} L^i_h p[m].

    M is the braid matrix for the plus family and its inverse for the
    minus family.  Keyed by (p rank, L rank); mirror targets are not
    letters and entries off the triangular support drop.
    """
    mat = rd.rhat if family == "+" else rd.rhat_inv
    labels = rd.labels
    prank = {i: reg.gen(f"p[{i}]").rank for i in labels}
    out: Dict[Tuple[int, int], Terms] = {}
    ents: Dict[Tuple[int, int], List] = {}
    for (rr, cc), v in mat.data.items():
        h, j = rr
        m, k = cc
        ents.setdefault((j, k), []).append((h, m, v))
    for i in labels:
        for k in labels:
            if i != k and ((family == "+") != (i < k) or not _kept(i, k)):
                continue
            lrank = reg.gen(f"d[{i if family == '+' else -i}]").rank if i == k \
                else reg.gen(f"L{family}[{i},{k}]").rank
            for j in labels:
                terms: Terms = {}
                for h, m, v in ents.get((j, k), ()):
                    eh = lb.entry(family, i, h)
                    if eh is None:
                        continue
                    _mul_into(terms, eh, {w_letter(prank[m]): rd.field.one()}, v)
                terms = lb.rs.normal_form(terms)
                key = (prank[j], lrank)
                if key in out:
                    if out[key] != terms:
                        raise AssertionError(f"conflicting exchange rules for {key}")
                else:
                    out[key] = terms
    return out


# -- root bootstrap --------------------------------------------------------------


def _radius_sq_terms(rd: RData, reg: Registry, a: int) -> Terms:
    """Metric square of the coordinates with labels of magnitude <= a."""
    terms: Terms = {}
    for h in rd.labels:
        if abs(h) <= a:
            w = w_mul(
                w_letter(reg.gen(f"p[{h}]").rank),
                w_letter(reg.gen(f"p[{-h}]").rank),
            )
            _add_term(terms, w, rd.g.get(h, -h))
    return terms


def _exchange_factor(rs: RewriteSystem, root_rank: int, power: int, w) -> object:
    """Scalar f with root^power * w = f * w * root^power, both sides normal."""
    left = rs.normal_form({w_mul(w_letter(root_rank, power), w): rs.field.one()})
    right = rs.normal_form({w_mul(w, w_letter(root_rank, power)): rs.field.one()})
    if len(left) != 1 or len(right) != 1:
        raise AssertionError("root exchange is not monomial on a coordinate word")
    (lw, lc), = left.items()
    (rw, rc), = right.items()
    if lw != rw:
        raise AssertionError("root exchange changed the underlying word")
    return lc / rc


def _mat_mul_terms(rs: RewriteSystem, x: Terms, y: Terms) -> Terms:
    out: Terms = {}
    for w1, c1 in x.items():
        for w2, c2 in y.items():
            _add_term(out, w_mul(w1, w2), c1 * c2)
    return rs.normal_form(out)


def _sqrt_table(
    rs: RewriteSystem,
    x: Dict[Tuple[int, int], Terms],
    pairs: List[Tuple[int, int]],
    root_rank: int,
    power: int,
    signs: Optional[Dict[int, int]] = None,
) -> Dict[Tuple[int, int], Terms]:
    """Solve y with sum_h y[m,h] y[h,j] = x[m,j] on a triangular index set.

    The diagonal of y is a scalar multiple of root^power (so x must have
    diagonal entries proportional to root^(2*power)); off-diagonal
    entries are found level by level, word by word, dividing by the
    two-sided exchange factor (a Sylvester solve that is diagonal in the
    word basis because root^power exchanges monomially).

    The square determines each diagonal coefficient only up to sign;
    `signs` selects the branch per index (the caller must fix it from an
    independent consistency condition, squaring cannot).
    """
    field = rs.field
    sq_base = rs.normal_form({w_letter(root_rank, 2 * power): field.one()})
    diag_coeff: Dict[int, object] = {}
    y: Dict[Tuple[int, int], Terms] = {}
    levels = sorted(pairs, key=lambda t: abs(t[0] - t[1]))
    for m, j in levels:
        if m == j:
            entry = rs.normal_form(x.get((m, m), {}))
            ratio = None
            for w, c in sq_base.items():
                got = entry.get(w)
                if got is None:
                    raise AssertionError("diagonal exchange entry is not proportional to the root power")
                r = got / c
                if ratio is None:
                    ratio = r
                elif ratio != r:
                    raise AssertionError("diagonal exchange entry is not proportional to the root power")
            if len(entry) != len(sq_base):
                raise AssertionError("diagonal exchange entry has extra terms")
            f = field.sqrt(ratio)
            if f is None:
                raise AssertionError("diagonal exchange factor has no square root in the field")
            if signs is not None and signs[m] < 0:
                f = -f
            diag_coeff[m] = f
            y[(m, m)] = {w_letter(root_rank, power): f}
            continue
        known: Terms = {}
        lo, hi = min(m, j), max(m, j)
        for h in range(lo + 1, hi):
            a, b = (m, h), (h, j)
            if a in y and b in y:
                for w, c in _mat_mul_terms(rs, y[a], y[b]).items():
                    _add_term(known, w, -c)
        for w, c in rs.normal_form(x.get((m, j), {})).items():
            _add_term(known, w, c)
        entry: Terms = {}
        fm, fj = diag_coeff[m], diag_coeff[j]
        for v, c in known.items():
            stripped = rs.normal_form({w_mul(v, w_letter(root_rank, -power)): field.one()})
            if len(stripped) != 1:
                raise AssertionError("could not strip the root power from a solve word")
            (wt, wc), = stripped.items()
            phi = _exchange_factor(rs, root_rank, power, wt)
            denom = fm * phi + fj
            if not denom:
                raise AssertionError("degenerate Sylvester denominator in the root bootstrap")
            _add_term(entry, wt, c * wc / denom)
        if entry:
            y[(m, j)] = entry
    # verify the square
    for m, j in pairs:
        acc: Terms = {}
        lo, hi = min(m, j), max(m, j)
        for h in range(lo, hi + 1):
            a, b = (m, h), (h, j)
            if a in y and b in y:
                for w, c in _mat_mul_terms(rs, y[a], y[b]).items():
                    _add_term(acc, w, c)
        want = rs.normal_form(x.get((m, j), {}))
        if acc != want:
            raise AssertionError(f"root bootstrap square check failed at {(m, j)}")
    return y


def _invert_table(
    rs: RewriteSystem,
    y: Dict[Tuple[int, int], Terms],
    pairs: List[Tuple[int, int]],
    root_rank: int,
    power: int,
) -> Dict[Tuple[int, int], Terms]:
    """z with sum_h z[g,h] y[h,j] = delta, by back substitution."""
    field = rs.field
    z: Dict[Tuple[int, int], Terms] = {}
    inv_diag: Dict[int, Terms] = {}
    for m, j in sorted(pairs, key=lambda t: abs(t[0] - t[1])):
        if m == j:
            (w, c), = y[(m, m)].items()
            inv_diag[m] = {w_letter(root_rank, -power): field.one() / c}
            z[(m, m)] = inv_diag[m]
            continue
        acc: Terms = {}
        lo, hi = min(m, j), max(m, j)
        for h in range(lo, hi + 1):
            if h == j:
                continue
            a, b = (m, h), (h, j)
            if a in z and b in y:
                for w, c in _mat_mul_terms(rs, z[a], y[b]).items():
                    _add_term(acc, w, -c)
        entry = _mat_mul_terms(rs, acc, inv_diag[j])
        if entry:
            z[(m, j)] = entry
    for m, j in pairs:
        acc = {}
        lo, hi = min(m, j), max(m, j)
        for h in range(lo, hi + 1):
            a, b = (m, h), (h, j)
            if a in z and b in y:
                for w, c in _mat_mul_terms(rs, z[a], y[b]).items():
                    _add_term(acc, w, c)
        want = {W_ONE: rs.field.one()} if m == j else {}
        if acc != want:
            raise AssertionError(f"root bootstrap inversion check failed at {(m, j)}")
    return z


def _cross_columns(rs: RewriteSystem, rd: RData, reg: Registry, family: str,
                   square: Terms) -> Dict[Tuple[int, int], Terms]:
    """x[h,k] with square * L^m_k = sum_h L^m_h x[h,k], any row m.

    Computed by crossing the coordinate word formally through a matrix
    row, so no triangular letters are involved: the state is a map from
    the current second index to the coordinate tail on its right.
    """
    mat = rd.rhat if family == "+" else rd.rhat_inv
    labels = rd.labels
    field = rd.field
    prank = {i: reg.gen(f"p[{i}]").rank for i in labels}
    plabel = {r: i for i, r in prank.items()}
    ents: Dict[Tuple[int, int], List] = {}
    for (rr, cc), v in mat.data.items():
        h, a = rr
        m, xx = cc
        ents.setdefault((a, xx), []).append((h, m, v))
    out: Dict[Tuple[int, int], Terms] = {}
    for k in labels:
        for w, cw in square.items():
            letters: List[int] = []
            for rank, e in w:
                if rank not in plabel or e < 0:
                    raise AssertionError("root square is not a positive coordinate word")
                letters.extend([rank] * e)
            state: Dict[int, Terms] = {k: {W_ONE: cw}}
            for rank in reversed(letters):
                a = plabel[rank]
                new: Dict[int, Terms] = {}
                for xx, tail in state.items():
                    for h, m, v in ents.get((a, xx), ()):
                        tgt = new.setdefault(h, {})
                        pw = w_letter(prank[m])
                        for tw, tc in tail.items():
                            _add_term(tgt, w_mul(pw, tw), v * tc)
                state = {h: t for h, t in new.items() if t}
            for h, tail in state.items():
                dst = out.setdefault((h, k), {})
                for tw, tc in tail.items():
                    _add_term(dst, tw, tc)
    out = {hk: rs.normal_form(t) for hk, t in out.items()}
    out = {hk: t for hk, t in out.items() if t}
    for h, k in out:
        if (family == "+" and h > k) or (family == "-" and h < k):
            raise AssertionError("exchange matrix is not triangular")
    return out


def _intertwine_ok(rs: RewriteSystem, rd: RData, reg: Registry, family: str,
                   y: Dict[Tuple[int, int], Terms], power_chi: Dict[int, int]) -> bool:
    """Whether the exchange table commutes with crossing a coordinate.

    Writing r * L^._k = sum_h L^._h y[h,k] and crossing p[a] over both
    sides forces, for every a, k and output row g,

        sum M^{ha}_{mk} y[g,h] p[m]  =  s^chi(a) sum M^{ga}_{mh} p[m] y[h,k]

    in the coordinate-root subalgebra.  Squaring cannot see the sign of
    the diagonal; this condition can, which makes it the branch oracle.
    """
    mat = rd.rhat if family == "+" else rd.rhat_inv
    labels = rd.labels
    field = rd.field
    prank = {i: reg.gen(f"p[{i}]").rank for i in labels}
    by_col: Dict[Tuple[int, int], List] = {}
    by_row: Dict[Tuple[int, int], List] = {}
    for (rrow, ccol), v in mat.data.items():
        h, a = rrow
        m, k = ccol
        by_col.setdefault((a, k), []).append((h, m, v))
        by_row.setdefault((h, a), []).append((m, k, v))
    for a in labels:
        fac = field.s_power(power_chi[a])
        for k in labels:
            for g in labels:
                diff: Terms = {}
                for h, m, v in by_col.get((a, k), ()):
                    yg = y.get((g, h))
                    if yg is None:
                        continue
                    pw = w_letter(prank[m])
                    for wv, cv in yg.items():
                        _add_term(diff, w_mul(wv, pw), v * cv)
                for m, h, v in by_row.get((g, a), ()):
                    yk = y.get((h, k))
                    if yk is None:
                        continue
                    pw = w_letter(prank[m])
                    for wv, cv in yk.items():
                        _add_term(diff, w_mul(pw, wv), -fac * v * cv)
                if diff and not rs.is_zero_mod(diff):
                    return False
    return True


def _solve_root_exchange(rs: RewriteSystem, rd: RData, reg: Registry, family: str,
                         x: Dict[Tuple[int, int], Terms], pairs: List[Tuple[int, int]],
                         root_rank: int, power: int, chi: Dict[int, int]) -> Dict[Tuple[int, int], Terms]:
    """Square root of an exchange table on the positive diagonal branch.

    The branch convention matches the scalar case (an element that
    q-commutes with the square gets the positive half power of q); the
    intertwining condition is asserted as an independent consistency
    check of the solved table.
    """
    labels = rd.labels
    y = _sqrt_table(rs, x, pairs, root_rank, power)
    if not _intertwine_ok(rs, rd, reg, family, y, {a: power * chi[a] for a in labels}):
        raise AssertionError(f"root exchange table fails the crossing consistency for family {family}")
    return y


def _install_root_rules(rs: RewriteSystem, reg: Registry, rd: RData, lb: LBand) -> None:
    field = rd.field
    labels = rd.labels
    n = rd.N // 2
    odd = rd.N % 2 == 1
    prank = {i: reg.gen(f"p[{i}]").rank for i in labels}
    roots: List[Tuple[str, int, Dict[int, int]]] = []
    # (name, power-of-root-that-squares-to-coordinates, p exchange exponents)
    if odd:
        roots.append(("sqrtp0", 2, {i: (1 if i > 0 else -1 if i < 0 else 0) for i in labels}))
    for a in range(1, n + 1):
        roots.append((f"sqrtP[{a}]", 4, {i: (1 if i > a else -1 if i < -a else 0) for i in labels}))

    # mutual root exchange: all scaling letters commute
    root_ranks = [reg.gen(name).rank for name, _, _ in roots]
    for ri in root_ranks:
        for rj in root_ranks:
            if ri > rj:
                _diag_rule(rs, ri, rj, field.one())

    # coordinates hop over roots with a half power of q
    for name, _, chi in roots:
        rr = reg.gen(name).rank
        for i in labels:
            _diag_rule(rs, prank[i], rr, field.s_power(-chi[i]))

    # squares of the roots
    if odd:
        rr = reg.gen("sqrtp0").rank
        rs.add_power_rule(rr, 2, {w_letter(prank[0]): field.one()})
        # inverse powers absorb the adjacent coordinate
        rs.add_pair_rule(rr, -1, prank[0], 1, {w_letter(rr): field.one()})
    for a in range(1, n + 1):
        rr = reg.gen(f"sqrtP[{a}]").rank
        quad = rs.normal_form(_radius_sq_terms(rd, reg, a))
        rs.add_power_rule(rr, 4, quad)

    # triangular exchange via the square root bootstrap
    if not any(g.kind == "diag" for g in reg.gens):
        return

    def rule_map(family, rr, y, z):
        out: Dict[Tuple[int, int, int, int], Terms] = {}
        for table, sign in ((y, 1), (z, -1)):
            for m in labels:
                for k in labels:
                    if m != k and ((family == "+") != (m < k) or not _kept(m, k)):
                        continue
                    lrank = reg.gen(f"d[{m if family == '+' else -m}]").rank if m == k \
                        else reg.gen(f"L{family}[{m},{k}]").rank
                    rhs: Terms = {}
                    for h in labels:
                        ent = lb.entry(family, m, h)
                        tab = table.get((h, k))
                        if ent is None or tab is None:
                            continue
                        _mul_into(rhs, ent, tab, field.one())
                    out[(rr, sign, lrank, 1)] = rs.normal_form(rhs)
        return out

    for name, square_power, chi in roots:
        rr = reg.gen(name).rank
        maps: Dict[str, Dict] = {}
        for family in ("+", "-"):
            pairs = [
                (h, k)
                for h in labels
                for k in labels
                if (family == "+" and h <= k) or (family == "-" and h >= k)
            ]
            x = _cross_columns(rs, rd, reg, family,
                               rs.normal_form({w_letter(rr, square_power): field.one()}))
            if square_power == 4:
                x = _solve_root_exchange(rs, rd, reg, family, x, pairs, rr, 2, chi)
            y = _solve_root_exchange(rs, rd, reg, family, x, pairs, rr, 1, chi)
            z = _invert_table(rs, y, pairs, rr, 1)
            maps[family] = rule_map(family, rr, y, z)
        # the families share the diagonal-letter rules; their conventional
        # overall signs must be aligned before installing
        shared = sorted(set(maps["+"]) & set(maps["-"]))

        def aligned(flip) -> bool:
            for k in shared:
                diff = dict(maps["+"][k])
                for w, c in maps["-"][k].items():
                    _add_term(diff, w, -flip * c)
                if diff and not rs.is_zero_mod(diff):
                    return False
            return True

        for flip in (field.one(), -field.one()):
            if aligned(flip):
                break
        else:
            raise AssertionError(f"root rule families disagree beyond a sign for {name}")
        for key in sorted(maps["+"]):
            rs.add_pair_rule(*key, maps["+"][key])
        for key in sorted(maps["-"]):
            if key in shared:
                continue
            rs.add_pair_rule(*key, {w: flip * c for w, c in maps["-"][key].items()})


# -- builders --------------------------------------------------------------------


def build_euclidean(N: int, field: Field) -> Presentation:
    rd = build_rdata(N, field)
    reg = _gen_specs(N, with_l=False, with_roots=False, with_p=True)
    rs = RewriteSystem(reg, field)
    rows = _pp_rows(rd, reg)
    _rows_to_rules(rs, rows, context="coordinate exchange")
    expect = N * (N - 1) // 2
    got = len(rs.pair_rules) + sum(len(v) for v in rs.power_rules.values())
    if got != expect:
        raise AssertionError(f"coordinate rules: expected {expect}, got {got}")
    return Presentation("euclidean", rd, reg, rs, {"pp": rows})


def build_frt(N: int, field: Field) -> Presentation:
    rd = build_rdata(N, field)
    reg = _gen_specs(N, with_l=True, with_roots=False, with_p=False)
    rs = RewriteSystem(reg, field)
    lb = LBand(rd, reg, rs)
    relations = _lband_relations(rd, lb)
    _rep_check_lrows(rd, reg, [r for rows in relations.values() for r in rows])
    _install_kk_rules(rs, relations)
    return Presentation("frt", rd, reg, rs, relations, lband=lb)


def _build_crossed(rd: RData, reg: Registry, *, include_lband: bool) -> Tuple[RewriteSystem, Dict[str, List[Terms]], LBand]:
    field = rd.field
    relations: Dict[str, List[Terms]] = {"pp": _pp_rows(rd, reg)}
    rs = RewriteSystem(reg, field)
    _rows_to_rules(rs, relations["pp"], context="coordinate exchange")
    lb = LBand(rd, reg, rs)
    if include_lband:
        lrel = _lband_relations(rd, lb)
        _rep_check_lrows(rd, reg, [r for rows in lrel.values() for r in rows])
        relations.update(lrel)
        _install_kk_rules(rs, lrel)
    for family in ("+", "-"):
        cross_rel: List[Terms] = []
        table = _cross_rule_table(rd, reg, lb, family)
        for (pr, lr), rhs in sorted(table.items()):
            key = (pr, 1, lr, 1)
            if key in rs.pair_rules:
                # diagonal-letter exchanges are derived by both families
                if rs.pair_rules[key].rhs != rhs:
                    raise AssertionError(f"conflicting coordinate exchange at {key}")
            else:
                rs.add_pair_rule(pr, 1, lr, 1, rhs)
            row = dict(rhs)
            _add_term(row, w_mul(w_letter(pr), w_letter(lr)), -field.one())
            cross_rel.append(row)
        relations["cross_p" if family == "+" else "cross_m"] = cross_rel
    return rs, relations, lb


def build_cross(N: int, field: Field, *, include_lband: bool = True) -> Presentation:
    rd = build_rdata(N, field)
    reg = _gen_specs(N, with_l=True, with_roots=False, with_p=True)
    rs, relations, lb = _build_crossed(rd, reg, include_lband=include_lband)
    name = "cross" if include_lband else "cross-light"
    return Presentation(name, rd, reg, rs, relations, lband=lb)


def build_extended(N: int, field: Field, *, include_lband: bool = True) -> Presentation:
    rd = build_rdata(N, field)
    reg = _gen_specs(N, with_l=True, with_roots=True, with_p=True)
    rs, relations, lb = _build_crossed(rd, reg, include_lband=include_lband)
    _install_root_rules(rs, reg, rd, lb)
    name = "extended" if include_lband else "extended-light"
    return Presentation(name, rd, reg, rs, relations, lband=lb)


# -- memoized access ---------------------------------------------------------------


_cache: Dict[tuple, Presentation] = {}


def get_presentation(kind: str, N: int, *, s0: Optional[Fraction] = None, include_lband: bool = True) -> Presentation:
    key = (kind, N, s0, include_lband)
    got = _cache.get(key)
    if got is not None:
        return got
    field: Field = FieldQ() if s0 is None else FieldAt(s0)
    if kind == "euclidean":
        pres = build_euclidean(N, field)
    elif kind == "frt":
        pres = build_frt(N, field)
    elif kind == "cross":
        pres = build_cross(N, field, include_lband=include_lband)
    elif kind == "extended":
        pres = build_extended(N, field, include_lband=include_lband)
    else:
        raise ValueError(f"unknown presentation kind {kind!r}")
    _cache[key] = pres
    return pres


# -- serialization -------------------------------------------------------------------


def presentation_to_json(pres: Presentation) -> dict:
    reg = pres.registry
    field = pres.field
    gens = [
        {
            "name": g.name,
            "kind": g.kind,
            "index": list(g.index),
            "rank": g.rank,
            "invertible": g.invertible,
            "mass": g.mass,
        }
        for g in reg.gens
    ]
    aliases = {a: reg.by_name[a].name for a in sorted(reg.aliases)}

    def terms_json(terms: Terms):
        items = sorted(terms.items(), key=lambda kv: word_sort_key(kv[0]), reverse=True)
        return [[[list(l) for l in w], field.to_str(c)] for w, c in items]

    pair_rules = []
    for key in sorted(pres.rules.pair_rules):
        rule = pres.rules.pair_rules[key]
        pair_rules.append(
            {
                "key": list(key),
                "rhs": terms_json(rule.rhs),
                "zero_mode_only": rule.zero_mode_only,
            }
        )
    power_rules = []
    for rank in sorted(pres.rules.power_rules):
        for pr in sorted(pres.rules.power_rules[rank], key=lambda p: p.match):
            power_rules.append(
                {
                    "rank": rank,
                    "match": pr.match,
                    "rhs": terms_json(pr.rhs),
                    "zero_mode_only": pr.zero_mode_only,
                }
            )
    mode = {"mode": "exact"} if isinstance(field, FieldQ) else {"mode": "eval", "s0": str(field.s0)}
    return {
        "presentation": pres.name,
        "dim": pres.N,
        **mode,
        "generators": gens,
        "aliases": aliases,
        "pair_rules": pair_rules,
        "power_rules": power_rules,
    }


def presentation_from_json(obj: dict) -> Presentation:
    from .grammar import parse_scalar

    field: Field = FieldQ() if obj["mode"] == "exact" else FieldAt(Fraction(obj["s0"]))
    rd = build_rdata(obj["dim"], field)
    gens = [
        Generator(g["name"], g["kind"], tuple(g["index"]), g["rank"], g["invertible"], g.get("mass", 0))
        for g in obj["generators"]
    ]
    reg = Registry(gens, obj["aliases"])
    rs = RewriteSystem(reg, field)

    def terms_back(items) -> Terms:
        return {
            tuple((r, e) for r, e in w): parse_scalar(s, field) for w, s in items
        }

    for rule in obj["pair_rules"]:
        r1, s1, r2, s2 = rule["key"]
        rs.add_pair_rule(r1, s1, r2, s2, terms_back(rule["rhs"]), zero_mode_only=rule["zero_mode_only"])
    for rule in obj["power_rules"]:
        rs.add_power_rule(rule["rank"], rule["match"], terms_back(rule["rhs"]), zero_mode_only=rule["zero_mode_only"])
    return Presentation(obj["presentation"], rd, reg, rs, {})
