"""Scaling constants, homomorphisms into the extended coordinate algebra,
and the decoupling maps.

The triangular generator matrices act on the coordinate algebra through
the crossed product.  Each triangular family admits a homomorphism from
the crossed product back into the (root-extended) coordinate algebra
that restricts to the identity on coordinates; composing with the
antipode yields maps whose images commute with every coordinate.  This
module builds those maps and the Hopf structure they rely on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .ncengine import NcPoly, Terms, w_letter
from .presentations import Presentation
from .scalars import frac_sqrt

Entry = Tuple[str, int, int]


class GluingError(ValueError):
    """A single homomorphism extending both triangular halves does not
    exist for the requested configuration; carries the offending
    residuals."""

    def __init__(self, message: str, residuals: Optional[List[str]] = None):
        super().__init__(message)
        self.residuals = residuals or []


# -- scaling constants ---------------------------------------------------------


@dataclass
class GammaConfig:
    """One scaling constant per index and family.

    gamma drives the minus-family homomorphism, gbar the plus-family
    one.  The constraint set (fixed values at the innermost index,
    products elsewhere) is what makes the maps homomorphisms; check()
    returns the violated constraint names.
    """

    N: int
    gamma: Dict[int, object]
    gbar: Dict[int, object]

    def check(self, field) -> List[str]:
        from .scalars import field_h, field_k

        n = self.N // 2
        q = field.s_power(2)
        one = field.one()
        h = field_h(field)
        k = field_k(field)
        bad: List[str] = []

        def omega(a: int):
            e = int(2 * _rho_value(self.N, a))
            return field.s_power(e) + field.s_power(-e)

        if self.N % 2:
            if self.gamma[0] != -one / (field.s_power(1) * h):
                bad.append("gamma_0")
            if self.gbar[0] != field.s_power(1) / h:
                bad.append("gbar_0")
            if self.gamma[1] * self.gamma[-1] != -one / (q * h * h):
                bad.append("gamma_1_product")
            if self.gbar[1] * self.gbar[-1] != -q / (h * h):
                bad.append("gbar_1_product")
        else:
            for a in (1, -1):
                if self.gamma[a] != -one / k:
                    bad.append(f"gamma_{a}")
                if self.gbar[a] != one / k:
                    bad.append(f"gbar_{a}")
        for a in range(2, n + 1):
            w = omega(a) * omega(a - 1)
            if self.gamma[a] * self.gamma[-a] != -w / (q * k * k):
                bad.append(f"gamma_{a}_product")
            if self.gbar[a] * self.gbar[-a] != -q * w / (k * k):
                bad.append(f"gbar_{a}_product")
        return bad

    def to_json(self, field) -> dict:
        return {
            "N": self.N,
            "gamma": {str(a): field.to_str(c) for a, c in sorted(self.gamma.items())},
            "gbar": {str(a): field.to_str(c) for a, c in sorted(self.gbar.items())},
        }

    @staticmethod
    def from_json(data: dict, field) -> "GammaConfig":
        from .grammar import parse_scalar

        return GammaConfig(
            int(data["N"]),
            {int(a): parse_scalar(s, field) for a, s in data["gamma"].items()},
            {int(a): parse_scalar(s, field) for a, s in data["gbar"].items()},
        )

    @staticmethod
    def load(path: str, field) -> "GammaConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return GammaConfig.from_json(json.load(fh), field)


def _rho_value(N: int, a: int):
    from fractions import Fraction

    from .rmatrix import rho_weights

    return Fraction(rho_weights(N)[a])


def gamma_default(N: int, field) -> GammaConfig:
    """Default split of the scaling constants.

    Values the constraint set fixes are fixed; each product constraint
    is split by assigning the positive index its natural unit and
    solving the negative one.
    """
    from .scalars import field_h, field_k

    n = N // 2
    q = field.s_power(2)
    one = field.one()
    h = field_h(field)
    k = field_k(field)
    gamma: Dict[int, object] = {}
    gbar: Dict[int, object] = {}
    if N % 2:
        gamma[0] = -one / (field.s_power(1) * h)
        gbar[0] = field.s_power(1) / h
        gamma[1] = one / h
        gamma[-1] = (-one / (q * h * h)) / gamma[1]
        gbar[1] = one / h
        gbar[-1] = (-q / (h * h)) / gbar[1]
    else:
        gamma[1], gamma[-1] = -one / k, -one / k
        gbar[1], gbar[-1] = one / k, one / k

    def omega(a: int):
        e = int(2 * _rho_value(N, a))
        return field.s_power(e) + field.s_power(-e)

    for a in range(2, n + 1):
        w = omega(a) * omega(a - 1)
        gamma[a] = one / k
        gamma[-a] = (-w / (q * k * k)) / gamma[a]
        gbar[a] = one / k
        gbar[-a] = (-q * w / (k * k)) / gbar[a]
    return GammaConfig(N, gamma, gbar)


# -- the mu elements -----------------------------------------------------------


def _root_power(pres: Presentation, name: str, exp: int) -> NcPoly:
    return NcPoly.letter(pres.field, pres.registry.gen(name).rank, exp)


def mu(pres: Presentation, a: int, bar: bool, cfg: GammaConfig) -> NcPoly:
    """The localized element whose q-commutators with coordinates realize
    the triangular generators."""
    N = pres.N
    if a not in pres.rdata.labels:
        raise ValueError(f"index {a} not valid for dimension {N}")
    field = pres.field
    g = (cfg.gbar if bar else cfg.gamma)[a]
    if N % 2 and a == 0:
        return _root_power(pres, "sqrtp0", -2).scale(g)
    if N % 2 == 0 and abs(a) == 1:
        # (p^a)^-1 = 2 sqrtP1^-4 p^-a: the innermost coordinates commute
        # and their product is half the level-1 quadric
        fam = ("+" if a > 0 else "-") if not bar else ("-" if a > 0 else "+")
        d = pres.lentry(fam, 1, 1)
        inv = _root_power(pres, "sqrtP[1]", -4) * pres.poly(f"p[{-a}]")
        return pres.nf((inv * d).scale(g * (field.one() + field.one())))
    pa = _root_power(pres, f"sqrtP[{abs(a)}]", -2)
    if abs(a) - 1 == 0:
        pb = _root_power(pres, "sqrtp0", -2)
    else:
        pb = _root_power(pres, f"sqrtP[{abs(a) - 1}]", -2)
    return pres.nf((pa * pb * pres.poly(f"p[{-a}]")).scale(g))


# -- the homomorphisms ---------------------------------------------------------


def _letter_entry(name: str) -> Optional[Entry]:
    """Family and matrix position of a band letter, None for the rest."""
    if name.startswith("d["):
        i = int(name[2:-1])
        return ("d", i, i)
    if name.startswith("L-[") or name.startswith("L+["):
        i, j = (int(t) for t in name[3:-1].split(","))
        return (name[1], i, j)
    return None


class PhiMap:
    """Homomorphism from the crossed product onto the extended
    coordinate algebra, identity on coordinates and roots.

    family "-" covers the lower-triangular half, "+" the upper one,
    None the glued map that dispatches on the letter's own family
    (meaningful for odd dimension only).
    """

    def __init__(self, pres: Presentation, cfg: GammaConfig, family: Optional[str] = None):
        if family is None and pres.N % 2 == 0:
            raise GluingError("gluing unavailable for even N")
        self.pres = pres
        self.cfg = cfg
        self.family = family
        self._mu: Dict[Tuple[int, bool], NcPoly] = {}
        self._entries: Dict[Entry, NcPoly] = {}

    def _mu_at(self, a: int, bar: bool) -> NcPoly:
        got = self._mu.get((a, bar))
        if got is None:
            got = self._mu[(a, bar)] = mu(self.pres, a, bar, self.cfg)
        return got

    def entry(self, family: str, i: int, j: int) -> NcPoly:
        """Image of the abstract matrix entry; vanishes off support."""
        if self.family is not None and family != self.family:
            raise ValueError(f"generator family {family} does not match map family {self.family}")
        got = self._entries.get((family, i, j))
        if got is not None:
            return got
        pres = self.pres
        rd = pres.rdata
        field = pres.field
        bar = family == "+"
        m = self._mu_at(-i, bar)
        pj = pres.poly(f"p[{-j}]")
        x = field.s_power(-2) if bar else field.s_power(2)
        comm = m * pj - (pj * m).scale(x)
        out = pres.nf(comm.scale(rd.qpow(-rd.rho[i] + rd.rho[j])))
        self._entries[(family, i, j)] = out
        return out

    def _image_of_letter(self, rank: int, exp: int) -> NcPoly:
        pres = self.pres
        g = pres.registry.gens[rank]
        ent = _letter_entry(g.name)
        if ent is None:
            # coordinates and roots map to themselves
            return NcPoly.letter(pres.field, rank, exp)
        kind, i, j = ent
        if exp < 1:
            raise ValueError(f"negative power of {g.name} has no image")
        if kind == "d":
            fam = self.family or "-"
            pos = (i, i) if fam == "+" else (-i, -i)
        else:
            fam = kind
            pos = (i, j)
        if self.family is not None and kind != "d" and fam != self.family:
            raise ValueError(f"generator family {fam} does not match map family {self.family}")
        img = self.entry(fam, *pos)
        out = img
        for _ in range(exp - 1):
            out = pres.nf(out * img)
        return out

    def apply(self, x) -> NcPoly:
        """Image of a polynomial, word by word with renormalization
        after every factor to bound growth."""
        pres = self.pres
        terms = x.terms if isinstance(x, NcPoly) else x
        acc = NcPoly.zero(pres.field)
        for w, c in terms.items():
            cur = NcPoly.scalar(pres.field, c)
            for rank, e in w:
                cur = pres.nf(cur * self._image_of_letter(rank, e))
                if not cur:
                    break
            acc = acc + cur
        return pres.nf(acc)


# -- Hopf data ------------------------------------------------------------------


def antipode_entry(pres: Presentation, family: str, i: int, j: int) -> NcPoly:
    """S(L^i_j) = q^(rho_i - rho_j) L^{-j}_{-i}, as an element."""
    rd = pres.rdata
    return pres.lentry(family, -j, -i).scale(rd.qpow(rd.rho[i] - rd.rho[j]))


def counit_entry(pres: Presentation, i: int, j: int):
    return pres.field.one() if i == j else pres.field.zero()


def coproduct_entry(pres: Presentation, family: str, i: int, j: int) -> List[Tuple[NcPoly, NcPoly]]:
    out = []
    for h in pres.rdata.labels:
        left = pres.lentry(family, i, h)
        right = pres.lentry(family, h, j)
        if left and right:
            out.append((left, right))
    return out


def hopf_apply(pres: Presentation, which: str, x, *, family: Optional[str] = None):
    """Extend the generator-level Hopf maps to band polynomials.

    The coproduct and counit extend multiplicatively, the antipode
    anti-multiplicatively.  Diagonal letters resolve through the given
    family ("-" when unspecified).
    """
    fam_default = family or "-"
    terms = x.terms if isinstance(x, NcPoly) else x
    field = pres.field

    def resolve(rank: int) -> Entry:
        g = pres.registry.gens[rank]
        ent = _letter_entry(g.name)
        if ent is None:
            raise ValueError(f"{g.name} is not a band generator")
        kind, i, j = ent
        if kind == "d":
            return (fam_default, i, i) if fam_default == "+" else (fam_default, -i, -i)
        return ent

    if which == "counit":
        total = field.zero()
        for w, c in terms.items():
            val = c
            for rank, _ in w:
                _, i, j = resolve(rank)
                val = val * counit_entry(pres, i, j)
                if not val:
                    break
            total = total + val
        return total
    if which == "antipode":
        out = NcPoly.zero(field)
        for w, c in terms.items():
            cur = NcPoly.scalar(field, c)
            for rank, e in reversed(w):
                fam, i, j = resolve(rank)
                s = antipode_entry(pres, fam, i, j)
                for _ in range(e):
                    cur = pres.nf(cur * s)
            out = out + cur
        return pres.nf(out)
    if which == "coproduct":
        pairs: List[Tuple[NcPoly, NcPoly]] = [(NcPoly.one(field), NcPoly.one(field))]
        for w, c in terms.items():
            if len(terms) != 1:
                raise ValueError("coproduct extension expects a single word")
            for rank, e in w:
                fam, i, j = resolve(rank)
                for _ in range(e):
                    nxt: List[Tuple[NcPoly, NcPoly]] = []
                    for lf, rt in pairs:
                        for dl, dr in coproduct_entry(pres, fam, i, j):
                            nxt.append((pres.nf(lf * dl), pres.nf(rt * dr)))
                    pairs = nxt
            pairs = [(lf.scale(c), rt) for lf, rt in pairs]
        return pairs
    raise ValueError(f"unknown Hopf map {which}")


# -- the decoupling maps ---------------------------------------------------------


class ZetaMap:
    """Composition sending a triangular generator to the sum of itself
    against the homomorphic image of its antipode partners; lands in
    the commutant of the coordinates."""

    def __init__(self, pres: Presentation, cfg: GammaConfig, family: str):
        self.pres = pres
        self.family = family
        self.phi = PhiMap(pres, cfg, family)
        self._entries: Dict[Tuple[int, int], NcPoly] = {}

    def entry(self, i: int, j: int) -> NcPoly:
        got = self._entries.get((i, j))
        if got is not None:
            return got
        pres = self.pres
        acc = NcPoly.zero(pres.field)
        for h in pres.rdata.labels:
            left = pres.lentry(self.family, i, h)
            if not left:
                continue
            right = self.phi.apply(antipode_entry(pres, self.family, h, j))
            if not right:
                continue
            acc = acc + pres.nf(left * right)
        out = pres.nf(acc)
        self._entries[(i, j)] = out
        return out


# -- gluing ----------------------------------------------------------------------


def _proportionality(pres: Presentation, a: NcPoly, b: NcPoly):
    """Scalar r with a = r*b modulo the rules, None if there is none."""
    if not b:
        return None
    w, c = next(iter(sorted(b.terms.items())))
    ca = a.terms.get(w)
    if ca is None:
        return None
    r = ca / c
    if pres.is_zero(a - b.scale(r)):
        return r
    return None


def _field_sqrt(field, x):
    """Square root inside the scalar field, None if there is none."""
    if hasattr(x, "sqrt"):
        return x.sqrt()
    if isinstance(x, Fraction):
        return frac_sqrt(x)
    return None


def _poly_mod(field, a: List, b: List) -> List:
    """Remainder of dense coefficient lists over the scalar field."""
    zero = field.zero()
    a = list(a)
    while a and a[-1] == zero:
        a.pop()
    while len(a) >= len(b):
        f = a[-1] / b[-1]
        off = len(a) - len(b)
        for k in range(len(b)):
            a[off + k] = a[off + k] - f * b[k]
        while a and a[-1] == zero:
            a.pop()
    return a


def _poly_gcd(field, polys: List[List]) -> List:
    zero = field.zero()
    g: List = []
    for p in polys:
        p = list(p)
        while p and p[-1] == zero:
            p.pop()
        if not p:
            continue
        if not g:
            g = p
            continue
        a, b = g, p
        while b:
            a, b = b, _poly_mod(field, a, b)
        g = a
        if len(g) == 1:
            break
    return g


def _poly_roots(field, g: List) -> List:
    """Roots in the scalar field of a polynomial of degree at most four
    whose odd part vanishes above degree one; raises on wilder shapes."""
    zero = field.zero()
    shift = 0
    while g and g[0] == zero:
        g.pop(0)
        shift += 1
    roots: List = []
    deg = len(g) - 1
    if deg <= 0:
        return roots
    if deg == 1:
        roots.append(-g[0] / g[1])
        return roots
    if deg == 2:
        a, b, c = g[2], g[1], g[0]
        if b == zero:
            z = -c / a
            r = _field_sqrt(field, z)
            if r is not None:
                roots.extend([r, -r])
            return roots
        disc = b * b - (a * c) * (field.one() + field.one() + field.one() + field.one())
        sd = _field_sqrt(field, disc)
        if sd is not None:
            two_a = a + a
            roots.extend([(-b + sd) / two_a, (-b - sd) / two_a])
        return roots
    if deg == 4 and g[1] == zero and g[3] == zero:
        for z in _poly_roots(field, [g[0], g[2], g[4]]):
            r = _field_sqrt(field, z)
            if r is not None:
                roots.extend([r, -r])
        return roots
    raise GluingError(f"free unit polynomial of unhandled shape (degree {deg})")


def _invert_single_word(pres: Presentation, x: NcPoly) -> NcPoly:
    """Inverse of a one-word element whose letters are all invertible
    after resolving p[0] through its adjoined square root."""
    if len(x.terms) != 1:
        raise GluingError("diagonal image is not a single word, cannot invert")
    (w, c), = x.terms.items()
    reg = pres.registry
    out = pres.scalar(pres.field.one() / c)
    for rank, e in reversed(w):
        name = reg.gens[rank].name
        if name == "p[0]":
            out = out * pres.poly("sqrtp0", -2 * e)
        elif reg.is_invertible(rank):
            out = out * pres.poly(name, -e)
        else:
            raise GluingError(f"cannot invert letter {name} in a diagonal image")
    return pres.nf(out)


def solve_gluing(N: int, field=None) -> GammaConfig:
    """Configuration under which the two triangular homomorphisms agree
    on the shared diagonal letters and preserve the mixed relations.

    The diagonal letters pin the plus-family constants to the
    minus-family ones through exact scalar ratios, leaving one free
    unit per product constraint.  Every mixed relation row is then
    decomposed by its dependence on those units, each normal word
    yields one Laurent equation, and the system is solved exactly;
    if it has no root in the scalar field the residual system is
    reported instead of a configuration.
    """
    if N % 2 == 0:
        raise GluingError("gluing unavailable for even N")
    from .presentations import get_presentation

    pres = get_presentation("extended", N) if field is None else get_presentation("extended", N, s0=field.s0)
    field = pres.field
    cfg = gamma_default(N, field)
    labels = pres.rdata.labels
    n = N // 2
    one = field.one()
    zero = field.zero()

    # unscaled diagonal images: gamma_i * minus(i) must equal
    # gbar_{-i} * plus(i) for the glued map to be single-valued
    unit = GammaConfig(N, {a: one for a in labels}, {a: one for a in labels})
    raw = PhiMap(pres, unit, None)
    residuals: List[str] = []
    ratio: Dict[int, object] = {}
    for i in labels:
        r = _proportionality(pres, raw.entry("-", -i, -i), raw.entry("+", i, i))
        if r is None:
            residuals.append(f"diagonal letter d[{i}] images are not proportional")
        else:
            ratio[i] = r
    if residuals:
        raise GluingError("no gluing configuration exists", residuals)

    # free units t_a = gamma_a for a = 1..n; gamma_{-a} = c_a / t_a with the
    # product values c_a pinned by the triangular suites, gamma_0 pinned by
    # the counit anchor, and every gbar determined by the diagonal ratios
    prods = {a: cfg.gamma[a] * cfg.gamma[-a] for a in range(1, n + 1)}

    def charge_gamma(a: int):
        if a == 0:
            return cfg.gamma[0], (0,) * n
        v = [0] * n
        if a > 0:
            v[a - 1] = 1
            return one, tuple(v)
        v[-a - 1] = -1
        return prods[-a], tuple(v)

    def charge_gbar(a: int):
        k, v = charge_gamma(-a)
        return ratio[-a] * k, v

    reg = pres.registry
    d_inverse_raw: Dict[int, NcPoly] = {}

    def letter_pieces(rank: int, e: int):
        """(charge, raw element) for one word factor under the glued map."""
        ent = _letter_entry(reg.gens[rank].name)
        if ent is None:
            return (one, (0,) * n), NcPoly.letter(field, rank, e)
        kind, i, j = ent
        if kind == "d":
            base_charge = charge_gamma(i)
            base = raw.entry("-", -i, -i)
            if e < 0:
                inv = d_inverse_raw.get(i)
                if inv is None:
                    inv = d_inverse_raw[i] = _invert_single_word(pres, base)
                k, v = base_charge
                base_charge = one / k, tuple(-x for x in v)
                base = inv
                e = -e
        elif kind == "-":
            base_charge = charge_gamma(-i)
            base = raw.entry("-", i, j)
        else:
            base_charge = charge_gbar(-i)
            base = raw.entry("+", i, j)
        if e < 0:
            raise GluingError(f"negative power of {reg.gens[rank].name} in a mixed row")
        k, v = base_charge
        ck, cv = one, (0,) * n
        out = pres.one()
        for _ in range(e):
            ck = ck * k
            cv = tuple(x + y for x, y in zip(cv, v))
            out = pres.nf(out * base)
        return (ck, cv), out

    equations: Dict[Tuple, Dict[Tuple[int, ...], object]] = {}
    for idx, row in enumerate(pres.relations["rll_pm"]):
        by_exp: Dict[Tuple[int, ...], NcPoly] = {}
        for w, c in row.items():
            k, v = c, (0,) * n
            elem = pres.one()
            for rank, e in w:
                (fk, fv), piece = letter_pieces(rank, e)
                k = k * fk
                v = tuple(x + y for x, y in zip(v, fv))
                elem = pres.nf(elem * piece)
                if not elem:
                    break
            if not elem:
                continue
            by_exp[v] = by_exp.get(v, pres.zero()) + elem.scale(k)

        # clear inverse scaling letters on the right, uniformly over the
        # whole row, so word coefficients can be compared linearly
        clear: Dict[int, int] = {}
        for poly in by_exp.values():
            for w in poly.terms:
                for rank, e in w:
                    if e < 0 and reg.is_invertible(rank) and not reg.is_lband(rank):
                        clear[rank] = max(clear.get(rank, 0), -e)
        mword = pres.one()
        for rank, e in sorted(clear.items()):
            mword = mword * NcPoly.letter(field, rank, e)
        cleared = {v: pres.nf(poly * mword) for v, poly in by_exp.items()}

        words = set()
        for poly in cleared.values():
            words.update(poly.terms)
        for w in sorted(words):
            eq = {v: poly.terms[w] for v, poly in cleared.items() if w in poly.terms}
            if not eq:
                continue
            lead = eq[min(eq)]
            key = tuple(sorted((v, str(field.to_str(c / lead))) for v, c in eq.items()))
            equations.setdefault(key, eq)

    # solve the Laurent system for the free units, one variable at a time
    t_vals: List = [None] * n
    eqs = list(equations.values())
    system = [" + ".join(f"({field.to_str(c)})*t^{v}" for v, c in sorted(eq.items())) for eq in eqs]
    for a in range(n):
        polys = []
        for eq in eqs:
            if all(all(v[b] == 0 for b in range(n) if b != a) for v in eq):
                exps = [v[a] for v in eq]
                if all(e == 0 for e in exps):
                    if any(c != zero for c in eq.values()):
                        raise GluingError("mixed relations are inconsistent", system)
                    continue
                shift = min(exps)
                coeffs = [zero] * (max(exps) - shift + 1)
                for v, c in eq.items():
                    coeffs[v[a] - shift] = coeffs[v[a] - shift] + c
                polys.append(coeffs)
        if not polys:
            t_vals[a] = cfg.gamma[a]
            continue
        g = _poly_gcd(field, polys)
        roots = [r for r in _poly_roots(field, g) if r != zero]
        if not roots:
            raise GluingError("free unit has no root in the scalar field", system)
        t_vals[a] = roots[0]
        # reduce remaining equations with the solved variable
        reduced = []
        for eq in eqs:
            red: Dict[Tuple[int, ...], object] = {}
            for v, c in eq.items():
                vv = list(v)
                c = c * t_vals[a] ** vv[a]
                vv[a] = 0
                vv = tuple(vv)
                red[vv] = red.get(vv, zero) + c
            red = {v: c for v, c in red.items() if c != zero}
            if red:
                reduced.append(red)
        eqs = reduced
    for eq in eqs:
        if any(c != zero for c in eq.values()):
            raise GluingError("mixed relations are inconsistent", system)

    gamma = dict(cfg.gamma)
    for a in range(1, n + 1):
        gamma[a] = t_vals[a - 1]
        gamma[-a] = prods[a] / t_vals[a - 1]
    gbar = {-i: gamma[i] * ratio[i] for i in labels}
    candidate = GammaConfig(N, gamma, gbar)
    bad = candidate.check(field)
    if bad:
        raise GluingError("glued constants violate the constraint set", bad)

    glued = PhiMap(pres, candidate, None)
    for idx, row in enumerate(pres.relations["rll_pm"]):
        res = glued.apply(row)
        if res and not pres.is_zero(res):
            residuals.append(f"rll_pm[{idx}]: {pres.show(res)}")
    if residuals:
        raise GluingError("mixed relations obstruct the gluing", residuals)
    return candidate
