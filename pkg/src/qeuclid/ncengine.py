"""Rewrite engine for finitely presented noncommutative algebras.

Elements are linear combinations of words in a ranked generator
alphabet.  A word is a tuple of (rank, exponent) letters with nonzero
exponents and no two adjacent letters of equal rank; multiplication
concatenates and merges at the seam.  Negative exponents are only
allowed on generators marked invertible.

Rewrite rules come in two shapes:

* pair rules, keyed by the ranks and exponent signs of two adjacent
  units, replacing that length-two subword by a polynomial;
* power rules, keyed by a rank and a threshold exponent, replacing a
  fixed power of one generator (threshold -1 rewrites inverse units).

Rules tagged zero_mode_only participate only in the zero test, which
may multiply through by invertible generators to clear denominators.

Termination is enforced at insertion time: every rule must strictly
decrease a lexicographic measure (built from band letter counts, left
context sizes, and in-band word comparisons) that is compatible with
embedding into larger words, so any rule set accepted here terminates
under any reduction strategy.  Confluence is not assumed; it is checked
empirically by check_overlaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

Word = Tuple[Tuple[int, int], ...]
Terms = Dict[Word, object]

L_BAND_KINDS = frozenset({"diag", "L-", "L+"})
ROOT_KIND = "root"

W_ONE: Word = ()

DEFAULT_DEGREE_CAP = 64


@dataclass(frozen=True)
class Generator:
    name: str
    kind: str  # "p" | "root" | "diag" | "L-" | "L+"
    index: tuple
    rank: int
    invertible: bool = False
    mass: int = 0  # grading weight used by the termination measure


class Registry:
    """Ranked alphabet with alias resolution.

    Aliases let one generator carry several presentation names (the
    diagonal entries of the two triangular matrices coincide, so both
    spellings must resolve to the same letter).
    """

    def __init__(self, gens: Sequence[Generator], aliases: Optional[Dict[str, str]] = None):
        gens = sorted(gens, key=lambda g: g.rank)
        for pos, g in enumerate(gens):
            if g.rank != pos:
                raise ValueError(f"ranks must be contiguous from 0, got {g.rank} at {pos}")
        self.gens: Tuple[Generator, ...] = tuple(gens)
        self.by_name: Dict[str, Generator] = {g.name: g for g in gens}
        if len(self.by_name) != len(gens):
            raise ValueError("duplicate generator names")
        self.aliases: Dict[str, str] = dict(aliases or {})
        for alias, target in self.aliases.items():
            if alias in self.by_name:
                raise ValueError(f"alias {alias} shadows a generator")
            self.by_name[alias] = self.by_name[target]
        self._lband = tuple(g.kind in L_BAND_KINDS for g in gens)
        self._diag = tuple(g.kind == "diag" for g in gens)
        self._invertible = tuple(g.invertible for g in gens)

    def __len__(self) -> int:
        return len(self.gens)

    def by_rank(self, rank: int) -> Generator:
        return self.gens[rank]

    def gen(self, name: str) -> Generator:
        g = self.by_name.get(name)
        if g is None:
            raise KeyError(f"unknown generator {name!r}")
        return g

    def is_lband(self, rank: int) -> bool:
        return self._lband[rank]

    def is_diag(self, rank: int) -> bool:
        return self._diag[rank]

    def is_invertible(self, rank: int) -> bool:
        return self._invertible[rank]


# -- words ------------------------------------------------------------------


def w_mul(a: Word, b: Word) -> Word:
    if not a:
        return b
    if not b:
        return a
    out = list(a)
    idx = 0
    nb = len(b)
    while idx < nb and out:
        rank, e = b[idx]
        if out[-1][0] != rank:
            break
        ne = out[-1][1] + e
        out.pop()
        idx += 1
        if ne:
            out.append((rank, ne))
            break
    out.extend(b[idx:])
    return tuple(out)


def w_concat(parts: Iterable[Word]) -> Word:
    out: Word = W_ONE
    for p in parts:
        out = w_mul(out, p)
    return out


def w_degree(w: Word) -> int:
    return sum(abs(e) for _, e in w)


def w_letter(rank: int, exp: int = 1) -> Word:
    if exp == 0:
        return W_ONE
    return ((rank, exp),)


def word_sort_key(w: Word):
    """Printing order: highest degree first, then rank-major unit tuples."""
    expanded = tuple((r, 1 if e < 0 else 0) for r, e in w for _ in range(abs(e)))
    return (w_degree(w), expanded)


class DegreeCapExceeded(RuntimeError):
    def __init__(self, word: Word, cap: int):
        super().__init__(f"reduction exceeded degree cap {cap} at word of degree {w_degree(word)}")
        self.word = word
        self.cap = cap


# -- measure ----------------------------------------------------------------
#
# M(w) is compared lexicographically:
#   m1   total mass of triangular letters (sum of gen.mass with multiplicity);
#        rules that trade a letter for lower-graded products still decrease
#   m2   number of triangular units
#   m3   for each triangular unit left to right, non-band units left of it
#   m4   number of non-band units
#   m5   triangular subword as (sign, rank) units
#   m6   number of diagonal units
#   m7   sum over diagonal units of triangular units left of each
#   m8   sum over non-band units of band units (diag or triangular) right of each
#   m9   diagonal subword as (sign, rank) units  (sign-major, so inverse
#        units rewriting to positive letters decreases)
#   m10  non-band subword as (rank, sign) units  (rank-major)
#
# Each component is additive under concatenation, or is a fixed-length
# lexicographic comparison once the earlier (count) components tie, so a
# strict in-isolation decrease stays strict in every context.


def measure(w: Word, registry: Registry):
    m1 = 0
    m2 = 0
    m3: List[int] = []
    m4 = 0
    m5: List[Tuple[int, int]] = []
    m6 = 0
    m7 = 0
    m8 = 0
    m9: List[Tuple[int, int]] = []
    m10: List[Tuple[int, int]] = []
    band_seen = 0
    band_total = 0
    for rank, e in w:
        if registry.is_lband(rank):
            band_total += abs(e)
    for rank, e in w:
        n = abs(e)
        neg = 1 if e < 0 else 0
        if not registry.is_lband(rank):
            m4 += n
            m8 += n * (band_total - band_seen)
            m10.extend([(rank, neg)] * n)
            continue
        band_seen += n
        if registry.is_diag(rank):
            m6 += n
            m7 += n * m2
            m9.extend([(neg, rank)] * n)
        else:
            m1 += n * registry.by_rank(rank).mass
            m2 += n
            m3.extend([m4] * n)
            m5.extend([(neg, rank)] * n)
    return (m1, m2, tuple(m3), m4, tuple(m5), m6, m7, m8, tuple(m9), tuple(m10))


# -- rules ------------------------------------------------------------------


@dataclass
class PairRule:
    key: Tuple[int, int, int, int]  # (rank_l, sign_l, rank_r, sign_r)
    rhs: Terms
    diag_factor: object = None  # coefficient c when rhs is exactly c * swapped
    zero_mode_only: bool = False


@dataclass
class PowerRule:
    rank: int
    match: int  # >= 2 rewrites that power, <= -1 rewrites inverse units
    rhs: Terms
    zero_mode_only: bool = False


class RuleError(ValueError):
    pass


class RewriteSystem:
    def __init__(self, registry: Registry, field):
        self.registry = registry
        self.field = field
        self.pair_rules: Dict[Tuple[int, int, int, int], PairRule] = {}
        self.power_rules: Dict[int, List[PowerRule]] = {}
        self._cache: Dict[Word, Terms] = {}
        self._cache_zero: Dict[Word, Terms] = {}

    # -- insertion -------------------------------------------------------

    def add_pair_rule(
        self,
        rank_l: int,
        sign_l: int,
        rank_r: int,
        sign_r: int,
        rhs: Terms,
        *,
        zero_mode_only: bool = False,
        add_sign_variants: bool = False,
    ) -> None:
        key = (rank_l, sign_l, rank_r, sign_r)
        if key in self.pair_rules:
            raise RuleError(f"duplicate pair rule {self._key_str(key)}")
        lhs = w_mul(w_letter(rank_l, sign_l), w_letter(rank_r, sign_r))
        if len(lhs) != 2:
            raise RuleError("pair rule sides must not merge or cancel")
        rhs = {w: c for w, c in rhs.items() if c}
        self._validate_words(rhs)
        self._validate_decrease(lhs, rhs)
        factor = self._diag_factor(key, rhs)
        rule = PairRule(key, rhs, factor, zero_mode_only)
        self.pair_rules[key] = rule
        self.clear_caches()
        if add_sign_variants:
            if factor is None:
                raise RuleError("sign variants require a diagonal rule")
            self._add_diag_variants(key, factor, zero_mode_only)

    def add_power_rule(self, rank: int, match: int, rhs: Terms, *, zero_mode_only: bool = False) -> None:
        if match == 0:
            raise RuleError("power rule threshold must be nonzero")
        if match < 0 and not self.registry.is_invertible(rank):
            raise RuleError("negative power rule on a non-invertible generator")
        for pr in self.power_rules.get(rank, ()):
            if (pr.match > 0) == (match > 0):
                raise RuleError(f"duplicate power rule for rank {rank}")
        rhs = {w: c for w, c in rhs.items() if c}
        self._validate_words(rhs)
        self._validate_decrease(w_letter(rank, match), rhs)
        self.power_rules.setdefault(rank, []).append(PowerRule(rank, match, rhs, zero_mode_only))
        self.clear_caches()

    def _key_str(self, key) -> str:
        rl, sl, rr, sr = key
        reg = self.registry
        def side(r, s):
            name = reg.by_rank(r).name
            return name if s > 0 else f"{name}^-1"
        return f"{side(rl, sl)} * {side(rr, sr)}"

    def _diag_factor(self, key, rhs: Terms):
        if len(rhs) != 1:
            return None
        rl, sl, rr, sr = key
        (word, coeff), = rhs.items()
        if word == w_mul(w_letter(rr, sr), w_letter(rl, sl)):
            return coeff
        return None

    def _add_diag_variants(self, key, factor, zero_mode_only: bool) -> None:
        rl, sl, rr, sr = key
        reg = self.registry
        inv = self.field.one() / factor
        variants = []
        if reg.is_invertible(rl):
            variants.append(((rl, -sl, rr, sr), inv))
        if reg.is_invertible(rr):
            variants.append(((rl, sl, rr, -sr), inv))
        if reg.is_invertible(rl) and reg.is_invertible(rr):
            variants.append(((rl, -sl, rr, -sr), factor))
        for vkey, vfac in variants:
            if vkey in self.pair_rules:
                continue
            vrl, vsl, vrr, vsr = vkey
            rhs = {w_mul(w_letter(vrr, vsr), w_letter(vrl, vsl)): vfac}
            self.add_pair_rule(vrl, vsl, vrr, vsr, rhs, zero_mode_only=zero_mode_only)

    def _validate_words(self, rhs: Terms) -> None:
        reg = self.registry
        for w in rhs:
            for rank, e in w:
                if e < 0 and not reg.is_invertible(rank):
                    raise RuleError(f"negative power of non-invertible {reg.by_rank(rank).name}")

    def _validate_decrease(self, lhs: Word, rhs: Terms) -> None:
        m0 = measure(lhs, self.registry)
        for w in rhs:
            if measure(w, self.registry) >= m0:
                raise RuleError(
                    f"rule does not decrease the termination measure: "
                    f"{lhs} -> {w}"
                )

    def clear_caches(self) -> None:
        self._cache.clear()
        self._cache_zero.clear()

    # -- reduction ---------------------------------------------------------

    def _find_redex(self, w: Word, zero_mode: bool):
        """Leftmost redex: (pos, rule).  Power rules take precedence."""
        n = len(w)
        for i in range(n):
            rank, e = w[i]
            for pr in self.power_rules.get(rank, ()):
                if pr.zero_mode_only and not zero_mode:
                    continue
                if (pr.match >= 1 and e >= pr.match) or (pr.match <= -1 and e <= pr.match):
                    return i, pr
            if i + 1 < n:
                r2, e2 = w[i + 1]
                key = (rank, 1 if e > 0 else -1, r2, 1 if e2 > 0 else -1)
                rule = self.pair_rules.get(key)
                if rule is not None and (zero_mode or not rule.zero_mode_only):
                    return i, rule
        return None

    def _apply(self, w: Word, pos: int, rule) -> List[Tuple[Word, object]]:
        if isinstance(rule, PowerRule):
            rank, e = w[pos]
            prefix = w[:pos] + (((rank, e - rule.match),) if e != rule.match else ())
            suffix = w[pos + 1 :]
            return [
                (w_concat((prefix, rw, suffix)), c) for rw, c in rule.rhs.items()
            ]
        rank1, e1 = w[pos]
        rank2, e2 = w[pos + 1]
        if rule.diag_factor is not None:
            coeff = rule.diag_factor ** (abs(e1) * abs(e2))
            nw = w_concat((w[:pos], ((rank2, e2), (rank1, e1)), w[pos + 2 :]))
            return [(nw, coeff)]
        s1 = 1 if e1 > 0 else -1
        s2 = 1 if e2 > 0 else -1
        prefix = w[:pos] + (((rank1, e1 - s1),) if e1 != s1 else ())
        suffix = (((rank2, e2 - s2),) if e2 != s2 else ()) + w[pos + 2 :]
        return [(w_concat((prefix, rw, suffix)), c) for rw, c in rule.rhs.items()]

    def reduce_word(self, w: Word, *, zero_mode: bool = False, degree_cap: int = DEFAULT_DEGREE_CAP) -> Terms:
        cache = self._cache_zero if zero_mode else self._cache
        hit = cache.get(w)
        if hit is not None:
            return hit
        one = self.field.one()
        pending: Dict[Word, object] = {w: one}
        done: Dict[Word, object] = {}
        while pending:
            u, c = pending.popitem()
            hit = cache.get(u)
            if hit is not None:
                _merge_scaled(done, hit, c)
                continue
            found = self._find_redex(u, zero_mode)
            if found is None:
                cache[u] = {u: one}
                _merge_one(done, u, c)
                continue
            if w_degree(u) > degree_cap:
                raise DegreeCapExceeded(u, degree_cap)
            pos, rule = found
            for u2, c2 in self._apply(u, pos, rule):
                _merge_one(pending, u2, c * c2)
        done = {k: v for k, v in done.items() if v}
        cache[w] = done
        return done

    def normal_form(self, terms: Terms, *, zero_mode: bool = False, degree_cap: int = DEFAULT_DEGREE_CAP) -> Terms:
        out: Terms = {}
        for w, c in terms.items():
            if not c:
                continue
            _merge_scaled(out, self.reduce_word(w, zero_mode=zero_mode, degree_cap=degree_cap), c)
        return {k: v for k, v in out.items() if v}

    def is_normal_word(self, w: Word, *, zero_mode: bool = False) -> bool:
        return self._find_redex(w, zero_mode) is None

    # -- zero test ----------------------------------------------------------

    def is_zero_mod(self, terms: Terms, *, degree_cap: int = DEFAULT_DEGREE_CAP, max_rounds: int = 40) -> bool:
        """Whether the element vanishes modulo the rules.

        Normal forms may carry negative powers of the invertible scaling
        letters (they are genuine algebra elements), so the element is
        cleared by right multiplication with the matching positive powers
        and reduced again.  The scaling letters sit at the tail of a
        normal word, so the clearing factor only ever crosses other
        scaling letters; crossings can still leave fresh denominators
        behind, hence the loop.  Right multiplication by invertible
        elements is injective, so zero-ness is preserved.
        """
        cur = self.normal_form(terms, zero_mode=True, degree_cap=degree_cap)
        for _ in range(max_rounds):
            if not cur:
                return True
            clear: Dict[int, int] = {}
            for w in cur:
                for rank, e in w:
                    if e < 0 and self.registry.is_invertible(rank) and not self.registry.is_lband(rank):
                        clear[rank] = max(clear.get(rank, 0), -e)
            if not clear:
                return False
            right = tuple(sorted(clear.items()))
            nxt: Terms = {}
            for w, c in cur.items():
                _merge_one(nxt, w_mul(w, right), c)
            cur = self.normal_form(nxt, zero_mode=True, degree_cap=degree_cap)
        raise RuntimeError("denominator clearing did not stabilize")

    # -- confluence ---------------------------------------------------------

    def overlap_words(self) -> List[Word]:
        """Candidate words for local confluence checks.

        All products of three units, plus the words needed to overlap
        each power rule with its neighbours and with itself.
        """
        units: List[Word] = []
        for g in self.registry.gens:
            units.append(w_letter(g.rank, 1))
            if g.invertible:
                units.append(w_letter(g.rank, -1))
        words = set()
        for u1 in units:
            for u2 in units:
                w12 = w_mul(u1, u2)
                if w_degree(w12) != 2:
                    continue
                for u3 in units:
                    w = w_mul(w12, u3)
                    if w_degree(w) == 3:
                        words.add(w)
        for rank, prs in self.power_rules.items():
            for pr in prs:
                step = 1 if pr.match > 0 else -1
                base = w_letter(rank, pr.match)
                words.add(w_letter(rank, pr.match + step))
                for u in units:
                    for w in (w_mul(base, u), w_mul(u, base)):
                        if len(w) > 1 or (w and abs(w[0][1]) > abs(pr.match)):
                            words.add(w)
        return sorted(words, key=word_sort_key)

    def _all_redexes(self, w: Word, zero_mode: bool):
        out = []
        n = len(w)
        for i in range(n):
            rank, e = w[i]
            for pr in self.power_rules.get(rank, ()):
                if pr.zero_mode_only and not zero_mode:
                    continue
                if (pr.match >= 1 and e >= pr.match) or (pr.match <= -1 and e <= pr.match):
                    out.append((i, pr))
            if i + 1 < n:
                r2, e2 = w[i + 1]
                key = (rank, 1 if e > 0 else -1, r2, 1 if e2 > 0 else -1)
                rule = self.pair_rules.get(key)
                if rule is not None and (zero_mode or not rule.zero_mode_only):
                    out.append((i, rule))
        return out

    def check_overlaps(self, *, zero_mode: bool = True, degree_cap: int = DEFAULT_DEGREE_CAP) -> List[Word]:
        """Return all candidate words whose reductions diverge.

        Normal forms are canonical only up to clearing negative powers of
        the invertible scaling letters, so paths that disagree as bare
        normal forms are arbitrated by the zero test before being
        reported.
        """
        bad: List[Word] = []
        for w in self.overlap_words():
            base = self.reduce_word(w, zero_mode=zero_mode, degree_cap=degree_cap)
            for pos, rule in self._all_redexes(w, zero_mode)[1:]:
                acc: Terms = {}
                for u, c in self._apply(w, pos, rule):
                    _merge_scaled(acc, self.reduce_word(u, zero_mode=zero_mode, degree_cap=degree_cap), c)
                acc = {k: v for k, v in acc.items() if v}
                if acc != base:
                    diff = dict(acc)
                    _merge_scaled(diff, base, -self.field.one())
                    diff = {k: v for k, v in diff.items() if v}
                    if diff and not self.is_zero_mod(diff, degree_cap=degree_cap):
                        bad.append(w)
                        break
        return bad


def _merge_one(dst: Terms, w: Word, c) -> None:
    cur = dst.get(w)
    if cur is None:
        if c:
            dst[w] = c
        return
    acc = cur + c
    if acc:
        dst[w] = acc
    else:
        del dst[w]


def _merge_scaled(dst: Terms, src: Terms, c) -> None:
    for w, v in src.items():
        _merge_one(dst, w, c * v)


# -- polynomials -------------------------------------------------------------


class NcPoly:
    """Linear combination of words; multiplication is the free product."""

    __slots__ = ("field", "terms")

    def __init__(self, field, terms: Optional[Terms] = None):
        self.field = field
        self.terms = {w: c for w, c in (terms or {}).items() if c}

    @staticmethod
    def zero(field) -> "NcPoly":
        return NcPoly(field)

    @staticmethod
    def one(field) -> "NcPoly":
        return NcPoly(field, {W_ONE: field.one()})

    @staticmethod
    def scalar(field, c) -> "NcPoly":
        return NcPoly(field, {W_ONE: c})

    @staticmethod
    def letter(field, rank: int, exp: int = 1) -> "NcPoly":
        return NcPoly(field, {w_letter(rank, exp): field.one()})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NcPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        raise TypeError("NcPoly is not hashable")

    def __add__(self, other: "NcPoly") -> "NcPoly":
        out = dict(self.terms)
        for w, c in other.terms.items():
            _merge_one(out, w, c)
        return NcPoly(self.field, out)

    def __sub__(self, other: "NcPoly") -> "NcPoly":
        out = dict(self.terms)
        for w, c in other.terms.items():
            _merge_one(out, w, -c)
        return NcPoly(self.field, out)

    def __neg__(self) -> "NcPoly":
        return NcPoly(self.field, {w: -c for w, c in self.terms.items()})

    def scale(self, c) -> "NcPoly":
        if not c:
            return NcPoly(self.field)
        return NcPoly(self.field, {w: c * v for w, v in self.terms.items()})

    def __mul__(self, other: "NcPoly") -> "NcPoly":
        out: Terms = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                _merge_one(out, w_mul(w1, w2), c1 * c2)
        return NcPoly(self.field, out)

    def degree(self) -> int:
        return max((w_degree(w) for w in self.terms), default=0)

    def __repr__(self) -> str:
        return f"NcPoly({len(self.terms)} terms)"


def comm(x: NcPoly, y: NcPoly) -> NcPoly:
    return x * y - y * x

def comm_twisted(x: NcPoly, y: NcPoly, factor) -> NcPoly:
    """x y - factor * y x."""
    return x * y - (y * x).scale(factor)
