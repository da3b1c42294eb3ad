"""Exact scalar arithmetic for the deformation parameter.

Every coefficient in this package lives in Q(s), the field of rational
functions in one variable s over the rationals, where s stands for the
square root of the deformation parameter q.  Working with s instead of q
keeps all exponents integral: the metric and R-matrix entries involve
q raised to half-integer weights, which become plain integer powers of s.

Representation
--------------
A polynomial in s is a dense tuple of Fractions indexed by degree, with
trailing zeros stripped; the empty tuple is the zero polynomial.  A
Scalar is a reduced fraction num/den of two such polynomials, with the
gcd divided out (integer subresultant PRS) and the denominator monic.
That normal form is unique, so equality and hashing are structural.

Printing uses q syntax: s^k renders as q^(k/2) for odd k and q^(k//2)
for even k, so values round-trip through the expression grammar.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as int_gcd, isqrt
from typing import Iterable, Optional, Union

Poly = tuple  # tuple[Fraction, ...], dense in s, no trailing zeros

_F0 = Fraction(0)
_F1 = Fraction(1)

P_ZERO: Poly = ()
P_ONE: Poly = (_F1,)


def _trim(coeffs: Iterable[Fraction]) -> Poly:
    out = list(coeffs)
    while out and not out[-1]:
        out.pop()
    return tuple(out)


def p_add(a: Poly, b: Poly) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] += c
    return _trim(out)


def p_neg(a: Poly) -> Poly:
    return tuple(-c for c in a)


def p_sub(a: Poly, b: Poly) -> Poly:
    return p_add(a, p_neg(b))


def p_mul(a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return P_ZERO
    out = [_F0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if not ca:
            continue
        for j, cb in enumerate(b):
            if cb:
                out[i + j] += ca * cb
    return _trim(out)


def p_scale(a: Poly, c: Fraction) -> Poly:
    if not c:
        return P_ZERO
    return tuple(x * c for x in a)


def p_eval(a: Poly, x: Fraction) -> Fraction:
    acc = _F0
    for c in reversed(a):
        acc = acc * x + c
    return acc


def p_divmod(a: Poly, b: Poly) -> tuple[Poly, Poly]:
    """Euclidean division over the fraction field; b must be nonzero."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [_F0] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    inv_lead = 1 / b[-1]
    while len(r) >= len(b):
        while r and not r[-1]:
            r.pop()
        if len(r) < len(b):
            break
        c = r[-1] * inv_lead
        shift = len(r) - len(b)
        q[shift] = c
        for i, bc in enumerate(b):
            r[shift + i] -= c * bc
        r.pop()
    return _trim(q), _trim(r)


def p_div_exact(a: Poly, b: Poly) -> Poly:
    q, r = p_divmod(a, b)
    if r:
        raise ValueError("inexact polynomial division")
    return q


def _int_content(a: list[int]) -> int:
    g = 0
    for c in a:
        g = int_gcd(g, abs(c))
        if g == 1:
            break
    return g or 1


def _to_int_primitive(a: Poly) -> tuple[list[int], Fraction]:
    """Write a as rat * prim with prim a primitive int poly, positive lead."""
    if not a:
        return [], _F0
    lcm = 1
    for c in a:
        lcm = lcm * c.denominator // int_gcd(lcm, c.denominator)
    ints = [int(c * lcm) for c in a]
    cont = _int_content(ints)
    if ints[-1] < 0:
        cont = -cont
    prim = [c // cont for c in ints]
    return prim, Fraction(cont, lcm)


def _int_prem(a: list[int], b: list[int]) -> list[int]:
    """Integer remainder sequence step: an associate of prem(a, b).

    Each round multiplies the running remainder by lc(b) before
    cancelling, so no fractions appear.  The result differs from the
    textbook pseudo-remainder by an integer factor, which is harmless
    because the caller takes primitive parts anyway.
    """
    r = list(a)
    lb = b[-1]
    while True:
        while r and r[-1] == 0:
            r.pop()
        if len(r) < len(b):
            break
        shift = len(r) - len(b)
        lr = r[-1]
        r = [c * lb for c in r]
        for i, bc in enumerate(b):
            r[shift + i] -= lr * bc
        r.pop()
    return r


def p_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd via primitive PRS on integer images."""
    pa, _ = _to_int_primitive(a)
    pb, _ = _to_int_primitive(b)
    if not pa:
        pa, pb = pb, pa
    if not pb:
        if not pa:
            return P_ZERO
        lead = Fraction(pa[-1])
        return tuple(Fraction(c) / lead for c in pa)
    if len(pa) < len(pb):
        pa, pb = pb, pa
    while pb:
        r = _int_prem(pa, pb)
        cont = _int_content(r)
        if r and r[-1] < 0:
            cont = -cont
        pa, pb = pb, [c // cont for c in r] if r else []
    lead = Fraction(pa[-1])
    return tuple(Fraction(c) / lead for c in pa)


def _poly_sqrt(a: Poly) -> Optional[Poly]:
    """Exact square root of a polynomial, or None."""
    if not a:
        return P_ZERO
    if (len(a) - 1) % 2:
        return None
    lead = frac_sqrt(a[-1])
    if lead is None:
        return None
    half = (len(a) - 1) // 2
    g = [_F0] * (half + 1)
    g[half] = lead
    # Solve for coefficients from the top down; each step is linear
    # in the unknown because the leading coefficient is known.
    for k in range(half - 1, -1, -1):
        idx = k + half
        acc = _F0
        for i in range(k + 1, half):
            j = idx - i
            if 0 <= j <= half and j > k:
                acc += g[i] * g[j]
        target = a[idx] if idx < len(a) else _F0
        g[k] = (target - acc) / (2 * lead)
    cand = _trim(g)
    if p_mul(cand, cand) == a:
        return cand
    return None


def frac_sqrt(x: Fraction) -> Optional[Fraction]:
    """Exact square root of a rational, or None."""
    if x < 0:
        return None
    rn, rd = isqrt(x.numerator), isqrt(x.denominator)
    if rn * rn == x.numerator and rd * rd == x.denominator:
        return Fraction(rn, rd)
    return None


ScalarLike = Union["Scalar", Fraction, int]


class Scalar:
    """A rational function in s, kept in reduced monic-denominator form."""

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly = P_ONE, *, _canonical: bool = False):
        if _canonical:
            self.num = num
            self.den = den
            return
        if not den:
            raise ZeroDivisionError("scalar with zero denominator")
        if not num:
            self.num = P_ZERO
            self.den = P_ONE
            return
        g = p_gcd(num, den)
        if len(g) > 1:
            num = p_div_exact(num, g)
            den = p_div_exact(den, g)
        lead = den[-1]
        if lead != 1:
            num = tuple(c / lead for c in num)
            den = tuple(c / lead for c in den)
        self.num = num
        self.den = den

    # -- constructors -------------------------------------------------

    @staticmethod
    def from_fraction(x: Union[Fraction, int]) -> "Scalar":
        x = Fraction(x)
        if not x:
            return SC_ZERO
        return Scalar((x,), P_ONE, _canonical=True)

    @staticmethod
    def s_power(k: int) -> "Scalar":
        """s^k for any integer k."""
        if k >= 0:
            return Scalar(_monomial(k), P_ONE, _canonical=True)
        return Scalar(P_ONE, _monomial(-k), _canonical=True)

    # -- coercion helpers ---------------------------------------------

    @staticmethod
    def _coerce(x: ScalarLike) -> Optional["Scalar"]:
        if isinstance(x, Scalar):
            return x
        if isinstance(x, (int, Fraction)):
            return Scalar.from_fraction(x)
        return None

    # -- predicates ----------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.num)

    def is_rational(self) -> bool:
        return len(self.num) <= 1 and self.den == P_ONE

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"not a rational constant: {self}")
        return self.num[0] if self.num else _F0

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other: ScalarLike):
        o = Scalar._coerce(other)
        if o is None:
            return NotImplemented
        return Scalar(
            p_add(p_mul(self.num, o.den), p_mul(o.num, self.den)),
            p_mul(self.den, o.den),
        )

    __radd__ = __add__

    def __sub__(self, other: ScalarLike):
        o = Scalar._coerce(other)
        if o is None:
            return NotImplemented
        return Scalar(
            p_sub(p_mul(self.num, o.den), p_mul(o.num, self.den)),
            p_mul(self.den, o.den),
        )

    def __rsub__(self, other: ScalarLike):
        o = Scalar._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self) -> "Scalar":
        return Scalar(p_neg(self.num), self.den, _canonical=True)

    def __mul__(self, other: ScalarLike):
        o = Scalar._coerce(other)
        if o is None:
            return NotImplemented
        return Scalar(p_mul(self.num, o.num), p_mul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other: ScalarLike):
        o = Scalar._coerce(other)
        if o is None:
            return NotImplemented
        if not o.num:
            raise ZeroDivisionError("scalar division by zero")
        return Scalar(p_mul(self.num, o.den), p_mul(self.den, o.num))

    def __rtruediv__(self, other: ScalarLike):
        o = Scalar._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, k: int) -> "Scalar":
        if k < 0:
            return (SC_ONE / self) ** (-k)
        out = SC_ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other) -> bool:
        o = Scalar._coerce(other)
        if o is None:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    # -- evaluation and roots -------------------------------------------

    def eval(self, s0: Fraction) -> Fraction:
        d = p_eval(self.den, s0)
        if not d:
            raise ZeroDivisionError(f"pole at s = {s0}")
        return p_eval(self.num, s0) / d

    def sqrt(self) -> Optional["Scalar"]:
        rn = _poly_sqrt(self.num)
        if rn is None:
            return None
        rd = _poly_sqrt(self.den)
        if rd is None:
            return None
        return Scalar(rn, rd)

    # -- printing ----------------------------------------------------------

    def __str__(self) -> str:
        if not self.num:
            return "0"
        ns = _poly_str(self.num)
        if self.den == P_ONE:
            return ns
        ds = _poly_str(self.den)
        if _term_count(self.num) > 1:
            ns = f"({ns})"
        if _term_count(self.den) > 1:
            ds = f"({ds})"
        return f"{ns}/{ds}"

    def __repr__(self) -> str:
        return f"Scalar({self})"


def _monomial(k: int) -> Poly:
    return tuple([_F0] * k + [_F1])


def _term_count(a: Poly) -> int:
    return sum(1 for c in a if c)


def _q_power_str(k: int) -> str:
    """Render s^k in q syntax; empty string for k = 0."""
    if k == 0:
        return ""
    if k % 2 == 0:
        j = k // 2
        return "q" if j == 1 else f"q^{j}"
    return f"q^({k}/2)"


def _poly_str(a: Poly) -> str:
    parts: list[str] = []
    for k in range(len(a) - 1, -1, -1):
        c = a[k]
        if not c:
            continue
        mag = abs(c)
        qs = _q_power_str(k)
        if not qs:
            body = str(mag)
        elif mag == 1:
            body = qs
        else:
            body = f"{mag}*{qs}"
        if not parts:
            parts.append(f"-{body}" if c < 0 else body)
        else:
            parts.append(f" - {body}" if c < 0 else f" + {body}")
    return "".join(parts)


SC_ZERO = Scalar(P_ZERO, P_ONE, _canonical=True)
SC_ONE = Scalar(P_ONE, P_ONE, _canonical=True)


def spow(k: int) -> Scalar:
    return Scalar.s_power(k)


def qpow(j: Union[Fraction, int]) -> Scalar:
    """q^j for integer or half-integer j."""
    j = Fraction(j)
    two_j = 2 * j
    if two_j.denominator != 1:
        raise ValueError(f"q exponent must be a half-integer, got {j}")
    return Scalar.s_power(int(two_j))


# -- field adapters -------------------------------------------------------
#
# Construction code is generic over the coefficient field.  A field object
# supplies the constants and the s-power map; the elements themselves carry
# the arithmetic through operator overloading (Scalar, or plain Fraction
# when building at a numeric evaluation point).


class FieldQ:
    """The symbolic field Q(s)."""

    name = "exact"

    def zero(self):
        return SC_ZERO

    def one(self):
        return SC_ONE

    def from_fraction(self, x: Union[Fraction, int]):
        return Scalar.from_fraction(x)

    def s_power(self, k: int):
        return Scalar.s_power(k)

    def sqrt(self, x: Scalar) -> Optional[Scalar]:
        return x.sqrt()

    def to_str(self, x: Scalar) -> str:
        return str(x)

    def __repr__(self):
        return "FieldQ()"


class FieldAt:
    """Q(s) evaluated at a rational point s0 (exact, not floating)."""

    name = "eval"

    def __init__(self, s0: Fraction):
        if s0 == 0 or s0 == 1 or s0 == -1:
            raise ValueError(f"degenerate evaluation point s0 = {s0}")
        self.s0 = Fraction(s0)

    def zero(self):
        return _F0

    def one(self):
        return _F1

    def from_fraction(self, x: Union[Fraction, int]):
        return Fraction(x)

    def s_power(self, k: int):
        return self.s0 ** k

    def sqrt(self, x: Fraction) -> Optional[Fraction]:
        return frac_sqrt(Fraction(x))

    def to_str(self, x: Fraction) -> str:
        return str(x)

    def __repr__(self):
        return f"FieldAt({self.s0})"


Field = Union[FieldQ, FieldAt]


def field_h(field: Field):
    """q^(1/2) - q^(-1/2), the half deformation gap."""
    return field.s_power(1) - field.s_power(-1)


def field_k(field: Field):
    """q - q^(-1), the full deformation gap."""
    return field.s_power(2) - field.s_power(-2)
