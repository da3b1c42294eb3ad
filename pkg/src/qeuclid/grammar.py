"""Expression grammar: parsing and canonical printing.

One grammar serves scalars and algebra elements.  A scalar is just an
expression with no generator atoms, so parse_scalar is parse_expr with
the registry withheld.

Syntax:

    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := '-'* atom ('^' exponent)?
    atom     := INT | 'q' | generator | '(' expr ')'
    exponent := '-'? INT | '(' '-'? INT ('/' INT)? ')'

q may carry half-integer exponents, written q^(k/2).  Generator names
are an identifier, an optional trailing + or -, and an optional bracket
of comma-separated signed integers, e.g. p[-1], L+[-1,0], sqrtP[2],
sqrtp0.  Division requires a scalar divisor; negative powers require an
invertible single letter.

The printer emits one canonical spelling per element (terms in
decreasing word order, coefficients in reduced form), and the parser
maps that spelling back to the same element, which is what the
round-trip tests pin down.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import List, Optional, Tuple

from .ncengine import NcPoly, Registry, Word, word_sort_key
from .scalars import Scalar

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<gen>[A-Za-z][A-Za-z0-9]*[+-]?\[-?\d+(?:,-?\d+)*\])
  | (?P<name>[A-Za-z][A-Za-z0-9]*)
  | (?P<int>\d+)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    def __init__(self, message: str, pos: int, expected: str = ""):
        detail = f"{message} at position {pos}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)
        self.pos = pos
        self.expected = expected


def tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, "a token")
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, field, registry: Optional[Registry]):
        self.tokens = tokenize(text)
        self.idx = 0
        self.field = field
        self.registry = registry

    def peek(self):
        return self.tokens[self.idx]

    def advance(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise ParseError(f"found {val!r}" if val else "unexpected end", pos, repr(op))
        return self.advance()

    # -- grammar -----------------------------------------------------------

    def parse(self) -> NcPoly:
        out = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"trailing input {val!r}", pos, "end of expression")
        return out

    def expr(self) -> NcPoly:
        acc = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                rhs = self.term()
                acc = acc + rhs if val == "+" else acc - rhs
            else:
                return acc

    def term(self) -> NcPoly:
        acc = self.factor()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                rhs = self.factor()
                if val == "*":
                    acc = acc * rhs
                else:
                    c = _as_scalar(rhs)
                    if c is None or not c:
                        raise ParseError("division needs a nonzero scalar divisor", pos, "a scalar")
                    acc = acc.scale(self.field.one() / c)
            else:
                return acc

    def factor(self) -> NcPoly:
        negate = False
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "-":
                self.advance()
                negate = not negate
            else:
                break
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            base = self._power(base)
        return -base if negate else base

    def _power(self, base: NcPoly) -> NcPoly:
        num, den, pos = self._exponent()
        if den == 2:
            if _is_pure_q(base, self.field):
                return NcPoly.scalar(self.field, self.field.s_power(num))
            raise ParseError("half-integer exponents only apply to q", pos, "an integer exponent")
        exp = num
        if exp >= 0:
            out = NcPoly.one(self.field)
            for _ in range(exp):
                out = out * base
            return out
        if len(base.terms) == 1:
            ((w, c),) = base.terms.items()
            if len(w) == 1 and self.registry is not None:
                rank, e = w[0]
                if self.registry.is_invertible(rank):
                    sc = _as_scalar(NcPoly.scalar(self.field, c))
                    return NcPoly(self.field, {((rank, e * exp),): (self.field.one() / c) ** (-exp)})
            if not w:
                return NcPoly.scalar(self.field, (self.field.one() / c) ** (-exp))
        raise ParseError("negative power of a non-invertible expression", pos, "a nonnegative exponent")

    def _exponent(self) -> Tuple[int, int, int]:
        kind, val, pos = self.peek()
        if kind == "op" and val == "(":
            self.advance()
            num = self._signed_int()
            den = 1
            kind, val, _ = self.peek()
            if kind == "op" and val == "/":
                self.advance()
                dkind, dval, dpos = self.advance()
                if dkind != "int" or dval != "2":
                    raise ParseError("only halves are allowed in exponents", dpos, "2")
                den = 2
            self.expect_op(")")
            if den == 2 and num % 2 == 0:
                num, den = num // 2, 1
            return num, den, pos
        num = self._signed_int()
        return num, 1, pos

    def _signed_int(self) -> int:
        kind, val, pos = self.peek()
        sign = 1
        if kind == "op" and val == "-":
            self.advance()
            sign = -1
            kind, val, pos = self.peek()
        if kind != "int":
            raise ParseError(f"found {val!r}" if val else "unexpected end", pos, "an integer")
        self.advance()
        return sign * int(val)

    def atom(self) -> NcPoly:
        kind, val, pos = self.peek()
        if kind == "int":
            self.advance()
            return NcPoly.scalar(self.field, self.field.from_fraction(Fraction(int(val))))
        if kind == "name" and val == "q":
            self.advance()
            return NcPoly.scalar(self.field, self.field.s_power(2))
        if kind in ("name", "gen"):
            if self.registry is None:
                raise ParseError(f"unknown symbol {val!r} in a scalar context", pos, "a scalar")
            self.advance()
            try:
                g = self.registry.gen(val)
            except KeyError:
                raise ParseError(f"unknown generator {val!r}", pos, "a generator name") from None
            return NcPoly.letter(self.field, g.rank)
        if kind == "op" and val == "(":
            self.advance()
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ParseError(f"found {val!r}" if val else "unexpected end", pos, "an atom")


def _is_pure_q(poly: NcPoly, field) -> bool:
    if len(poly.terms) != 1:
        return False
    ((w, c),) = poly.terms.items()
    return not w and c == field.s_power(2)


def _as_scalar(poly: NcPoly):
    if not poly.terms:
        return poly.field.zero()
    if len(poly.terms) == 1 and () in poly.terms:
        return poly.terms[()]
    return None


def parse_expr(text: str, field, registry: Registry) -> NcPoly:
    return _Parser(text, field, registry).parse()


def parse_scalar(text: str, field):
    poly = _Parser(text, field, None).parse()
    c = _as_scalar(poly)
    if c is None:
        raise ParseError("expression is not a scalar", 0, "a scalar")
    return c


# -- printing ---------------------------------------------------------------


def _coeff_needs_parens(c) -> bool:
    if isinstance(c, Scalar):
        from .scalars import P_ONE, _term_count

        return c.den == P_ONE and _term_count(c.num) > 1
    return False


def word_str(w: Word, registry: Registry) -> str:
    if not w:
        return "1"
    parts = []
    for rank, e in w:
        name = registry.by_rank(rank).name
        parts.append(name if e == 1 else f"{name}^{e}")
    return "*".join(parts)


def poly_str(poly: NcPoly, registry: Registry, field) -> str:
    if not poly.terms:
        return "0"
    items = sorted(poly.terms.items(), key=lambda kv: word_sort_key(kv[0]), reverse=True)
    pieces: List[str] = []
    for w, c in items:
        cstr = field.to_str(c)
        negative = cstr.startswith("-")
        if negative:
            cstr = field.to_str(-c)
        if not w:
            if _coeff_needs_parens(c if not negative else -c):
                cstr = f"({cstr})"
            body = cstr
        elif cstr == "1":
            body = word_str(w, registry)
        else:
            if _coeff_needs_parens(c if not negative else -c):
                cstr = f"({cstr})"
            body = f"{cstr}*{word_str(w, registry)}"
        if not pieces:
            pieces.append(f"-{body}" if negative else body)
        else:
            pieces.append(f" - {body}" if negative else f" + {body}")
    return "".join(pieces)
