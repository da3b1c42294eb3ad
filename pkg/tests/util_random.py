"""Shared helpers for randomized round-trip tests."""

from fractions import Fraction
from random import Random

from qeuclid.ncengine import NcPoly, Registry, w_concat, w_letter
from qeuclid.scalars import FieldQ


def random_coeff(rng: Random, field):
    num = rng.randint(-6, 6) or 1
    den = rng.randint(1, 6)
    c = field.from_fraction(Fraction(num, den))
    k = rng.randint(-3, 3)
    if k:
        c = c * field.s_power(k)
    if rng.random() < 0.25:
        c = c + field.from_fraction(rng.randint(1, 3))
    return c


def random_word(rng: Random, registry: Registry, max_letters: int = 4):
    letters = []
    prev = None
    for _ in range(rng.randint(0, max_letters)):
        g = registry.gens[rng.randrange(len(registry.gens))]
        if prev is not None and g.rank == prev:
            continue
        exp = rng.randint(1, 3)
        if g.invertible and rng.random() < 0.4:
            exp = -exp
        letters.append(w_letter(g.rank, exp))
        prev = g.rank
    return w_concat(letters)


def random_poly(rng: Random, registry: Registry, field, max_terms: int = 4) -> NcPoly:
    out = NcPoly.zero(field)
    for _ in range(rng.randint(1, max_terms)):
        out = out + NcPoly(field, {random_word(rng, registry): random_coeff(rng, field)})
    return out
