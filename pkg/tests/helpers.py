"""Seeded random inputs shared by the test modules."""

from __future__ import annotations

import random
from fractions import Fraction

from killtensor.symalg import SymTensorField, multi_indices
from killtensor.torusfn import TorusScalar, canonical_frequencies


def rand_rational(rng: random.Random, bound: int = 5, den: int = 4) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, den))


def rand_number(rng: random.Random, mode: str = "exact"):
    return rand_rational(rng) if mode == "exact" else rng.uniform(-2.0, 2.0)


def random_scalar(rng: random.Random, n: int, band, mode: str = "exact", density: float = 0.5) -> TorusScalar:
    terms = {}
    for k in canonical_frequencies(band):
        if rng.random() < density:
            s = 0 if not any(k) else rand_number(rng, mode)
            terms[k] = (rand_number(rng, mode), s)
    return TorusScalar(n, terms)


def random_tensor(rng: random.Random, n: int, p: int, band=None, mode: str = "exact", density: float = 0.6) -> SymTensorField:
    """Random field; ``band=None`` gives constant coefficients."""
    band = band if band is not None else (0,) * n
    coeffs = {}
    for a in multi_indices(n, p):
        if rng.random() < density:
            coeffs[a] = random_scalar(rng, n, band, mode)
    return SymTensorField(n, p, coeffs)


def xn_only_tensor(rng: random.Random, n: int, p: int, bn: int, mode: str = "exact") -> SymTensorField:
    """Random field whose coefficients depend on ``x_n`` alone."""
    return random_tensor(rng, n, p, (0,) * (n - 1) + (bn,), mode)


def random_vector(rng: random.Random, n: int, mode: str = "exact") -> list:
    return [rand_number(rng, mode) for _ in range(n)]


def rational_unit_transverse(rng: random.Random, n: int) -> list[Fraction]:
    """Exact unit vector in ``span(e_1 .. e_{n-1})`` by inverse stereographic projection."""
    m = n - 1
    if m == 1:
        return [Fraction(rng.choice([-1, 1])), Fraction(0)]
    t = [rand_rational(rng, 3, 3) for _ in range(m - 1)]
    s = sum(v * v for v in t)
    point = [2 * v / (s + 1) for v in t] + [(s - 1) / (s + 1)]
    return point + [Fraction(0)]
