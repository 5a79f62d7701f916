"""Truncated real trigonometric series on the n-torus and the conformal factors.

A :class:`TorusScalar` stores ``sum_k a_k cos(k.x) + b_k sin(k.x)`` over
canonical frequency vectors ``k`` (``k = 0`` or first nonzero entry positive).
Coefficients are either :class:`fractions.Fraction` (exact mode) or ``float``;
the product-to-sum rules keep both closed.

Axes are 0-based; the distinguished coordinate ``x_n`` is axis ``n - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Number, Rational
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidFactor, UnsupportedOperation

HALF = Fraction(1, 2)
FLOAT_PRUNE_RTOL = 1e-14

Freq = tuple[int, ...]


def canonical(k: Sequence[int]) -> tuple[Freq, int]:
    """Return ``(k', s)`` with ``k'`` canonical and ``sin(k.x) = s * sin(k'.x)``."""
    k = tuple(k)
    for ki in k:
        if ki > 0:
            return k, 1
        if ki < 0:
            return tuple(-v for v in k), -1
    return k, 0


def is_canonical(k: Sequence[int]) -> bool:
    return canonical(k)[1] >= 0 and tuple(canonical(k)[0]) == tuple(k)


def canonical_frequencies(band: Sequence[int]) -> list[Freq]:
    """All canonical frequency vectors with ``|k_i| <= band[i]``, lexicographic."""
    ranges = [range(-b, b + 1) for b in band]
    out = []
    for k in _product(ranges):
        if canonical(k)[1] >= 0 and canonical(k)[0] == k:
            out.append(k)
    return sorted(out)


def _product(ranges):
    if not ranges:
        yield ()
        return
    for head in ranges[0]:
        for tail in _product(ranges[1:]):
            yield (head,) + tail


def is_exact(x) -> bool:
    return isinstance(x, Rational)


def prune_terms(terms: dict) -> dict:
    """Drop zero entries: exact zero test, or 1e-14 * max|coeff| for floats."""
    if not terms:
        return terms
    floats = any(isinstance(c, float) or isinstance(s, float) for c, s in terms.values())
    if floats:
        scale = max(max(abs(c), abs(s)) for c, s in terms.values())
        cut = FLOAT_PRUNE_RTOL * scale
        out = {}
        for k, (c, s) in terms.items():
            c = c if abs(c) > cut else 0
            s = s if abs(s) > cut else 0
            if c or s:
                out[k] = (c, s)
        return out
    return {k: (c, s) for k, (c, s) in terms.items() if c or s}


class TorusScalar:
    """Real band-limited Fourier series on ``T^n``.

    Parameters
    ----------
    n : int
        Dimension of the torus.
    terms : mapping
        ``{k: (cos_coeff, sin_coeff)}``. Non-canonical ``k`` are folded onto
        their canonical representative.
    band : sequence of int, optional
        Declared per-axis frequency bound. Defaults to the tightest bound
        containing the terms.
    """

    __slots__ = ("n", "band", "terms")

    def __init__(self, n: int, terms: Mapping | None = None, band: Sequence[int] | None = None):
        acc: dict[Freq, tuple] = {}
        for k, (c, s) in (terms or {}).items():
            if len(k) != n:
                raise DimensionMismatch(f"frequency {k} does not live on T^{n}")
            kk, sign = canonical(k)
            if sign == 0:
                s = 0
            elif sign < 0:
                s = -s
            c0, s0 = acc.get(kk, (0, 0))
            acc[kk] = (c0 + c, s0 + s)
        acc = prune_terms(acc)
        tight = tuple(max((abs(k[i]) for k in acc), default=0) for i in range(n))
        if band is None:
            band = tight
        else:
            band = tuple(int(b) for b in band)
            if len(band) != n:
                raise DimensionMismatch("band length differs from n")
            if any(t > b for t, b in zip(tight, band)):
                raise ValueError(f"terms exceed declared band {band}")
        self.n = n
        self.band = band
        self.terms = dict(sorted(acc.items()))

    # construction helpers
    @classmethod
    def constant(cls, n: int, value) -> "TorusScalar":
        return cls(n, {(0,) * n: (value, 0)})

    @classmethod
    def zero(cls, n: int) -> "TorusScalar":
        return cls(n, {})

    @classmethod
    def cos(cls, n: int, k: Sequence[int], coeff=1) -> "TorusScalar":
        return cls(n, {tuple(k): (coeff, 0)})

    @classmethod
    def sin(cls, n: int, k: Sequence[int], coeff=1) -> "TorusScalar":
        return cls(n, {tuple(k): (0, coeff)})

    # queries
    def is_zero(self) -> bool:
        return not self.terms

    def mean(self):
        """Average over the torus (the ``k = 0`` cosine coefficient)."""
        return self.terms.get((0,) * self.n, (0, 0))[0]

    def frequencies(self) -> list[Freq]:
        return list(self.terms)

    def max_abs_coeff(self):
        return max((max(abs(c), abs(s)) for c, s in self.terms.values()), default=0)

    def with_band(self, band: Sequence[int]) -> "TorusScalar":
        return TorusScalar(self.n, self.terms, band)

    def map_coeffs(self, fn: Callable) -> "TorusScalar":
        return TorusScalar(self.n, {k: (fn(c), fn(s)) for k, (c, s) in self.terms.items()}, self.band)

    def to_float(self) -> "TorusScalar":
        return self.map_coeffs(float)

    def __call__(self, x):
        """Evaluate at points ``x`` of shape ``(n,)`` or ``(n, m)``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[1:]) if x.ndim > 1 else 0.0
        for k, (c, s) in self.terms.items():
            phase = sum(ki * x[i] for i, ki in enumerate(k) if ki)
            if isinstance(phase, int):
                out = out + float(c)
                continue
            if c:
                out = out + float(c) * np.cos(phase)
            if s:
                out = out + float(s) * np.sin(phase)
        return out

    # arithmetic
    def _check(self, other: "TorusScalar"):
        if other.n != self.n:
            raise DimensionMismatch(f"T^{self.n} vs T^{other.n}")

    def __add__(self, other):
        if isinstance(other, Number):
            other = TorusScalar.constant(self.n, other)
        if not isinstance(other, TorusScalar):
            return NotImplemented
        self._check(other)
        terms = dict(self.terms)
        for k, (c, s) in other.terms.items():
            c0, s0 = terms.get(k, (0, 0))
            terms[k] = (c0 + c, s0 + s)
        band = tuple(max(a, b) for a, b in zip(self.band, other.band))
        return TorusScalar(self.n, terms, band)

    __radd__ = __add__

    def __neg__(self):
        return TorusScalar(self.n, {k: (-c, -s) for k, (c, s) in self.terms.items()}, self.band)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return TorusScalar(self.n, {k: (c * other, s * other) for k, (c, s) in self.terms.items()}, self.band)
        if not isinstance(other, TorusScalar):
            return NotImplemented
        return ts_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TorusScalar):
            raise UnsupportedOperation("reciprocal of a trigonometric series is not band-limited")
        if isinstance(other, Number):
            inv = Fraction(1) / other if is_exact(other) else 1.0 / other
            return self * inv
        return NotImplemented

    def __rtruediv__(self, other):
        raise UnsupportedOperation("reciprocal of a trigonometric series is not band-limited")

    def __pow__(self, m: int):
        if not isinstance(m, int) or m < 0:
            raise UnsupportedOperation("only non-negative integer powers are band-limited")
        out = TorusScalar.constant(self.n, 1)
        for _ in range(m):
            out = ts_mul(out, self)
        return out

    def __eq__(self, other):
        if isinstance(other, Number):
            other = TorusScalar.constant(self.n, other)
        if not isinstance(other, TorusScalar):
            return NotImplemented
        return self.n == other.n and (self - other).is_zero()

    def __hash__(self):
        return hash((self.n, tuple(self.terms.items())))

    def allclose(self, other: "TorusScalar", atol: float = 1e-12) -> bool:
        diff = self - other
        return all(abs(c) <= atol and abs(s) <= atol for c, s in diff.terms.values())

    def __repr__(self):
        parts = []
        for k, (c, s) in self.terms.items():
            if not any(k):
                parts.append(f"{c}")
                continue
            if c:
                parts.append(f"{c}*cos{k}")
            if s:
                parts.append(f"{s}*sin{k}")
        return f"TorusScalar(n={self.n}, " + (" + ".join(parts) or "0") + ")"

    # serialization
    def to_triples(self) -> list:
        return [[list(k), _num_out(c), _num_out(s)] for k, (c, s) in self.terms.items()]

    @classmethod
    def from_triples(cls, n: int, triples: Iterable) -> "TorusScalar":
        return cls(n, {tuple(k): (_num_in(c), _num_in(s)) for k, c, s in triples})


def _num_out(x):
    if isinstance(x, float):
        return x
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _num_in(x):
    return Fraction(x) if isinstance(x, str) else x


def ts_mul(u: TorusScalar, v: TorusScalar) -> TorusScalar:
    """Exact product via the product-to-sum identities; bands add."""
    u._check(v)
    n = u.n
    acc: dict[Freq, tuple] = {}

    def put(k, c, s):
        kk, sign = canonical(k)
        if sign == 0:
            s = 0
        elif sign < 0:
            s = -s
        c0, s0 = acc.get(kk, (0, 0))
        acc[kk] = (c0 + c, s0 + s)

    for k1, (c1, s1) in u.terms.items():
        for k2, (c2, s2) in v.terms.items():
            kp = tuple(a + b for a, b in zip(k1, k2))
            km = tuple(a - b for a, b in zip(k1, k2))
            # cos a cos b = (cos(a-b) + cos(a+b))/2, sin a sin b = (cos(a-b) - cos(a+b))/2
            # sin a cos b = (sin(a+b) + sin(a-b))/2, cos a sin b = (sin(a+b) - sin(a-b))/2
            cc, ss, sc, cs = c1 * c2, s1 * s2, s1 * c2, c1 * s2
            if cc or ss or sc or cs:
                put(km, (cc + ss) * HALF, (sc - cs) * HALF)
                put(kp, (cc - ss) * HALF, (sc + cs) * HALF)
    band = tuple(a + b for a, b in zip(u.band, v.band))
    return TorusScalar(n, acc, band)


def ts_partial(u: TorusScalar, axis: int) -> TorusScalar:
    """Coordinate derivative along ``axis`` (0-based); band unchanged."""
    if not 0 <= axis < u.n:
        raise IndexError(f"axis {axis} out of range for T^{u.n}")
    terms = {}
    for k, (c, s) in u.terms.items():
        ka = k[axis]
        if ka:
            terms[k] = (s * ka, -c * ka)
    return TorusScalar(u.n, terms, u.band)


# ---------------------------------------------------------------------------
# conformal factors: g~ = e^{2f} g with f = f(x_n)


@dataclass(frozen=True)
class Flat:
    """``e^{2f} = 1``."""

    band = 0

    @property
    def spec(self) -> str:
        return "flat"

    def emin2f(self, xn):
        return np.ones_like(np.asarray(xn, dtype=float)) if np.ndim(xn) else 1.0

    def emin2f_prime(self, xn):
        return np.zeros_like(np.asarray(xn, dtype=float)) if np.ndim(xn) else 0.0


@dataclass(frozen=True)
class InverseTrig:
    """``e^{2f} = 1 / phi`` with ``phi = c + a cos(x_n)``, so ``e^{-2jf} = phi^j``."""

    c: Fraction
    a: Fraction
    band = 1

    def __post_init__(self):
        object.__setattr__(self, "c", _rational(self.c))
        object.__setattr__(self, "a", _rational(self.a))
        if not (self.c > abs(self.a) and self.a != 0):
            raise InvalidFactor("factor requires c > |a| > 0" if self.a == 0 else "factor requires c > |a|")

    @property
    def spec(self) -> str:
        return f"inv-cos:{_num_out(self.c)},{_num_out(self.a)}"

    def emin2f(self, xn):
        return float(self.c) + float(self.a) * np.cos(xn)

    def emin2f_prime(self, xn):
        return -float(self.a) * np.sin(xn)


@dataclass(frozen=True)
class TrigExponent:
    """``f = A cos(x_n)``; ``f'`` is band-limited, ``e^{-2f}`` is not."""

    A: Fraction
    band = 1

    def __post_init__(self):
        object.__setattr__(self, "A", _rational(self.A))
        if self.A == 0:
            raise InvalidFactor("factor requires A != 0")

    @property
    def spec(self) -> str:
        return f"exp-cos:{_num_out(self.A)}"

    def emin2f(self, xn):
        return np.exp(-2.0 * float(self.A) * np.cos(xn))

    def emin2f_prime(self, xn):
        A = float(self.A)
        return 2.0 * A * np.sin(xn) * np.exp(-2.0 * A * np.cos(xn))


ConformalFactor = Flat | InverseTrig | TrigExponent


def _rational(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**12)
    return Fraction(x)


def parse_factor(text: str) -> ConformalFactor:
    """Parse ``flat``, ``inv-cos:<c>,<a>`` or ``exp-cos:<A>``."""
    text = text.strip()
    if text == "flat":
        return Flat()
    name, _, args = text.partition(":")
    try:
        vals = [Fraction(v.strip()) for v in args.split(",")] if args else []
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidFactor(f"bad factor parameters in {text!r}") from exc
    if name == "inv-cos" and len(vals) == 2:
        return InverseTrig(*vals)
    if name == "exp-cos" and len(vals) == 1:
        return TrigExponent(vals[0])
    raise InvalidFactor(f"unknown factor spec {text!r}")


@dataclass(frozen=True)
class FactorData:
    """Band-limited series attached to a conformal factor on ``T^n``.

    ``fprime`` is ``None`` when ``f'`` is not band-limited (InverseTrig); the
    Killing operator must then use the phi-multiplied form (``multiplied``).
    """

    n: int
    factor: object
    one: object
    fprime: TorusScalar | None
    phi: TorusScalar | None = None
    phiprime: TorusScalar | None = None

    @property
    def multiplied(self) -> bool:
        return self.fprime is None

    def emin2f_power(self, j: int) -> TorusScalar:
        """``e^{-2jf}`` as a series, when it is band-limited."""
        if isinstance(self.factor, InverseTrig):
            return self.phi ** j if j else TorusScalar.constant(self.n, self.one)
        if isinstance(self.factor, Flat) or j == 0:
            return TorusScalar.constant(self.n, self.one)
        raise UnsupportedOperation("e^{-2jf} has infinite Fourier support for f = A cos x_n")


def factor_data(F: ConformalFactor, n: int, mode: str = "exact") -> FactorData:
    """Band-limited series attached to ``F`` on ``T^n`` (``mode``: exact or float)."""
    conv = float if mode == "float" else Fraction
    one = conv(1)
    xn = tuple([0] * (n - 1) + [1])
    if isinstance(F, Flat):
        return FactorData(n, F, one, TorusScalar.zero(n))
    if isinstance(F, TrigExponent):
        return FactorData(n, F, one, TorusScalar.sin(n, xn, -conv(F.A)))
    if isinstance(F, InverseTrig):
        phi = TorusScalar(n, {(0,) * n: (conv(F.c), 0), xn: (conv(F.a), 0)})
        return FactorData(n, F, one, None, phi, ts_partial(phi, n - 1))
    raise InvalidFactor(f"unknown factor {F!r}")
