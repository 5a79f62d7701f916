"""Symmetric tensor algebra over R^n in the normalized momentum-polynomial form.

A symmetric p-tensor ``K`` is stored as the polynomial
``N_K(x, y) = K(y, ..., y) / p! = sum_a c_a(x) y^a`` whose coefficients
``c_a`` are :class:`~killtensor.torusfn.TorusScalar` series. In this form

* the symmetric product ``v_1 . ... . v_p`` is the plain polynomial product,
* ``v -| K`` is the directional derivative ``d/dy`` along ``v``,
* ``L = sum e_i . e_i = 2g`` is ``|y|^2`` and ``Lambda`` is the y-Laplacian,
* the induced scalar product is the apolar pairing ``sum_a a! c_a d_a``.

Multilinear values K(v_1, ..., v_p) are recovered as ``p! * N_K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Number
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import DegreeMismatch, DimensionMismatch, NotTraceFree
from .torusfn import TorusScalar, ts_mul, ts_partial

MultiIndex = tuple[int, ...]


def multi_indices(n: int, p: int) -> list[MultiIndex]:
    """All exponent vectors of length ``n`` and degree ``p``, lexicographic."""
    if p < 0:
        return []
    return sorted(_compositions(n, p))


def _compositions(n: int, p: int) -> Iterator[MultiIndex]:
    if n == 1:
        yield (p,)
        return
    for head in range(p + 1):
        for tail in _compositions(n - 1, p - head):
            yield (head,) + tail


def mi_factorial(a: Sequence[int]) -> int:
    return math.prod(math.factorial(ai) for ai in a)


def unit(n: int, i: int) -> MultiIndex:
    return tuple(1 if j == i else 0 for j in range(n))


class SymTensorField:
    """Symmetric p-tensor field on ``T^n`` (normalized representation).

    ``coeffs`` maps degree-``p`` multi-indices to scalars; plain numbers are
    promoted to constant :class:`TorusScalar` s. Absent keys mean zero.
    Instances are treated as immutable.
    """

    __slots__ = ("n", "p", "coeffs")

    def __init__(self, n: int, p: int, coeffs: Mapping | None = None):
        out = {}
        for a, c in (coeffs or {}).items():
            a = tuple(a)
            if len(a) != n:
                raise DimensionMismatch(f"multi-index {a} has wrong length for n={n}")
            if sum(a) != p or min(a, default=0) < 0:
                raise DegreeMismatch(f"multi-index {a} is not of degree {p}")
            if isinstance(c, Number):
                c = TorusScalar.constant(n, c)
            elif c.n != n:
                raise DimensionMismatch("coefficient lives on a different torus")
            if not c.is_zero():
                out[a] = c
        self.n = n
        self.p = p
        self.coeffs = dict(sorted(out.items()))

    # constructors
    @classmethod
    def zero(cls, n: int, p: int) -> "SymTensorField":
        return cls(n, p)

    @classmethod
    def scalar(cls, u: TorusScalar | Number, n: int | None = None) -> "SymTensorField":
        if isinstance(u, TorusScalar):
            n = u.n
        return cls(n, 0, {(0,) * n: u})

    @classmethod
    def vector(cls, v: Sequence) -> "SymTensorField":
        n = len(v)
        return cls(n, 1, {unit(n, i): vi for i, vi in enumerate(v) if vi != 0})

    @classmethod
    def monomial(cls, a: Sequence[int], coeff: TorusScalar | Number = 1) -> "SymTensorField":
        a = tuple(a)
        return cls(len(a), sum(a), {a: coeff})

    @classmethod
    def metric(cls, n: int, one=Fraction(1)) -> "SymTensorField":
        """``L = sum_i e_i . e_i``, i.e. ``|y|^2``."""
        return cls(n, 2, {tuple(2 * e for e in unit(n, i)): one for i in range(n)})

    # queries
    def is_zero(self) -> bool:
        return not self.coeffs

    def band(self) -> tuple[int, ...]:
        b = [0] * self.n
        for c in self.coeffs.values():
            for i, bi in enumerate(c.band):
                b[i] = max(b[i], bi)
        return tuple(b)

    def support_band(self) -> tuple[int, ...]:
        """Tightest band containing every stored frequency."""
        b = [0] * self.n
        for c in self.coeffs.values():
            for k in c.terms:
                for i, ki in enumerate(k):
                    b[i] = max(b[i], abs(ki))
        return tuple(b)

    def max_abs_coeff(self):
        return max((c.max_abs_coeff() for c in self.coeffs.values()), default=0)

    def map_coeffs(self, fn) -> "SymTensorField":
        return SymTensorField(self.n, self.p, {a: fn(c) for a, c in self.coeffs.items()})

    def to_float(self) -> "SymTensorField":
        return self.map_coeffs(TorusScalar.to_float)

    # arithmetic
    def _check(self, other: "SymTensorField"):
        if self.n != other.n:
            raise DimensionMismatch(f"n={self.n} vs n={other.n}")

    def __add__(self, other):
        if not isinstance(other, SymTensorField):
            return NotImplemented
        self._check(other)
        if self.p != other.p:
            raise DegreeMismatch(f"cannot add degrees {self.p} and {other.p}")
        coeffs = dict(self.coeffs)
        for a, c in other.coeffs.items():
            coeffs[a] = coeffs[a] + c if a in coeffs else c
        return SymTensorField(self.n, self.p, coeffs)

    def __neg__(self):
        return SymTensorField(self.n, self.p, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, SymTensorField):
            return sym_mul(self, other)
        if isinstance(other, (Number, TorusScalar)):
            return SymTensorField(self.n, self.p, {a: c * other for a, c in self.coeffs.items()})
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (Number, TorusScalar)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            return SymTensorField(self.n, self.p, {a: c / other for a, c in self.coeffs.items()})
        return NotImplemented

    def __eq__(self, other):
        if not isinstance(other, SymTensorField):
            return NotImplemented
        return self.n == other.n and self.p == other.p and (self - other).is_zero()

    __hash__ = None

    def allclose(self, other: "SymTensorField", atol: float = 1e-12) -> bool:
        if self.p != other.p:
            return False
        diff = self - other
        return diff.max_abs_coeff() <= atol

    def __repr__(self):
        body = ", ".join(f"{a}: {c!r}" for a, c in self.coeffs.items())
        return f"SymTensorField(n={self.n}, p={self.p}, {{{body}}})"

    # serialization
    def to_json(self) -> dict:
        return {
            "n": self.n,
            "p": self.p,
            "coeffs": [{"index": list(a), "terms": c.to_triples()} for a, c in self.coeffs.items()],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SymTensorField":
        n = data["n"]
        coeffs = {tuple(e["index"]): TorusScalar.from_triples(n, e["terms"]) for e in data["coeffs"]}
        return cls(n, data["p"], coeffs)


@dataclass(frozen=True)
class StandardDecomposition:
    """``K = sum_j L^j . parts[j]`` with every part trace-free."""

    parts: tuple[SymTensorField, ...]

    def __getitem__(self, j: int) -> SymTensorField:
        return self.parts[j]

    def __len__(self):
        return len(self.parts)

    def reconstruct(self) -> SymTensorField:
        out = None
        for j, part in enumerate(self.parts):
            term = part
            for _ in range(j):
                term = l_mul(term)
            out = term if out is None else out + term
        return out


# ---------------------------------------------------------------------------
# pointwise operations


def sym_mul(A: SymTensorField, B: SymTensorField) -> SymTensorField:
    """Symmetric product; in normalized form ``N_{A.B} = N_A N_B``."""
    A._check(B)
    out: dict = {}
    for a, ca in A.coeffs.items():
        for b, cb in B.coeffs.items():
            ab = tuple(x + y for x, y in zip(a, b))
            prod = ts_mul(ca, cb)
            out[ab] = out[ab] + prod if ab in out else prod
    return SymTensorField(A.n, A.p + B.p, out)


def partial_y(K: SymTensorField, i: int) -> SymTensorField:
    """Momentum derivative ``d/dy_i``, i.e. contraction with ``e_i``."""
    if K.p == 0:
        return SymTensorField.zero(K.n, 0)
    out = {}
    for a, c in K.coeffs.items():
        if a[i]:
            b = a[:i] + (a[i] - 1,) + a[i + 1:]
            out[b] = c * a[i]
    return SymTensorField(K.n, K.p - 1, out)


def contract(v: Sequence, K: SymTensorField) -> SymTensorField:
    """``v -| K``: the directional momentum derivative of ``N_K`` along ``v``.

    A degree-0 input gives the zero scalar.
    """
    if len(v) != K.n:
        raise DimensionMismatch(f"vector of length {len(v)} on n={K.n}")
    if K.p == 0:
        return SymTensorField.zero(K.n, 0)
    out = SymTensorField.zero(K.n, K.p - 1)
    for i, vi in enumerate(v):
        if vi != 0:
            out = out + partial_y(K, i) * vi
    return out


def vector_mul(v: Sequence, K: SymTensorField) -> SymTensorField:
    """``v . K``."""
    if len(v) != K.n:
        raise DimensionMismatch(f"vector of length {len(v)} on n={K.n}")
    return sym_mul(SymTensorField.vector(v), K) if any(vi != 0 for vi in v) else SymTensorField.zero(K.n, K.p + 1)


def inner(A: SymTensorField, B: SymTensorField) -> TorusScalar:
    r"""Induced scalar product, pointwise on the torus.

    Parameters
    ----------
    A, B : SymTensorField
        Tensors of equal degree on the same torus.

    Returns
    -------
    TorusScalar
        ``sum_a a! c_a(x) d_a(x)`` where ``a! = prod_i a_i!``. This is the
        symmetrized pairing ``g(v_1...v_p, w_1...w_p) = sum_sigma prod g(v_i, w_sigma(i))``
        expressed in normalized coefficients.
    """
    A._check(B)
    if A.p != B.p:
        raise DegreeMismatch(f"inner product of degrees {A.p} and {B.p}")
    out = TorusScalar.zero(A.n)
    for a, ca in A.coeffs.items():
        cb = B.coeffs.get(a)
        if cb is not None:
            out = out + ts_mul(ca, cb) * mi_factorial(a)
    return out


def l_mul(K: SymTensorField) -> SymTensorField:
    """``L . K``, i.e. multiplication of ``N_K`` by ``|y|^2``."""
    out: dict = {}
    for a, c in K.coeffs.items():
        for i in range(K.n):
            b = a[:i] + (a[i] + 2,) + a[i + 1:]
            out[b] = out[b] + c if b in out else c
    return SymTensorField(K.n, K.p + 2, out)


def lambda_op(K: SymTensorField) -> SymTensorField:
    """``Lambda = sum_i e_i -| e_i -|``: the y-Laplacian. Degree < 2 gives zero."""
    if K.p < 2:
        return SymTensorField.zero(K.n, max(K.p - 2, 0))
    out: dict = {}
    for a, c in K.coeffs.items():
        for i in range(K.n):
            if a[i] >= 2:
                b = a[:i] + (a[i] - 2,) + a[i + 1:]
                term = c * (a[i] * (a[i] - 1))
                out[b] = out[b] + term if b in out else term
    return SymTensorField(K.n, K.p - 2, out)


def is_trace_free(K: SymTensorField) -> bool:
    return lambda_op(K).is_zero()


def standard_decompose(K: SymTensorField) -> StandardDecomposition:
    """Split ``K = K_0 + L K_1 + L^2 K_2 + ...`` with ``Lambda K_j = 0``.

    Uses ``Lambda(L^{m} h) = 2m(2m + n - 2 + 2q) L^{m-1} h`` for ``h``
    trace-free of degree ``q``: decompose ``Lambda K`` recursively and divide
    term by term. All denominators are positive for ``n >= 1``.
    """
    if K.p < 2:
        return StandardDecomposition((K,))
    lower = standard_decompose(lambda_op(K)).parts
    n = K.n
    lifted = []
    for j, M in enumerate(lower):
        q = M.p
        m = j + 1
        lifted.append(M * Fraction(1, 2 * m * (2 * m + n - 2 + 2 * q)))
    shifted = StandardDecomposition(tuple(lifted)).reconstruct()
    K0 = K - l_mul(shifted)
    return StandardDecomposition((K0, *lifted))


def tf_part_of_vector_mul(v: Sequence, K: SymTensorField, check_trace_free: bool = True) -> SymTensorField:
    """Trace-free part of ``v . K`` for trace-free ``K`` of degree ``p``.

    ``(v.K)_0 = v.K - L (v -| K) / (n + 2(p-1))``. For ``p = 0`` the
    contraction vanishes and ``v.K`` is returned as is.
    """
    if check_trace_free and not is_trace_free(K):
        raise NotTraceFree("projection formula needs a trace-free tensor")
    vk = vector_mul(v, K)
    if K.p == 0:
        return vk
    return vk - l_mul(contract(v, K)) * Fraction(1, K.n + 2 * (K.p - 1))


def evaluate(K: SymTensorField, x, y) -> float | np.ndarray:
    """``N_K(x, y) = sum_a c_a(x) y^a``; the multilinear value is ``p!`` times this.

    ``x`` and ``y`` may carry a trailing sample axis (shape ``(n, m)``).
    """
    y = np.asarray(y, dtype=float)
    out = 0.0
    for a, c in K.coeffs.items():
        mono = 1.0
        for i, ai in enumerate(a):
            if ai:
                mono = mono * y[i] ** ai
        out = out + c(x) * mono
    return out


def form_value(K: SymTensorField, x, y):
    """Multilinear value ``K(y, ..., y) = p! N_K(y)``."""
    return math.factorial(K.p) * evaluate(K, x, y)


def power(K: SymTensorField, m: int) -> SymTensorField:
    out = SymTensorField.scalar(TorusScalar.constant(K.n, Fraction(1)))
    for _ in range(m):
        out = sym_mul(out, K)
    return out


def coefficient_partial(K: SymTensorField, axis: int) -> SymTensorField:
    """Coordinate derivative of every coefficient along ``axis`` (0-based)."""
    return K.map_coeffs(lambda c: ts_partial(c, axis))
