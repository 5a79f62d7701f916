"""Operator identities as ``(lhs, rhs)`` pairs on seeded random inputs.

Each builder takes ``(rng, n, p, mode)`` and returns two objects (tensor
fields or torus scalars) that must agree. Shared by the property tests and
the acceptance suite.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction

from helpers import random_tensor, random_vector
from killtensor.diffops import d_flat, delta_flat
from killtensor.symalg import (
    SymTensorField,
    contract,
    inner,
    l_mul,
    lambda_op,
    standard_decompose,
    sym_mul,
    tf_part_of_vector_mul,
    vector_mul,
)
from killtensor.torusfn import TorusScalar

BAND = 1


def _band(n):
    return (BAND,) * n


def _rt(rng, n, p, mode):
    return random_tensor(rng, n, p, _band(n), mode)


def commutator_lambda_vmul(rng, n, p, mode):
    K, v = _rt(rng, n, p, mode), random_vector(rng, n, mode)
    return lambda_op(vector_mul(v, K)) - vector_mul(v, lambda_op(K)) if p >= 2 else lambda_op(vector_mul(v, K)), contract(v, K) * 2


def commutator_contract_l(rng, n, p, mode):
    K, v = _rt(rng, n, p, mode), random_vector(rng, n, mode)
    return contract(v, l_mul(K)) - l_mul(contract(v, K)) if p >= 1 else contract(v, l_mul(K)), vector_mul(v, K) * 2


def commutator_lambda_contract(rng, n, p, mode):
    K, v = _rt(rng, n, p + 1, mode), random_vector(rng, n, mode)
    return lambda_op(contract(v, K)), contract(v, lambda_op(K)) if K.p >= 2 else SymTensorField.zero(n, max(p - 2, 0))


def commutator_l_vmul(rng, n, p, mode):
    K, v = _rt(rng, n, p, mode), random_vector(rng, n, mode)
    return l_mul(vector_mul(v, K)), vector_mul(v, l_mul(K))


def power_formula(rng, n, p, mode):
    """Pointwise ``(L.K)(v..v) = (q+2)(q+1) K(v..v) |v|^2`` as constants."""
    K, v = random_tensor(rng, n, p, None, mode), random_vector(rng, n, mode)
    lk = _form_exact(l_mul(K), v)
    k = _form_exact(K, v)
    return lk, (p + 2) * (p + 1) * k * sum(vi * vi for vi in v)


def _form_exact(K, v):
    """``p! sum_a c_a v^a`` for constant coefficients, in the coefficient field."""
    out = 0
    for a, c in K.coeffs.items():
        term = c.mean()
        for vi, ai in zip(v, a):
            term = term * vi ** ai
        out = out + term
    return math.factorial(K.p) * out


def projection_vmul(rng, n, p, mode):
    """``(v.K)_0`` is trace-free and differs from ``v.K`` by ``L (v -| K) / (n + 2(p-1))``."""
    K = standard_decompose(_rt(rng, n, p, mode))[0]
    v = random_vector(rng, n, mode)
    proj = tf_part_of_vector_mul(v, K, check_trace_free=(mode == "exact"))
    return lambda_op(proj), SymTensorField.zero(n, max(p - 1, 0))


def projection_d(rng, n, p, mode):
    """``dK + L delta K / (n + 2(p-1))`` is trace-free for trace-free ``K``."""
    K = standard_decompose(_rt(rng, n, p, mode))[0]
    if p == 0:
        return lambda_op(d_flat(K)), SymTensorField.zero(n, 0)
    c = Fraction(1, n + 2 * (p - 1)) if mode == "exact" else 1.0 / (n + 2 * (p - 1))
    proj = d_flat(K) + l_mul(delta_flat(K)) * c
    return lambda_op(proj), SymTensorField.zero(n, p - 1)


def adjoint_vmul(rng, n, p, mode):
    K, M, v = _rt(rng, n, p, mode), _rt(rng, n, p + 1, mode), random_vector(rng, n, mode)
    return inner(vector_mul(v, K), M), inner(K, contract(v, M))


def adjoint_l(rng, n, p, mode):
    K, M = _rt(rng, n, p, mode), _rt(rng, n, p + 2, mode)
    return inner(l_mul(K), M), inner(K, lambda_op(M))


def adjoint_d(rng, n, p, mode):
    """``d`` and ``delta`` are adjoint after averaging over the torus."""
    K, M = _rt(rng, n, p, mode), _rt(rng, n, p + 1, mode)
    lhs = TorusScalar.constant(n, inner(d_flat(K), M).mean())
    rhs = TorusScalar.constant(n, inner(K, delta_flat(M)).mean())
    return lhs, rhs


def derivation_d(rng, n, p, mode):
    q = rng.randint(0, p)
    A, B = _rt(rng, n, q, mode), _rt(rng, n, p - q, mode)
    return d_flat(sym_mul(A, B)), sym_mul(d_flat(A), B) + sym_mul(A, d_flat(B))


def d_commutes_with_l(rng, n, p, mode):
    K = _rt(rng, n, p, mode)
    return d_flat(l_mul(K)), l_mul(d_flat(K))


IDENTITIES = {
    "commutator [Lambda, v.] = 2 v-|": commutator_lambda_vmul,
    "commutator [v-|, L] = 2 v.": commutator_contract_l,
    "commutator [Lambda, v-|] = 0": commutator_lambda_contract,
    "commutator [L, v.] = 0": commutator_l_vmul,
    "power formula": power_formula,
    "projection of v.K": projection_vmul,
    "projection of dK": projection_d,
    "adjoint v. / v-|": adjoint_vmul,
    "adjoint L / Lambda": adjoint_l,
    "adjoint d / delta": adjoint_d,
    "d is a derivation": derivation_d,
    "d L = L d": d_commutes_with_l,
}


def _size(obj):
    if isinstance(obj, (SymTensorField, TorusScalar)):
        return float(obj.max_abs_coeff() or 0)
    return abs(float(obj))


def mismatch(lhs, rhs, mode) -> float:
    """0 for exact agreement; relative size of ``lhs - rhs`` in float mode."""
    diff = lhs - rhs
    if mode == "exact":
        zero = diff.is_zero() if hasattr(diff, "is_zero") else diff == 0
        return 0.0 if zero else math.inf
    return _size(diff) / max(1.0, _size(lhs), _size(rhs))


def draw_instance(seed: int):
    """``(n, p)`` for one randomized instance."""
    rng = random.Random(seed)
    return rng, rng.randint(2, 3), rng.randint(0, 3)
