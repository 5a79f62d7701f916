import json
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import random_scalar
from killtensor.errors import DimensionMismatch, InvalidFactor, UnsupportedOperation
from killtensor.torusfn import (
    Flat,
    InverseTrig,
    TorusScalar,
    TrigExponent,
    canonical,
    canonical_frequencies,
    factor_data,
    parse_factor,
    ts_mul,
    ts_partial,
)

seeds = st.integers(0, 2**32 - 1)


def grid(n, m=7, seed=0):
    return np.random.default_rng(seed).uniform(0, 2 * math.pi, (n, m))


def test_canonical_flips_sign_of_sine():
    assert canonical((0, -2)) == ((0, 2), -1)
    assert canonical((-1, 3)) == ((1, -3), -1)
    assert canonical((0, 0)) == ((0, 0), 0)


def test_canonical_frequencies_count():
    # (2b1+1)(2b2+1) frequencies, half of them up to sign plus the origin
    assert len(canonical_frequencies((1, 2))) == (3 * 5 + 1) // 2


def test_negative_frequency_is_folded():
    u = TorusScalar(2, {(0, -1): (1, 2)})
    assert u.terms == {(0, 1): (1, -2)}


def test_product_matches_pointwise():
    u = TorusScalar.cos(2, (1, 0)) + TorusScalar.sin(2, (0, 1), Fraction(3, 2))
    v = TorusScalar.sin(2, (1, -1), 2) + 1
    x = grid(2)
    assert np.allclose((u * v)(x), u(x) * v(x))
    assert (u * v).band == (2, 2)


def test_cos_squared():
    u = TorusScalar.cos(1, (1,))
    assert u * u == TorusScalar(1, {(0,): (Fraction(1, 2), 0), (2,): (Fraction(1, 2), 0)})


def test_partial_of_sin_is_cos():
    u = TorusScalar.sin(2, (0, 3), 2)
    assert ts_partial(u, 1) == TorusScalar.cos(2, (0, 3), 6)
    assert ts_partial(u, 0).is_zero()


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_product_is_commutative_and_pointwise(seed):
    rng = random.Random(seed)
    u = random_scalar(rng, 2, (1, 2))
    v = random_scalar(rng, 2, (2, 1))
    assert ts_mul(u, v) == ts_mul(v, u)
    x = grid(2, seed=seed % 100)
    assert np.allclose((u * v)(x), u(x) * v(x), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_leibniz(seed):
    rng = random.Random(seed)
    u = random_scalar(rng, 3, (1, 0, 2))
    v = random_scalar(rng, 3, (1, 1, 1))
    for axis in range(3):
        assert ts_partial(u * v, axis) == ts_partial(u, axis) * v + u * ts_partial(v, axis)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_derivative_matches_finite_difference(seed):
    rng = random.Random(seed)
    u = random_scalar(rng, 2, (2, 2), mode="float")
    x = grid(2, 5, seed % 50)
    h = 1e-6
    e = np.array([[h], [0.0]])
    fd = (u(x + e) - u(x - e)) / (2 * h)
    assert np.allclose(ts_partial(u, 0)(x), fd, atol=1e-6)


def test_mean_is_constant_term():
    u = TorusScalar(2, {(0, 0): (Fraction(3), 0), (1, 0): (1, 1)})
    assert u.mean() == 3
    assert (ts_partial(u, 0)).mean() == 0


def test_division_by_series_is_rejected():
    u = TorusScalar.cos(1, (1,)) + 2
    with pytest.raises(UnsupportedOperation):
        1 / u
    with pytest.raises(UnsupportedOperation):
        u / u
    assert u / 2 == u * Fraction(1, 2)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        TorusScalar.cos(1, (1,)) + TorusScalar.cos(2, (1, 0))


def test_declared_band_is_checked():
    with pytest.raises(ValueError):
        TorusScalar(1, {(3,): (1, 0)}, band=(2,))


def test_triples_roundtrip_through_json():
    u = TorusScalar(2, {(0, 0): (Fraction(1, 3), 0), (1, -2): (2, Fraction(-5, 7))})
    text = json.dumps(u.to_triples())
    assert TorusScalar.from_triples(2, json.loads(text)) == u


def test_float_prune():
    u = TorusScalar(1, {(0,): (1.0, 0), (1,): (1e-17, 0)})
    assert u.frequencies() == [(0,)]


# conformal factors


def test_parse_factor():
    assert parse_factor("flat") == Flat()
    assert parse_factor("inv-cos:2,1") == InverseTrig(2, 1)
    assert parse_factor("inv-cos:5/2,0.5") == InverseTrig(Fraction(5, 2), Fraction(1, 2))
    assert parse_factor("exp-cos:1") == TrigExponent(1)
    assert parse_factor(InverseTrig(3, 1).spec) == InverseTrig(3, 1)


@pytest.mark.parametrize("text", ["inv-cos:1,2", "inv-cos:1,1", "inv-cos:2,0", "exp-cos:0", "cosh:1", "inv-cos:x,1"])
def test_invalid_factor(text):
    with pytest.raises(InvalidFactor):
        parse_factor(text)


def test_factor_requires_c_above_a_message():
    with pytest.raises(InvalidFactor, match="factor requires c > \\|a\\|"):
        InverseTrig(1, 2)


@pytest.mark.parametrize("F", [InverseTrig(2, 1), TrigExponent(Fraction(3, 2)), Flat()])
def test_weight_derivative(F):
    xs = np.linspace(0, 2 * math.pi, 11)
    h = 1e-6
    fd = (F.emin2f(xs + h) - F.emin2f(xs - h)) / (2 * h)
    assert np.allclose(F.emin2f_prime(xs), fd, atol=1e-6)


def test_factor_data_series():
    d = factor_data(InverseTrig(3, 1), 2)
    assert d.multiplied
    x = grid(2)
    assert np.allclose(d.phi(x), 3 + np.cos(x[1]))
    assert np.allclose(d.emin2f_power(2)(x), (3 + np.cos(x[1])) ** 2)
    t = factor_data(TrigExponent(2), 2)
    assert not t.multiplied
    # f = 2 cos x_n, f' = -2 sin x_n
    assert np.allclose(t.fprime(x), -2 * np.sin(x[1]))
    with pytest.raises(UnsupportedOperation):
        t.emin2f_power(1)
