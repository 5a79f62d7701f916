"""The alpha_j recursion and its polynomial solutions.

For a Killing tensor ``K = sum_j L^j K_j`` and a unit constant ``xi`` spanned
by ``e_1 .. e_{n-1}`` the functions ``alpha_j = <K_j, xi^{p-2j-1} . e_n>``
satisfy a triangular first-order linear system in ``x_n``. Normalized, step
``j`` reads::

    alpha_j' + 2j f' alpha_j = b_j alpha_{j-1}' + c_j f' alpha_{j-1}

With ``phi = e^{2f}`` (note: the reciprocal of the InverseTrig ``phi``) the
product ``phi^j alpha_j`` is a polynomial ``P_j(phi)`` of degree ``<= j``,
obtained exactly by :func:`recursion_step`.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import IndexRangeError
from .symalg import SymTensorField, inner, standard_decompose, sym_mul


@dataclass(frozen=True)
class PolyInPhi:
    """Polynomial ``sum_i coeffs[i] phi^i`` with trailing zeros pruned."""

    coeffs: tuple

    def __post_init__(self):
        c = list(self.coeffs)
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "PolyInPhi") -> "PolyInPhi":
        m = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (m - len(self.coeffs))
        b = other.coeffs + (0,) * (m - len(other.coeffs))
        return PolyInPhi(tuple(x + y for x, y in zip(a, b)))

    def scale(self, s) -> "PolyInPhi":
        return PolyInPhi(tuple(s * c for c in self.coeffs))

    def shift(self, k: int) -> "PolyInPhi":
        """Multiply by ``phi^k``."""
        return PolyInPhi((0,) * k + self.coeffs) if self.coeffs else self

    def derivative(self) -> "PolyInPhi":
        return PolyInPhi(tuple(i * c for i, c in enumerate(self.coeffs) if i))

    def antiderivative(self) -> "PolyInPhi":
        """Antiderivative with zero constant term."""
        return PolyInPhi((0,) + tuple(Fraction(c) / (i + 1) if not isinstance(c, float) else c / (i + 1)
                                      for i, c in enumerate(self.coeffs)))

    def __call__(self, phi):
        out = 0 * phi if isinstance(phi, np.ndarray) else 0
        for c in reversed(self.coeffs):
            out = out * phi + (float(c) if isinstance(phi, (float, np.ndarray)) else c)
        return out


ZERO = PolyInPhi(())


@dataclass(frozen=True)
class EqjCoefficients:
    """Coefficients of ``lhs' alpha_j' + lhs_f f' alpha_j = rhs' alpha_{j-1}' + rhs_f f' alpha_{j-1}``."""

    n: int
    p: int
    j: int
    lhs_alpha_prime: Fraction
    lhs_f_alpha: Fraction
    rhs_alpha_prime: Fraction
    rhs_f_alpha: Fraction

    def normalized(self) -> tuple[Fraction, Fraction]:
        """``(b_j, c_j)`` after dividing by the ``alpha_j'`` coefficient."""
        lead = self.lhs_alpha_prime
        assert lead != 0, "leading coefficient vanishes only outside the legal range"
        assert self.lhs_f_alpha / lead == 2 * self.j
        return self.rhs_alpha_prime / lead, self.rhs_f_alpha / lead


def _check_range(p: int, j: int):
    if p < 1 or not 0 <= j <= (p - 1) // 2:
        raise IndexRangeError(f"j={j} outside 0..floor((p-1)/2) for p={p}")


def eqj_coefficients(n: int, p: int, j: int) -> EqjCoefficients:
    """Exact coefficients of the equation for ``alpha_j``.

    For ``j = 0`` the right-hand side multiplies ``alpha_{-1} = 0`` and its
    coefficients are reported as zero.
    """
    _check_range(p, j)
    if n < 2:
        raise IndexRangeError("n must be at least 2")
    q = p - 2 * j
    lower = Fraction(1, n + 2 * (q - 1))
    lhs1 = (q + 1) * q * lower
    lhs2 = 2 * j * (q + 1) * q * lower
    if j == 0:
        return EqjCoefficients(n, p, j, lhs1, lhs2, Fraction(0), Fraction(0))
    upper = Fraction(1, n + 2 * (q + 1))
    return EqjCoefficients(n, p, j, lhs1, lhs2, upper, (n + 2 * p - 2 * j) * upper)


def dj_factor(p: int, j: int) -> int:
    """``(p-1)! / (p-2j-1)!``."""
    _check_range(p, j)
    return math.factorial(p - 1) // math.factorial(p - 2 * j - 1)


def recursion_step(Pprev: PolyInPhi, b, c, j: int, C=0) -> PolyInPhi:
    """``P_j`` from ``P_{j-1}`` where ``P_k(phi) = phi^k alpha_k``.

    ``Q = 2 phi P' - 2(j-1) P`` and ``P_j = (b/2) int Q + (c/2) int P + C``.
    A zero ``Pprev`` propagates to the constant ``C``.
    """
    if Pprev.degree > j - 1:
        raise IndexRangeError(f"previous polynomial has degree {Pprev.degree} > {j - 1}")
    if Pprev.is_zero():
        return PolyInPhi((C,))
    half = Fraction(1, 2)
    Q = Pprev.derivative().shift(1).scale(2) + Pprev.scale(-2 * (j - 1))
    return Q.antiderivative().scale(b * half) + Pprev.antiderivative().scale(c * half) + PolyInPhi((C,))


def solve_recursion(bs: Sequence, cs: Sequence, alpha0, constants: Sequence) -> list[PolyInPhi]:
    """``[P_0, ..., P_l]`` with ``P_0 = alpha0`` and ``bs[j-1], cs[j-1], constants[j-1]`` for step ``j``."""
    polys = [PolyInPhi((alpha0,))]
    for j in range(1, len(bs) + 1):
        polys.append(recursion_step(polys[-1], bs[j - 1], cs[j - 1], j, constants[j - 1]))
    return polys


def alphas_from_polys(polys: Sequence[PolyInPhi], phi):
    """``alpha_j = P_j(phi) / phi^j`` evaluated at ``phi``."""
    return [P(phi) / phi ** j for j, P in enumerate(polys)]


def specialized_constants(n: int, p: int) -> tuple[list[Fraction], list[Fraction]]:
    """Normalized ``(b_j, c_j)`` for ``j = 1 .. floor((p-1)/2)``."""
    bs, cs = [], []
    for j in range(1, (p - 1) // 2 + 1):
        b, c = eqj_coefficients(n, p, j).normalized()
        bs.append(b)
        cs.append(c)
    return bs, cs


def candidate_sum_poly(n: int, p: int, alpha0, constants: Sequence) -> PolyInPhi:
    """``phi^l sum_j d_j alpha_j`` as a polynomial in ``phi``, ``l = floor((p-1)/2)``.

    Its vanishing is necessary for ``K(xi, .., xi, e_n) = 0``.
    """
    bs, cs = specialized_constants(n, p)
    polys = solve_recursion(bs, cs, Fraction(alpha0), constants)
    top = len(polys) - 1
    out = ZERO
    for j, P in enumerate(polys):
        out = out + P.shift(top - j).scale(dj_factor(p, j))
    return out


# ---------------------------------------------------------------------------
# tensor-side quantities


def _xi_power_xn(xi: Sequence, k: int) -> SymTensorField:
    n = len(xi)
    xi_t = SymTensorField.vector(xi)
    out = SymTensorField.vector([0] * (n - 1) + [1])
    for _ in range(k):
        out = sym_mul(xi_t, out)
    return out


def alpha_functions(K: SymTensorField, xi: Sequence) -> list:
    """``alpha_j = <K_j, xi^{p-2j-1} . e_n>`` for ``0 <= j <= floor((p-1)/2)``."""
    parts = standard_decompose(K).parts
    return [inner(parts[j], _xi_power_xn(xi, K.p - 2 * j - 1)) for j in range((K.p - 1) // 2 + 1)]


def k_xi_xn(K: SymTensorField, xi: Sequence):
    """``K(xi, ..., xi, e_n) = <K, xi^{p-1} . e_n>``."""
    return inner(K, _xi_power_xn(xi, K.p - 1))


# ---------------------------------------------------------------------------
# numeric oracle


@dataclass
class OracleResult:
    xs: np.ndarray
    alphas: np.ndarray  # shape (l + 1, steps + 1)
    phi: np.ndarray  # e^{2f} on the grid
    unstable: bool


def _rk4(bs, cs, fprime, alpha_init, x0, x1, steps):
    bs = [float(b) for b in bs]
    cs = [float(c) for c in cs]
    l = len(bs)

    def rhs(x, a):
        fp = fprime(x)
        da = np.zeros(l + 1)
        for j in range(1, l + 1):
            da[j] = bs[j - 1] * da[j - 1] + cs[j - 1] * fp * a[j - 1] - 2 * j * fp * a[j]
        return da

    h = (x1 - x0) / steps
    xs = x0 + h * np.arange(steps + 1)
    out = np.empty((l + 1, steps + 1))
    a = np.array([float(v) for v in alpha_init])
    out[:, 0] = a
    for i in range(steps):
        x = xs[i]
        k1 = rhs(x, a)
        k2 = rhs(x + h / 2, a + h / 2 * k1)
        k3 = rhs(x + h / 2, a + h / 2 * k2)
        k4 = rhs(x + h, a + h * k3)
        a = a + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[:, i + 1] = a
    return xs, out


def numeric_ode_oracle(
    bs: Sequence,
    cs: Sequence,
    f: Callable,
    fprime: Callable,
    alpha_init: Sequence,
    x0: float = 0.0,
    x1: float = 1.0,
    steps: int = 10_000,
    check_refinement: bool = True,
) -> OracleResult:
    """Integrate the alpha system with classical fixed-step RK4.

    Parameters
    ----------
    bs, cs : sequence
        ``b_j``, ``c_j`` for ``j = 1 .. l``.
    f, fprime : callable
        The smooth function ``f`` and its derivative on ``[x0, x1]``.
    alpha_init : sequence
        ``alpha_0 .. alpha_l`` at ``x0``; ``alpha_0`` stays constant.
    steps : int
        Number of steps (at least 1000).
    check_refinement : bool
        Also integrate with ``2 * steps`` and flag ``unstable`` when the
        relative L2 energy of the alphas changes by more than ``1e-3``.
    """
    if steps < 1000:
        raise ValueError("the oracle needs at least 1000 steps")
    return _oracle(bs, cs, f, fprime, alpha_init, x0, x1, steps, check_refinement)


def _oracle(bs, cs, f, fprime, alpha_init, x0, x1, steps, check_refinement=False) -> OracleResult:
    if len(alpha_init) != len(bs) + 1:
        raise ValueError("need one initial value per alpha_j")
    xs, alphas = _rk4(bs, cs, fprime, alpha_init, x0, x1, steps)
    unstable = False
    if check_refinement:
        _, fine = _rk4(bs, cs, fprime, alpha_init, x0, x1, 2 * steps)
        e_coarse = float(np.sum(alphas ** 2))
        e_fine = float(np.sum(fine[:, ::2] ** 2))
        unstable = abs(e_fine - e_coarse) > 1e-3 * max(e_fine, 1e-300)
    phi = np.exp(2 * np.vectorize(f)(xs))
    return OracleResult(xs, alphas, phi, unstable)


def write_curves_csv(path_or_file, result: OracleResult):
    """CSV rows ``x, alpha_0 .. alpha_l, phi``."""
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(["x"] + [f"alpha_{j}" for j in range(result.alphas.shape[0])] + ["phi"])
        for i, x in enumerate(result.xs):
            w.writerow([repr(float(x))] + [repr(float(v)) for v in result.alphas[:, i]] + [repr(float(result.phi[i]))])
    finally:
        if own:
            fh.close()
