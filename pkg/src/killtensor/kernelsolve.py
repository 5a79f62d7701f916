"""Killing-tensor spaces as kernels of band-limited operators.

The verifier assembles the operator of :mod:`killtensor.diffops`, computes
its kernel exactly (or by SVD) and compares it with the span of the
monomials ``xi^a L~^m`` (``xi`` ranging over ``e_1 .. e_{n-1}``,
``L~ = e^{-2f} L``, ``|a| + 2m = p``).
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .diffops import SparseLinearMap, assemble_operator, field_to_coords, killing_residual
from .errors import BandMismatch, BandWarning, ConditioningWarning
from .linalg import exact_nullspace, exact_rank, float_rank, svd_nullspace
from .symalg import SymTensorField, l_mul, multi_indices
from .torusfn import ConformalFactor, Flat, InverseTrig, TorusScalar, TrigExponent, factor_data

DEFAULT_TOL = 1e-8


@dataclass
class KernelBasis:
    """Computed kernel of an assembled operator.

    ``vectors`` holds coordinates over ``operator.cols`` (Fractions in exact
    mode, floats otherwise); ``basis`` the same elements as tensor fields.
    """

    meta: dict
    basis: list[SymTensorField]
    vectors: list
    residual_max: float
    svd: object = None

    @property
    def dimension(self) -> int:
        return len(self.basis)


def nullspace(M: SparseLinearMap, mode: str = "exact", tol: float = DEFAULT_TOL) -> KernelBasis:
    """Kernel of ``M``.

    Exact mode runs fraction-free elimination and re-checks every basis
    vector for an exactly zero image. Float mode keeps right singular vectors
    with ``sigma < tol * sigma_max`` and reports the largest relative residual
    ``|Mv| / sigma_max``; a :class:`ConditioningWarning` is emitted when any
    singular value lies within a factor 100 of the threshold.
    """
    nrows, ncols = M.shape
    n = M.meta.get("n")
    p = M.meta.get("p")
    meta = dict(M.meta, mode=mode)
    if mode == "exact":
        sparse = exact_nullspace(M.entries, nrows, ncols)
        vectors = []
        for sv in sparse:
            vec = [Fraction(0)] * ncols
            for c, v in sv.items():
                vec[c] = v
            vectors.append(vec)
        residual = 0
        for vec in vectors:
            residual = max([residual] + [abs(x) for x in M.matvec(vec)])
        basis = [M.field_of(v, n, p) for v in vectors] if n is not None else []
        return KernelBasis(meta, basis, vectors, float(residual))
    if mode != "float":
        raise ValueError(f"unknown arithmetic mode {mode!r}")
    ker = svd_nullspace(M.entries, nrows, ncols, tol)
    if ker.near_threshold:
        warnings.warn(
            f"singular values within a factor 100 of the threshold {ker.threshold:.3g}",
            ConditioningWarning,
            stacklevel=2,
        )
    residual = 0.0
    dense = M.to_dense() if len(ker.basis) else None
    for v in ker.basis:
        residual = max(residual, float(np.linalg.norm(dense @ v)) / max(ker.sigma_max, 1e-300))
    vectors = [list(map(float, v)) for v in ker.basis]
    basis = [M.field_of(v, n, p) for v in vectors] if n is not None else []
    return KernelBasis(meta, basis, vectors, residual, ker)


def predicted_dimension(n: int, p: int, F: ConformalFactor) -> int:
    """Dimension of the band-limited Killing space predicted for ``F``.

    InverseTrig: every ``xi^a L~^m`` with ``|a| + 2m = p`` is band-limited.
    TrigExponent: only ``m = 0`` survives (``e^{-2mf}`` has full spectrum).
    Flat: all constant tensors.
    """
    if isinstance(F, Flat):
        return math.comb(p + n - 1, n - 1)
    if isinstance(F, TrigExponent):
        return math.comb(p + n - 2, n - 2)
    return sum(math.comb(p - 2 * m + n - 2, n - 2) for m in range(p // 2 + 1))


def span_basis(n: int, p: int, F: ConformalFactor, mode: str = "exact") -> list[SymTensorField]:
    """Band-limited members ``y'^a (e^{-2f} |y|^2)^m`` of the predicted span."""
    one = 1.0 if mode == "float" else Fraction(1)
    if isinstance(F, Flat):
        return [SymTensorField.monomial(a, one) for a in multi_indices(n, p)]
    data = factor_data(F, n, mode)
    out = []
    mmax = p // 2 if isinstance(F, InverseTrig) else 0
    for m in range(mmax + 1):
        weight = data.emin2f_power(m)
        for a in multi_indices(n - 1, p - 2 * m):
            K = SymTensorField.monomial(tuple(a) + (0,), weight)
            for _ in range(m):
                K = l_mul(K)
            out.append(K)
    return out


@dataclass(frozen=True)
class SubspaceRelation:
    contained: bool
    equal: bool


def _coords(K: SymTensorField) -> dict:
    return field_to_coords(K)


def subspace_compare(A: KernelBasis, B: Sequence[SymTensorField], tol: float = DEFAULT_TOL) -> SubspaceRelation:
    """Whether ``span B`` lies in (and equals) the kernel ``A``.

    Elements of ``B`` must live inside the band of ``A``.
    """
    band = A.meta.get("band")
    if band is not None:
        for K in B:
            if any(s > b for s, b in zip(K.support_band(), band)):
                raise BandMismatch(f"element with band {K.support_band()} outside kernel band {tuple(band)}")
    a_coords = [_coords(K) for K in A.basis]
    b_coords = [_coords(K) for K in B]
    if A.meta.get("mode", "exact") == "exact":
        keys = sorted({k for c in a_coords + b_coords for k in c})
        index = {k: i for i, k in enumerate(keys)}
        def as_row(c):
            return {index[k]: v for k, v in c.items()}
        rank_a = exact_rank(as_row(c) for c in a_coords)
        rank_b = exact_rank(as_row(c) for c in b_coords)
        rank_ab = exact_rank(as_row(c) for c in a_coords + b_coords)
    else:
        keys = sorted({k for c in a_coords + b_coords for k in c})
        index = {k: i for i, k in enumerate(keys)}
        def dense(cs):
            M = np.zeros((len(cs), len(keys)))
            for i, c in enumerate(cs):
                for k, v in c.items():
                    M[i, index[k]] = float(v)
            return M
        rank_a = float_rank(dense(a_coords), tol)
        rank_b = float_rank(dense(b_coords), tol)
        rank_ab = float_rank(dense(a_coords + b_coords), tol)
    contained = rank_ab == rank_a
    return SubspaceRelation(contained, contained and rank_a == rank_b)


def parity_and_flatness(K: SymTensorField) -> tuple[bool, bool]:
    """Even powers of ``y_n`` only; coefficients depend on ``x_n`` only."""
    parity = all(a[-1] % 2 == 0 for a in K.coeffs)
    flat = all(not any(k[:-1]) for c in K.coeffs.values() for k in c.terms)
    return parity, flat


@dataclass
class VerificationReport:
    kernel_dim: int
    predicted_dim: int
    span_contained: bool
    span_equals: bool
    parity_ok: bool
    flatness_ok: bool
    residual_max: float
    dim_stable: bool | None = None
    stable_kernel_dim: int | None = None
    gap: float | None = None
    timings: dict = field(default_factory=dict)
    kernel: KernelBasis | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.span_equals and self.parity_ok and self.flatness_ok and self.dim_stable is not False

    def result_json(self, with_basis: bool = False) -> dict:
        out = {
            "kernel_dim": self.kernel_dim,
            "predicted_dim": self.predicted_dim,
            "span_contained": self.span_contained,
            "span_equals": self.span_equals,
            "parity_ok": self.parity_ok,
            "flatness_ok": self.flatness_ok,
            "residual_max": self.residual_max,
        }
        if self.dim_stable is not None:
            out["dim_stable"] = self.dim_stable
            out["stable_kernel_dim"] = self.stable_kernel_dim
        if self.gap is not None:
            out["singular_gap"] = None if math.isinf(self.gap) else self.gap
        if with_basis and self.kernel is not None:
            out["basis"] = [K.to_json() for K in self.kernel.basis]
        return out


def compute_kernel(n, p, F, band, mode="exact", tol=DEFAULT_TOL, variant="killing") -> KernelBasis:
    M = assemble_operator(n, p, F, band, variant=variant, mode=mode)
    return nullspace(M, mode, tol)


def verify_theorem(
    n: int,
    p: int,
    F: ConformalFactor,
    band: Sequence[int],
    mode: str = "exact",
    tol: float = DEFAULT_TOL,
    stability_extra: int = 1,
) -> VerificationReport:
    """Compare the computed Killing space with the predicted polynomial span.

    Parameters
    ----------
    n, p : int
    F : ConformalFactor
        A non-flat factor.
    band : sequence of int
        Input band; the axis-``n`` entry must reach ``floor(p/2)`` for every
        predicted InverseTrig solution to fit (a :class:`BandWarning` is
        emitted otherwise and the dimension drops).
    mode : {"exact", "float"}
    stability_extra : int
        Re-run with the axis-``n`` band enlarged by this amount and record
        whether the dimension changes. ``0`` disables the re-run.

    Returns
    -------
    VerificationReport
        Parity and flatness are checked on every kernel basis vector; because
        the even-parity x_n-only coefficients form a coordinate subspace this
        is the same as subspace containment.
    """
    band = tuple(band)
    timings = {}
    t0 = time.perf_counter()
    M = assemble_operator(n, p, F, band, mode=mode)
    timings["assemble"] = 1000 * (time.perf_counter() - t0)
    t0 = time.perf_counter()
    kernel = nullspace(M, mode, tol)
    timings["nullspace"] = 1000 * (time.perf_counter() - t0)
    t0 = time.perf_counter()
    predicted = predicted_dimension(n, p, F)
    span = [K for K in span_basis(n, p, F, mode) if _fits(K, band)]
    rel = subspace_compare(kernel, span, tol)
    equal = rel.equal and kernel.dimension == predicted and len(span) == predicted
    parity = flat = True
    for K in kernel.basis:
        pk, fk = parity_and_flatness(_clean(K, mode))
        parity &= pk
        flat &= fk
    timings["compare"] = 1000 * (time.perf_counter() - t0)
    stable = stable_dim = None
    if stability_extra:
        t0 = time.perf_counter()
        bigger = band[:-1] + (band[-1] + stability_extra,)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BandWarning)
            stable_dim = nullspace(assemble_operator(n, p, F, bigger, mode=mode), mode, tol).dimension
        stable = stable_dim == kernel.dimension
        timings["stability"] = 1000 * (time.perf_counter() - t0)
    gap = kernel.svd.gap if kernel.svd is not None else None
    return VerificationReport(
        kernel_dim=kernel.dimension,
        predicted_dim=predicted,
        span_contained=rel.contained,
        span_equals=equal,
        parity_ok=parity,
        flatness_ok=flat,
        residual_max=kernel.residual_max,
        dim_stable=stable,
        stable_kernel_dim=stable_dim,
        gap=gap,
        timings=timings,
        kernel=kernel,
    )


def _fits(K: SymTensorField, band) -> bool:
    return all(s <= b for s, b in zip(K.support_band(), band))


def _clean(K: SymTensorField, mode: str, atol: float = 1e-9) -> SymTensorField:
    """Drop float coefficients below ``atol`` before structural checks."""
    if mode == "exact":
        return K
    def cut(c: TorusScalar):
        return TorusScalar(c.n, {k: (cc if abs(cc) > atol else 0, ss if abs(ss) > atol else 0)
                                 for k, (cc, ss) in c.terms.items()})
    return K.map_coeffs(cut)


def residual_is_zero(K: SymTensorField, F: ConformalFactor) -> bool:
    return killing_residual(K, F).is_zero()
