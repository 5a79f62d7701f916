"""Flat differential operators, Killing residuals and the assembled Killing operator.

On the flat torus the orthonormal frame ``e_i = d/dx_i`` is parallel, so
covariant derivatives are coordinate derivatives of the coefficients:

* ``d K``: ``N -> sum_i y_i dN/dx_i``
* ``delta K``: ``N -> -sum_i d^2 N / dy_i dx_i``

For ``g~ = e^{2f} g`` with ``f = f(x_n)`` a tensor ``K`` is Killing for
``g~`` iff ``dK + L . (df -| K) = 0``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import BandWarning, IndexRangeError, NotTraceFree, UnsupportedOperation
from .symalg import (
    SymTensorField,
    is_trace_free,
    l_mul,
    lambda_op,
    multi_indices,
    partial_y,
    standard_decompose,
    sym_mul,
)
from .torusfn import (
    ConformalFactor,
    Flat,
    InverseTrig,
    TorusScalar,
    canonical_frequencies,
    factor_data,
    ts_partial,
)


def d_flat(K: SymTensorField) -> SymTensorField:
    """Symmetrized derivative ``dK = sum_i e_i . nabla_{e_i} K``."""
    n = K.n
    out: dict = {}
    for a, c in K.coeffs.items():
        for i in range(n):
            dc = ts_partial(c, i)
            if dc.is_zero():
                continue
            b = a[:i] + (a[i] + 1,) + a[i + 1:]
            out[b] = out[b] + dc if b in out else dc
    return SymTensorField(n, K.p + 1, out)


def delta_flat(K: SymTensorField) -> SymTensorField:
    """Divergence ``delta K = -sum_i e_i -| nabla_{e_i} K``; degree 0 gives zero."""
    n = K.n
    if K.p == 0:
        return SymTensorField.zero(n, 0)
    out: dict = {}
    for a, c in K.coeffs.items():
        for i in range(n):
            if not a[i]:
                continue
            dc = ts_partial(c, i)
            if dc.is_zero():
                continue
            b = a[:i] + (a[i] - 1,) + a[i + 1:]
            term = dc * (-a[i])
            out[b] = out[b] + term if b in out else term
    return SymTensorField(n, K.p - 1, out)


def lie_flat_dir(K: SymTensorField, axis: int) -> SymTensorField:
    """Lie derivative along the parallel field ``d/dx_axis``, ``axis < n - 1``."""
    if not 0 <= axis < K.n - 1:
        raise IndexRangeError(f"transverse axis must lie in [0, {K.n - 2}], got {axis}")
    return K.map_coeffs(lambda c: ts_partial(c, axis))


def _df_contract(K: SymTensorField, fprime: TorusScalar) -> SymTensorField:
    """``df -| K`` for ``df = f' e_n``."""
    return partial_y(K, K.n - 1) * fprime


def killing_residual(K: SymTensorField, F: ConformalFactor, mode: str | None = None) -> SymTensorField:
    """Residual of the ``g~``-Killing equation written on the flat torus.

    Flat and TrigExponent factors give ``dK + L . (df -| K)``. For
    InverseTrig, ``f' = -phi'/(2 phi)`` is not band-limited, so the equation is
    multiplied by ``2 phi > 0``: ``2 phi dK - phi' L . (e_n -| K)``. Either way
    the residual vanishes exactly when ``K`` is Killing for ``g~``.
    """
    mode = mode or _mode_of(K)
    data = factor_data(F, K.n, mode)
    dK = d_flat(K)
    if isinstance(F, Flat):
        return dK
    if data.multiplied:
        return dK * data.phi * 2 - l_mul(partial_y(K, K.n - 1) * data.phiprime)
    return dK + l_mul(_df_contract(K, data.fprime))


def _mode_of(K: SymTensorField) -> str:
    for c in K.coeffs.values():
        for cc, ss in c.terms.values():
            if isinstance(cc, float) or isinstance(ss, float):
                return "float"
    return "exact"


def _inv(x: int):
    return Fraction(1, x)


def graded_killing_residual(K: SymTensorField, F: ConformalFactor) -> list[SymTensorField]:
    """Standard-decomposition parts of :func:`killing_residual`.

    Only for factors with band-limited ``f'`` (Flat, TrigExponent).
    """
    if isinstance(F, InverseTrig):
        raise UnsupportedOperation("graded residual needs a band-limited f'; use killing_residual")
    return list(standard_decompose(killing_residual(K, F)).parts)


def graded_system_parts(K: SymTensorField, F: ConformalFactor) -> list[SymTensorField]:
    """The graded equations written out term by term.

    With ``K = sum_j L^j K_j``, ``c(q) = 1/(n + 2(q-1))`` for a degree-``q``
    part, part ``j`` is::

        dK_j + c(p_j) L delta K_j + 2j (df.K_j - c(p_j) L (df -| K_j))
          - c(p_j + 2) delta K_{j-1} + (1 + 2(j-1) c(p_j + 2)) df -| K_{j-1}

    where ``p_j = p - 2j``. Terms whose coefficient is singular (``n = 2``,
    scalar ``K_j``) multiply tensors that vanish and are dropped. Agrees with
    :func:`graded_killing_residual` part by part.
    """
    if isinstance(F, InverseTrig):
        raise UnsupportedOperation("graded system needs a band-limited f'")
    n, p = K.n, K.p
    fprime = factor_data(F, n, _mode_of(K)).fprime
    parts = standard_decompose(K).parts
    out = []
    for j in range((p + 1) // 2 + 1):
        deg = p + 1 - 2 * j
        term = SymTensorField.zero(n, deg)
        if j < len(parts):
            Kj = parts[j]
            qj = p - 2 * j
            term = term + d_flat(Kj)
            df_k = sym_mul(SymTensorField.vector([0] * (n - 1) + [1]), Kj) * fprime
            if j:
                term = term + df_k * (2 * j)
            if qj >= 1:
                cj = _inv(n + 2 * (qj - 1))
                term = term + l_mul(delta_flat(Kj)) * cj
                if j:
                    term = term - l_mul(_df_contract(Kj, fprime)) * (2 * j * cj)
        if 1 <= j <= len(parts) and parts[j - 1].p >= 1:
            Kprev = parts[j - 1]
            cprev = _inv(n + 2 * (p - 2 * j + 1))
            term = term - delta_flat(Kprev) * cprev
            term = term + _df_contract(Kprev, fprime) * (1 + 2 * (j - 1) * cprev)
        out.append(term)
    return out


def conformal_killing_residual(K: SymTensorField) -> SymTensorField:
    """``(dK)_0 = dK + L delta K / (n + 2(p-1))`` for trace-free ``K``.

    Vanishes iff ``K`` is a trace-free conformal Killing tensor of the flat
    metric. For ``p = 0`` the divergence term is absent and ``dK`` is returned.
    """
    if not is_trace_free(K):
        raise NotTraceFree("conformal Killing residual needs a trace-free tensor")
    dK = d_flat(K)
    if K.p == 0:
        return dK
    return dK + l_mul(delta_flat(K)) * _inv(K.n + 2 * (K.p - 1))


# ---------------------------------------------------------------------------
# matrix assembly

ColKey = tuple  # (multi-index, frequency, slot) with slot 0 = cos, 1 = sin


def basis_keys(n: int, p: int, band: Sequence[int]) -> list[ColKey]:
    """Real coefficient coordinates of degree-``p`` fields within ``band``.

    Ordering: multi-index major, then frequency (lexicographic), cos before sin.
    """
    freqs = canonical_frequencies(band)
    keys = []
    for a in multi_indices(n, p):
        for k in freqs:
            keys.append((a, k, 0))
            if any(k):
                keys.append((a, k, 1))
    return keys


def basis_field(n: int, key: ColKey, one=Fraction(1)) -> SymTensorField:
    a, k, slot = key
    coeff = TorusScalar.cos(n, k, one) if slot == 0 else TorusScalar.sin(n, k, one)
    return SymTensorField(n, sum(a), {a: coeff})


def field_to_coords(K: SymTensorField) -> dict[ColKey, object]:
    out = {}
    for a, c in K.coeffs.items():
        for k, (cc, ss) in c.terms.items():
            if cc:
                out[(a, k, 0)] = cc
            if ss:
                out[(a, k, 1)] = ss
    return out


def coords_to_field(n: int, p: int, coords: dict) -> SymTensorField:
    acc: dict = {}
    for (a, k, slot), v in coords.items():
        acc.setdefault(a, {})
        c, s = acc[a].get(k, (0, 0))
        acc[a][k] = (c + v, s) if slot == 0 else (c, s + v)
    return SymTensorField(n, p, {a: TorusScalar(n, t) for a, t in acc.items()})


@dataclass(frozen=True)
class SparseLinearMap:
    """Sparse matrix with labelled rows and columns.

    Rows are ``(multi-index, frequency, slot)`` of the output coefficients,
    columns the same for the input. ``entries`` maps ``(row, col)`` integer
    positions to nonzero scalars.
    """

    rows: tuple
    cols: tuple
    entries: dict
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    def matvec(self, vec: Sequence) -> list:
        out = [0] * len(self.rows)
        for (r, c), v in self.entries.items():
            if vec[c]:
                out[r] = out[r] + v * vec[c]
        return out

    def apply(self, K: SymTensorField) -> dict:
        """Residual coordinates of ``K`` through the matrix (row key -> value)."""
        col_index = {key: j for j, key in enumerate(self.cols)}
        vec = [0] * len(self.cols)
        for key, v in field_to_coords(K).items():
            vec[col_index[key]] = v
        res = self.matvec(vec)
        return {self.rows[i]: v for i, v in enumerate(res) if v}

    def vector_of(self, K: SymTensorField) -> list:
        col_index = {key: j for j, key in enumerate(self.cols)}
        vec = [0] * len(self.cols)
        for key, v in field_to_coords(K).items():
            vec[col_index[key]] = v
        return vec

    def field_of(self, vec: Sequence, n: int, p: int) -> SymTensorField:
        return coords_to_field(n, p, {self.cols[j]: v for j, v in enumerate(vec) if v})

    def to_dense(self) -> np.ndarray:
        M = np.zeros(self.shape)
        for (r, c), v in self.entries.items():
            M[r, c] = float(v)
        return M

    def to_coo_text(self) -> str:
        lines = []
        for (r, c), v in sorted(self.entries.items()):
            lines.append(f"{r} {c} {v}")
        return "\n".join(lines) + ("\n" if lines else "")


def assemble_operator(
    n: int,
    p: int,
    F: ConformalFactor,
    band: Sequence[int],
    variant: str = "killing",
    mode: str = "exact",
) -> SparseLinearMap:
    """Matrix of the Killing (or flat conformal Killing) operator on a band.

    Parameters
    ----------
    n, p : int
        Torus dimension and tensor degree.
    F : ConformalFactor
        Metric factor; ignored for ``variant="conformal_killing"`` (flat).
    band : sequence of int
        Per-axis input band.
    variant : {"killing", "conformal_killing"}
        For the conformal variant the trace constraint ``Lambda K = 0`` is
        appended as extra rows (degree ``p - 2``), so the kernel is the
        trace-free conformal Killing space.
    mode : {"exact", "float"}

    Notes
    -----
    The output band is the input band enlarged by the factor's band on axis
    ``n``; no output frequency is discarded, so every kernel vector is an
    exact solution of the band-limited equation.
    """
    band = tuple(int(b) for b in band)
    if len(band) != n:
        raise ValueError(f"band {band} does not have {n} entries")
    if isinstance(F, InverseTrig) and variant == "killing" and band[-1] < p // 2:
        warnings.warn(
            f"axis-n band {band[-1]} < floor(p/2) = {p // 2}: predicted solutions are excluded",
            BandWarning,
            stacklevel=2,
        )
    one = 1.0 if mode == "float" else Fraction(1)
    if variant == "killing":
        fb = F.band
        op = lambda K: killing_residual(K, F, mode)  # noqa: E731
    elif variant == "conformal_killing":
        fb = 0
        op = conformal_killing_residual_unchecked
    else:
        raise ValueError(f"unknown operator variant {variant!r}")
    out_band = band[:-1] + (band[-1] + fb,)
    cols = basis_keys(n, p, band)
    rows = basis_keys(n, p + 1, out_band)
    if variant == "conformal_killing" and p >= 2:
        rows = rows + basis_keys(n, p - 2, band)
    row_index = {key: i for i, key in enumerate(rows)}
    entries = {}
    for j, key in enumerate(cols):
        K = basis_field(n, key, one)
        images = [op(K)]
        if variant == "conformal_killing" and p >= 2:
            images.append(lambda_op(K))
        for image in images:
            for rkey, v in field_to_coords(image).items():
                entries[(row_index[rkey], j)] = v
    meta = {"n": n, "p": p, "factor": F.spec, "band": list(band), "variant": variant, "mode": mode}
    return SparseLinearMap(tuple(rows), tuple(cols), entries, meta)


def conformal_killing_residual_unchecked(K: SymTensorField) -> SymTensorField:
    """Conformal Killing residual formula applied without the trace-free check."""
    dK = d_flat(K)
    if K.p == 0:
        return dK
    return dK + l_mul(delta_flat(K)) * _inv(K.n + 2 * (K.p - 1))
