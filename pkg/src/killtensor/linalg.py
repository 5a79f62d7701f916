"""Sparse exact elimination and SVD nullspaces.

Exact kernels use fraction-free elimination on integer rows (each row is
scaled by the lcm of its denominators and kept primitive by gcd division).
Matrices are first split into connected components of their row/column
incidence graph; Killing operators for x_n-only factors decouple by
transverse frequency, so the components stay small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


def components(entries: dict, ncols: int) -> list[tuple[list[int], list[int]]]:
    """Connected components as ``(rows, cols)``; empty columns are singletons."""
    parent = list(range(ncols))

    def find(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    first_col_of_row: dict[int, int] = {}
    for r, c in entries:
        if r in first_col_of_row:
            a, b = find(first_col_of_row[r]), find(c)
            if a != b:
                parent[max(a, b)] = min(a, b)
        else:
            first_col_of_row[r] = c
    groups: dict[int, tuple[list, list]] = {}
    for c in range(ncols):
        groups.setdefault(find(c), ([], []))[1].append(c)
    for r, c in first_col_of_row.items():
        groups[find(c)][0].append(r)
    return [(sorted(rs), cs) for _, (rs, cs) in sorted(groups.items())]


def _integer_row(row: dict) -> dict[int, int]:
    den = 1
    for v in row.values():
        den = math.lcm(den, Fraction(v).denominator)
    out = {c: int(Fraction(v) * den) for c, v in row.items() if v}
    return _primitive(out)


def _primitive(row: dict[int, int]) -> dict[int, int]:
    if not row:
        return row
    g = 0
    for v in row.values():
        g = math.gcd(g, v)
    lead = row[min(row)]
    if lead < 0:
        g = -g
    if g != 1:
        row = {c: v // g for c, v in row.items()}
    return row


def _combine(row: dict[int, int], prow: dict[int, int], col: int) -> dict[int, int]:
    """Eliminate ``col`` from ``row`` using pivot row ``prow``."""
    a, b = prow[col], row[col]
    g = math.gcd(a, b)
    a, b = a // g, b // g
    out = {c: v * a for c, v in row.items()} if a != 1 else dict(row)
    for c, v in prow.items():
        nv = out.get(c, 0) - b * v
        if nv:
            out[c] = nv
        else:
            out.pop(c, None)
    return _primitive(out)


class ExactEchelon:
    """Incremental reduced echelon form over Q with integer rows."""

    def __init__(self):
        self.pivots: dict[int, dict[int, int]] = {}

    def reduce(self, row: dict[int, int]) -> dict[int, int]:
        for c in [c for c in row if c in self.pivots]:
            if c in row:
                row = _combine(row, self.pivots[c], c)
        return row

    def add(self, row: dict) -> bool:
        """Insert a row; return True if it raised the rank."""
        row = self.reduce(_integer_row(row))
        if not row:
            return False
        col = min(row)
        for pc, prow in list(self.pivots.items()):
            if col in prow:
                self.pivots[pc] = _combine(prow, row, col)
        self.pivots[col] = row
        return True

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def nullspace(self, cols: Sequence[int]) -> list[dict[int, Fraction]]:
        """Kernel basis over ``cols``: one vector per free column."""
        out = []
        for f in cols:
            if f in self.pivots:
                continue
            vec = {f: Fraction(1)}
            for pc, prow in self.pivots.items():
                if f in prow:
                    vec[pc] = Fraction(-prow[f], prow[pc])
            out.append(dict(sorted(vec.items())))
        return out


def exact_nullspace(entries: dict, nrows: int, ncols: int) -> list[dict[int, Fraction]]:
    """Exact kernel of a sparse rational matrix as sparse column-index dicts."""
    by_row: dict[int, dict] = {}
    for (r, c), v in entries.items():
        by_row.setdefault(r, {})[c] = v
    basis = []
    for rows, cols in components(entries, ncols):
        ech = ExactEchelon()
        for r in rows:
            ech.add(by_row[r])
        basis.extend(ech.nullspace(cols))
    basis.sort(key=lambda v: min(v))
    return basis


def exact_rank(vectors: Iterable[dict]) -> int:
    ech = ExactEchelon()
    for v in vectors:
        ech.add(v)
    return ech.rank


@dataclass(frozen=True)
class SvdKernel:
    basis: np.ndarray  # shape (dim, ncols)
    singular_values: np.ndarray  # all singular values, zeros included for deficient blocks
    sigma_max: float
    threshold: float
    kept_max: float  # largest singular value classified as null
    gap: float  # smallest non-null singular value / max(largest null one, eps * sigma_max)
    near_threshold: bool


def svd_nullspace(entries: dict, nrows: int, ncols: int, tol: float = 1e-8) -> SvdKernel:
    """Right singular vectors with ``sigma < tol * sigma_max``, per component."""
    by_col: dict[int, list] = {}
    for (r, c), v in entries.items():
        by_col.setdefault(c, []).append((r, v))
    blocks = []
    sigma_max = 0.0
    for rows, cols in components(entries, ncols):
        rpos = {r: i for i, r in enumerate(rows)}
        M = np.zeros((len(rows), len(cols)))
        for j, c in enumerate(cols):
            for r, v in by_col.get(c, ()):
                M[rpos[r], j] = float(v)
        if M.shape[0]:
            _, s, vh = np.linalg.svd(M, full_matrices=True)
        else:
            s, vh = np.zeros(0), np.eye(len(cols))
        sfull = np.zeros(len(cols))
        sfull[: len(s)] = s[: len(cols)]
        if len(s):
            sigma_max = max(sigma_max, float(s.max()))
        blocks.append((cols, sfull, vh))
    threshold = tol * sigma_max if sigma_max > 0 else tol
    vecs, null_s, live_s, all_s = [], [], [], []
    for cols, sfull, vh in blocks:
        all_s.extend(sfull)
        for i, sv in enumerate(sfull):
            if sv < threshold:
                v = np.zeros(ncols)
                v[cols] = vh[i]
                vecs.append(v)
                null_s.append(sv)
            else:
                live_s.append(sv)
    kept_max = max(null_s, default=0.0)
    live_min = min(live_s, default=np.inf)
    # exact zeros are floored at roundoff level so the gap stays finite
    gap = live_min / max(kept_max, np.finfo(float).eps * sigma_max)
    near = any(threshold / 100 <= sv <= threshold * 100 for sv in all_s)
    basis = np.array(vecs) if vecs else np.zeros((0, ncols))
    return SvdKernel(basis, np.array(sorted(all_s, reverse=True)), sigma_max, threshold, kept_max, gap, near)


def float_rank(vectors: np.ndarray, tol: float = 1e-8) -> int:
    if len(vectors) == 0:
        return 0
    s = np.linalg.svd(np.asarray(vectors, dtype=float), compute_uv=False)
    if s.max() == 0:
        return 0
    return int(np.sum(s > tol * s.max()))
