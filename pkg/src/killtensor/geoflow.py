"""Co-geodesic flow of ``g~ = e^{2f(x_n)} g`` and drift of polynomial first integrals.

Phase space is ``T*T^n`` with Hamiltonian ``H = 1/2 e^{-2f} |mom|^2``. A
Killing tensor ``K`` (contravariant, flat-frame components) yields the first
integral ``N_K(x, mom)``; for instance ``L~ = e^{-2f} L`` gives ``2H``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from .errors import IntegratorError
from .symalg import SymTensorField, evaluate
from .torusfn import ConformalFactor, Flat, InverseTrig, TrigExponent

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GeodesicState:
    x: tuple[float, ...]
    mom: tuple[float, ...]
    t: float = 0.0

    def __post_init__(self):
        x = tuple(float(v) % TWO_PI for v in self.x)
        mom = tuple(float(v) for v in self.mom)
        if len(x) != len(mom):
            raise ValueError("position and momentum dimensions differ")
        if not all(math.isfinite(v) for v in x + mom):
            raise ValueError("non-finite state")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "mom", mom)


def _weight(F: ConformalFactor):
    """``(w, w')`` with ``w = e^{-2f}`` as scalar functions of ``x_n``."""
    if isinstance(F, Flat):
        return (lambda s: 1.0), (lambda s: 0.0)
    if isinstance(F, InverseTrig):
        c, a = float(F.c), float(F.a)
        return (lambda s: c + a * math.cos(s)), (lambda s: -a * math.sin(s))
    if isinstance(F, TrigExponent):
        A = float(F.A)
        return (lambda s: math.exp(-2.0 * A * math.cos(s))), (
            lambda s: 2.0 * A * math.sin(s) * math.exp(-2.0 * A * math.cos(s))
        )
    raise TypeError(f"unknown factor {F!r}")


def hamiltonian(s: GeodesicState, F: ConformalFactor) -> float:
    """``1/2 e^{-2f(x_n)} |mom|^2``."""
    w, _ = _weight(F)
    return 0.5 * w(s.x[-1]) * sum(m * m for m in s.mom)


def _midpoint(x, m, h, w, dw, tol, maxiter):
    """One implicit-midpoint step on raw (unwrapped) coordinate lists."""
    n = len(x)
    xn_new = list(x)
    m_new = list(m)
    for _ in range(maxiter):
        xm = x[-1] + 0.5 * (xn_new[-1] - x[-1]) if n else 0.0
        mm = [0.5 * (a + b) for a, b in zip(m, m_new)]
        try:
            wm = w(xm)
            dwm = dw(xm)
        except (ValueError, OverflowError) as exc:
            raise IntegratorError(f"midpoint iteration diverged (h={h})") from exc
        msq = sum(v * v for v in mm)
        cand_x = [x[i] + h * wm * mm[i] for i in range(n)]
        cand_m = list(m)
        cand_m[-1] = m[-1] - h * 0.5 * dwm * msq
        err = max(abs(cand_x[-1] - xn_new[-1]), abs(cand_m[-1] - m_new[-1]))
        err = max([err] + [abs(a - b) for a, b in zip(cand_x, xn_new)])
        xn_new, m_new = cand_x, cand_m
        if not math.isfinite(err):
            raise IntegratorError(f"midpoint iteration diverged (h={h})")
        if err <= tol:
            return xn_new, m_new
    raise IntegratorError(f"midpoint iteration did not converge in {maxiter} iterations (h={h})")


def step_midpoint(s: GeodesicState, h: float, F: ConformalFactor, tol: float = 1e-13, maxiter: int = 50) -> GeodesicState:
    """Implicit midpoint step, solved by fixed-point iteration.

    Transverse momenta have zero time derivative and are copied unchanged.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    w, dw = _weight(F)
    x, m = _midpoint(list(s.x), list(s.mom), h, w, dw, tol, maxiter)
    return GeodesicState(tuple(x), tuple(m), s.t + h)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray  # shape (n, steps + 1), unwrapped
    mom: np.ndarray  # shape (n, steps + 1)
    energy: np.ndarray


def integrate(s0: GeodesicState, F: ConformalFactor, h: float, T: float, tol: float = 1e-13, maxiter: int = 50) -> Trajectory:
    """Integrate to ``T`` with ``round(T / h)`` midpoint steps."""
    if h <= 0 or T <= 0:
        raise ValueError("step size and horizon must be positive")
    steps = int(round(T / h))
    w, dw = _weight(F)
    n = len(s0.x)
    xs = np.empty((n, steps + 1))
    ms = np.empty((n, steps + 1))
    x, m = list(s0.x), list(s0.mom)
    xs[:, 0], ms[:, 0] = x, m
    for i in range(steps):
        x, m = _midpoint(x, m, h, w, dw, tol, maxiter)
        xs[:, i + 1] = x
        ms[:, i + 1] = m
    energy = 0.5 * F.emin2f(xs[-1]) * np.sum(ms ** 2, axis=0)
    return Trajectory(s0.t + h * np.arange(steps + 1), xs, ms, energy)


@dataclass
class DriftReport:
    name: str
    initial_value: float
    max_abs_drift: float
    relative_drift: float
    step: float
    horizon: float
    energy_drift: float

    def to_json(self) -> dict:
        return asdict(self)


def integral_values(K: SymTensorField, traj: Trajectory) -> np.ndarray:
    """``N_K(x(t), mom(t))`` along a trajectory."""
    vals = evaluate(K, traj.x, traj.mom)
    return np.broadcast_to(np.asarray(vals, dtype=float), traj.t.shape)


def drift_from_trajectory(K: SymTensorField, traj: Trajectory, name: str = "K") -> DriftReport:
    vals = integral_values(K, traj)
    f0 = float(vals[0])
    drift = float(np.max(np.abs(vals - f0)))
    e0 = float(traj.energy[0])
    edrift = float(np.max(np.abs(traj.energy - e0))) / max(1.0, abs(e0))
    h = float(traj.t[1] - traj.t[0]) if len(traj.t) > 1 else 0.0
    return DriftReport(name, f0, drift, drift / max(1.0, abs(f0)), h, float(traj.t[-1] - traj.t[0]), edrift)


def drift_report(K: SymTensorField, s0: GeodesicState, F: ConformalFactor, h: float, T: float, name: str = "K") -> DriftReport:
    """Integrate from ``s0`` and measure how far ``N_K`` wanders.

    Relative drift divides by ``max(1, |F(0)|)``.
    """
    if K.p < 1:
        raise ValueError("first integrals of degree 0 are constants")
    return drift_from_trajectory(K, integrate(s0, F, h, T), name)


def random_states(n: int, count: int, seed: int = 0, F: ConformalFactor | None = None) -> list[GeodesicState]:
    """Seeded initial states; every momentum direction component has size 0.2 .. 1.

    With ``F`` given the momenta are rescaled to unit ``g~``-speed (``H = 1/2``).
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        x = rng.uniform(0.0, TWO_PI, n)
        mom = rng.uniform(0.2, 1.0, n) * rng.choice([-1.0, 1.0], n)
        mom /= np.linalg.norm(mom)
        if F is not None:
            w, _ = _weight(F)
            mom /= math.sqrt(w(x[-1]))
        out.append(GeodesicState(tuple(x), tuple(mom)))
    return out


def negative_controls(n: int) -> dict[str, SymTensorField]:
    """Fixed tensors that are not Killing for any non-flat factor."""
    xn2 = tuple([0] * (n - 1) + [2])
    x1xn = tuple([1] + [0] * (n - 2) + [1])
    flatL = {tuple(2 if j == i else 0 for j in range(n)): 1.0 for i in range(n)}
    return {
        "xn2": SymTensorField.monomial(xn2, 1.0),
        "x1xn": SymTensorField.monomial(x1xn, 1.0),
        "L": SymTensorField(n, 2, flatL),
    }


def write_trajectory_csv(path_or_file, traj: Trajectory, values: Iterable[float] | None = None):
    """CSV rows ``t, x_1..x_n, mom_1..mom_n, F_K, H``."""
    own = isinstance(path_or_file, str)
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    n = traj.x.shape[0]
    vals = list(values) if values is not None else [float("nan")] * len(traj.t)
    try:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{i + 1}" for i in range(n)] + [f"mom{i + 1}" for i in range(n)] + ["F_K", "H"])
        for i in range(len(traj.t)):
            row = [traj.t[i], *traj.x[:, i], *traj.mom[:, i], vals[i], traj.energy[i]]
            w.writerow([repr(float(v)) for v in row])
    finally:
        if own:
            fh.close()
