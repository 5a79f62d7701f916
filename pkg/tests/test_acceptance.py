"""Acceptance suite: one test and one printed pass/fail line per criterion.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines are
printed at the end of the session.
"""

import json
import math
import random
import time
import warnings
import zlib
from fractions import Fraction

import numpy as np
import pytest

from acceptance_log import record
from helpers import random_tensor
from identities import IDENTITIES, mismatch
from killtensor.cli import main
from killtensor.diffops import graded_killing_residual, graded_system_parts, killing_residual
from killtensor.geoflow import drift_from_trajectory, integrate, negative_controls, random_states
from killtensor.kernelsolve import compute_kernel
from killtensor.odelemma import alphas_from_polys, numeric_ode_oracle, solve_recursion
from killtensor.symalg import l_mul, multi_indices
from killtensor.torusfn import Flat, InverseTrig, TrigExponent

IT = InverseTrig(2, 1)

# pinned tolerances and sizes
FLOAT_IDENTITY_RTOL = 1e-12
IDENTITY_INSTANCES = 100
SVD_GAP_MIN = 1e6
SVD_TOL = 1e-8
ODE_ERR_MAX = 1e-8
ODE_STEPS = 10_000
ODE_SEEDS = 20
ODE_JMAX = 5
GEO_STEP = 1e-3
GEO_HORIZON = 100.0
GEO_STATES = 5
GEO_SEED = 2024
GEO_DRIFT_MAX = 1e-6
GEO_CONTROL_MIN = 1e-2
GEO_HALVING = (3.5, 4.5)


def enumerate_span(n, p):
    """Oracle for the predicted dimension: list ``xi^a L~^m`` with ``|a| + 2m = p``."""
    return sum(len(multi_indices(n - 1, p - 2 * m)) for m in range(p // 2 + 1))


# (n, p) -> frozen dimension from the enumeration oracle above
SPAN_TABLE = {(2, 1): 1, (2, 2): 2, (2, 3): 2, (2, 4): 3, (2, 5): 3, (3, 1): 2, (3, 2): 4, (3, 3): 6}
FLAT_TABLE = {(2, 1): 2, (2, 2): 3, (2, 3): 4, (3, 2): 6}
EXPONENT_TABLE = {(2, 2): 1, (2, 3): 1, (3, 2): 3}
CONFORMAL_TABLE = {(2, 2): 2, (3, 2): 5}


def _suite_file(tmp_path):
    path = tmp_path / "suite.json"
    path.write_text(json.dumps([{"n": n, "p": p, "factor": "inv-cos:2,1"} for n, p in SPAN_TABLE]))
    return path


def _run_span_suite(tmp_path, name):
    out = tmp_path / name
    code = main(["verify", "--suite", str(_suite_file(tmp_path)), "--arith", "exact", "--stability-extra", "2", "--out", str(out)])
    return code, out.read_bytes()


def test_criterion_1_span_table(tmp_path):
    assert all(enumerate_span(n, p) == d for (n, p), d in SPAN_TABLE.items())
    t0 = time.perf_counter()
    code, raw = _run_span_suite(tmp_path, "run1.json")
    elapsed = time.perf_counter() - t0
    reports = json.loads(raw)["reports"]
    bad = []
    for rep in reports:
        cfg, res = rep["config"], rep["result"]
        key = (cfg["n"], cfg["p"])
        assert cfg["band"] == [1] * (cfg["n"] - 1) + [cfg["p"] // 2 + 1]
        good = (
            res["kernel_dim"] == res["predicted_dim"] == SPAN_TABLE[key]
            and res["span_equals"]
            and res["stable_kernel_dim"] == res["kernel_dim"]
            and res["residual_max"] == 0
        )
        if not good:
            bad.append(key)
    dims = ", ".join(f"({r['config']['n']},{r['config']['p']}):{r['result']['kernel_dim']}" for r in reports)
    ok = code == 0 and not bad and len(reports) == len(SPAN_TABLE)
    record(1, "exact Killing spaces equal the polynomial span", ok, f"{dims} in {elapsed:.1f}s")
    assert ok, bad


def test_criterion_2_flat_kernels():
    got = {key: compute_kernel(*key, Flat(), (1,) * key[0]).dimension for key in FLAT_TABLE}
    ok = got == FLAT_TABLE and all(math.comb(p + n - 1, n - 1) == d for (n, p), d in FLAT_TABLE.items())
    record(2, "flat kernels are constant tensors", ok, str(got))
    assert ok


def test_criterion_3_exponent_band_stability():
    F = TrigExponent(1)
    details, ok = [], True
    for (n, p), d in EXPONENT_TABLE.items():
        assert math.comb(p + n - 2, n - 2) == d
        exact = compute_kernel(n, p, F, (1,) * (n - 1) + (3,), "exact").dimension
        ok &= exact == d
        gaps = []
        for bn in range(3, 7):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                ker = compute_kernel(n, p, F, (1,) * (n - 1) + (bn,), "float", SVD_TOL)
            ok &= ker.dimension == d
            gaps.append(ker.svd.gap)
        ok &= min(gaps) >= SVD_GAP_MIN
        details.append(f"({n},{p}):{d} min gap {min(gaps):.1e}")
    record(3, "exponent factor band stability", ok, "; ".join(details))
    assert ok


def test_criterion_4_conformal_flat():
    got = {key: compute_kernel(*key, Flat(), (1,) * key[0], variant="conformal_killing").dimension for key in CONFORMAL_TABLE}
    # dim Sym^p_0 R^n = C(p+n-1, n-1) - C(p+n-3, n-1)
    oracle = {(n, p): math.comb(p + n - 1, n - 1) - math.comb(p + n - 3, n - 1) for n, p in CONFORMAL_TABLE}
    ok = got == CONFORMAL_TABLE == oracle
    record(4, "flat trace-free conformal Killing kernels", ok, str(got))
    assert ok


def test_criterion_5_operator_identities():
    worst = {"exact": 0.0, "float": 0.0}
    failures = []
    t0 = time.perf_counter()
    for name, build in IDENTITIES.items():
        for mode in ("exact", "float"):
            for seed in range(IDENTITY_INSTANCES):
                rng = random.Random(zlib.crc32(f"{name}/{mode}/{seed}".encode()))
                n, p = rng.randint(2, 3), rng.randint(0, 3)
                lhs, rhs = build(rng, n, p, mode)
                err = mismatch(lhs, rhs, mode)
                worst[mode] = max(worst[mode], err)
                if err > (0 if mode == "exact" else FLOAT_IDENTITY_RTOL):
                    failures.append((name, mode, seed))
    ok = not failures
    record(
        5,
        "operator identities",
        ok,
        f"{len(IDENTITIES)} identities x {IDENTITY_INSTANCES} instances x 2 modes, "
        f"exact worst {worst['exact']:.0e}, float worst {worst['float']:.1e}, {time.perf_counter() - t0:.1f}s",
    )
    assert ok, failures[:5]


def test_criterion_6_graded_system():
    F = TrigExponent(1)
    ok = True
    count = 0
    for n, p in [(2, 2), (2, 3), (3, 2)]:
        rng = random.Random(600 + 10 * n + p)
        for _ in range(20):
            K = random_tensor(rng, n, p, (1,) * (n - 1) + (2,))
            parts = graded_killing_residual(K, F)
            rebuilt = parts[0]
            for j in range(1, len(parts)):
                term = parts[j]
                for _ in range(j):
                    term = l_mul(term)
                rebuilt = rebuilt + term
            ok &= rebuilt == killing_residual(K, F)
            ok &= graded_system_parts(K, F) == parts
            count += 1
        for K in compute_kernel(n, p, F, (1,) * (n - 1) + (3,)).basis:
            ok &= all(part.is_zero() for part in graded_killing_residual(K, F))
    record(6, "graded system consistency", ok, f"{count} random tensors reconstructed, kernel parts vanish")
    assert ok


def test_criterion_7_alpha_recursion():
    worst, degree_ok, fit_worst = 0.0, True, 0.0
    f, fp = np.cos, (lambda x: -np.sin(x))
    phi0 = math.exp(2 * math.cos(0.0))
    for seed in range(ODE_SEEDS):
        rng = random.Random(700 + seed)
        rat = lambda: Fraction(rng.randint(-6, 6), rng.randint(1, 4))  # noqa: E731
        bs = [rat() for _ in range(ODE_JMAX)]
        cs = [rat() for _ in range(ODE_JMAX)]
        consts = [rat() for _ in range(ODE_JMAX)]
        polys = solve_recursion(bs, cs, rat() or Fraction(1), consts)
        degree_ok &= all(P.degree <= j for j, P in enumerate(polys))
        init = [float(P(phi0)) / phi0 ** j for j, P in enumerate(polys)]
        res = numeric_ode_oracle(bs, cs, f, fp, init, 0.0, 1.0, ODE_STEPS)
        exact = np.array(alphas_from_polys(polys, res.phi))
        worst = max(worst, float(np.max(np.abs(res.alphas - exact))))
        degree_ok &= not res.unstable
        # the numeric curves themselves: phi^j alpha_j fits a degree-j polynomial
        for j in range(1, ODE_JMAX + 1):
            y = res.alphas[j] * res.phi ** j
            coef = np.polyfit(res.phi, y, j)
            fit_worst = max(fit_worst, float(np.max(np.abs(np.polyval(coef, res.phi) - y)) / max(1.0, np.max(np.abs(y)))))
    ok = worst < ODE_ERR_MAX and degree_ok and fit_worst < 1e-8
    record(7, "alpha recursion vs numeric oracle", ok, f"max error {worst:.1e}, polynomial fit residual {fit_worst:.1e}")
    assert ok


def test_criterion_8_geodesic_conservation():
    worst, control_min, ratios = 0.0, math.inf, []
    t0 = time.perf_counter()
    for n, p in [(2, 2), (2, 3), (3, 2)]:
        band = (1,) * (n - 1) + (p // 2 + 1,)
        basis = [K.to_float() for K in compute_kernel(n, p, IT, band).basis]
        controls = negative_controls(n)
        for si, s0 in enumerate(random_states(n, GEO_STATES, GEO_SEED, IT)):
            traj = integrate(s0, IT, GEO_STEP, GEO_HORIZON)
            for K in basis:
                worst = max(worst, drift_from_trajectory(K, traj).relative_drift)
            for name, K in controls.items():
                control_min = min(control_min, drift_from_trajectory(K, traj, name).relative_drift)
            if si == 0:
                coarse = integrate(s0, IT, 2 * GEO_STEP, GEO_HORIZON)
                for K in basis:
                    fine_d = drift_from_trajectory(K, traj).max_abs_drift
                    if fine_d > 1e-12:
                        ratios.append(drift_from_trajectory(K, coarse).max_abs_drift / fine_d)
    lo, hi = GEO_HALVING
    ok = worst <= GEO_DRIFT_MAX and control_min > GEO_CONTROL_MIN and ratios and all(lo < r < hi for r in ratios)
    record(
        8,
        "geodesic conservation",
        ok,
        f"worst Killing drift {worst:.1e}, smallest control drift {control_min:.2f}, "
        f"halving ratios {min(ratios):.2f}..{max(ratios):.2f}, {time.perf_counter() - t0:.0f}s",
    )
    assert ok


def test_criterion_9_determinism(tmp_path):
    _, first = _run_span_suite(tmp_path, "a.json")
    _, second = _run_span_suite(tmp_path, "b.json")
    ok = first == second and len(first) > 0
    record(9, "byte-identical reports", ok, f"{len(first)} bytes")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
