"""Command-line front end.

Commands: ``kernel``, ``verify``, ``ode-lemma``, ``geodesic``. Reports are JSON
with a stable layout::

    {"schema": 1, "config": {...}, "result": {...}, "timings_ms": {...}}

Exit codes: 0 ok, 2 configuration error, 3 verification failure or
escalated numerical warning, 4 integrator failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import random
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__
from .errors import BandWarning, ConditioningWarning, IndexRangeError, IntegratorError, InvalidFactor, KillTensorError
from .geoflow import drift_from_trajectory, integrate, negative_controls, random_states, write_trajectory_csv, integral_values
from .kernelsolve import compute_kernel, predicted_dimension, span_basis, verify_theorem
from .odelemma import (
    alphas_from_polys,
    candidate_sum_poly,
    eqj_coefficients,
    numeric_ode_oracle,
    solve_recursion,
    specialized_constants,
    write_curves_csv,
)
from .torusfn import Flat, _num_out, parse_factor

SCHEMA = 1
EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_INTEGRATOR = 0, 2, 3, 4

# (n, p) -> predicted dimension for inv-cos:2,1
DEFAULT_SUITE = [(2, 1), (2, 2), (2, 3), (2, 4), (2, 5), (3, 1), (3, 2), (3, 3)]


class ConfigError(KillTensorError):
    pass


def parse_band(text: str | None, n: int, p: int) -> tuple[int, ...]:
    """Comma list (one entry per axis) or a single broadcast value.

    The default is 1 on transverse axes and ``floor(p/2) + 1`` on axis n.
    """
    if text is None:
        return (1,) * (n - 1) + (p // 2 + 1,)
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad band {text!r}") from exc
    if len(vals) == 1:
        vals = vals * n
    if len(vals) != n:
        raise ConfigError(f"band {text!r} needs 1 or {n} entries")
    if min(vals) < 0:
        raise ConfigError("band entries must be non-negative")
    return tuple(vals)


def _factor(text: str):
    try:
        return parse_factor(text)
    except InvalidFactor as exc:
        raise ConfigError(str(exc)) from exc


def _emit(report: dict, out: str | None):
    text = json.dumps(report, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(config: dict, result: dict, timings: dict | None) -> dict:
    return {"schema": SCHEMA, "version": __version__, "config": config, "result": result, "timings_ms": timings or {}}


def _check_np(n: int, p: int):
    if n < 2:
        raise ConfigError("n must be at least 2")
    if p < 0:
        raise ConfigError("p must be non-negative")


# ---------------------------------------------------------------------------
# kernel


def cmd_kernel(args) -> int:
    _check_np(args.n, args.p)
    F = _factor(args.factor)
    band = parse_band(args.band, args.n, args.p)
    if not isinstance(F, Flat) and band[-1] < 1 and args.variant == "killing":
        raise ConfigError("non-flat factors need axis-n band >= 1")
    variant = "conformal_killing" if args.variant == "conformal" else "killing"
    config = {
        "command": "kernel",
        "n": args.n,
        "p": args.p,
        "factor": args.factor,
        "band": list(band),
        "arith": args.arith,
        "tol": args.tol,
        "variant": variant,
    }
    t0 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        kernel = compute_kernel(args.n, args.p, F, band, args.arith, args.tol, variant)
    elapsed = 1000 * (time.perf_counter() - t0)
    msgs = [str(w.message) for w in caught if issubclass(w.category, (BandWarning, ConditioningWarning))]
    for m in msgs:
        print(f"warning: {m}", file=sys.stderr)
    result = {
        "kernel_dim": kernel.dimension,
        "predicted_dim": predicted_dimension(args.n, args.p, F) if variant == "killing" else None,
        "residual_max": kernel.residual_max,
        "warnings": msgs,
    }
    if kernel.svd is not None:
        result["singular_gap"] = None if math.isinf(kernel.svd.gap) else kernel.svd.gap
    if args.basis:
        result["basis"] = [K.to_json() for K in kernel.basis]
    _emit(_report(config, result, {"total": elapsed} if args.timings else None), args.out)
    if msgs and args.strict:
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _verify_one(entry: dict) -> dict:
    n, p = entry["n"], entry["p"]
    F = parse_factor(entry["factor"])
    band = tuple(entry["band"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = verify_theorem(n, p, F, band, entry["arith"], entry["tol"], entry["stability_extra"])
    msgs = [str(w.message) for w in caught if issubclass(w.category, (BandWarning, ConditioningWarning))]
    result = rep.result_json(with_basis=entry.get("basis", False))
    result["warnings"] = msgs
    result["ok"] = rep.ok
    timings = rep.timings if entry.get("timings") else None
    return _report(dict(entry, command="verify"), result, timings)


def _suite_entries(args) -> list[dict]:
    common = {
        "arith": args.arith,
        "tol": args.tol,
        "stability_extra": args.stability_extra,
        "basis": args.basis,
        "timings": args.timings,
    }
    if args.suite:
        with open(args.suite) as fh:
            raw = json.load(fh)
        entries = []
        for item in raw:
            n, p = int(item["n"]), int(item["p"])
            _check_np(n, p)
            factor = item.get("factor", "inv-cos:2,1")
            _factor(factor)
            band = parse_band(item.get("band") if isinstance(item.get("band"), str) or item.get("band") is None
                              else ",".join(map(str, item["band"])), n, p)
            e = dict(common, n=n, p=p, factor=factor, band=list(band))
            e.update({k: item[k] for k in ("arith", "tol", "stability_extra") if k in item})
            entries.append(e)
        return entries
    if args.n is None and args.p is None:
        return [dict(common, n=n, p=p, factor=args.factor, band=list(parse_band(None, n, p))) for n, p in DEFAULT_SUITE]
    if args.n is None or args.p is None:
        raise ConfigError("give both -n and -p, a --suite file, or neither for the default suite")
    _check_np(args.n, args.p)
    return [dict(common, n=args.n, p=args.p, factor=args.factor, band=list(parse_band(args.band, args.n, args.p)))]


def cmd_verify(args) -> int:
    entries = _suite_entries(args)
    for e in entries:
        if isinstance(_factor(e["factor"]), Flat):
            raise ConfigError("verify needs a non-flat factor")
    jobs = args.jobs or int(os.environ.get("KILLTENSOR_JOBS", "1"))
    if jobs > 1 and len(entries) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_verify_one, entries))
    else:
        reports = [_verify_one(e) for e in entries]
    if len(reports) == 1 and not args.suite and args.n is not None:
        _emit(reports[0], args.out)
    else:
        _emit({"schema": SCHEMA, "version": __version__, "reports": reports}, args.out)
    for r in reports:
        for w in r["result"]["warnings"]:
            print(f"warning: n={r['config']['n']} p={r['config']['p']}: {w}", file=sys.stderr)
    return EXIT_OK if all(r["result"]["ok"] for r in reports) else EXIT_VERIFY


# ---------------------------------------------------------------------------
# ode-lemma


def _rand_rational(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-6, 6), rng.randint(1, 4))


def cmd_ode_lemma(args) -> int:
    alpha0 = Fraction(args.alpha0)
    config = {"command": "ode-lemma", "alpha0": _num_out(alpha0), "steps": args.steps, "seed": args.seed}
    result: dict = {}
    if args.n is not None or args.p is not None:
        if args.n is None or args.p is None:
            raise ConfigError("specialized runs need both -n and -p")
        if args.p < 1 or args.n < 2:
            raise ConfigError("specialized runs need n >= 2 and p >= 1")
        config.update(n=args.n, p=args.p)
        coeffs = []
        for j in range((args.p - 1) // 2 + 1):
            e = eqj_coefficients(args.n, args.p, j)
            coeffs.append({"j": j, "coefficients": [_num_out(v) for v in
                          (e.lhs_alpha_prime, e.lhs_f_alpha, e.rhs_alpha_prime, e.rhs_f_alpha)]})
        result["eqj"] = coeffs
        bs, cs = specialized_constants(args.n, args.p)
    else:
        if args.jmax < 0:
            raise IndexRangeError("jmax must be non-negative")
        config["jmax"] = args.jmax
        rng = random.Random(args.seed)
        bs = [_rand_rational(rng) for _ in range(args.jmax)]
        cs = [_rand_rational(rng) for _ in range(args.jmax)]
    rng = random.Random(args.seed + 1)
    # alpha_0 = 0 means vanishing initial data, so every constant is zero too
    if alpha0 == 0 or args.zero_constants:
        constants = [Fraction(0)] * len(bs)
    else:
        constants = [_rand_rational(rng) for _ in bs]
    polys = solve_recursion(bs, cs, alpha0, constants)
    result["b"] = [_num_out(b) for b in bs]
    result["c"] = [_num_out(c) for c in cs]
    result["integration_constants"] = [_num_out(C) for C in constants]
    result["polynomials"] = [[_num_out(c) for c in P.coeffs] for P in polys]
    if args.n is not None:
        cand = candidate_sum_poly(args.n, args.p, alpha0, constants)
        result["candidate_sum"] = [_num_out(c) for c in cand.coeffs]
    phi0 = math.exp(2 * math.cos(0.0))
    init = [float(P(phi0)) / phi0 ** j for j, P in enumerate(polys)]
    oracle = numeric_ode_oracle(bs, cs, np.cos, lambda x: -np.sin(x), init, 0.0, 1.0, args.steps)
    exact = np.array(alphas_from_polys(polys, oracle.phi))
    err = float(np.max(np.abs(oracle.alphas - exact))) if exact.size else 0.0
    result["max_oracle_error"] = err
    result["unstable"] = oracle.unstable
    result["all_zero"] = all(P.is_zero() for P in polys)
    if args.csv:
        write_curves_csv(args.csv, oracle)
    _emit(_report(config, result, None), args.out)
    return EXIT_OK if err < args.err_tol and not oracle.unstable else EXIT_VERIFY


# ---------------------------------------------------------------------------
# geodesic


def _resolve_k(spec: str, n: int, p: int, F, band):
    kind, _, arg = spec.partition(":")
    if kind == "from-kernel":
        basis = compute_kernel(n, p, F, band, "exact").basis
        idx = int(arg)
        if not 0 <= idx < len(basis):
            raise ConfigError(f"kernel has {len(basis)} elements, index {idx} out of range")
        return basis[idx].to_float(), True
    if kind == "span":
        basis = span_basis(n, p, F, "float")
        idx = int(arg)
        if not 0 <= idx < len(basis):
            raise ConfigError(f"span has {len(basis)} elements, index {idx} out of range")
        return basis[idx], True
    if kind == "control":
        controls = negative_controls(n)
        if arg not in controls:
            raise ConfigError(f"unknown control {arg!r}; choose from {sorted(controls)}")
        return controls[arg], False
    raise ConfigError(f"bad --k spec {spec!r}")


def cmd_geodesic(args) -> int:
    _check_np(args.n, args.p)
    F = _factor(args.factor)
    band = parse_band(args.band, args.n, args.p)
    if args.dt <= 0 or args.t_end <= 0:
        raise ConfigError("--dt and --t-end must be positive")
    specs = args.k or ["from-kernel:0"]
    targets = [(s, *_resolve_k(s, args.n, args.p, F, band)) for s in specs]
    for s, _, positive in targets:
        if not positive and isinstance(F, Flat):
            raise ConfigError("negative controls are Killing for the flat factor")
    config = {
        "command": "geodesic",
        "n": args.n,
        "p": args.p,
        "factor": args.factor,
        "band": list(band),
        "k": specs,
        "dt": args.dt,
        "t_end": args.t_end,
        "seed": args.seed,
        "states": args.states,
        "drift_tol": args.drift_tol,
        "negative_floor": args.negative_floor,
    }
    drifts = []
    ok = True
    for si, s0 in enumerate(random_states(args.n, args.states, args.seed, F)):
        try:
            traj = integrate(s0, F, args.dt, args.t_end)
        except IntegratorError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INTEGRATOR
        for spec, K, positive in targets:
            rep = drift_from_trajectory(K, traj, spec).to_json()
            rep["state"] = si
            rep["positive"] = positive
            passed = rep["relative_drift"] <= args.drift_tol if positive else rep["relative_drift"] >= args.negative_floor
            rep["passed"] = passed
            ok &= passed
            drifts.append(rep)
        if args.csv and si == 0:
            write_trajectory_csv(args.csv, traj, integral_values(targets[0][1], traj))
    _emit(_report(config, {"drift": drifts, "ok": ok}, None), args.out)
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="killtensor", description="Killing tensors on conformally flat tori")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_np=True):
        p.add_argument("-n", type=int, required=need_np, default=None)
        p.add_argument("-p", type=int, required=need_np, default=None)
        p.add_argument("--factor", default="inv-cos:2,1", help="flat | inv-cos:<c>,<a> | exp-cos:<A>")
        p.add_argument("--band", default=None, help="per-axis band, comma separated or broadcast")
        p.add_argument("--out", default=None, help="write JSON here instead of stdout")

    k = sub.add_parser("kernel", help="kernel of the Killing operator")
    common(k)
    k.add_argument("--arith", choices=["exact", "float"], default="exact")
    k.add_argument("--tol", type=float, default=1e-8)
    k.add_argument("--variant", choices=["killing", "conformal"], default="killing")
    k.add_argument("--basis", action="store_true", help="include basis tensors in the report")
    k.add_argument("--timings", action="store_true")
    k.add_argument("--strict", action="store_true", help="exit 3 on numerical warnings")
    k.set_defaults(func=cmd_kernel)

    v = sub.add_parser("verify", help="compare kernels with the predicted polynomial span")
    common(v, need_np=False)
    v.add_argument("--suite", default=None, help="JSON list of {n, p, factor?, band?} entries")
    v.add_argument("--arith", choices=["exact", "float"], default="exact")
    v.add_argument("--tol", type=float, default=1e-8)
    v.add_argument("--stability-extra", type=int, default=1)
    v.add_argument("--basis", action="store_true")
    v.add_argument("--timings", action="store_true")
    v.add_argument("--jobs", type=int, default=None)
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("ode-lemma", help="exact alpha_j recursion against the RK4 oracle")
    o.add_argument("-n", type=int, default=None)
    o.add_argument("-p", type=int, default=None)
    o.add_argument("--jmax", type=int, default=3)
    o.add_argument("--seed", type=int, default=7)
    o.add_argument("--alpha0", default="1")
    o.add_argument("--zero-constants", action="store_true", help="set all integration constants to 0")
    o.add_argument("--steps", type=int, default=10_000)
    o.add_argument("--err-tol", type=float, default=1e-8)
    o.add_argument("--csv", default=None)
    o.add_argument("--out", default=None)
    o.set_defaults(func=cmd_ode_lemma)

    g = sub.add_parser("geodesic", help="first-integral drift along geodesics")
    common(g)
    g.add_argument("--k", action="append", help="from-kernel:<i> | span:<i> | control:<xn2|x1xn|L>")
    g.add_argument("--dt", type=float, default=1e-3)
    g.add_argument("--t-end", type=float, default=100.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--states", type=int, default=5)
    g.add_argument("--drift-tol", type=float, default=1e-6)
    g.add_argument("--negative-floor", type=float, default=1e-2)
    g.add_argument("--csv", default=None)
    g.set_defaults(func=cmd_geodesic)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidFactor, IndexRangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
