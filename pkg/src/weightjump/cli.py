"""Command-line front end: ``weightjump <command> SCENARIO [options]``.

Exit codes: 0 success, 2 scenario parse error, 3 validation error,
4 runtime error.  Errors are written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .diagnostics import histogram_rows, replicate_runner, tv_report, write_histogram_csv
from .equilibrium import exact_start_batch, hazard_floor
from .errors import WeightJumpError
from .estimators import time_average_rows, weighted_mean_rows
from .measure import WeightFunction, weight_supremum
from .renewal import write_path_csv
from .rng import BLOCK_SIZE, Role, blocks, make_rng
from .samplers import WeightedPoint, batch_points, simulate_path
from .scenario import Scenario, ScenarioParseError, ScenarioValidationError, load_scenario

EXIT_PARSE, EXIT_VALIDATION, EXIT_RUNTIME = 2, 3, 4


def _fmt_time(t: float) -> str:
    return f"{t:g}".replace(".", "p").replace("-", "m")


def _dump_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------- commands


def _limit_study(sc: Scenario, out: str, workers: int) -> dict:
    stream = sc.stream()
    ys = replicate_runner(stream, sc.times, sc.replicates, sc.seed, sc.first_fn(stream), workers)
    bins = sc.tv_bins()
    bound = sc.bound_spec()
    if bound is not None and bound[1]["w_star"] is None:
        bound[1]["w_star"] = sc.w_tilde_star()
    report = tv_report(ys, sc.times, sc.target, bins, seed=sc.seed, bound=bound)
    for k, t in enumerate(sc.times):
        with open(os.path.join(out, f"hist_t{_fmt_time(t)}.csv"), "w", encoding="utf-8", newline="") as fh:
            write_histogram_csv(histogram_rows(ys[k], sc.target, bins), fh)
    with open(os.path.join(out, "tv_summary.csv"), "w", encoding="utf-8", newline="") as fh:
        report.write_csv(fh)
    with open(os.path.join(out, "tv_summary.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    return {"mode": "limit-study", "times": report.times, "tv": report.tv_empirical,
            "mc_error": report.mc_error, "bound": report.tv_bound}


def _tv_curve(sc: Scenario, out: str, workers: int) -> dict:
    stream = sc.stream()
    ys = replicate_runner(stream, sc.times, sc.replicates, sc.seed, sc.first_fn(stream), workers)
    bound = sc.bound_spec()
    if bound is not None and bound[1]["w_star"] is None:
        bound[1]["w_star"] = sc.w_tilde_star()
    report = tv_report(ys, sc.times, sc.target, sc.tv_bins(), seed=sc.seed, bound=bound)
    with open(os.path.join(out, "tv_curve.csv"), "w", encoding="utf-8", newline="") as fh:
        report.write_csv(fh)
    return {"mode": "tv-curve", "times": report.times, "tv": report.tv_empirical, "bound": report.tv_bound}


def _estimate(sc: Scenario, out: str, workers: int) -> dict:
    """Replicated self-normalized estimates of ``E_pi h``.

    With ``n`` set, each replicate averages its first ``n`` weighted points;
    with ``t`` set, each replicate is the time average of ``h(Y_s)`` over
    ``[0, t]``.
    """
    stream = sc.stream()
    h = sc.h_fn()
    first_fn = sc.first_fn(stream)
    if (sc.n if sc.n is not None else sc.horizon) <= 0:
        raise ValueError("n or t must be positive")
    est, ess = np.empty(sc.replicates), np.empty(sc.replicates)
    for b, lo, hi in blocks(sc.replicates, BLOCK_SIZE):
        size = hi - lo
        first = first_fn(make_rng(sc.seed, b, Role.START), size) if first_fn else None
        rng = make_rng(sc.seed, b, Role.SIMULATE)
        if sc.n is not None:
            xs, ws = batch_points(stream, sc.n, size, rng, first=first)
            est[lo:hi] = weighted_mean_rows(xs, ws, h)
            ess[lo:hi] = ws.sum(axis=1) ** 2 / (ws**2).sum(axis=1)
        else:
            est[lo:hi], ess[lo:hi] = time_average_rows(stream, h, sc.horizon, size, rng, first=first)
    m = sc.replicates
    se = float(est.std(ddof=1) / math.sqrt(m)) if m > 1 else float("nan")
    result = {
        "scheme": sc.scheme,
        "n_or_t": {"n": sc.n} if sc.n is not None else {"t": sc.horizon},
        "estimate": float(np.mean(est)),
        "replicate_se": se,
        "ess": float(np.mean(ess)),
        "replicates": m,
    }
    _dump_json(result, os.path.join(out, "estimate.json"))
    return result


def _floor_for(sc: Scenario, stream):
    law = stream.law
    if sc.target.discrete:
        probes = sc.trial.support.states
    else:
        # the floor is attained where the weight peaks
        _, argmax = weight_supremum(WeightFunction(sc.target, sc.trial, sc.kappa))
        probes = np.concatenate([[argmax], sc.trial.sample(make_rng(sc.seed, 0, Role.PROBE), 4096)])
    return hazard_floor(law, probes)


def _exact_start(sc: Scenario, out: str, workers: int) -> dict:
    stream = sc.stream()
    floor = _floor_for(sc, stream)
    path = os.path.join(out, "exact_start.jsonl")
    trials_total = 0
    with open(path, "w", encoding="utf-8") as fh:
        for b, lo, hi in blocks(sc.replicates, BLOCK_SIZE):
            batch = exact_start_batch(stream, stream.law, floor, make_rng(sc.seed, b, Role.ACCEPT), hi - lo)
            trials_total += int(batch.trials_used.sum())
            for i in range(hi - lo):
                rec = {"replicate": lo + i, "tau": float(batch.tau[i]), "trials_used": int(batch.trials_used[i]),
                       "initial_state": batch.states[i].item(), "initial_weight": float(batch.weights[i])}
                fh.write(json.dumps(rec) + "\n")
    kappa = stream.kappa
    return {"mode": "exact-start", "replicates": sc.replicates, "epsilon_star": floor.epsilon_star,
            "mean_trials": trials_total / sc.replicates,
            "expected_trials": None if kappa is None else 1.0 / (kappa * floor.epsilon_star)}


COMMANDS = {"limit-study": _limit_study, "tv-curve": _tv_curve, "estimate": _estimate,
            "exact-start": _exact_start}


def _dump_path(sc: Scenario, out: str):
    stream = sc.stream()
    rng = make_rng(sc.seed, 0, Role.PROBE)
    first = None
    fn = sc.first_fn(stream)
    if fn is not None:
        x, w = fn(rng, 1)
        first = WeightedPoint(x[0].item(), float(w[0]))
    path = simulate_path(stream, rng, sc.dump_path, first=first)
    with open(os.path.join(out, "path.csv"), "w", encoding="utf-8", newline="") as fh:
        write_path_csv(path, fh)


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weightjump", description="Weighted-sample jump process studies.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "run": "run the scenario in its declared mode",
        "validate": "parse and validate a scenario without running it",
        "estimate": "replicated self-normalized estimate of E_pi h",
        "tv-curve": "TV distance to the target over a time grid",
        "exact-start": "accept-reject draws of an equilibrium start",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        sp.add_argument("scenario", help="scenario file")
        if name != "validate":
            sp.add_argument("--seed", type=int, help="override the scenario seed")
            sp.add_argument("--replicates", type=int, help="override the replicate count")
            sp.add_argument("--workers", type=int, default=1, help="worker threads (results do not depend on it)")
            sp.add_argument("--out-dir", help="output directory (default: scenario [output] dir)")
    return p


def _fail(code: int, payload: dict) -> int:
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
    except ScenarioParseError as exc:
        return _fail(EXIT_PARSE, {**exc.as_dict(), "file": args.scenario})
    except ScenarioValidationError as exc:
        return _fail(EXIT_VALIDATION, {**exc.as_dict(), "file": args.scenario})
    except OSError as exc:
        return _fail(EXIT_PARSE, {"error": "io", "message": str(exc), "file": args.scenario})

    if args.command == "validate":
        print(json.dumps({"ok": True, "issues": [], "mode": sc.mode, "scheme": sc.scheme, "notes": sc.notes}))
        return 0

    mode = sc.mode if args.command == "run" else args.command
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.replicates is not None:
        if args.replicates < 1:
            return _fail(EXIT_VALIDATION, {"error": "validation", "issues": ["replicates must be >= 1"]})
        overrides["replicates"] = args.replicates
    sc = replace(sc, mode=mode, **overrides)
    issues = []
    if mode in ("limit-study", "tv-curve") and not sc.times:
        issues.append(f"mode {mode} needs times")
    if mode == "estimate" and (sc.n is None) == (sc.horizon is None):
        issues.append("estimate mode needs exactly one of n or t")
    if mode == "exact-start" and sc.scheme not in ("exp", "sz", "gasemyr"):
        issues.append("exact-start needs iid states with a bounded-hazard law (exp, sz or gasemyr)")
    if issues:
        return _fail(EXIT_VALIDATION, {"error": "validation", "issues": issues, "file": args.scenario})
    if args.workers < 1:
        return _fail(EXIT_VALIDATION, {"error": "validation", "issues": ["workers must be >= 1"]})

    out = args.out_dir or sc.out_dir
    try:
        os.makedirs(out, exist_ok=True)
        summary = COMMANDS[mode](sc, out, args.workers)
        if sc.dump_path is not None:
            _dump_path(sc, out)
    except (WeightJumpError, ValueError, RuntimeError, ArithmeticError) as exc:
        return _fail(EXIT_RUNTIME, {"error": "runtime", "type": type(exc).__name__, "message": str(exc)})
    summary["notes"] = sc.notes
    summary["out_dir"] = out
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
