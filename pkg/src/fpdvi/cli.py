"""Command line front end: ``fpdvi run`` and ``fpdvi sweep``.

Exit codes
    0  converged
    1  I/O, parse, validation or usage error
    2  Picard iteration hit max_outer without converging
    3  hypothesis hard failure under --strict
    4  other numerical failure
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FPDVIError, MaxOuterExceeded, NumericalError, ParseError, UnsupportedCombination, ValidationError
from .evolution import refine_and_estimate_order, solve_fpdvi
from .hypotheses import run_hypotheses
from .problem_io import _read_json as _read_document, parse_problem

__all__ = ["main", "run_problem", "write_trajectory", "EXIT_OK", "EXIT_INPUT", "EXIT_MAX_OUTER",
           "EXIT_STRICT", "EXIT_NUMERIC"]

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_MAX_OUTER = 2
EXIT_STRICT = 3
EXIT_NUMERIC = 4

SWEEP_PARAMETERS = ("alpha", "N", "T", "damping")


def _error_record(code: int, exc: BaseException, source: str | None = None) -> None:
    """One JSON line on stderr per failure."""
    rec = {"event": "error", "exit_code": code, "kind": type(exc).__name__, "message": str(exc)}
    if source:
        rec["source"] = source
    for attr in ("field", "line", "column"):
        val = getattr(exc, attr, None)
        if val not in (None, ""):
            rec[attr] = val
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_trajectory(out: Path, traj) -> None:
    n, m = traj.theta.shape[1], traj.u.shape[1]
    header = ["xi"] + [f"theta_{i + 1}" for i in range(n)] + [f"u_{j + 1}" for j in range(m)]
    table = np.column_stack([traj.xi, traj.theta, traj.u])
    with open(out / "trajectory.csv", "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in table:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    _dump(out / "trajectory.json", {
        "columns": header,
        "xi": traj.xi.tolist(),
        "theta": traj.theta.tolist(),
        "u": traj.u.tolist(),
    })


def _parse_grid(spec: str) -> dict:
    parts = spec.split(":")
    try:
        N = int(parts[0])
        if len(parts) == 1:
            return {"N": N, "kind": "uniform"}
        if len(parts) == 3 and parts[1] == "graded":
            return {"N": N, "kind": "graded", "gamma": float(parts[2])}
    except ValueError:
        pass
    raise ValidationError(f"expected N or N:graded:GAMMA, got {spec!r}", "--grid")


def _apply_overrides(doc: dict, args) -> dict:
    doc = copy.deepcopy(doc)
    solver = doc.setdefault("solver", {})
    for key, attr in (("tol", "tol"), ("max_outer", "max_outer"), ("damping", "damping"), ("seed", "seed")):
        val = getattr(args, attr, None)
        if val is not None:
            solver[key] = val
    if getattr(args, "grid", None):
        doc["grid"] = _parse_grid(args.grid)
    return doc


def run_problem(path, out, args) -> int:
    """Full pipeline for one problem file; returns the exit code."""
    path, out = Path(path), Path(out)
    started = time.perf_counter()
    try:
        doc = _apply_overrides(_read_document(path), args)
        loaded = parse_problem(doc)
        out.mkdir(parents=True, exist_ok=True)
    except (ParseError, ValidationError, UnsupportedCombination) as exc:
        _error_record(EXIT_INPUT, exc, str(path))
        return EXIT_INPUT
    except OSError as exc:
        _error_record(EXIT_INPUT, exc, str(path))
        return EXIT_INPUT
    except FPDVIError as exc:
        code = EXIT_NUMERIC if isinstance(exc, NumericalError) else EXIT_INPUT
        _error_record(code, exc, str(path))
        return code

    problem, cfg = loaded.problem, loaded.config
    flags = {
        "skip_hypotheses": bool(args.skip_hypotheses),
        "strict": bool(args.strict),
    }
    report = {
        "fpdvi_version": __version__,
        "problem": loaded.name or path.stem,
        "config": {"problem": loaded.document, "flags": flags},
        "seed": cfg.seed,
    }

    hyp = None
    if not args.skip_hypotheses:
        try:
            hyp = run_hypotheses(problem, {**cfg.hypotheses, "seed": cfg.seed})
        except (FPDVIError, ValueError) as exc:
            _error_record(EXIT_NUMERIC, exc, str(path))
            return EXIT_NUMERIC
        _dump(out / "hypotheses.json", hyp)
        report["hypotheses"] = {
            "hard_fail": hyp["hard_fail"],
            "P1_monotone": hyp["P1_monotone"]["passed"],
            "P2_convex": hyp["P2_convex"]["passed"],
            "P3_coercive": hyp["P3_coercive"]["passed"],
            "P4_g_bounded": hyp["P4_g_bounded"]["passed"],
            "condition_43": hyp["condition_43"]["passed"],
            "Theta_A": hyp["growth"]["Theta_A"],
            "Theta_g": hyp["growth"]["Theta_g"],
            "weight_L": hyp["weight_L"]["L"],
        }
        if args.strict and hyp["hard_fail"]:
            report.update({"status": "hypothesis_hard_fail", "converged": False, "exit_code": EXIT_STRICT})
            _dump(out / "report.json", report)
            _error_record(EXIT_STRICT, FPDVIError("hard hypothesis failure (P1, P2 or P4) under --strict"),
                          str(path))
            return EXIT_STRICT

    code = EXIT_OK
    try:
        traj, rep = solve_fpdvi(problem, cfg.grid(problem.T), cfg.tol, cfg.max_outer, cfg.damping,
                                cfg.vi_tol, cfg.vi_max_iter)
        status = "converged"
    except MaxOuterExceeded as exc:
        traj, rep = exc.trajectory, exc.report
        status, code = "max_outer_exceeded", EXIT_MAX_OUTER
        _error_record(code, exc, str(path))
    except NumericalError as exc:
        report.update({"status": "numerical_failure", "converged": False, "exit_code": EXIT_NUMERIC,
                       "message": str(exc)})
        _dump(out / "report.json", report)
        _error_record(EXIT_NUMERIC, exc, str(path))
        return EXIT_NUMERIC

    write_trajectory(out, traj)
    report.update({"status": status, "exit_code": code, **rep.to_dict(),
                   "N": int(traj.grid.N), "grid_kind": traj.grid.kind})
    _dump(out / "report.json", report)
    # wall time lives apart from report.json so reports stay byte-reproducible
    _dump(out / "timing.json", {"wall_time_s": time.perf_counter() - started})
    return code


def _thread_cap() -> int | None:
    """FPDVI_THREADS as a positive cap, or None for automatic (unset or 0)."""
    raw = os.environ.get("FPDVI_THREADS", "0").strip() or "0"
    try:
        k = int(raw)
    except ValueError:
        return None
    return k if k > 0 else None


def _thread_limit(cap: int | None):
    if cap is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=cap)


def _cmd_run(args) -> int:
    paths = args.paths
    codes = []
    for p in paths:
        out = Path(args.out) if len(paths) == 1 else Path(args.out) / Path(p).stem
        codes.append(run_problem(p, out, args))
    return max(codes)


def _parse_values(param: str, raw: list[str]) -> list:
    vals = []
    for item in raw:
        for tok in item.split(","):
            tok = tok.strip()
            if not tok:
                continue
            try:
                vals.append(int(tok) if param == "N" else float(tok))
            except ValueError:
                raise ValidationError(f"cannot read sweep value {tok!r}", "--values") from None
    return vals


def _sweep_document(doc: dict, param: str, value) -> dict:
    doc = copy.deepcopy(doc)
    if param == "alpha":
        doc["alpha"] = value
    elif param == "T":
        doc["T"] = value
    elif param == "N":
        doc["grid"] = {**doc["grid"], "N": value}
    else:
        doc.setdefault("solver", {})["damping"] = value
    return doc


def _cmd_sweep(args) -> int:
    try:
        if args.parameter not in SWEEP_PARAMETERS:
            raise ValidationError(f"parameter must be one of {SWEEP_PARAMETERS}", "--parameter")
        values = _parse_values(args.parameter, args.values or [])
        if not values:
            raise ValidationError("empty values list", "--values")
        base = _apply_overrides(_read_document(Path(args.path)), args)
    except (ParseError, ValidationError) as exc:
        _error_record(EXIT_INPUT, exc, args.path)
        return EXIT_INPUT
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def row(value):
        sub = out / f"{args.parameter}={value}"
        sub.mkdir(parents=True, exist_ok=True)
        src = sub / "problem.json"
        _dump(src, _sweep_document(base, args.parameter, value))
        t0 = time.perf_counter()
        code = run_problem(src, sub, args)
        runtime = time.perf_counter() - t0
        rep_path = sub / "report.json"
        rep = json.loads(rep_path.read_text()) if rep_path.exists() else {}
        return {
            "value": value,
            "converged": bool(rep.get("converged", False)),
            "iterations": rep.get("iterations", ""),
            "residual": rep.get("fpdvi_residual", ""),
            "runtime": runtime,
            "exit_code": code,
        }

    cap = _thread_cap()
    workers = max(1, min(args.jobs, len(values), cap or args.jobs))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(row, values))
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["value", "converged", "iterations", "residual", "runtime", "exit_code"])
        w.writeheader()
        for r in rows:
            w.writerow(r)

    summary = {"parameter": args.parameter, "rows": rows}
    if args.parameter == "N":
        summary["order"] = _sweep_order(base, values, args)
    _dump(out / "summary.json", summary)
    return max(r["exit_code"] for r in rows)


def _sweep_order(doc: dict, values: list[int], args) -> dict:
    ratios = [b / a for a, b in zip(values, values[1:])]
    if len(values) < 3 or any(r != 2 for r in ratios):
        return {"order": None, "note": "order fit needs at least three successively doubled N values"}
    try:
        loaded = parse_problem(doc)
        cfg = loaded.config
        study = refine_and_estimate_order(loaded.problem, values[0], len(values), reference_N=args.reference_N,
                                          damping=cfg.damping, max_outer=cfg.max_outer)
    except FPDVIError as exc:
        return {"order": None, "note": f"{type(exc).__name__}: {exc}"}
    return {"order": study.order, "Ns": study.Ns, "errors": study.errors, "reference_N": args.reference_N}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--tol", type=float, help="Picard tolerance (sup-norm change)")
    p.add_argument("--max-outer", dest="max_outer", type=int, help="maximum Picard iterations")
    p.add_argument("--damping", type=float, help="initial damping in (0, 1]")
    p.add_argument("--skip-hypotheses", dest="skip_hypotheses", action="store_true")
    p.add_argument("--strict", action="store_true", help="exit 3 on a hard hypothesis failure")
    p.add_argument("--seed", type=int, help="root seed for every randomised probe")
    p.add_argument("--grid", help="N or N:graded:GAMMA")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpdvi", description="Fractional evolution problems with VI controls")
    parser.add_argument("--version", action="version", version=f"fpdvi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve one or more problem files")
    run.add_argument("paths", nargs="+")
    _common(run)
    run.set_defaults(func=_cmd_run)

    sw = sub.add_parser("sweep", help="run a problem across parameter values")
    sw.add_argument("path")
    sw.add_argument("--parameter", required=True)
    sw.add_argument("--values", nargs="*", default=[])
    sw.add_argument("--reference-N", dest="reference_N", type=int, default=8192)
    sw.add_argument("--jobs", type=int, default=1, help="rows run concurrently")
    _common(sw)
    sw.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage belongs to code 1 here
        code = exc.code if isinstance(exc.code, int) else EXIT_INPUT
        return EXIT_OK if code == 0 else EXIT_INPUT
    with _thread_limit(_thread_cap()):
        try:
            return args.func(args)
        except Exception as exc:  # last resort keeps the exit-code contract total
            _error_record(EXIT_NUMERIC, exc)
            return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
