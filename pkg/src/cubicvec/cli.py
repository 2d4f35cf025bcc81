"""Benchmark harness: ``run``, ``trace`` and ``profile`` subcommands.

Examples::

    python3 -m cubicvec run --problems PNR,JOS1 --solvers cn,sd --seeds 10 --out results/
    python3 -m cubicvec trace --problem REM1 --x0 0.04 --L0 4 --L 6 --M0 24 --out rem1.json
    python3 -m cubicvec profile --in results/ --metric iters --out profile.json
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import metrics as M
from .cone import OrderingCone, cone_from_spec
from .problems import BENCHMARK_NAMES, lookup, sample_initial
from .solver import (
    CONVERGED,
    SDConfig,
    SolverConfig,
    SolverTrace,
    run_cubic_newton,
    run_steepest_descent,
)

logger = logging.getLogger(__name__)

SOLVERS = ("cn", "sd")
RESULTS_CSV = "results.csv"
METRICS_JSON = "metrics.json"
TRAJECTORY_FORMAT = "cubicvec-trajectory/1"
PROFILE_METRICS = ("iters", "time", "hypervolume", "purity")


class UsageError(ValueError):
    """Bad command-line input; mapped to exit status 2."""


def _num(v: float) -> str:
    return format(float(v), ".17g")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def _dump_json(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n")


@dataclass(frozen=True)
class RunSpec:
    problems: tuple
    solvers: tuple = SOLVERS
    seeds: tuple = tuple(range(50))
    cfg: SolverConfig = SolverConfig()
    cone: object = "auto"
    timing: bool = False

    def __post_init__(self):
        if not self.problems:
            raise UsageError("at least one problem is required")
        if not self.solvers:
            raise UsageError("at least one solver is required")
        if not self.seeds:
            raise UsageError("at least one seed is required")
        bad = [s for s in self.solvers if s not in SOLVERS]
        if bad:
            raise UsageError(f"unknown solver(s) {bad}; choose from {list(SOLVERS)}")
        for name in self.problems:
            try:
                lookup(name)
            except KeyError as exc:
                raise UsageError(str(exc.args[0])) from None


@dataclass
class RunRecord:
    problem: str
    solver: str
    seed: int
    status: str
    iterations: int
    wall_ms: float
    final_mu: float
    final_f: np.ndarray
    doublings_total: int


def run_single(problem: str, solver: str, seed: int, cfg: SolverConfig, cone, x0=None) -> tuple:
    """One solver run; returns ``(problem object, cone, trace)``."""
    prob = lookup(problem)
    K = cone_from_spec(cone, prob.p)
    start = sample_initial(prob, seed) if x0 is None else np.asarray(x0, dtype=float)
    if solver == "cn":
        trace = run_cubic_newton(prob, K, start, cfg)
    elif solver == "sd":
        trace = run_steepest_descent(prob, K, start, SDConfig(eps=cfg.eps, max_iter=cfg.max_iter))
    else:
        raise UsageError(f"unknown solver {solver!r}")
    return prob, K, trace


def _cell(args) -> RunRecord:
    problem, solver, seed, cfg, cone, timing = args
    try:
        _, _, tr = run_single(problem, solver, seed, cfg, cone)
    except Exception as exc:  # a broken run never aborts the batch
        logger.error("%s/%s/seed %d failed: %s", problem, solver, seed, exc)
        p = lookup(problem).p
        return RunRecord(problem, solver, seed, "NumericalFailure", 0, 0.0, math.nan, np.full(p, math.nan), 0)
    return RunRecord(
        problem, solver, seed, tr.status, tr.n_iter,
        1000.0 * tr.wall_time if timing else 0.0,
        tr.final_mu, np.asarray(tr.final_f, dtype=float), tr.doublings_total,
    )


def worker_count() -> int:
    env = os.environ.get("VECOPT_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"VECOPT_THREADS must be a positive integer, got {env!r}") from None
        if n < 1:
            raise UsageError(f"VECOPT_THREADS must be a positive integer, got {env!r}")
        return n
    return os.cpu_count() or 1


def run_benchmark(spec: RunSpec, workers: Optional[int] = None) -> dict:
    """Run every (problem, solver, seed) cell and summarize.

    Returns a dict with ``records`` (sorted by problem order, solver, seed) and
    ``metrics`` (per-problem table plus profile curves).
    """
    jobs = [
        (prob, solver, seed, spec.cfg, spec.cone, spec.timing)
        for prob in spec.problems
        for solver in spec.solvers
        for seed in spec.seeds
    ]
    n = workers if workers is not None else worker_count()
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(n, len(jobs))) as pool:
            records = list(pool.map(_cell, jobs, chunksize=1))
    else:
        records = [_cell(j) for j in jobs]
    order = {p: i for i, p in enumerate(spec.problems)}
    records.sort(key=lambda r: (order[r.problem], spec.solvers.index(r.solver), r.seed))
    return {"records": records, "metrics": summarize(records, spec)}


def _median(values) -> Optional[float]:
    return float(np.median(values)) if len(values) else None


def summarize(records: Sequence[RunRecord], spec: RunSpec) -> dict:
    """Per-problem medians, front metrics from converged runs, and profiles."""
    table = {}
    for prob in spec.problems:
        p = lookup(prob).p
        K = cone_from_spec(spec.cone, p)
        fronts = {}
        for s in spec.solvers:
            pts = [r.final_f for r in records if r.problem == prob and r.solver == s and r.status == CONVERGED]
            fronts[s] = M.FrontApproximation(np.array(pts).reshape(-1, p), s, prob)
        nonempty = [f for f in fronts.values() if len(f)]
        ref = M.reference_point(nonempty) if nonempty else None
        row = {"reference_point": ref, "extreme_gap_convention": "zero", "solvers": {}}
        for s in spec.solvers:
            runs = [r for r in records if r.problem == prob and r.solver == s]
            front = fronts[s]
            delta, gamma = M.spreads(front)
            hv = M.hypervolume(front.points, ref) if (ref is not None and len(front) and p in (2, 3)) else None
            row["solvers"][s] = {
                "runs": len(runs),
                "converged": sum(r.status == CONVERGED for r in runs),
                "median_iterations": _median([r.iterations for r in runs]),
                "median_wall_ms": _median([r.wall_ms for r in runs]),
                "hypervolume": hv,
                "purity": M.purity(front, nonempty, K) if len(front) else None,
                "spread_delta": delta,
                "spread_gamma": gamma,
            }
        table[prob] = row
    return {"problems": table, "profiles": profiles_from_table(table, spec.solvers, spec.problems)}


def _cost(row: dict, metric: str, converged: int):
    if converged == 0:
        return math.inf
    if metric == "iters":
        v = row["median_iterations"]
        return math.inf if v is None else v + 1.0
    if metric == "time":
        v = row["median_wall_ms"]
        return math.inf if not v else v
    v = row.get(metric)
    if v is None or v <= 0.0:
        return math.inf
    # larger is better for hypervolume and purity, so the profile ranks reciprocals
    return 1.0 / v


def profiles_from_table(table: dict, solvers: Sequence[str], problems: Sequence[str]) -> dict:
    out = {}
    for metric in PROFILE_METRICS:
        costs = {
            s: [_cost(table[p]["solvers"][s], metric, table[p]["solvers"][s]["converged"]) for p in problems]
            for s in solvers
        }
        if metric == "time" and all(not math.isfinite(c) for cs in costs.values() for c in cs):
            continue
        curve = M.performance_profile(costs, problems=list(problems))
        out[metric] = {"tau": curve.tau, "rho": curve.rho, "excluded": curve.excluded}
    return out


def write_results(bundle: dict, out_dir: Path, spec: RunSpec) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    p_max = max(lookup(p).p for p in spec.problems)
    header = ["problem", "solver", "seed", "status", "iters", "wall_ms", "final_mu"]
    header += [f"f_{i + 1}" for i in range(p_max)]
    with open(out_dir / RESULTS_CSV, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in bundle["records"]:
            fs = [_num(v) for v in r.final_f] + [""] * (p_max - len(r.final_f))
            w.writerow([r.problem, r.solver, r.seed, r.status, r.iterations, _num(r.wall_ms), _num(r.final_mu)] + fs)
    meta = {
        "spec": {
            "problems": list(spec.problems),
            "solvers": list(spec.solvers),
            "seeds": list(spec.seeds),
            "cone": spec.cone if isinstance(spec.cone, str) else np.asarray(spec.cone).tolist(),
            "config": {k: getattr(spec.cfg, k) for k in spec.cfg.__dataclass_fields__},
            "timing": spec.timing,
        },
        **bundle["metrics"],
    }
    _dump_json(meta, out_dir / METRICS_JSON)


def read_results(path: Path) -> list[RunRecord]:
    """Parse a ``results.csv`` written by :func:`write_results`."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    recs = []
    for row in rows:
        fs = [float(v) for k, v in row.items() if k.startswith("f_") and v != ""]
        recs.append(RunRecord(
            row["problem"], row["solver"], int(row["seed"]), row["status"], int(row["iters"]),
            float(row["wall_ms"]), float(row["final_mu"]), np.array(fs), 0,
        ))
    return recs


def trajectory_dict(problem: str, solver: str, seed: Optional[int], trace: SolverTrace, x0) -> dict:
    return {
        "format": TRAJECTORY_FORMAT,
        "problem": problem,
        "solver": solver,
        "seed": seed,
        "x0": np.asarray(x0, dtype=float),
        "status": trace.status,
        "message": trace.message,
        "records": [
            {"k": r.k, "x": r.x, "f": r.f, "M": r.M, "r": r.r, "mu": r.mu, "beta": r.beta, "doublings": r.doublings}
            for r in trace.iterations
        ],
    }


def dump_trajectory(problem: str, solver: str, seed: Optional[int], cfg: SolverConfig, path, cone="auto", x0=None) -> dict:
    prob = lookup(problem)
    start = sample_initial(prob, seed) if x0 is None else np.asarray(x0, dtype=float).reshape(prob.n)
    _, _, tr = run_single(problem, solver, seed if seed is not None else 0, cfg, cone, start)
    data = trajectory_dict(problem, solver, seed, tr, start)
    try:
        _dump_json(data, Path(path))
    except OSError as exc:
        raise OSError(f"cannot write trajectory to {path}: {exc}") from exc
    return data


def read_trajectory(path) -> dict:
    """Load a trajectory file; vectors come back as numpy arrays."""
    data = json.loads(Path(path).read_text())
    if data.get("format") != TRAJECTORY_FORMAT:
        raise ValueError(f"{path} is not a {TRAJECTORY_FORMAT} file")
    data["x0"] = np.array(data["x0"])
    for rec in data["records"]:
        rec["x"] = np.array(rec["x"])
        rec["f"] = np.array(rec["f"])
    return data


def _parse_names(text: str) -> tuple:
    if text == "all":
        return tuple(BENCHMARK_NAMES)
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _parse_cone(text: str):
    if text in ("auto", "orthant", "r2-cone"):
        return text
    try:
        gens = json.loads(text)
        OrderingCone(gens)
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        raise UsageError(f"--cone must be auto, orthant, r2-cone or a JSON generator list: {exc}") from None
    return tuple(tuple(g) for g in gens)


def _config(args) -> SolverConfig:
    try:
        return SolverConfig(
            L0=args.L0, L=args.L, M0=args.M0, eps=args.eps,
            max_iter=args.max_iter, measure=args.measure,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_cfg_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--L0", type=float, default=1.0)
    p.add_argument("--L", type=float, default=1.5)
    p.add_argument("--M0", type=float, default=3.0)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--measure", choices=("generator", "hull"), default="generator",
                   help="stationarity term of mu (default: min over generators)")
    p.add_argument("--cone", default="auto", help="auto | orthant | r2-cone | JSON list of generators")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cubicvec", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark batch")
    run.add_argument("--problems", default="all", help="comma-separated names or 'all'")
    run.add_argument("--solvers", default="cn,sd")
    seeds = run.add_mutually_exclusive_group()
    seeds.add_argument("--seeds", type=int, default=50, help="use seeds 0..N-1")
    seeds.add_argument("--seed-list", help="explicit comma-separated seeds")
    run.add_argument("--timing", action="store_true",
                     help="record wall times (otherwise wall_ms is 0 and output is byte-reproducible)")
    run.add_argument("--out", required=True)
    _add_cfg_flags(run)

    tr = sub.add_parser("trace", help="dump one trajectory as JSON")
    tr.add_argument("--problem", required=True)
    tr.add_argument("--solver", default="cn", choices=SOLVERS)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--x0", help="explicit start, comma-separated (overrides --seed)")
    tr.add_argument("--out", required=True)
    _add_cfg_flags(tr)

    pr = sub.add_parser("profile", help="performance profile from a run directory")
    pr.add_argument("--in", dest="inp", required=True)
    pr.add_argument("--metric", default="iters",
                    choices=PROFILE_METRICS)
    pr.add_argument("--out", required=True)
    return parser


def _cmd_run(args) -> int:
    if args.seed_list:
        try:
            seeds = tuple(int(s) for s in args.seed_list.split(","))
        except ValueError:
            raise UsageError(f"bad --seed-list {args.seed_list!r}") from None
    else:
        if args.seeds < 1:
            raise UsageError("--seeds must be at least 1")
        seeds = tuple(range(args.seeds))
    spec = RunSpec(
        problems=_parse_names(args.problems),
        solvers=_parse_names(args.solvers),
        seeds=seeds,
        cfg=_config(args),
        cone=_parse_cone(args.cone),
        timing=args.timing,
    )
    bundle = run_benchmark(spec)
    out = Path(args.out)
    write_results(bundle, out, spec)
    n_conv = sum(r.status == CONVERGED for r in bundle["records"])
    print(f"{len(bundle['records'])} runs, {n_conv} converged; wrote {out / RESULTS_CSV} and {out / METRICS_JSON}")
    return 0


def _cmd_trace(args) -> int:
    try:
        lookup(args.problem)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    x0 = None
    if args.x0:
        try:
            x0 = [float(v) for v in args.x0.split(",")]
        except ValueError:
            raise UsageError(f"bad --x0 {args.x0!r}") from None
        if len(x0) != lookup(args.problem).n:
            raise UsageError(f"--x0 needs {lookup(args.problem).n} values")
    data = dump_trajectory(args.problem, args.solver, None if x0 else args.seed, _config(args),
                           args.out, _parse_cone(args.cone), x0)
    print(f"{data['status']} after {len(data['records'])} records; wrote {args.out}")
    return 0


def _cmd_profile(args) -> int:
    path = Path(args.inp) / METRICS_JSON
    if not path.exists():
        raise UsageError(f"no {METRICS_JSON} in {args.inp}")
    meta = json.loads(path.read_text())
    solvers = meta["spec"]["solvers"]
    problems = meta["spec"]["problems"]
    rows = {p: meta["problems"][p]["solvers"] for p in problems}
    costs = {s: [_cost(rows[p][s], args.metric, rows[p][s]["converged"]) for p in problems] for s in solvers}
    curve = M.performance_profile(costs, problems=problems)
    _dump_json({"metric": args.metric, "tau": curve.tau, "rho": curve.rho, "excluded": curve.excluded}, Path(args.out))
    print(f"wrote {args.out}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return {"run": _cmd_run, "trace": _cmd_trace, "profile": _cmd_profile}[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
