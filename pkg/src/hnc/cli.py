"""Command line interface: run scenarios and inspect the building blocks."""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .clustering import CLOSED, INTERIOR, hc_2means, stratum_contains
from .configuration import Configuration, DegenerateHyperplaneError
from .executor import IntegrationError, RunResult, run_hnc
from .hierarchy import TreeParseError, count_trees, nni_adjacent, nni_navigate, parse_newick, to_newick
from .portal import PortalContext, portal_map
from .scenarios import BENCHMARKS, Scenario, ScenarioError

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_STALL = 2
EXIT_TIMEOUT = 3
EXIT_INTEGRATION = 4

STATUS_EXIT = {"goal_reached": EXIT_OK, "stall": EXIT_STALL, "timeout": EXIT_TIMEOUT}


class UsageError(ValueError):
    pass


# -- writers --------------------------------------------------------------------

def _num(v: float) -> str:
    return repr(float(v))


def write_trajectory(path, result: RunResult) -> None:
    traj = result.trajectory
    n, d = traj.shape[1:] if traj.ndim == 3 else (0, 0)
    header = ["t"] + [f"x{i}_{k}" for i in range(1, n + 1) for k in range(1, d + 1)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t, x in zip(result.times, traj):
            w.writerow([_num(t)] + [_num(v) for v in x.ravel()])


def write_events(path, result: RunResult) -> None:
    with open(path, "w") as fh:
        for ev in result.events:
            fh.write(json.dumps(ev.to_dict()) + "\n")


def _finite_or_none(v):
    return v if not isinstance(v, float) or math.isfinite(v) else None


def write_stats(path, result: RunResult) -> None:
    stats = {k: _finite_or_none(v) for k, v in result.stats.to_dict().items()}
    Path(path).write_text(json.dumps(stats, indent=2) + "\n")


# -- argument parsing helpers ------------------------------------------------------

def _json_arg(text: str, what: str):
    """A JSON literal, or the path of a file holding one."""
    p = Path(text)
    if not text.lstrip().startswith(("[", "{")) and p.is_file():
        text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what}: invalid JSON ({exc.msg})") from None


def _positions(text: str) -> np.ndarray:
    data = _json_arg(text, "positions")
    try:
        pos = np.asarray(data, dtype=float)
    except (TypeError, ValueError):
        raise UsageError("positions: expected a list of numbers or of coordinate lists") from None
    if pos.ndim == 1:
        pos = pos[:, None]
    if pos.ndim != 2 or len(pos) == 0 or not np.all(np.isfinite(pos)):
        raise UsageError("positions: expected a non-empty list of finite coordinates")
    return pos


def _radii(text: str | None, n: int) -> np.ndarray:
    if text is None:
        return np.zeros(n)
    data = _json_arg(text, "radii")
    r = np.asarray(data, dtype=float)
    if r.ndim == 0:
        r = np.full(n, float(r))
    if r.shape != (n,) or np.any(r < 0):
        raise UsageError(f"radii: expected one non-negative number or {n} of them")
    return r


def _tree(text: str):
    try:
        return parse_newick(text)
    except TreeParseError as exc:
        raise UsageError(f"tree: {exc}") from None


# -- subcommands --------------------------------------------------------------------

def _run_one(path: str, out: dict, dt, perturb, stride, t_max) -> tuple[int, str]:
    try:
        sc = Scenario.load(path)
        changes = {}
        if perturb is not None:
            changes["perturb_seed"] = perturb
        if t_max is not None:
            changes["t_max"] = t_max
        if changes:
            sc = sc.replace(**changes)
    except ScenarioError as exc:
        return EXIT_INVALID, f"{path}: invalid scenario: {exc}"
    try:
        result = run_hnc(sc, dt=dt, stride=stride)
    except IntegrationError as exc:
        return EXIT_INTEGRATION, f"{path}: integration error: {exc}"
    if out.get("traj"):
        write_trajectory(out["traj"], result)
    if out.get("events"):
        write_events(out["events"], result)
    if out.get("stats"):
        write_stats(out["stats"], result)
    st = result.stats
    msg = (f"{path}: {result.status} at t={result.times[-1] if len(result.times) else 0:.4g}; "
           f"deployed trees {st.deployed_trees}, transitions {st.transitions}, "
           f"min clearance {st.min_clearance:.4g}, final error {st.final_error:.3g}")
    return STATUS_EXIT[result.status], msg


def cmd_run(args) -> int:
    if args.dt is not None and not args.dt > 0:
        raise UsageError("--dt must be positive")
    if args.stride < 1:
        raise UsageError("--stride must be at least 1")
    extra = (args.dt, args.perturb, args.stride, args.t_max)
    if len(args.scenario) == 1 and not args.out_dir:
        code, msg = _run_one(args.scenario[0], {"traj": args.traj, "events": args.events,
                                                "stats": args.stats}, *extra)
        print(msg, file=sys.stderr if code else sys.stdout)
        return code
    if not args.out_dir:
        raise UsageError("several scenarios need --out-dir for the per-scenario outputs")
    if args.traj or args.events or args.stats:
        raise UsageError("--traj/--events/--stats name a single run; use --out-dir in batch mode")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for path in args.scenario:
        stem = Path(path).stem
        jobs.append((path, {"traj": out_dir / f"{stem}.traj.csv",
                            "events": out_dir / f"{stem}.events.jsonl",
                            "stats": out_dir / f"{stem}.stats.json"}))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futs = [pool.submit(_run_one, p, o, *extra) for p, o in jobs]
            results = [f.result() for f in futs]
    else:
        results = [_run_one(p, o, *extra) for p, o in jobs]
    for code, msg in results:
        print(msg, file=sys.stderr if code else sys.stdout)
    return max(code for code, _ in results)


def cmd_validate(args) -> int:
    try:
        sc = Scenario.load(args.scenario)
    except ScenarioError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    goal_tree = sc.goal_tree if sc.goal_tree is not None else hc_2means(sc.goal)
    print(f"ok: {sc.n} disks in dimension {sc.initial.dim}; "
          f"initial tree {hc_2means(sc.initial)}, goal tree {goal_tree}")
    return EXIT_OK


def cmd_scenario(args) -> int:
    sc = BENCHMARKS[args.name]()
    text = json.dumps(sc.to_dict(), indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_cluster(args) -> int:
    pos = _positions(args.positions)
    if len(pos) < 2:
        raise UsageError("positions: clustering needs at least two points")
    print(to_newick(hc_2means(pos)))
    return EXIT_OK


def cmd_stratum(args) -> int:
    tree = _tree(args.tree)
    pos = _positions(args.positions)
    if tree.leaves != frozenset(range(1, len(pos) + 1)):
        raise UsageError(f"tree leaves must be 1..{len(pos)}")
    try:
        ok = stratum_contains(pos, tree, args.mode)
    except DegenerateHyperplaneError as exc:
        raise UsageError(f"positions: {exc}") from None
    print("true" if ok else "false")
    return EXIT_OK


def cmd_nni_path(args) -> int:
    sigma, tau = _tree(args.sigma), _tree(args.tau)
    if sigma.leaves != tau.leaves:
        raise UsageError("trees must have the same leaves")
    for t in nni_navigate(sigma, tau):
        print(to_newick(t))
    return EXIT_OK


def cmd_trees_count(args) -> int:
    if args.n < 2:
        raise UsageError("n must be at least 2")
    print(count_trees(args.n))
    return EXIT_OK


def cmd_portal(args) -> int:
    sigma, tau = _tree(args.sigma), _tree(args.tau)
    pos = _positions(args.positions)
    if sigma.leaves != frozenset(range(1, len(pos) + 1)) or sigma.leaves != tau.leaves:
        raise UsageError(f"tree leaves must be 1..{len(pos)}")
    if not nni_adjacent(sigma, tau):
        raise UsageError("the trees must be NNI-adjacent")
    config = Configuration(pos, _radii(args.radii, len(pos)))
    try:
        if not stratum_contains(config, sigma, CLOSED):
            raise UsageError(f"positions: not in the closed stratum of {sigma}")
    except DegenerateHyperplaneError as exc:
        raise UsageError(f"positions: {exc}") from None
    out = portal_map(config, PortalContext(sigma, tau, args.alpha))
    print(json.dumps(out.positions.tolist()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hnc", description="Hierarchical navigation of disk robots.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one or more scenarios")
    p.add_argument("--scenario", nargs="+", required=True, metavar="FILE")
    p.add_argument("--traj", metavar="FILE", help="trajectory CSV")
    p.add_argument("--events", metavar="FILE", help="events JSONL")
    p.add_argument("--stats", metavar="FILE", help="stats JSON")
    p.add_argument("--out-dir", metavar="DIR", help="per-scenario outputs for batch runs")
    p.add_argument("--dt", type=float, help="RK4 step (default: the scenario's)")
    p.add_argument("--perturb", type=int, metavar="SEED", help="kick once on a stall")
    p.add_argument("--stride", type=int, default=1, help="emit every STRIDE-th step")
    p.add_argument("--t-max", type=float, help="override the scenario time limit")
    p.add_argument("--jobs", type=int, default=1, metavar="K", help="parallel runs in batch mode")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("--scenario", required=True, metavar="FILE")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("scenario", help="print a benchmark scenario as JSON")
    p.add_argument("name", choices=sorted(BENCHMARKS))
    p.add_argument("-o", "--output", metavar="FILE")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("cluster", help="2-means hierarchy of a point set")
    p.add_argument("positions", help="JSON list (or file) of points")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("stratum", help="does a configuration support a tree")
    p.add_argument("tree")
    p.add_argument("positions")
    p.add_argument("--mode", choices=[CLOSED, INTERIOR], default=CLOSED)
    p.set_defaults(func=cmd_stratum)

    p = sub.add_parser("nni-path", help="NNI navigation path between two trees")
    p.add_argument("sigma")
    p.add_argument("tau")
    p.set_defaults(func=cmd_nni_path)

    p = sub.add_parser("trees-count", help="number of rooted binary trees on n leaves")
    p.add_argument("n", type=int)
    p.set_defaults(func=cmd_trees_count)

    p = sub.add_parser("portal", help="portal configuration for two NNI-adjacent trees")
    p.add_argument("sigma")
    p.add_argument("tau")
    p.add_argument("positions")
    p.add_argument("--radii", help="one number or a JSON list (default 0)")
    p.add_argument("--alpha", type=float, default=0.2)
    p.set_defaults(func=cmd_portal)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
