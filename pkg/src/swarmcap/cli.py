"""Command line front end: run one scenario, sweep a parameter axis, or
validate a scenario's parameters.

All artifacts are byte-stable for a given invocation: floats are printed
through one %.9g formatter, rows keep a fixed order, and nothing
time-dependent is written.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import statistics
import sys
from dataclasses import replace

from swarmcap.bounds import validate_all
from swarmcap.engine import run as run_engine
from swarmcap.signals import attenuation_pct
from swarmcap.world import (
    Scenario,
    ScenarioError,
    load_scenario,
    random_scenario,
    with_sensor_count,
)

SWEEP_AXES = ("sensor_count", "noise", "occlusion", "robots")

SWEEP_HEADER = (
    "axis,value,run_index,seed,success,completion_tick,"
    "violations_g,violations_r,violations_o,violations_e"
)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def _round9(x: float) -> float:
    return float(f"{x:.9g}")


def _load(path: str) -> Scenario:
    with open(path) as fh:
        return load_scenario(fh.read())


def _scheduler_name(flag: str | None) -> str | None:
    if flag is None:
        return None
    return {"sync": "synchronous", "async": "asynchronous"}[flag]


# ---------------------------------------------------------------------------
# run


def cmd_run(args) -> int:
    try:
        scenario = _load(args.scenario)
    except (OSError, ScenarioError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    if not args.skip_validation:
        failures = [c for c in validate_all(scenario) if not c.passed]
        if failures:
            for c in failures:
                print(f"invalid scenario: {c.name}: {c.detail}", file=sys.stderr)
            return 1

    os.makedirs(args.out, exist_ok=True)
    traj = args.traj_out
    metrics = run_engine(
        scenario,
        seed=args.seed,
        scheduler=_scheduler_name(args.scheduler),
        max_ticks=args.steps,
        traj_path=traj,
    )
    doc = metrics.as_dict()
    doc["seed"] = scenario.seed if args.seed is None else args.seed
    doc["scheduler"] = _scheduler_name(args.scheduler) or scenario.task.scheduler
    path = os.path.join(args.out, "metrics.json")
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")

    v = metrics.violations
    print(
        f"{'success' if metrics.success else 'incomplete'}: "
        f"{metrics.targets_done}/{metrics.targets_total} targets in {metrics.ticks} ticks"
        + (f" (done at {metrics.completion_tick})" if metrics.completion_tick else "")
    )
    print(
        f"violations g={v['g']} r={v['r']} o={v['o']} e={v['e']}; "
        f"livelocks={metrics.livelocks}; frozen={metrics.frozen}"
    )
    print(f"metrics: {path}" + (f"; trajectory: {traj}" if traj else ""))
    return 0 if metrics.success else 2


# ---------------------------------------------------------------------------
# sweep


def _sweep_variant(base: Scenario, axis: str, value: float, variant_seed: int) -> Scenario:
    if axis == "sensor_count":
        return with_sensor_count(base, int(value))
    if axis == "noise":
        noise = dict(base.task.noise_sigma)
        noise["g"] = float(value)
        return replace(base, task=replace(base.task, noise_sigma=noise))
    if axis == "occlusion":
        return replace(base, task=replace(base.task, occlusion_eta=float(value)))
    if axis == "robots":
        return random_scenario(
            (int(value), len(base.targets), len(base.obstacles)),
            params=base.task,
            rng_seed=variant_seed,
            sensors=base.robots[0].p,
            obstacle_radius=base.obstacles[0].radius if base.obstacles else 0.6,
            ring=(base.targets[0].safe_radius, base.targets[0].encap_radius),
            kernels=base.kernels,
        )
    raise ValueError(f"unknown sweep axis {axis!r}")


def _sweep_one(job) -> tuple:
    (vi, ri, axis, value, seed, scenario, scheduler, steps) = job
    metrics = run_engine(scenario, seed=seed, scheduler=scheduler, max_ticks=steps)
    return (vi, ri, axis, value, seed, metrics.as_dict())


def cmd_sweep(args) -> int:
    try:
        base = _load(args.scenario)
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except (OSError, ScenarioError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if not values:
        print("error: --values is empty", file=sys.stderr)
        return 1
    axis = args.axis
    master = base.seed if args.seed is None else args.seed
    scheduler = _scheduler_name(args.scheduler)

    jobs = []
    try:
        for vi, value in enumerate(values):
            scenario = _sweep_variant(base, axis, value, master + vi)
            for ri in range(args.runs):
                seed = master + (vi * args.runs + ri)
                jobs.append((vi, ri, axis, value, seed, scenario, scheduler, args.steps))
    except (ScenarioError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    if args.jobs > 1:
        with multiprocessing.Pool(args.jobs) as pool:
            results = pool.map(_sweep_one, jobs)
    else:
        results = [_sweep_one(j) for j in jobs]
    results.sort(key=lambda r: (r[0], r[1]))

    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "sweep.csv")
    with open(csv_path, "w", newline="") as fh:
        fh.write(SWEEP_HEADER + "\n")
        for vi, ri, ax, value, seed, md in results:
            v = md["violations"]
            tick = "" if md["completion_tick"] is None else str(md["completion_tick"])
            fh.write(
                f"{ax},{_fmt(float(value))},{ri},{seed},{1 if md['success'] else 0},{tick},"
                f"{v['g']},{v['r']},{v['o']},{v['e']}\n"
            )

    per_value = []
    for vi, value in enumerate(values):
        rows = [r for r in results if r[0] == vi]
        succ = [r[5]["success"] for r in rows]
        ticks = [r[5]["completion_tick"] for r in rows if r[5]["completion_tick"] is not None]
        entry = {
            "value": _round9(float(value)),
            "runs": len(rows),
            "success_rate": _round9(sum(succ) / len(rows)),
            "median_completion_tick": (
                _round9(float(statistics.median(ticks))) if ticks else None
            ),
        }
        if axis == "noise":
            entry["attenuation_pct"] = _round9(attenuation_pct(float(value)))
        per_value.append(entry)
    agg_path = os.path.join(args.out, "aggregates.json")
    with open(agg_path, "w") as fh:
        json.dump({"axis": axis, "per_value": per_value}, fh, indent=2)
        fh.write("\n")

    print(f"{len(results)} runs over {len(values)} values of {axis}")
    print(f"sweep rows: {csv_path}")
    print(f"aggregates: {agg_path}")
    return 0


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    try:
        scenario = _load(args.scenario)
    except (OSError, ScenarioError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    checks = validate_all(scenario)
    failed = False
    for c in checks:
        mark = "PASS" if c.passed else "FAIL"
        failed = failed or not c.passed
        print(f"{mark} {c.name}: {c.detail}")
    return 3 if failed else 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="swarmcap",
        description="Deterministic swarm encapsulation simulator and parameter validator.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate one scenario")
    run_p.add_argument("scenario")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--steps", type=int, default=None, help="tick budget override")
    run_p.add_argument("--scheduler", choices=("sync", "async"), default=None)
    run_p.add_argument("--traj-out", default=None, help="write per-tick trajectory CSV here")
    run_p.add_argument("--skip-validation", action="store_true")
    run_p.add_argument("--out", default=".", help="directory for metrics.json")
    run_p.set_defaults(fn=cmd_run)

    sw = sub.add_parser("sweep", help="run a scenario across an axis of values")
    sw.add_argument("scenario")
    sw.add_argument("--axis", choices=SWEEP_AXES, required=True)
    sw.add_argument("--values", required=True, help="comma-separated values")
    sw.add_argument("--runs", type=int, default=10, help="runs per value")
    sw.add_argument("--seed", type=int, default=None, help="master seed")
    sw.add_argument("--steps", type=int, default=None)
    sw.add_argument("--scheduler", choices=("sync", "async"), default=None)
    sw.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    sw.add_argument("--out", default=".", help="directory for sweep.csv and aggregates.json")
    sw.set_defaults(fn=cmd_sweep)

    val = sub.add_parser("validate", help="check every design bound for a scenario")
    val.add_argument("scenario")
    val.set_defaults(fn=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
