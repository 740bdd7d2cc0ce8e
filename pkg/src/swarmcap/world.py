"""Domain types, scenario loading/serialization, geometric validation, and
randomized scenario generation.

A scenario is an immutable world description. The engine never mutates it;
run state lives in the engine's own structures.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from swarmcap.geometry import TWO_PI, wrap_angle

SOURCE_KINDS = ("g", "r", "o", "e")

#: floor applied to kernel evaluation distances; parameters that pass
#: validation keep robots far from this regime, the clamp only guards
#: arithmetic against the singularity at zero distance.
D_MIN = 1e-6


class ScenarioError(ValueError):
    """Scenario document failed to parse or violated the schema. The message
    names the offending field."""


@dataclass(frozen=True)
class KernelSpec:
    """Declarative kernel description as it appears in documents."""

    family: str  # "inverse-square" | "custom-tabulated"
    C: float = 1.0
    beta: float = 1.0
    table: tuple[tuple[float, float], ...] | None = None


@dataclass(frozen=True)
class RobotSpec:
    center: tuple[float, float]
    heading: float = 0.0
    radius: float = 0.25
    sensor_angles: tuple[float, ...] = ()
    max_turn_rate: float = math.pi
    max_speed: float = 1.0

    @property
    def p(self) -> int:
        return len(self.sensor_angles)

    @property
    def largest_gap(self) -> float:
        """Largest angular gap between adjacent sensors (Phi)."""
        a = sorted(wrap_angle(x) for x in self.sensor_angles)
        gaps = [a[(i + 1) % len(a)] - a[i] for i in range(len(a) - 1)]
        gaps.append(TWO_PI - a[-1] + a[0])
        return max(gaps)


@dataclass(frozen=True)
class TargetSpec:
    center: tuple[float, float]
    radius: float = 0.0
    safe_radius: float = 1.0
    encap_radius: float = 2.0
    quota: int = 1
    active: bool = True


@dataclass(frozen=True)
class ObstacleSpec:
    center: tuple[float, float]
    radius: float = 0.5


@dataclass(frozen=True)
class TaskParams:
    safe_distances: dict[str, float] = field(
        default_factory=lambda: {"g": 1.0, "r": 0.6, "o": 1.0, "e": 0.6}
    )
    max_step: float = 0.09
    max_ticks: int = 1500
    noise_sigma: dict[str, float] = field(
        default_factory=lambda: {"g": 0.0, "r": 0.0, "o": 0.0, "e": 0.0}
    )
    occlusion_eta: float = 1.0
    scheduler: str = "synchronous"

    def __post_init__(self):
        for k, v in self.safe_distances.items():
            if k not in SOURCE_KINDS:
                raise ScenarioError(f"task.safe_distances.{k}: unknown source kind")
            if v <= 0:
                raise ScenarioError(f"task.safe_distances.{k}: must be > 0")
        for k, v in self.noise_sigma.items():
            if k not in SOURCE_KINDS:
                raise ScenarioError(f"task.noise_sigma.{k}: unknown source kind")
            if v < 0:
                raise ScenarioError(f"task.noise_sigma.{k}: must be >= 0")
        if not 0.0 <= self.occlusion_eta <= 1.0:
            raise ScenarioError("task.occlusion_eta: must be in [0, 1]")
        if self.scheduler not in ("synchronous", "asynchronous"):
            raise ScenarioError("task.scheduler: must be synchronous or asynchronous")
        if self.max_step <= 0:
            raise ScenarioError("task.max_step: must be > 0")
        if self.max_ticks < 0:
            raise ScenarioError("task.max_ticks: must be >= 0")


@dataclass(frozen=True)
class Scenario:
    boundary: tuple[float, float]  # (w, h); rectangle [0,w] x [0,h]
    robots: tuple[RobotSpec, ...]
    targets: tuple[TargetSpec, ...]
    obstacles: tuple[ObstacleSpec, ...]
    kernels: dict[str, KernelSpec]
    task: TaskParams
    seed: int = 0


DEFAULT_KERNELS = {
    "g": KernelSpec("inverse-square", C=1.0, beta=40.0),
    "r": KernelSpec("inverse-square", C=1.0, beta=0.71),
    "o": KernelSpec("inverse-square", C=1.0, beta=1.6),
    "e": KernelSpec("inverse-square", C=1.0, beta=1.2),
}


def symmetric_sensor_angles(p: int) -> tuple[float, ...]:
    return tuple(TWO_PI * k / p for k in range(p))


# ---------------------------------------------------------------------------
# document loading


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ScenarioError(f"{where}.{key}: required field missing")
    return obj[key]


def _reject_unknown(obj: dict, allowed: set[str], where: str):
    for k in obj:
        if k not in allowed:
            raise ScenarioError(f"{where}.{k}: unknown field")


def _vec2(v, where: str) -> tuple[float, float]:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ScenarioError(f"{where}: expected [x, y]")
    try:
        return float(v[0]), float(v[1])
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}: expected numeric [x, y]") from None


def _num(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{where}: expected a number")
    return float(v)


def _parse_kernel(obj, where: str) -> KernelSpec:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    _reject_unknown(obj, {"family", "C", "beta", "table"}, where)
    family = _require(obj, "family", where)
    if family not in ("inverse-square", "custom-tabulated"):
        raise ScenarioError(f"{where}.family: unknown kernel family {family!r}")
    C = _num(obj.get("C", 1.0), f"{where}.C")
    beta = _num(obj.get("beta", 1.0), f"{where}.beta")
    if beta <= 0:
        raise ScenarioError(f"{where}.beta: must be > 0")
    table = None
    if family == "custom-tabulated":
        raw = _require(obj, "table", where)
        if not isinstance(raw, list) or len(raw) < 2:
            raise ScenarioError(f"{where}.table: need at least two (d, f) pairs")
        pairs = [(_num(p[0], f"{where}.table[{i}].d"), _num(p[1], f"{where}.table[{i}].f"))
                 for i, p in enumerate(raw)]
        for i in range(1, len(pairs)):
            if pairs[i][0] <= pairs[i - 1][0]:
                raise ScenarioError(f"{where}.table[{i}]: distances must strictly increase")
            if pairs[i][1] >= pairs[i - 1][1]:
                raise ScenarioError(f"{where}.table[{i}]: values must strictly decrease")
        table = tuple(pairs)
    return KernelSpec(family, C, beta, table)


def _parse_robot(obj, where: str) -> RobotSpec:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    _reject_unknown(
        obj, {"center", "heading", "radius", "sensors", "sensor_angles", "max_turn_rate", "max_speed"}, where
    )
    center = _vec2(_require(obj, "center", where), f"{where}.center")
    heading = wrap_angle(_num(obj.get("heading", 0.0), f"{where}.heading"))
    radius = _num(obj.get("radius", 0.25), f"{where}.radius")
    if radius <= 0:
        raise ScenarioError(f"{where}.radius: must be > 0")
    if "sensor_angles" in obj:
        angles = tuple(_num(a, f"{where}.sensor_angles") for a in obj["sensor_angles"])
    else:
        p = obj.get("sensors", 5)
        if isinstance(p, bool) or not isinstance(p, int):
            raise ScenarioError(f"{where}.sensors: expected an integer")
        angles = symmetric_sensor_angles(p)
    if len(angles) < 3:
        raise ScenarioError(f"{where}: at least 3 sensors required")
    wrapped = [wrap_angle(a) for a in angles]
    if len(set(wrapped)) != len(wrapped):
        raise ScenarioError(f"{where}.sensor_angles: angles must be distinct")
    if list(wrapped) != sorted(wrapped):
        raise ScenarioError(f"{where}.sensor_angles: angles must be sorted")
    max_turn_rate = _num(obj.get("max_turn_rate", math.pi), f"{where}.max_turn_rate")
    if not 0.0 < max_turn_rate <= math.pi + 1e-12:
        raise ScenarioError(f"{where}.max_turn_rate: must be in (0, pi]")
    max_speed = _num(obj.get("max_speed", 1.0), f"{where}.max_speed")
    if not 0.0 < max_speed <= 1.0:
        raise ScenarioError(f"{where}.max_speed: must be in (0, 1]")
    return RobotSpec(
        center=center,
        heading=heading,
        radius=radius,
        sensor_angles=tuple(wrapped),
        max_turn_rate=max_turn_rate,
        max_speed=max_speed,
    )


def _parse_target(obj, where: str) -> TargetSpec:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    _reject_unknown(obj, {"center", "radius", "safe_radius", "encap_radius", "quota", "active"}, where)
    t = TargetSpec(
        center=_vec2(_require(obj, "center", where), f"{where}.center"),
        radius=_num(obj.get("radius", 0.0), f"{where}.radius"),
        safe_radius=_num(obj.get("safe_radius", 1.0), f"{where}.safe_radius"),
        encap_radius=_num(obj.get("encap_radius", 2.0), f"{where}.encap_radius"),
        quota=obj.get("quota", 1),
        active=obj.get("active", True),
    )
    if isinstance(t.quota, bool) or not isinstance(t.quota, int) or t.quota < 1:
        raise ScenarioError(f"{where}.quota: expected an integer >= 1")
    if not isinstance(t.active, bool):
        raise ScenarioError(f"{where}.active: expected a boolean")
    if not 0.0 <= t.radius < t.safe_radius < t.encap_radius:
        raise ScenarioError(f"{where}: need 0 <= radius < safe_radius < encap_radius")
    return t


def _parse_obstacle(obj, where: str) -> ObstacleSpec:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    _reject_unknown(obj, {"center", "radius"}, where)
    o = ObstacleSpec(
        center=_vec2(_require(obj, "center", where), f"{where}.center"),
        radius=_num(_require(obj, "radius", where), f"{where}.radius"),
    )
    if o.radius <= 0:
        raise ScenarioError(f"{where}.radius: must be > 0")
    return o


def _parse_task(obj) -> TaskParams:
    if not isinstance(obj, dict):
        raise ScenarioError("task: expected an object")
    _reject_unknown(
        obj,
        {"safe_distances", "max_step", "max_ticks", "noise_sigma", "occlusion_eta", "scheduler"},
        "task",
    )
    defaults = TaskParams()
    safe = dict(defaults.safe_distances)
    if "safe_distances" in obj:
        raw = obj["safe_distances"]
        if not isinstance(raw, dict):
            raise ScenarioError("task.safe_distances: expected an object")
        for k, v in raw.items():
            safe[k] = _num(v, f"task.safe_distances.{k}")
    noise = dict(defaults.noise_sigma)
    if "noise_sigma" in obj:
        raw = obj["noise_sigma"]
        if isinstance(raw, dict):
            for k, v in raw.items():
                noise[k] = _num(v, f"task.noise_sigma.{k}")
        else:
            # scalar applies to target readings only; avoidance kinds stay clean
            noise["g"] = _num(raw, "task.noise_sigma")
    scheduler = obj.get("scheduler", "synchronous")
    scheduler = {"sync": "synchronous", "async": "asynchronous"}.get(scheduler, scheduler)
    max_ticks = obj.get("max_ticks", defaults.max_ticks)
    if isinstance(max_ticks, bool) or not isinstance(max_ticks, int):
        raise ScenarioError("task.max_ticks: expected an integer")
    return TaskParams(
        safe_distances=safe,
        max_step=_num(obj.get("max_step", defaults.max_step), "task.max_step"),
        max_ticks=max_ticks,
        noise_sigma=noise,
        occlusion_eta=_num(obj.get("occlusion_eta", defaults.occlusion_eta), "task.occlusion_eta"),
        scheduler=scheduler,
    )


def load_scenario(document: str) -> Scenario:
    """Parse a JSON scenario document. Unknown keys are rejected; omitted
    optional fields get defaults. Raises ScenarioError naming the offending
    field (parse errors include line/column context)."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"parse error at line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("document: expected a JSON object")
    _reject_unknown(
        doc, {"boundary", "robots", "targets", "obstacles", "kernels", "task", "seed"}, "document"
    )
    braw = _require(doc, "boundary", "document")
    if not isinstance(braw, dict):
        raise ScenarioError("boundary: expected an object")
    _reject_unknown(braw, {"w", "h"}, "boundary")
    w = _num(_require(braw, "w", "boundary"), "boundary.w")
    h = _num(_require(braw, "h", "boundary"), "boundary.h")
    if w <= 0 or h <= 0:
        raise ScenarioError("boundary: w and h must be > 0")

    robots_raw = _require(doc, "robots", "document")
    targets_raw = _require(doc, "targets", "document")
    if not isinstance(robots_raw, list) or not robots_raw:
        raise ScenarioError("robots: expected a non-empty list")
    if not isinstance(targets_raw, list) or not targets_raw:
        raise ScenarioError("targets: expected a non-empty list")
    obstacles_raw = doc.get("obstacles", [])
    if not isinstance(obstacles_raw, list):
        raise ScenarioError("obstacles: expected a list")

    kernels = dict(DEFAULT_KERNELS)
    if "kernels" in doc:
        kraw = doc["kernels"]
        if not isinstance(kraw, dict):
            raise ScenarioError("kernels: expected an object")
        _reject_unknown(kraw, set(SOURCE_KINDS), "kernels")
        for k, v in kraw.items():
            kernels[k] = _parse_kernel(v, f"kernels.{k}")

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ScenarioError("seed: expected an integer in [0, 2^64)")

    return Scenario(
        boundary=(w, h),
        robots=tuple(_parse_robot(r, f"robots[{i}]") for i, r in enumerate(robots_raw)),
        targets=tuple(_parse_target(t, f"targets[{i}]") for i, t in enumerate(targets_raw)),
        obstacles=tuple(_parse_obstacle(o, f"obstacles[{i}]") for i, o in enumerate(obstacles_raw)),
        kernels=kernels,
        task=_parse_task(doc.get("task", {})),
        seed=seed,
    )


def scenario_to_document(s: Scenario) -> str:
    """Serialize back to the document schema; load(scenario_to_document(s))
    reconstructs an equal Scenario."""
    doc = {
        "boundary": {"w": s.boundary[0], "h": s.boundary[1]},
        "robots": [
            {
                "center": list(r.center),
                "heading": r.heading,
                "radius": r.radius,
                "sensor_angles": list(r.sensor_angles),
                "max_turn_rate": r.max_turn_rate,
                "max_speed": r.max_speed,
            }
            for r in s.robots
        ],
        "targets": [
            {
                "center": list(t.center),
                "radius": t.radius,
                "safe_radius": t.safe_radius,
                "encap_radius": t.encap_radius,
                "quota": t.quota,
                "active": t.active,
            }
            for t in s.targets
        ],
        "obstacles": [{"center": list(o.center), "radius": o.radius} for o in s.obstacles],
        "kernels": {
            k: (
                {"family": v.family, "C": v.C, "beta": v.beta}
                if v.table is None
                else {"family": v.family, "C": v.C, "beta": v.beta, "table": [list(p) for p in v.table]}
            )
            for k, v in s.kernels.items()
        },
        "task": {
            "safe_distances": dict(s.task.safe_distances),
            "max_step": s.task.max_step,
            "max_ticks": s.task.max_ticks,
            "noise_sigma": dict(s.task.noise_sigma),
            "occlusion_eta": s.task.occlusion_eta,
            "scheduler": s.task.scheduler,
        },
        "seed": s.seed,
    }
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# geometric validation


def _inside(c: tuple[float, float], boundary: tuple[float, float]) -> bool:
    return 0.0 < c[0] < boundary[0] and 0.0 < c[1] < boundary[1]


def _wall_distance(c: tuple[float, float], boundary: tuple[float, float]) -> float:
    return min(c[0], c[1], boundary[0] - c[0], boundary[1] - c[1])


def validate_geometry(s: Scenario) -> list[str]:
    """All scenario placement invariants. Returns human-readable violations
    (empty list means valid); violations are data, not errors."""
    from swarmcap.bounds import min_obstacle_separation, min_target_separation
    from swarmcap.signals import SignalKernel

    v: list[str] = []
    for i, r in enumerate(s.robots):
        if not _inside(r.center, s.boundary):
            v.append(f"inside_boundary: robots[{i}] center {r.center} outside the boundary")
    for i, t in enumerate(s.targets):
        if not _inside(t.center, s.boundary):
            v.append(f"inside_boundary: targets[{i}] center {t.center} outside the boundary")
    for i, o in enumerate(s.obstacles):
        if not _inside(o.center, s.boundary):
            v.append(f"inside_boundary: obstacles[{i}] center {o.center} outside the boundary")

    margin_base = s.task.safe_distances["e"] + s.task.max_step
    for i, t in enumerate(s.targets):
        need = t.encap_radius + margin_base
        have = _wall_distance(t.center, s.boundary)
        if have < need:
            v.append(
                f"boundary_margin: targets[{i}] is {have:.6g} m from the boundary, "
                f"needs >= encap_radius + safe_e + max_step = {need:.6g} m"
            )

    for i, t in enumerate(s.targets):
        for j, o in enumerate(s.obstacles):
            d = math.dist(t.center, o.center)
            if d < t.encap_radius + o.radius and d + o.radius > t.safe_radius:
                v.append(
                    f"ring_clear: obstacles[{j}] overlaps the encapsulation ring of targets[{i}]"
                )

    quota_sum = sum(t.quota for t in s.targets)
    if quota_sum > len(s.robots):
        v.append(
            f"quota_feasible: total quota {quota_sum} exceeds the {len(s.robots)} robots available"
        )

    rings = {(t.safe_radius, t.encap_radius) for t in s.targets}
    if len(rings) > 1:
        v.append("uniform_rings: targets disagree on (safe_radius, encap_radius); "
                 "robots carry a single threshold set")

    # separation bounds (worst robot geometry = fewest sensors)
    if s.targets and s.robots:
        p_min = min(r.p for r in s.robots)
        r_r = max(r.radius for r in s.robots)
        t0 = s.targets[0]
        kg = SignalKernel.from_spec(s.kernels["g"])
        try:
            d_g = min_target_separation(
                kg, len(s.targets), t0.safe_radius, t0.encap_radius, r_r, p_min, s.task.max_step
            )
        except ValueError:
            d_g = None
        if d_g is not None:
            for i in range(len(s.targets)):
                for j in range(i + 1, len(s.targets)):
                    d = math.dist(s.targets[i].center, s.targets[j].center)
                    if d < d_g:
                        v.append(
                            f"target_separation: targets[{i}] and targets[{j}] are {d:.6g} m "
                            f"apart, minimum separation is {d_g:.6g} m"
                        )
    if s.obstacles and s.robots:
        p_min = min(r.p for r in s.robots)
        r_r = max(r.radius for r in s.robots)
        for i in range(len(s.obstacles)):
            for j in range(i + 1, len(s.obstacles)):
                d_o = min_obstacle_separation(
                    max(s.obstacles[i].radius, s.obstacles[j].radius),
                    r_r,
                    s.task.safe_distances["o"],
                    p_min,
                    s.task.max_step,
                )
                d = math.dist(s.obstacles[i].center, s.obstacles[j].center)
                if d < d_o:
                    v.append(
                        f"obstacle_separation: obstacles[{i}] and obstacles[{j}] are {d:.6g} m "
                        f"apart, minimum separation is {d_o:.6g} m"
                    )

    for i in range(len(s.robots)):
        for j in range(i + 1, len(s.robots)):
            d = math.dist(s.robots[i].center, s.robots[j].center)
            if d < s.task.safe_distances["r"]:
                v.append(
                    f"robot_start_clearance: robots[{i}] and robots[{j}] start {d:.6g} m apart, "
                    f"below safe_r = {s.task.safe_distances['r']:.6g} m"
                )
    return v


# ---------------------------------------------------------------------------
# randomized generation


def random_scenario(
    counts: tuple[int, int, int],
    params: TaskParams | None = None,
    rng_seed: int = 0,
    boundary: tuple[float, float] | None = None,
    sensors: int = 5,
    obstacle_radius: float = 0.6,
    ring: tuple[float, float] = (1.0, 2.0),
    kernels: dict[str, KernelSpec] | None = None,
) -> Scenario:
    """Rejection-sample a scenario with n robots, m targets, w obstacles that
    passes every geometric check and separation bound. Deterministic for a
    given seed. Raises ScenarioError on placement failure, naming the densest
    unsatisfiable constraint."""
    from swarmcap.bounds import min_obstacle_separation, min_target_separation
    from swarmcap.signals import SignalKernel

    n, m, w = counts
    task = params or TaskParams()
    kernels = dict(kernels or DEFAULT_KERNELS)
    safe_g, encap = ring
    r_r = 0.25
    quota = max(1, n // m)
    kg = SignalKernel.from_spec(kernels["g"])
    d_g = min_target_separation(kg, m, safe_g, encap, r_r, min(sensors, 8), task.max_step)
    d_o = min_obstacle_separation(obstacle_radius, r_r, task.safe_distances["o"], sensors, task.max_step)
    wall_margin = encap + task.safe_distances["e"] + task.max_step

    grow = boundary is None
    side = 24.0 if boundary is None else None
    rng = np.random.default_rng(rng_seed)

    for _round in range(8):
        bnd = (side, side) if grow else boundary
        result = _try_place(rng, n, m, w, bnd, d_g, d_o, wall_margin, task, r_r,
                            obstacle_radius, safe_g, encap)
        if isinstance(result, tuple):
            tpos, opos, rpos, headings = result
            robots = tuple(
                RobotSpec(
                    center=(float(x), float(y)),
                    heading=float(h),
                    radius=r_r,
                    sensor_angles=symmetric_sensor_angles(sensors),
                )
                for (x, y), h in zip(rpos, headings)
            )
            targets = tuple(
                TargetSpec(center=(float(x), float(y)), radius=0.3, safe_radius=safe_g,
                           encap_radius=encap, quota=quota)
                for x, y in tpos
            )
            obstacles = tuple(
                ObstacleSpec(center=(float(x), float(y)), radius=obstacle_radius) for x, y in opos
            )
            return Scenario(
                boundary=bnd,
                robots=robots,
                targets=targets,
                obstacles=obstacles,
                kernels=kernels,
                task=task,
                seed=int(rng_seed),
            )
        if not grow:
            raise ScenarioError(f"placement failure: densest unsatisfiable constraint: {result}")
        side *= 1.3
    raise ScenarioError(f"placement failure: densest unsatisfiable constraint: {result}")


def _try_place(rng, n, m, w, bnd, d_g, d_o, wall_margin, task, r_r, r_obs, safe_g, encap):
    """One placement round. Returns (targets, obstacles, robots, headings) or
    the name of the constraint that exhausted its attempt budget."""

    def sample(margin):
        return rng.uniform(margin, bnd[0] - margin), rng.uniform(margin, bnd[1] - margin)

    if bnd[0] <= 2 * wall_margin or bnd[1] <= 2 * wall_margin:
        return "boundary_margin"

    tpos: list[tuple[float, float]] = []
    for _ in range(m):
        for _attempt in range(400):
            c = sample(wall_margin)
            if all(math.dist(c, t) >= d_g for t in tpos):
                tpos.append(c)
                break
        else:
            return "target_separation"

    opos: list[tuple[float, float]] = []
    for _ in range(w):
        for _attempt in range(400):
            c = sample(max(2.0, r_obs + 0.5))
            if all(math.dist(c, t) >= encap + r_obs + 0.1 for t in tpos) and all(
                math.dist(c, o) >= d_o for o in opos
            ):
                opos.append(c)
                break
        else:
            return "obstacle_separation"

    robot_wall = task.safe_distances["e"] + task.max_step + 0.11
    robot_pair = task.safe_distances["r"] + 2 * task.max_step + 0.02
    robot_obs = task.safe_distances["o"] + task.max_step + 0.01
    rpos: list[tuple[float, float]] = []
    for _ in range(n):
        for _attempt in range(800):
            c = sample(robot_wall)
            if (
                all(math.dist(c, t) >= encap + 0.1 for t in tpos)
                and all(math.dist(c, o) >= robot_obs for o in opos)
                and all(math.dist(c, r) >= robot_pair for r in rpos)
            ):
                rpos.append(c)
                break
        else:
            return "robot_start_clearance"
    headings = rng.uniform(0.0, TWO_PI, size=n)
    return tpos, opos, rpos, headings


def with_sensor_count(s: Scenario, p: int) -> Scenario:
    """Same world, every robot rebuilt with p symmetric sensors."""
    robots = tuple(replace(r, sensor_angles=symmetric_sensor_angles(p)) for r in s.robots)
    return replace(s, robots=robots)
