"""Design-parameter validation: every closed-form bound that must hold for
the motion guarantees to go through, plus the scenario-level checker that
evaluates them all and reports pass/fail per rule.

Bounds are strict unless stated; a parameter exactly on a boundary fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from swarmcap.safety import global_step_bound, robot_influence_band
from swarmcap.signals import SignalKernel
from swarmcap.world import Scenario


def check_condition1(r_r: float, largest_gap: float) -> tuple[bool, float]:
    """Sensor density: sqrt(2) * r_r * sin(gap/2) must stay below 1 so the
    estimation simplex stays small relative to unit curvature. Returns
    (ok, value)."""
    v = math.sqrt(2.0) * r_r * math.sin(largest_gap / 2.0)
    return v < 1.0, v


def check_condition2(
    kernel: SignalKernel,
    r_r: float,
    p: int,
    d_lo: float,
    d_hi: float,
    step: float = 1e-3,
) -> tuple[bool, float, float]:
    """Gradient dominance: at every sampled distance the worst-case simplex
    estimation error (Hessian norm times simplex edge over sqrt(2)) must not
    exceed the true gradient magnitude, otherwise the estimated direction can
    point anywhere. Returns (ok, worst_ratio, distance of the worst ratio)."""
    delta_h = 2.0 * r_r * math.sin(math.pi / p)
    d = np.arange(d_lo, d_hi + step / 2, step)
    grad = kernel.gradient_magnitude(d)
    err = kernel.hessian_norm(d) * delta_h / math.sqrt(2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(grad > 0.0, err / grad, np.where(err > 0.0, np.inf, 0.0))
    worst = int(np.argmax(ratio))
    return bool(ratio[worst] <= 1.0), float(ratio[worst]), float(d[worst])


def min_safe_radius(r_r: float, p: int) -> float:
    """Smallest inner ring radius at which the estimate of an inverse-square
    source direction is still trustworthy: 3 * sqrt(2) * r_r * sin(pi/p)."""
    return 3.0 * math.sqrt(2.0) * r_r * math.sin(math.pi / p)


def _sensor_adjacent_distance(safe: float, r_r: float, p: int) -> float:
    """Distance from a body point at safe range to the nearest sensor under
    the worst sensor-ring alignment (law of cosines at half the sensor gap)."""
    return math.sqrt(safe * safe + r_r * r_r - 2.0 * r_r * safe * math.cos(math.pi / p))


def min_obstacle_separation(r_o: float, r_r: float, safe_o: float, p: int, d_max: float) -> float:
    """Smallest gap between two obstacle centers that still leaves a robot a
    certified corridor between their keep-out regions."""
    adj = _sensor_adjacent_distance(safe_o, r_r, p)
    return 2.0 * r_o + 2.0 * (r_r + adj) + d_max


def target_separation_chaining(
    r_encap: float, r_safe: float, r_r: float, p: int, d_max: float
) -> float:
    """Separation below which two encapsulation rings plus their frozen
    robots' keep-outs could fuse into one non-convex trap."""
    adj = _sensor_adjacent_distance(r_safe, r_r, p)
    return 2.0 * r_encap + 2.0 * (r_r + adj) + d_max


def target_separation_cases(
    kernel: SignalKernel, m: int, r_safe: float, r_encap: float
) -> tuple[float, float]:
    """The two worst-case field-interference thresholds (closed form for the
    inverse-square family, root finding otherwise).

    Near-side: m-1 targets directly opposite erode the inner-ring pull; it
    must still beat the outer-ring pull. Far-side: m-1 targets stacked
    behind the outer ring inflate the pull there; it must stay below the
    inner-ring pull."""
    if m <= 1:
        return 0.0, 0.0
    if kernel.family == "inverse-square":
        q = (r_safe / r_encap) ** 3
        near = r_safe * (1.0 + ((m - 1) / (1.0 - q)) ** (1.0 / 3.0))
        far = r_encap * (1.0 + ((m - 1) / (1.0 / q - 1.0)) ** (1.0 / 3.0))
        return near, far
    return target_separation_bisection(kernel, m, r_safe, r_encap)


def target_separation_bisection(
    kernel: SignalKernel, m: int, r_safe: float, r_encap: float
) -> tuple[float, float]:
    """Same two thresholds found by bisection on the gradient-magnitude
    residuals; family-agnostic, used to cross-check the closed forms."""
    if m <= 1:
        return 0.0, 0.0
    g = kernel.gradient_magnitude
    g_rs, g_re = g(r_safe), g(r_encap)
    if g_rs <= g_re:
        raise ValueError("kernel gradient must strictly decrease across the ring")

    def solve(anchor: float, residual) -> float:
        lo = anchor * (1.0 + 1e-12)
        hi = anchor + kernel.beta + r_encap + 1.0
        if residual(lo) >= 0.0:
            return lo
        if residual(hi) <= 0.0:
            raise ValueError("no satisfiable separation within the sensing horizon")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if residual(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    near = solve(r_safe, lambda D: g_rs - (m - 1) * g(D - r_safe) - g_re)
    far = solve(r_encap, lambda D: g_rs - g_re - (m - 1) * g(D - r_encap))
    return near, far


def min_target_separation(
    kernel: SignalKernel,
    m: int,
    r_safe: float,
    r_encap: float,
    r_r: float,
    p: int,
    d_max: float,
) -> float:
    """Binding minimum distance between target centers: the worse of the two
    field-interference thresholds and the ring-chaining clearance."""
    near, far = target_separation_cases(kernel, m, r_safe, r_encap)
    chain = target_separation_chaining(r_encap, r_safe, r_r, p, d_max)
    return max(near, far, chain)


def sensor_coverage_radius(safe: float, closing: float, r_r: float, p: int) -> float:
    """Cutoff a kernel needs so a robot hears a source of that kind before
    blind motion could close inside the safety distance. closing is the total
    distance the pair can shrink per tick; the worst sensor alignment sits
    half a gap off the source bearing."""
    D = safe + closing
    return math.sqrt(D * D + r_r * r_r - 2.0 * D * r_r * math.cos(math.pi / p))


# ---------------------------------------------------------------------------
# scenario-level validation


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def validate_all(scenario: Scenario) -> list[CheckResult]:
    """Every design bound and placement invariant, one result per rule.
    A scenario is runnable when all results pass."""
    from swarmcap.world import validate_geometry

    s = scenario
    results: list[CheckResult] = []
    r_r = max(r.radius for r in s.robots)
    p_min = min(r.p for r in s.robots)
    d_max = s.task.max_step
    safe = s.task.safe_distances
    kernels = {k: SignalKernel.from_spec(v) for k, v in s.kernels.items()}

    bound4 = global_step_bound(r_r, safe["r"], p_min)
    results.append(
        CheckResult(
            "max_step_bound",
            d_max < bound4,
            f"max_step {d_max:.6g} vs ceiling {bound4:.6g} (p={p_min})",
        )
    )

    lo5, hi5 = robot_influence_band(r_r, safe["r"], p_min, d_max)
    beta_r = kernels["r"].beta
    results.append(
        CheckResult(
            "robot_influence_band",
            lo5 < beta_r < hi5,
            f"robot kernel cutoff {beta_r:.6g} vs admissible ({lo5:.6g}, {hi5:.6g})",
        )
    )

    worst_c1 = 0.0
    for r in s.robots:
        _, v = check_condition1(r.radius, r.largest_gap)
        worst_c1 = max(worst_c1, v)
    results.append(
        CheckResult("sensor_density", worst_c1 < 1.0, f"worst density value {worst_c1:.6g} vs 1")
    )

    t0 = s.targets[0]
    ok2, ratio2, d2 = check_condition2(
        kernels["g"], r_r, p_min, t0.safe_radius, kernels["g"].beta
    )
    results.append(
        CheckResult(
            "gradient_dominance",
            ok2,
            f"worst error/gradient ratio {ratio2:.6g} at d={d2:.6g}",
        )
    )

    floor6 = min_safe_radius(r_r, p_min)
    results.append(
        CheckResult(
            "safe_radius_floor",
            t0.safe_radius >= floor6,
            f"inner ring {t0.safe_radius:.6g} vs floor {floor6:.6g}",
        )
    )

    d_g = min_target_separation(
        kernels["g"], len(s.targets), t0.safe_radius, t0.encap_radius, r_r, p_min, d_max
    )
    worst_pair = None
    for i in range(len(s.targets)):
        for j in range(i + 1, len(s.targets)):
            d = math.dist(s.targets[i].center, s.targets[j].center)
            if worst_pair is None or d < worst_pair[0]:
                worst_pair = (d, i, j)
    if worst_pair is None:
        results.append(CheckResult("target_separation", True, f"single target, bound {d_g:.6g}"))
    else:
        results.append(
            CheckResult(
                "target_separation",
                worst_pair[0] >= d_g,
                f"closest pair targets[{worst_pair[1]}],[{worst_pair[2]}] at "
                f"{worst_pair[0]:.6g} vs minimum {d_g:.6g}",
            )
        )

    worst_obs = None
    for i in range(len(s.obstacles)):
        for j in range(i + 1, len(s.obstacles)):
            d_o = min_obstacle_separation(
                max(s.obstacles[i].radius, s.obstacles[j].radius), r_r, safe["o"], p_min, d_max
            )
            d = math.dist(s.obstacles[i].center, s.obstacles[j].center)
            margin = d - d_o
            if worst_obs is None or margin < worst_obs[0]:
                worst_obs = (margin, i, j, d, d_o)
    if worst_obs is None:
        results.append(CheckResult("obstacle_separation", True, "fewer than two obstacles"))
    else:
        results.append(
            CheckResult(
                "obstacle_separation",
                worst_obs[0] >= 0.0,
                f"closest pair obstacles[{worst_obs[1]}],[{worst_obs[2]}] at "
                f"{worst_obs[3]:.6g} vs minimum {worst_obs[4]:.6g}",
            )
        )

    cover_ok = True
    cover_detail = []
    closing = {"g": d_max, "r": 2.0 * d_max, "o": d_max, "e": d_max}
    for kind in ("g", "r", "o"):
        need = sensor_coverage_radius(safe[kind], closing[kind], r_r, p_min)
        have = kernels[kind].beta
        if have < need:
            cover_ok = False
        cover_detail.append(f"{kind}: cutoff {have:.6g} vs needed {need:.6g}")
    # walls are lines; the worst sensor sits half a gap off the normal
    need_e = safe["e"] + d_max - r_r * math.cos(math.pi / p_min)
    if kernels["e"].beta < need_e:
        cover_ok = False
    cover_detail.append(f"e: cutoff {kernels['e'].beta:.6g} vs needed {need_e:.6g}")
    results.append(CheckResult("sensor_coverage", cover_ok, "; ".join(cover_detail)))

    geo = validate_geometry(s)
    geo_names = set()
    for item in geo:
        name = item.split(":", 1)[0]
        if name in ("target_separation", "obstacle_separation"):
            continue  # already reported above with bound context
        geo_names.add(name)
        results.append(CheckResult(name, False, item.split(": ", 1)[1] if ": " in item else item))
    for name in (
        "inside_boundary",
        "boundary_margin",
        "ring_clear",
        "quota_feasible",
        "uniform_rings",
        "robot_start_clearance",
    ):
        if name not in geo_names:
            results.append(CheckResult(name, True, "ok"))
    return results
