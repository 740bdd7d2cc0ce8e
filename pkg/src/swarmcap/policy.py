"""Per-robot control: one sensor frame in, one certified (heading, step) out.

Dispatch order is fixed: wall reaction first, then by zone. Within the ring
the robot alternates between a quarter-circle of inward candidates and a
quarter-circle of outward ones, each searched bisector-first; that ordering
gives every robot the same rotation sense around a target (clockwise while
approaching, counterclockwise while backing off), which is what keeps rings
from jamming.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from swarmcap.geometry import wrap_angle, wrap_signed
from swarmcap.gradients import classify_zone, los_direction
from swarmcap.safety import StepConstraints, boundary_trigger
from swarmcap.signals import SensorFrame, SignalKernel

GRID_DIRECTIONS = 720
_ARC_SAMPLES = 45
_MIN_STEP = 1e-12
# fraction of the tick cap a direction must certify before a pursuit behavior
# commits to it; anything slower yields to tangents or the max-step search
_PROGRESS_FRACTION = 0.25

# once the best certified step over all bearings drops below this fraction of
# the cap, pursuit stops and the robot climbs back toward open space; without
# the reserve a robot can creep down a narrowing pocket one certified sliver
# at a time until no direction certifies anything
_RESERVE_FRACTION = 0.5
_RESERVE_PROBE = 72

# ring orbit set-point, in tick caps below the encapsulation radius; deep
# enough that reading noise has to push a parked robot four full ticks
# outward before it leaves the countable band
_ORBIT_DEPTH = 4.0


@dataclass(frozen=True)
class PolicyConfig:
    kernels: dict[str, SignalKernel]
    safe_distances: dict[str, float]
    r_safe: float
    r_encap: float
    d_max: float  # nominal per-tick cap, also the bound on others' motion


@dataclass(frozen=True)
class Control:
    theta: float  # world heading adopted this tick
    step: float  # certified move along theta
    behavior: str
    zone: str


@dataclass
class PolicyMemory:
    """Controller state carried between ticks: which way this robot circles
    whatever blocks it. Re-deciding the side every tick from instantaneous
    bearings lets symmetric geometry flip the choice back and forth, and the
    robot oscillates at a pocket mouth instead of going around. The side is
    also kept through short pursuit bursts: one clear tick right at a wall
    says nothing, and releasing there restarts the side choice from scratch
    every time the robot bumps the same corner."""

    follow_side: int = 0  # +1 counterclockwise, -1 clockwise, 0 free
    free_run: int = 0  # consecutive unblocked pursuit ticks
    best_goal: float = math.inf  # closest goal clearance seen since committing
    last_goal: float = math.inf  # goal clearance at the previous control tick
    block_goal: float = math.inf  # best goal clearance among pursuit blocks
    stall: int = 0  # consecutive blocks with no goal progress
    strict: bool = False  # thrash detected: pursuit needs strict progress
    strict_age: int = 0  # control ticks spent with pursuit held back
    # running mean of the pursuit bearing as a unit vector (zero when unset).
    # Far from a target the per-tick bearing estimate is whipped around by
    # reading noise faster than the robot can usefully steer; averaging across
    # control ticks recovers the drift direction without touching the
    # estimator itself
    los_x: float = 0.0
    los_y: float = 0.0


# pursuit ticks in a row before a committed follow side is forgotten
_FREE_RUN_RELEASE = 30

# pursuit blocks in a row with no goal progress before pursuit is held back
_STALL_LIMIT = 6

# held-back ticks before the strict-progress demand is forgiven; walls made
# of parked robots reshape, so a closest approach recorded against them goes
# stale and would otherwise deny pursuit forever
_STRICT_RELEASE = 240

# weight of the current tick's bearing estimate in the pursuit running mean;
# 0.25 averages over roughly the last seven control ticks, well under the
# time it takes clear-path pursuit to change the true bearing by much
_LOS_BLEND = 0.25


def _clamp_turn(heading: float, desired: float, max_turn: float) -> float:
    turn = wrap_signed(desired - heading)
    if abs(turn) > max_turn:
        turn = math.copysign(max_turn, turn)
    return wrap_angle(heading + turn)


def _reachable(heading: float, thetas: np.ndarray, max_turn: float) -> np.ndarray:
    turns = np.mod(thetas - heading + math.pi, 2.0 * math.pi) - math.pi
    return np.abs(turns) <= max_turn + 1e-12


def _arc_bisector_first(start: float, width: float = math.pi / 2.0) -> np.ndarray:
    """Angles covering [start, start+width], ordered so the middle comes
    first and the endpoints last."""
    a = start + np.linspace(0.0, width, _ARC_SAMPLES)
    mid = start + width / 2.0
    order = np.argsort(np.abs(a - mid), kind="stable")
    return a[order]


def _grid_fallback(
    con: StepConstraints,
    heading: float,
    cap: float,
    max_turn: float,
    specials: list[float],
    prefer: float | None = None,
    hold: dict[str, float] | None = None,
) -> tuple[float, float]:
    thetas = np.concatenate(
        (
            np.asarray(specials, dtype=float),
            heading + 2.0 * math.pi * np.arange(GRID_DIRECTIONS) / GRID_DIRECTIONS,
        )
    )
    ok = _reachable(heading, thetas, max_turn)
    if not ok.any():
        return heading, con.evaluate_one(heading, cap)
    thetas = thetas[ok]
    # moves that keep the current spare are preferred even here: a last-resort
    # search that may trade clearance away lets the robot dig itself into a
    # masked pocket one otherwise-best step at a time
    steps = con.evaluate(thetas, cap, hold) if hold is not None else None
    if steps is None or steps.max() <= _MIN_STEP:
        steps = con.evaluate(thetas, cap)
    best = int(np.argmax(steps))
    if steps[best] <= _MIN_STEP:
        return heading, 0.0
    if prefer is not None:
        # break near-ties toward the goal bearing; a raw argmax between two
        # symmetric escape routes flips sides with the heading every tick and
        # the robot ping-pongs in place
        near = np.nonzero(steps >= steps[best] - 0.1 * cap)[0]
        devs = np.abs(np.mod(thetas[near] - prefer + math.pi, 2.0 * math.pi) - math.pi)
        best = int(near[np.argmin(devs)])
    return wrap_angle(float(thetas[best])), float(steps[best])


def _hold_margins(con: StepConstraints, margin: float) -> dict[str, float]:
    """Per-kind spare clearance an escape move must keep. A robot already
    inside the buffer cannot gain clearance along a tangent, so demanding the
    full margin there forbids the very move that would free it; holding on to
    exactly the spare it still has is enough, and kinds with real spare left
    still get the full demand. No slack below the current spare: any repeated
    allowance, however small, lets a follower ratchet itself down a concave
    pocket until nothing certifies at all. The target kind is exempt; closing
    on targets is the one clearance the robot is supposed to spend."""
    return {
        k: 0.0 if k == "g" else min(margin, max(0.0, iso))
        for k, iso in zip(con.kinds, con.iso)
    }


def _pursuit_margins(con: StepConstraints, margin: float, r_margin: float) -> dict[str, float]:
    """Like the hold margins, but never relaxed against other robots: two
    movers that both approach below the buffer can mask each other's readings
    until neither can certify any move at all, so approaches keep a firm
    demand against the one kind that moves back. r_margin need only cover the
    aggregate masking deficit at close range, not a whole tick of motion."""
    m = _hold_margins(con, margin)
    m["r"] = r_margin
    return m


def _room_probe(
    con: StepConstraints,
    heading: float,
    cap: float,
    max_turn: float,
    hold: dict[str, float] | None = None,
) -> tuple[float, float]:
    """Best certified step over a coarse bearing sweep: how much open space
    the robot still has, and which way it lies. With hold margins the sweep
    only counts moves that keep the spare the robot already has."""
    thetas = heading + 2.0 * math.pi * np.arange(_RESERVE_PROBE) / _RESERVE_PROBE
    ok = _reachable(heading, thetas, max_turn)
    if not ok.any():
        return heading, con.evaluate_one(heading, cap)
    thetas = thetas[ok]
    steps = con.evaluate(thetas, cap, hold) if hold is not None else None
    if steps is None or steps.max() <= _MIN_STEP:
        steps = con.evaluate(thetas, cap)
    best = int(np.argmax(steps))
    return wrap_angle(float(thetas[best])), float(steps[best])


def _first_positive(
    con: StepConstraints,
    thetas: np.ndarray,
    heading: float,
    cap: float,
    max_turn: float,
    floor: float = _MIN_STEP,
) -> tuple[float, float] | None:
    """First direction (in the given preference order) whose certified step
    clears floor; failing that, the best direction if it moves at all."""
    ok = _reachable(heading, thetas, max_turn)
    if not ok.any():
        return None
    thetas = thetas[ok]
    steps = con.evaluate(thetas, cap)
    hits = np.nonzero(steps >= floor)[0]
    if len(hits):
        i = int(hits[0])
        return wrap_angle(float(thetas[i])), float(steps[i])
    best = int(np.argmax(steps))
    if steps[best] > _MIN_STEP:
        return wrap_angle(float(thetas[best])), float(steps[best])
    return None


def compute_control(
    frame: SensorFrame,
    cfg: PolicyConfig,
    rng: np.random.Generator,
    cap: float,
    max_turn: float = math.pi,
    mem: PolicyMemory | None = None,
) -> Control:
    """The full minimalist controller for one tick. rng is the robot's own
    stream; it is consulted only for the dead-zone walk. mem persists across
    ticks when the caller keeps it; a fresh one is used otherwise."""
    if mem is None:
        mem = PolicyMemory()
    con = StepConstraints(frame, cfg.kernels, cfg.safe_distances, cfg.d_max)
    info = classify_zone(frame, cfg.kernels["g"], cfg.r_safe, cfg.r_encap, cfg.d_max)
    heading = frame.heading
    hold = _hold_margins(con, 2.0 * cfg.d_max)
    if info.zone != "secondary":
        mem.follow_side = 0
        mem.free_run = 0
        mem.best_goal = math.inf
        mem.block_goal = math.inf
        mem.stall = 0
        mem.strict = False
        mem.los_x = 0.0
        mem.los_y = 0.0

    triggered, best_e = boundary_trigger(frame, cfg.kernels["e"], cfg.safe_distances["e"], cfg.d_max)
    if triggered:
        phi = frame.world_bearing(best_e)
        if mem.follow_side != 0:
            # mid-detour the wall is just more of the blocker: keep walking
            # it in the committed turning sense, or a corner between wall
            # and blocker re-decides the exit every tick and pins the robot
            zeta_g, _, _ = los_direction(frame, "g")
            return _wall_follow(
                con, zeta_g, phi, mem.follow_side, heading, cap, max_turn,
                info.zone, 2.0 * cfg.d_max, label="boundary_avoid", goal_iso=con.iso[0],
            )
        half_gap = math.pi / frame.p
        start = phi + half_gap + math.pi / 2.0
        width = math.pi - 2.0 * half_gap
        thetas = _arc_bisector_first(start, width)
        pick = _first_positive(con, thetas, heading, cap, max_turn, _PROGRESS_FRACTION * cap)
        if pick is None:
            theta, step = _grid_fallback(
                con, heading, cap, max_turn, [phi + math.pi], prefer=phi + math.pi, hold=hold
            )
        else:
            theta, step = pick
        return Control(theta, step, "boundary_avoid", info.zone)

    # a step shortens each clearance by at most its own length, so when every
    # kind has at least the reserve of spare the probe cannot come up short
    if min(con.iso) >= _RESERVE_FRACTION * cap:
        room_step = cap
    else:
        room_theta, room_step = _room_probe(con, heading, cap, max_turn)
    if room_step < _RESERVE_FRACTION * cap:
        if room_step <= _MIN_STEP and min(con.iso) < 0.0:
            # aggregate masking can drop a measured floor below the keep-out
            # without the robot ever taking an uncertified step (each source
            # entering range deepens the masked reading); certification then
            # refuses every direction and the robot would stand paralyzed
            # forever, so back out along the least-bad measured direction
            length = _PROGRESS_FRACTION * cap
            thetas = heading + 2.0 * math.pi * np.arange(_RESERVE_PROBE) / _RESERVE_PROBE
            thetas = thetas[_reachable(heading, thetas, max_turn)]
            if len(thetas):
                worst = con.worst_margin(thetas, length)
                k = int(np.argmax(worst))
                return Control(wrap_angle(float(thetas[k])), length, "pressure_escape", info.zone)
        return Control(room_theta, room_step, "pressure_escape", info.zone)

    if info.zone == "dead":
        zr = frame.readings["r"]
        if np.any(zr > 0.0):
            center = frame.world_bearing(int(np.argmin(zr)))
            desired = center + rng.uniform(-math.pi / 2.0, math.pi / 2.0)
        else:
            desired = rng.uniform(0.0, 2.0 * math.pi)
        theta = _clamp_turn(heading, desired, max_turn)
        return Control(theta, con.evaluate_one(theta, cap), "dead_walk", "dead")

    zeta, _, _ = los_direction(frame, "g")

    if info.zone == "safety_violation":
        theta = _clamp_turn(heading, zeta + math.pi, max_turn)
        step = con.evaluate_one(theta, cap)
        if step <= _MIN_STEP:
            theta, step = _grid_fallback(
                con, heading, cap, max_turn, [zeta + math.pi], prefer=zeta + math.pi, hold=hold
            )
        return Control(theta, step, "ring_out", info.zone)

    if info.zone == "secondary":
        floor = _PROGRESS_FRACTION * cap
        # pursuit keeps this much spare certified clearance so that a tickful
        # of concurrent neighbor motion cannot erase its ability to move
        buffer = 2.0 * cfg.d_max
        mem.los_x = _LOS_BLEND * math.cos(zeta) + (1.0 - _LOS_BLEND) * mem.los_x
        mem.los_y = _LOS_BLEND * math.sin(zeta) + (1.0 - _LOS_BLEND) * mem.los_y
        if math.hypot(mem.los_x, mem.los_y) > 1e-9:
            steer = math.atan2(mem.los_y, mem.los_x) % (2.0 * math.pi)
        else:
            steer = zeta
        theta = _clamp_turn(heading, steer, max_turn)
        goal_iso = con.iso[0]
        # the robot moves at most a capful between control ticks, so the
        # measured goal clearance drifts smoothly; a large upward jump means
        # a source switched off and any recorded closest approach is void
        if goal_iso > mem.last_goal + 4.0 * cfg.d_max:
            mem.best_goal = goal_iso
            mem.block_goal = math.inf
            mem.stall = 0
            mem.strict = False
            mem.strict_age = 0
        mem.last_goal = goal_iso
        # a one-step room test alone reopens at the mouth of a dead-end
        # pocket and the robot dives back in forever, but demanding strict
        # goal progress for every resumption starves pursuit behind moving
        # traffic; so pursuit runs freely until repeated blocks show no net
        # progress, and only then must it resume strictly closer to the goal
        # than the closest approach recorded so far
        gate = (
            not mem.strict
            or mem.follow_side == 0
            or goal_iso < mem.best_goal - 1e-12
        )
        if gate:
            step = con.evaluate_one(theta, cap, _pursuit_margins(con, buffer, cfg.d_max))
            if step >= floor:
                # only full-speed running is evidence the wall is behind;
                # slow pokes also certify but happen at dead-end mouths, and
                # releasing on them flips the committed side back and forth
                if step >= 0.8 * cap:
                    mem.free_run += 1
                mem.best_goal = min(mem.best_goal, goal_iso)
                mem.strict_age = 0
                if mem.free_run > _FREE_RUN_RELEASE:
                    mem.follow_side = 0
                    mem.best_goal = math.inf
                    mem.block_goal = math.inf
                    mem.stall = 0
                    mem.strict = False
                return Control(theta, step, "los_pursuit", info.zone)
            if mem.follow_side != 0:
                if goal_iso >= mem.block_goal - cfg.d_max:
                    mem.stall += 1
                    if mem.stall >= _STALL_LIMIT and not mem.strict:
                        # demand progress from here on; the approach history
                        # from before the thrash is not trustworthy because
                        # the blocking material may have moved since
                        mem.strict = True
                        mem.best_goal = goal_iso
                        mem.strict_age = 0
                        mem.stall = 0
                else:
                    mem.stall = 0
                mem.block_goal = min(mem.block_goal, goal_iso)
        else:
            mem.strict_age += 1
            if mem.strict_age > _STRICT_RELEASE:
                mem.strict = False
                mem.strict_age = 0
                mem.stall = 0
                mem.best_goal = math.inf
                mem.block_goal = math.inf
        mem.free_run = 0
        # approach throttled: circle whatever is in the way. The wall to
        # follow is re-read every tick (it morphs from an obstacle into a
        # ring and back as the robot rounds a cluster) but the turning sense
        # is held until pursuit actually clears.
        blockers = []
        for kind in ("r", "o"):
            if np.any(frame.readings[kind] > 0.0):
                zeta_b, _, _ = los_direction(frame, kind)
                dev = abs(wrap_signed(zeta_b - zeta))
                blockers.append((dev, kind, zeta_b))
        blockers.sort(key=lambda b: b[0])
        pick = None
        if mem.follow_side != 0 and blockers:
            pick = blockers[0]
        elif blockers and blockers[0][0] <= math.pi / 2.0:
            pick = blockers[0]
            cw_dev = abs(wrap_signed(pick[2] - math.pi / 2.0 - zeta))
            ccw_dev = abs(wrap_signed(pick[2] + math.pi / 2.0 - zeta))
            mem.follow_side = -1 if cw_dev <= ccw_dev else 1
            mem.best_goal = goal_iso
            mem.block_goal = goal_iso
            mem.stall = 0
            mem.strict = False
        if pick is not None:
            return _wall_follow(
                con, zeta, pick[2], mem.follow_side, heading, cap, max_turn, info.zone,
                buffer, goal_iso=goal_iso,
            )
        mem.follow_side = 0
        mem.best_goal = math.inf
        mem.block_goal = math.inf
        mem.stall = 0
        mem.strict = False
        cand = (wrap_angle(zeta + math.pi / 2.0), wrap_angle(zeta - math.pi / 2.0))
        clamped = [_clamp_turn(heading, t, max_turn) for t in cand]
        certified = [con.evaluate_one(t, cap, hold) for t in clamped]
        # pick the side with clearly more room; a near-tie keeps the side the
        # robot is already facing so open ground does not turn into zigzag
        if abs(certified[0] - certified[1]) > 0.2 * cap:
            order = sorted(range(2), key=lambda k: -certified[k])
        else:
            order = sorted(range(2), key=lambda k: abs(wrap_signed(cand[k] - heading)))
        for k in order:
            if certified[k] >= floor:
                return Control(clamped[k], certified[k], "tangential", info.zone)
        theta, step = _grid_fallback(
            con,
            heading,
            cap,
            max_turn,
            [zeta, zeta + math.pi / 2.0, zeta - math.pi / 2.0],
            prefer=zeta,
            hold=hold,
        )
        return Control(theta, step, "max_step_fallback", info.zone)

    # ring zone: alternate between closing in and backing off. Depth is judged
    # by the reading of the sensor best aligned with the source bearing versus
    # what that sensor would report parked at the orbit set-point: a single
    # reading crosses a fixed reference with even odds at the set-point under
    # any multiplicative noise level, whereas a simplex-magnitude comparison
    # folds noise into its norm and drifts the orbit outward
    set_point = cfg.r_encap - _ORBIT_DEPTH * cfg.d_max
    ref = cfg.kernels["g"].evaluate(set_point - frame.radius)
    fwd = int(np.argmax(np.cos(frame.heading + frame.body_angles - zeta)))
    approach = float(frame.readings["g"][fwd]) <= ref
    # robots park where they first hit the band, so without an explicit
    # spreading term they bunch into a picket that latecomers cannot pass;
    # slide along the ring away from the local crowd while holding the band
    if np.any(frame.readings["r"] > 0.0):
        zeta_r, _, _ = los_direction(frame, "r")
        slide = math.pi / 2.0 if wrap_signed(zeta_r - zeta) < 0.0 else -math.pi / 2.0
    else:
        slide = math.pi / 2.0
    if approach:
        desired = [zeta + 0.5 * slide, zeta, zeta - 0.5 * slide]
        tag = "ring_in"
    else:
        desired = [zeta + math.pi - 0.5 * slide, zeta + math.pi, zeta + math.pi + 0.5 * slide]
        tag = "ring_out"
    for want in desired:
        pick = _first_positive(
            con, _arc_bisector_first(want - math.pi / 4.0), heading, cap, max_turn
        )
        if pick is not None:
            return Control(pick[0], pick[1], tag, info.zone)
    theta, step = _grid_fallback(
        con,
        heading,
        cap,
        max_turn,
        [zeta, zeta + math.pi],
        prefer=zeta if approach else zeta + math.pi,
        hold=hold,
    )
    return Control(theta, step, "max_step_fallback", info.zone)


def _wall_follow(
    con: StepConstraints,
    zeta: float,
    zeta_b: float,
    side: int,
    heading: float,
    cap: float,
    max_turn: float,
    zone: str,
    margin: float,
    label: str = "wall_follow",
    goal_iso: float = math.inf,
) -> Control:
    """Skirt a blocker: move along its tangent on the committed side, and
    when the tangent itself is blocked (a concave corner between two
    keep-outs) rotate outward in that same turning sense until a direction
    clears. Never probing the opposite sense is what makes the follower
    circumnavigate instead of retracing its arc."""
    floor = _PROGRESS_FRACTION * cap
    margins = _hold_margins(con, margin)
    tangent = wrap_angle(zeta_b + side * math.pi / 2.0)
    # far from the goal a detour should run at speed, rotating out to the
    # first near-full step; close in it must hug the contour even at a
    # crawl, or it skims straight past the narrow slot it is looking for
    hug = goal_iso <= 2.0
    best: tuple[float, float] | None = None
    for k in range(7):
        theta = _clamp_turn(heading, zeta_b + side * (math.pi / 2.0 + k * math.pi / 8.0), max_turn)
        step = con.evaluate_one(theta, cap, margins)
        if step >= floor and hug:
            return Control(theta, step, label, zone)
        if step >= 0.8 * cap:
            return Control(theta, step, label, zone)
        if best is None or step > best[1]:
            best = (theta, step)
    if best is not None and best[1] >= floor:
        return Control(best[0], best[1], label, zone)
    theta, step = _grid_fallback(
        con, heading, cap, max_turn, [tangent, zeta], prefer=tangent, hold=margins
    )
    return Control(theta, step, "max_step_fallback", zone)
