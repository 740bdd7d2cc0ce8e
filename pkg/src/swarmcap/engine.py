"""Tick loop: snapshot sensing, per-robot control, simultaneous application,
encapsulation bookkeeping, violation accounting, and livelock detection.

All randomness flows from one seed through independent per-robot streams, so
a run is a pure function of (scenario, seed, scheduler, max_ticks) and robot
count or scheduler changes never reshuffle another robot's draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from swarmcap.geometry import segments_intersect_disks
from swarmcap.gradients import classify_zone
from swarmcap.policy import Control, PolicyConfig, PolicyMemory, compute_control
from swarmcap.safety import StepConstraints
from swarmcap.signals import (
    SensorFrame,
    SignalKernel,
    scan,
    truncated_noise_sample,
    wall_reading,
)
from swarmcap.world import Scenario

LIVELOCK_WINDOW = 8
LIVELOCK_EPS = 1e-9
LIVELOCK_STREAK = 200

_ZONE_DEFAULT_BEHAVIOR = {
    "dead": "dead_walk",
    "secondary": "los_pursuit",
    "ring": "ring_in",
    "safety_violation": "ring_out",
}


@dataclass
class Metrics:
    success: bool
    completion_tick: int | None
    ticks: int
    violations: dict[str, int]
    livelocks: int
    targets_done: int
    targets_total: int
    frozen: int

    def as_dict(self) -> dict:
        return {
            "success": self.success,
            "completion_tick": self.completion_tick,
            "ticks": self.ticks,
            "violations": {k: self.violations[k] for k in ("g", "r", "o", "e")},
            "livelocks": self.livelocks,
            "targets_done": self.targets_done,
            "targets_total": self.targets_total,
            "frozen": self.frozen,
        }


@dataclass
class WorldState:
    """Mutable run state; scenarios stay frozen.

    o_emitter marks frozen robots that have switched their emission from
    robot-kind to obstacle-kind. The switch waits until no moving robot is
    inside the obstacle safety distance: flipping earlier would demand a
    clearance from bystanders that freezing next to them just destroyed,
    leaving them provably unable to move at all. Once flipped it stays
    flipped; certified motion keeps everyone outside from then on."""

    pos: np.ndarray  # (n, 2)
    heading: np.ndarray  # (n,)
    frozen: np.ndarray  # (n,) bool
    active: np.ndarray  # (m,) bool
    o_emitter: np.ndarray  # (n,) bool
    tick: int = 0
    zone_label: list[str] = field(default_factory=list)
    behavior_label: list[str] = field(default_factory=list)


def _fmt(x: float) -> str:
    return f"{x:.9g}"


class Simulation:
    def __init__(
        self,
        scenario: Scenario,
        *,
        seed: int | None = None,
        scheduler: str | None = None,
        max_ticks: int | None = None,
    ):
        s = scenario
        self.scenario = s
        self.n = len(s.robots)
        self.m = len(s.targets)
        self.seed = s.seed if seed is None else seed
        self.scheduler = scheduler or s.task.scheduler
        if self.scheduler not in ("synchronous", "asynchronous"):
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        self.max_ticks = s.task.max_ticks if max_ticks is None else max_ticks

        self.kernels = {k: SignalKernel.from_spec(v) for k, v in s.kernels.items()}
        t0 = s.targets[0]
        self.cfg = PolicyConfig(
            kernels=self.kernels,
            safe_distances=dict(s.task.safe_distances),
            r_safe=t0.safe_radius,
            r_encap=t0.encap_radius,
            d_max=s.task.max_step,
        )
        self.t_centers = np.asarray([t.center for t in s.targets], dtype=float).reshape(-1, 2)
        self.t_safe = np.asarray([t.safe_radius for t in s.targets])
        self.t_encap = np.asarray([t.encap_radius for t in s.targets])
        self.t_quota = np.asarray([t.quota for t in s.targets], dtype=int)
        self.o_centers = np.asarray([o.center for o in s.obstacles], dtype=float).reshape(-1, 2)
        self.radii = np.asarray([r.radius for r in s.robots])
        self.max_speed = np.asarray([r.max_speed for r in s.robots])
        self.max_turn = np.asarray([r.max_turn_rate for r in s.robots])
        self.body_angles = [np.asarray(r.sensor_angles, dtype=float) for r in s.robots]
        self.homogeneous = all(
            len(a) == len(self.body_angles[0]) and np.allclose(a, self.body_angles[0])
            for a in self.body_angles
        ) and bool(np.all(self.radii == self.radii[0]))

        ss = np.random.SeedSequence(self.seed)
        children = ss.spawn(self.n + 1)
        eng = np.random.default_rng(children[0])
        self.robot_rngs = [np.random.default_rng(children[i + 1]) for i in range(self.n)]
        if self.scheduler == "asynchronous":
            self.period = eng.integers(1, 4, self.n)
            self.phase = eng.integers(0, self.period)
            self.speed = eng.uniform(0.5, 1.0, self.n)
        else:
            self.period = np.ones(self.n, dtype=int)
            self.phase = np.zeros(self.n, dtype=int)
            self.speed = np.ones(self.n)

        self.state = WorldState(
            pos=np.asarray([r.center for r in s.robots], dtype=float).copy(),
            heading=np.asarray([r.heading for r in s.robots], dtype=float).copy(),
            frozen=np.zeros(self.n, dtype=bool),
            active=np.asarray([t.active for t in s.targets], dtype=bool).copy(),
            o_emitter=np.zeros(self.n, dtype=bool),
        )
        self.violations = {"g": 0, "r": 0, "o": 0, "e": 0}
        self.livelocked: set[int] = set()
        self._hist: list[np.ndarray] = [self.state.pos.copy()]
        self._streak = np.zeros(self.n, dtype=int)
        self._completion: int | None = None
        self._mem = [PolicyMemory() for _ in range(self.n)]
        self._cage_of = np.full(self.n, -1, dtype=int)  # target a frozen robot encircles
        self._viol_iu = np.triu_indices(self.n, 1)
        self._init_labels()

    # -- sensing -----------------------------------------------------------

    def _source_sets(self):
        st = self.state
        g = self.t_centers[st.active] if st.active.any() else np.zeros((0, 2))
        emit_r = ~st.o_emitter
        r_src = st.pos[emit_r]
        r_src_ids = np.nonzero(emit_r)[0]
        if st.o_emitter.any():
            o_src = (
                np.vstack((self.o_centers, st.pos[st.o_emitter]))
                if len(self.o_centers)
                else st.pos[st.o_emitter]
            )
        else:
            o_src = self.o_centers
        return g, r_src, r_src_ids, o_src

    def _occluder_rows(self):
        """(n + w, 3) body disks: robots first, then true obstacles."""
        st = self.state
        rob = np.column_stack((st.pos, self.radii))
        if len(self.o_centers):
            obs = np.column_stack(
                (self.o_centers, np.asarray([o.radius for o in self.scenario.obstacles]))
            )
            return np.vstack((rob, obs))
        return rob

    def _scan_robot(self, i: int, g, r_src, r_src_ids, o_src, *, noise: bool) -> SensorFrame:
        st = self.state
        eta = self.scenario.task.occlusion_eta
        occluders = None
        source_map = None
        if eta < 1.0:
            occluders = self._occluder_rows()
            n_oe = int(st.o_emitter.sum())
            o_map = np.concatenate(
                (
                    np.arange(len(self.o_centers)) + self.n,
                    np.nonzero(st.o_emitter)[0],
                )
            ) if n_oe else (np.arange(len(self.o_centers)) + self.n)
            source_map = {"r": r_src_ids, "o": np.asarray(o_map, dtype=int)}
        mask = r_src_ids != i
        o_keep = np.ones(len(o_src), dtype=bool)
        if st.o_emitter[i]:
            # a robot never hears itself, whichever kind it emits
            own = len(self.o_centers) + int(np.nonzero(np.nonzero(st.o_emitter)[0] == i)[0][0])
            o_keep[own] = False
        return scan(
            st.pos[i],
            st.heading[i],
            float(self.radii[i]),
            self.body_angles[i],
            {"g": g, "r": r_src[mask], "o": o_src[o_keep]},
            self.kernels,
            self.scenario.boundary,
            eta=eta,
            occluders=occluders,
            source_occluder_index=(
                {"r": source_map["r"][mask], "o": source_map["o"][o_keep]} if source_map else None
            ),
            self_occluder=i if occluders is not None else None,
            noise_sigma=self.scenario.task.noise_sigma if noise else None,
            rng=self.robot_rngs[i] if noise else None,
        )

    def _scan_batch(self, indices: np.ndarray, *, noise: bool) -> list[SensorFrame]:
        """Batched sensing for homogeneous fleets; falls back to per-robot
        scans otherwise or when occlusion rays are needed."""
        st = self.state
        g, r_src, r_src_ids, o_src = self._source_sets()
        eta = self.scenario.task.occlusion_eta
        if not self.homogeneous:
            return [self._scan_robot(i, g, r_src, r_src_ids, o_src, noise=noise) for i in indices]

        angles = self.body_angles[0]
        p = len(angles)
        r_r = float(self.radii[0])
        nb = len(indices)
        head = st.heading[indices]
        world_ang = head[:, None] + angles[None, :]
        sx = st.pos[indices, 0][:, None] + r_r * np.cos(world_ang)
        sy = st.pos[indices, 1][:, None] + r_r * np.sin(world_ang)
        pos = np.stack((sx, sy), axis=-1)  # (nb, p, 2)

        occluders = self._occluder_rows() if eta < 1.0 else None

        readings: dict[str, np.ndarray] = {}
        for kind, pts in (("g", g), ("r", r_src), ("o", o_src)):
            kern = self.kernels[kind]
            if len(pts) == 0:
                readings[kind] = np.zeros((nb, p))
                continue
            d = np.hypot(sx[:, :, None] - pts[None, None, :, 0], sy[:, :, None] - pts[None, None, :, 1])
            vals = kern.evaluate(d)  # (nb, p, N)
            if kind == "r":
                # a robot never hears itself
                col_of = {rid: j for j, rid in enumerate(r_src_ids)}
                for bi, i in enumerate(indices):
                    j = col_of.get(int(i))
                    if j is not None:
                        vals[bi, :, j] = 0.0
            elif kind == "o" and st.o_emitter.any():
                base = len(self.o_centers)
                col_of = {rid: base + j for j, rid in enumerate(np.nonzero(st.o_emitter)[0])}
                for bi, i in enumerate(indices):
                    j = col_of.get(int(i))
                    if j is not None:
                        vals[bi, :, j] = 0.0
            if occluders is not None:
                vals = self._attenuate_batch(vals, pos, pts, kind, indices, r_src_ids, occluders, eta)
            readings[kind] = vals.sum(axis=-1)

        kern_e = self.kernels["e"]
        ze = np.zeros((nb, p))
        wdist = np.minimum(
            np.minimum(sx, sy),
            np.minimum(self.scenario.boundary[0] - sx, self.scenario.boundary[1] - sy),
        )
        near = wdist < kern_e.beta
        if near.any():
            for bi, k in zip(*np.nonzero(near)):
                ze[bi, k] = wall_reading(
                    float(pos[bi, k, 0]),
                    float(pos[bi, k, 1]),
                    self.scenario.boundary,
                    kern_e,
                    eta=eta,
                    occluders=occluders,
                    skip=int(indices[bi]),
                )
        readings["e"] = ze

        if noise:
            sig = self.scenario.task.noise_sigma
            for bi, i in enumerate(indices):
                for kind in ("g", "r", "o", "e"):
                    sv = sig.get(kind, 0.0)
                    if sv > 0.0:
                        nvec = truncated_noise_sample(self.robot_rngs[int(i)], sv, p)
                        readings[kind][bi] = (1.0 - nvec) * readings[kind][bi]

        frames = []
        for bi, i in enumerate(indices):
            frames.append(
                SensorFrame(
                    center=(float(st.pos[i, 0]), float(st.pos[i, 1])),
                    heading=float(st.heading[i]),
                    radius=r_r,
                    body_angles=angles,
                    positions=pos[bi],
                    readings={k: readings[k][bi] for k in ("g", "r", "o", "e")},
                )
            )
        return frames

    def _attenuate_batch(self, vals, pos, pts, kind, indices, r_src_ids, occluders, eta):
        nb, p, N = vals.shape
        p0 = np.repeat(pos.reshape(nb * p, 2), N, axis=0)
        p1 = np.tile(pts, (nb * p, 1))
        mask = segments_intersect_disks(p0, p1, occluders)  # (nb*p*N, M)
        mask = mask.reshape(nb, p, N, -1)
        # the sensing robot's own body never blocks its rays
        for bi, i in enumerate(indices):
            mask[bi, :, :, int(i)] = False
        # emitters do not block their own signal
        if kind == "r":
            for j, rid in enumerate(r_src_ids):
                mask[:, :, j, int(rid)] = False
        elif kind == "o":
            n_obs = len(self.o_centers)
            emitter_ids = np.nonzero(self.state.o_emitter)[0]
            for j in range(N):
                if j < n_obs:
                    mask[:, :, j, self.n + j] = False
                else:
                    mask[:, :, j, int(emitter_ids[j - n_obs])] = False
        blocked = mask.any(axis=-1)
        return np.where(blocked, vals * eta, vals)

    # -- labels --------------------------------------------------------------

    def _init_labels(self):
        st = self.state
        frames = self._scan_batch(np.arange(self.n), noise=False)
        st.zone_label = []
        st.behavior_label = []
        for i, fr in enumerate(frames):
            info = classify_zone(
                fr, self.kernels["g"], self.cfg.r_safe, self.cfg.r_encap, self.cfg.d_max
            )
            st.zone_label.append(info.zone)
            st.behavior_label.append(_ZONE_DEFAULT_BEHAVIOR[info.zone])

    # -- one tick ------------------------------------------------------------

    def _update_emitters(self):
        st = self.state
        pending = st.frozen & ~st.o_emitter
        if not pending.any():
            return
        movers = np.nonzero(~st.frozen)[0]
        d_max = self.scenario.task.max_step
        margin = self.scenario.task.safe_distances["o"] + 2.0 * d_max
        spare = 2.0 * d_max
        reach = self.kernels["o"].beta + 1.0
        for i in np.nonzero(pending)[0]:
            if len(movers):
                j = int(self._cage_of[i])
                dc = np.hypot(
                    st.pos[movers, 0] - self.t_centers[j, 0],
                    st.pos[movers, 1] - self.t_centers[j, 1],
                )
                # a bystander inside or skirting the circle can still slip
                # between same-kind neighbours, but not once they harden, so
                # the whole circle stays soft while anyone is that close
                if float(dc.min()) < float(self.t_encap[j]) + margin:
                    continue
                d = np.hypot(st.pos[movers, 0] - st.pos[i, 0], st.pos[movers, 1] - st.pos[i, 1])
                if float(d.min()) < margin:
                    continue
                # true distance alone is not enough: a bystander's aggregate
                # reading can mask several emitters into one deceptively near
                # wall, so the flip also waits until no mover in sensing range
                # would lose certified room it does not comfortably have
                near = movers[d < reach]
                if len(near):
                    pre = self._scan_batch(near, noise=False)
                    st.o_emitter[i] = True
                    try:
                        post = self._scan_batch(near, noise=False)
                    finally:
                        st.o_emitter[i] = False
                    args = (self.kernels, self.scenario.task.safe_distances, d_max)
                    ok = True
                    for fp, fq in zip(pre, post):
                        iso_pre = StepConstraints(fp, *args).iso[2]
                        iso_post = StepConstraints(fq, *args).iso[2]
                        # both sides of the flip must leave real room: the
                        # standing-still disk floors the clearance at zero, so
                        # a no-worsening test alone is vacuous for a mover
                        # that is already pressed against the masked wall
                        if iso_pre < spare or iso_post < spare:
                            ok = False
                            break
                    if not ok:
                        continue
            st.o_emitter[int(i)] = True

    def step_tick(self) -> None:
        st = self.state
        st.tick += 1
        T = st.tick
        self._update_emitters()
        due = (~st.frozen) & (((T + self.phase) % self.period) == 0)
        idx = np.nonzero(due)[0]

        controls: dict[int, Control] = {}
        if len(idx):
            frames = self._scan_batch(idx, noise=True)
            for fr, i in zip(frames, idx):
                cap = self.scenario.task.max_step * float(self.max_speed[i]) * float(self.speed[i])
                ctrl = compute_control(
                    fr,
                    self.cfg,
                    self.robot_rngs[int(i)],
                    cap,
                    float(self.max_turn[i]),
                    self._mem[int(i)],
                )
                controls[int(i)] = ctrl

        for i, ctrl in controls.items():
            st.heading[i] = ctrl.theta
            st.pos[i, 0] += ctrl.step * math.cos(ctrl.theta)
            st.pos[i, 1] += ctrl.step * math.sin(ctrl.theta)
            st.zone_label[i] = ctrl.zone
            st.behavior_label[i] = ctrl.behavior

        self._encapsulate()
        self._count_violations()
        self._detect_livelock()

        if not st.active.any() and self._completion is None:
            self._completion = T

    def _encapsulate(self):
        st = self.state
        for j in range(self.m):
            if not st.active[j]:
                continue
            d = np.hypot(st.pos[:, 0] - self.t_centers[j, 0], st.pos[:, 1] - self.t_centers[j, 1])
            ring = (d > self.t_safe[j]) & (d <= self.t_encap[j]) & ~st.frozen
            if int(ring.sum()) >= int(self.t_quota[j]):
                st.active[j] = False
                # only the quota joins the cage; surplus robots stay free,
                # otherwise a crowded ring strands a later target below its
                # own quota. Sluggish robots are kept preferentially so the
                # mobile ones remain available for the targets still open.
                ids = np.nonzero(ring)[0]
                mobility = self.speed[ids] / self.period[ids]
                order = np.lexsort((d[ids], mobility))
                keep = ids[order][: int(self.t_quota[j])]
                st.frozen[keep] = True
                self._cage_of[keep] = j
                for i in keep:
                    st.behavior_label[int(i)] = "frozen"
                    st.zone_label[int(i)] = "ring"

    def _count_violations(self):
        st = self.state
        safe = self.scenario.task.safe_distances
        pos = st.pos
        n = self.n
        if n > 1:
            dx = pos[:, 0][:, None] - pos[:, 0][None, :]
            dy = pos[:, 1][:, None] - pos[:, 1][None, :]
            d = np.hypot(dx, dy)
            self.violations["r"] += int(np.count_nonzero(d[self._viol_iu] < safe["r"]))
        if st.active.any():
            tc = self.t_centers[st.active]
            ts = self.t_safe[st.active]
            d = np.hypot(pos[:, 0][:, None] - tc[None, :, 0], pos[:, 1][:, None] - tc[None, :, 1])
            self.violations["g"] += int(np.count_nonzero(d < ts[None, :]))
        if len(self.o_centers):
            d = np.hypot(
                pos[:, 0][:, None] - self.o_centers[None, :, 0],
                pos[:, 1][:, None] - self.o_centers[None, :, 1],
            )
            self.violations["o"] += int(np.count_nonzero(d < safe["o"]))
        w, h = self.scenario.boundary
        wdist = np.minimum(np.minimum(pos[:, 0], pos[:, 1]), np.minimum(w - pos[:, 0], h - pos[:, 1]))
        self.violations["e"] += int(np.count_nonzero(wdist < safe["e"]))

    def _detect_livelock(self):
        st = self.state
        best = np.full(self.n, np.inf)
        for old in self._hist:
            d = np.hypot(st.pos[:, 0] - old[:, 0], st.pos[:, 1] - old[:, 1])
            np.minimum(best, d, out=best)
        repeat = best <= LIVELOCK_EPS
        self._streak = np.where(repeat, self._streak + 1, 0)
        if st.active.any():
            hits = np.nonzero((~st.frozen) & (self._streak > LIVELOCK_STREAK))[0]
            self.livelocked.update(int(i) for i in hits)
        self._hist.append(st.pos.copy())
        if len(self._hist) > LIVELOCK_WINDOW:
            self._hist.pop(0)

    # -- driving -------------------------------------------------------------

    def run(self, traj_path: str | None = None) -> Metrics:
        writer = None
        fh = None
        if traj_path is not None:
            fh = open(traj_path, "w", newline="")
            fh.write("T,id,x,y,gamma,zone,behavior\n")
            writer = fh
        try:
            if writer is not None:
                self._write_traj(writer, 0)
            for _ in range(self.max_ticks):
                self.step_tick()
                if writer is not None:
                    self._write_traj(writer, self.state.tick)
                if self._completion is not None:
                    break
        finally:
            if fh is not None:
                fh.close()
        return self.metrics()

    def _write_traj(self, fh, T: int):
        st = self.state
        for i in range(self.n):
            fh.write(
                f"{T},{i},{_fmt(st.pos[i, 0])},{_fmt(st.pos[i, 1])},"
                f"{_fmt(st.heading[i] % (2.0 * math.pi))},"
                f"{st.zone_label[i]},{st.behavior_label[i]}\n"
            )

    def metrics(self) -> Metrics:
        st = self.state
        done = int(np.count_nonzero(~st.active))
        return Metrics(
            success=bool(not st.active.any()),
            completion_tick=self._completion,
            ticks=st.tick,
            violations=dict(self.violations),
            livelocks=len(self.livelocked),
            targets_done=done,
            targets_total=self.m,
            frozen=int(st.frozen.sum()),
        )


def run(
    scenario: Scenario,
    *,
    seed: int | None = None,
    scheduler: str | None = None,
    max_ticks: int | None = None,
    traj_path: str | None = None,
) -> Metrics:
    """Simulate one scenario to completion or the tick budget and return its
    metrics. Deterministic in (scenario, seed, scheduler, max_ticks)."""
    sim = Simulation(scenario, seed=seed, scheduler=scheduler, max_ticks=max_ticks)
    return sim.run(traj_path=traj_path)
