"""Collision-safety geometry: worst-case source positioning, per-direction
step caps, and the closed-form design bounds that make one-tick lookahead
sufficient.

Everything here reasons only from intensities and sensor geometry. The
soundness story for one frame: each sensor reading lower-bounds the distance
from that sensor to every source of its kind (a silent sensor certifies the
full cutoff radius), so all sources lie outside the union of those per-sensor
disks. A step is certified by burying the keep-out ball of its endpoint
inside that union.
"""

from __future__ import annotations

import math

import numpy as np

from swarmcap.signals import SensorFrame, SignalKernel

INF = float("inf")


def virtual_source_distance(d_sk: float, r_r: float, half_gap: float) -> float:
    """Center-frame distance to a source read at distance d_sk by the nearest
    sensor, under the worst angular placement (half the largest sensor gap).

    Raises ValueError when d_sk < r_r * sin(half_gap): no source position is
    consistent with such a reading at the stated gap."""
    s = r_r * math.sin(half_gap)
    rad = d_sk * d_sk - s * s
    if rad < 0.0:
        raise ValueError(
            f"reading distance {d_sk:.6g} inconsistent with sensor ring "
            f"(needs >= {s:.6g})"
        )
    return r_r * math.cos(half_gap) + math.sqrt(rad)


def step_bound_primary(d_sk: float, R: float, r_r: float, delta: float) -> float:
    """Largest center step in a direction offset delta from the sensor
    bearing that keeps the center at least R from any source on the implied
    circle of radius d_sk around that sensor. Zero when no positive step (or
    none at all) can be certified."""
    gap = d_sk - R
    if gap <= 0.0:
        return 0.0
    rad = gap * gap - (r_r * math.sin(delta)) ** 2
    if rad < 0.0:
        return 0.0
    d = r_r * math.cos(delta) + math.sqrt(rad)
    return max(0.0, d)


def step_bound_primary_many(d_sk: float, R: float, r_r: float, deltas: np.ndarray) -> np.ndarray:
    gap = d_sk - R
    if gap <= 0.0:
        return np.zeros_like(deltas)
    rad = gap * gap - (r_r * np.sin(deltas)) ** 2
    ok = rad >= 0.0
    out = np.zeros_like(deltas)
    out[ok] = r_r * np.cos(deltas[ok]) + np.sqrt(rad[ok])
    return np.maximum(out, 0.0)


def disk_step_cap(b0: float, psi: float, keep_out: float) -> float:
    """Largest step along a ray whose origin sits b0 from a keep-out disk
    center at bearing offset psi; the step endpoint must stay outside the
    disk. inf when the ray never enters it."""
    if b0 <= keep_out:
        return 0.0
    rad = keep_out * keep_out - (b0 * math.sin(psi)) ** 2
    if rad <= 0.0 or math.cos(psi) <= 0.0:
        return INF
    return b0 * math.cos(psi) - math.sqrt(rad)


def disk_step_cap_many(b0: float, psis: np.ndarray, keep_out: float) -> np.ndarray:
    out = np.full_like(psis, INF)
    if b0 <= keep_out:
        out[:] = 0.0
        return out
    rad = keep_out * keep_out - (b0 * np.sin(psis)) ** 2
    hit = (rad > 0.0) & (np.cos(psis) > 0.0)
    out[hit] = b0 * np.cos(psis[hit]) - np.sqrt(rad[hit])
    return out


def global_step_bound(r_r: float, r_safe: float, p: int) -> float:
    """Design ceiling on the per-tick step so that two mutually approaching
    robots always retain a positive certified step before reaching the safety
    distance. The task max_step must stay strictly below this."""
    c = math.cos(math.pi / p)
    chord = math.sqrt(r_safe * r_safe + r_r * r_r - 2.0 * r_r * r_safe * c)
    return (r_safe + r_r * c) / 2.0 - chord / 2.0


def robot_influence_band(r_r: float, r_safe: float, p: int, d_max: float) -> tuple[float, float]:
    """Open interval of admissible robot-kernel cutoffs: wide enough that a
    robot hears a neighbor before a single mutual step can close the safety
    gap, narrow enough that the implied-distance floor stays invertible."""
    c = math.cos(math.pi / p)
    chord = math.sqrt(r_safe * r_safe + r_r * r_r - 2.0 * r_r * r_safe * c)
    return chord + 2.0 * d_max, r_safe + r_r * c


# ---------------------------------------------------------------------------
# implied distances


def clamped_inverse(kernel: SignalKernel, z: float) -> float:
    """Kernel inversion tolerant of noise-deflated or inflated readings:
    intensities below the cutoff floor read as at-horizon, everything else
    inverts normally."""
    floor = kernel.evaluate(kernel.beta)
    if z <= floor:
        return kernel.beta
    return kernel.inverse(z)


def straight_wall_intensity(a: float, kernel: SignalKernel) -> float:
    """Closed-form line integral of the inverse-square kernel along an
    infinite straight wall at perpendicular distance a, windowed by the
    cutoff: (2C/a) * atan(sqrt(beta^2 - a^2) / a)."""
    if a >= kernel.beta:
        return 0.0
    return (2.0 * kernel.C / a) * math.atan(math.sqrt(kernel.beta**2 - a * a) / a)


def wall_distance_bound(z: float, kernel: SignalKernel) -> float:
    """Conservative perpendicular wall distance implied by an integrated
    boundary reading. Inverts the straight-wall profile, which the true
    rectangle reading always meets or exceeds, so the bound never
    overestimates the room available."""
    if z <= 0.0:
        return kernel.beta
    if kernel.family != "inverse-square":
        raise ValueError("wall inversion defined for the inverse-square kernel")
    lo, hi = 1e-9, kernel.beta
    if z <= straight_wall_intensity(hi * (1 - 1e-12), kernel):
        return kernel.beta
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if straight_wall_intensity(mid, kernel) > z:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# the certified step


def implied_floors(kernel: SignalKernel, z: np.ndarray) -> np.ndarray:
    """Per-sensor lower bounds on the distance from each sensor to every
    source sharing the kernel's kind. Aggregation can only raise a reading,
    so inverting it bounds each contributing source from below; a silent
    sensor certifies the full cutoff radius."""
    z = np.asarray(z, dtype=float)
    out = np.full(z.shape, kernel.beta)
    loud = z > 0.0
    if not loud.any():
        return out
    if kernel.family == "inverse-square":
        out[loud] = np.sqrt(kernel.C / z[loud])
    else:
        out[loud] = [clamped_inverse(kernel, float(v)) for v in z[loud]]
    return np.clip(out, 1e-9, kernel.beta)


_PAIR_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _pair_indices(k: int) -> tuple[np.ndarray, np.ndarray]:
    # unions are rebuilt every control tick with the same handful of disks,
    # so the index scaffolding dwarfs the arithmetic unless it is reused
    got = _PAIR_CACHE.get(k)
    if got is None:
        got = _PAIR_CACHE[k] = np.triu_indices(k, 1)
    return got


class DiskUnion:
    """Union of per-sensor exclusion disks for one signal kind: every source
    of the kind provably lies outside all of them, so the region a robot must
    fear is the union's complement. clearance() is the distance from a query
    point to that complement; a step endpoint c is safe for keep-out R
    exactly when clearance(c) >= R."""

    __slots__ = ("centers", "radii", "keep_out", "_exit_points")

    def __init__(self, centers: np.ndarray, radii: np.ndarray, keep_out: float):
        self.centers = np.asarray(centers, dtype=float)
        self.radii = np.asarray(radii, dtype=float)
        self.keep_out = float(keep_out)
        self._exit_points: np.ndarray | None = None

    def _exits(self) -> np.ndarray:
        """Boundary-arc endpoints of the union: pairwise circle intersections
        not strictly interior to a third disk."""
        if self._exit_points is None:
            c, r = self.centers, self.radii
            i, j = _pair_indices(len(r))
            d = c[j] - c[i]
            span = np.hypot(d[:, 0], d[:, 1])
            ri, rj = r[i], r[j]
            meets = (span > 1e-12) & (span < ri + rj) & (span > np.abs(ri - rj))
            pts = np.empty((0, 2))
            if meets.any():
                i, d, span = i[meets], d[meets], span[meets]
                ri, rj = ri[meets], rj[meets]
                a = (span * span + ri * ri - rj * rj) / (2.0 * span)
                h = np.sqrt(np.maximum(ri * ri - a * a, 0.0))
                u = d / span[:, None]
                mid = c[i] + a[:, None] * u
                perp = np.stack((-u[:, 1], u[:, 0]), axis=1)
                pts = np.concatenate((mid + h[:, None] * perp, mid - h[:, None] * perp))
                buried = (
                    np.hypot(pts[:, None, 0] - c[None, :, 0], pts[:, None, 1] - c[None, :, 1])
                    < r[None, :] - 1e-9
                ).any(axis=1)
                pts = pts[~buried]
            self._exit_points = pts
        return self._exit_points

    def clearance_point(self, qx: float, qy: float) -> float:
        """Exact union clearance at one query point. Same geometry as
        clearance() but in scalar arithmetic: the isotropic margin is read
        once per control step per group, and for a handful of disks the
        array scaffolding costs more than the mathematics."""
        c, r = self.centers, self.radii
        k = len(r)
        d = [math.hypot(qx - c[i, 0], qy - c[i, 1]) for i in range(k)]
        if not any(d[i] < r[i] for i in range(k)):
            return 0.0
        best = math.inf
        for i in range(k):
            di, ri = d[i], r[i]
            cand = abs(di - ri)
            if cand >= best:
                continue
            if di > 1e-12:
                fx = c[i, 0] + ri * (qx - c[i, 0]) / di
                fy = c[i, 1] + ri * (qy - c[i, 1]) / di
            else:
                fx, fy = c[i, 0] + ri * math.sqrt(0.5), c[i, 1] + ri * math.sqrt(0.5)
            buried = False
            for j in range(k):
                if j != i and math.hypot(fx - c[j, 0], fy - c[j, 1]) < r[j] - 1e-9:
                    buried = True
                    break
            if not buried:
                best = cand
        for i in range(k):
            ci0, ci1, ri = c[i, 0], c[i, 1], r[i]
            for j in range(i + 1, k):
                dx, dy = c[j, 0] - ci0, c[j, 1] - ci1
                span = math.hypot(dx, dy)
                rj = r[j]
                if span <= 1e-12 or span >= ri + rj or span <= abs(ri - rj):
                    continue
                a = (span * span + ri * ri - rj * rj) / (2.0 * span)
                h2 = ri * ri - a * a
                h = math.sqrt(h2) if h2 > 0.0 else 0.0
                ux, uy = dx / span, dy / span
                mx, my = ci0 + a * ux, ci1 + a * uy
                for sgn in (1.0, -1.0):
                    px, py = mx - sgn * h * uy, my + sgn * h * ux
                    de = math.hypot(qx - px, qy - py)
                    if de >= best:
                        continue
                    buried = False
                    for t in range(k):
                        if math.hypot(px - c[t, 0], py - c[t, 1]) < r[t] - 1e-9:
                            buried = True
                            break
                    if not buried:
                        best = de
        if not math.isfinite(best):
            # mirror of the batch fallback: underestimate rather than blow up
            return min(abs(d[i] - r[i]) for i in range(k)) if k else 0.0
        return best

    def clearance(self, points: np.ndarray) -> np.ndarray:
        """Distance from each query point to the nearest point not covered by
        the union (zero for queries already outside it). Exact: the nearest
        uncovered point lies on a surviving boundary arc, whose closest
        approach is either a radial foot point or an arc endpoint."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        c, r = self.centers, self.radii
        vec = pts[:, None, :] - c[None, :, :]
        d_pc = np.hypot(vec[..., 0], vec[..., 1])
        covered = (d_pc < r[None, :]).any(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = vec / d_pc[..., None]
        unit = np.where(np.isfinite(unit), unit, math.sqrt(0.5))
        foot = c[None, :, :] + r[None, :, None] * unit
        gap = np.hypot(
            foot[:, :, None, 0] - c[None, None, :, 0],
            foot[:, :, None, 1] - c[None, None, :, 1],
        )
        valid = (gap >= r[None, None, :] - 1e-9).all(axis=2)
        cand = np.abs(d_pc - r[None, :])
        best = np.where(valid, cand, np.inf).min(axis=1)
        ex = self._exits()
        if len(ex):
            de = np.hypot(pts[:, None, 0] - ex[None, :, 0], pts[:, None, 1] - ex[None, :, 1])
            best = np.minimum(best, de.min(axis=1))
        # paranoia fallback: if every candidate got filtered, underestimate
        best = np.where(np.isfinite(best), best, cand.min(axis=1))
        return np.where(covered, best, 0.0)


_SILENT_CACHE: dict[tuple[int, float, float, float], float] = {}


def _silent_clearance(k: int, ring: float, floor: float, extra: float) -> float:
    """Center clearance of an all-silent union: k congruent disks of radius
    floor on the sensor ring, plus a concentric self disk when extra > 0.
    Rotation invariant, so it is computed once from a canonical orientation;
    that also keeps the value bitwise identical across worker processes."""
    key = (k, round(ring, 12), floor, extra)
    v = _SILENT_CACHE.get(key)
    if v is None:
        ang = 2.0 * math.pi * np.arange(k) / k
        centers = ring * np.stack((np.cos(ang), np.sin(ang)), axis=1)
        radii = np.full(k, floor)
        if extra > 0.0:
            centers = np.vstack((centers, [[0.0, 0.0]]))
            radii = np.append(radii, extra)
        v = DiskUnion(centers, radii, 0.0).clearance_point(0.0, 0.0)
        _SILENT_CACHE[key] = v
    return v


class StepConstraints:
    """Certified per-direction step caps implied by one sensor frame.

    Builds one exclusion-disk union per signal kind (walls invert through the
    straight-wall profile; robots add the neighbors' own reach to the keep-out
    distance). The isotropic margin clearance(center) - R certifies small
    steps in every direction at once, which keeps crowded robots creeping
    rather than deadlocking; directions whose full-cap endpoint also
    certifies get the whole cap, refined by bisection in between."""

    def __init__(
        self,
        frame: SensorFrame,
        kernels: dict[str, SignalKernel],
        safe_distances: dict[str, float],
        d_other_max: float,
    ):
        self.center = np.asarray(frame.center, dtype=float)
        positions = np.asarray(frame.positions, dtype=float)
        self.groups: list[DiskUnion] = []
        quiet: list[tuple[float, float] | None] = []
        for kind in ("g", "r", "o"):
            motile = d_other_max if kind == "r" else 0.0
            zk = np.asarray(frame.readings[kind], dtype=float)
            floors = implied_floors(kernels[kind], zk)
            centers = positions
            extra = 0.0
            if kind == "o":
                # static sources one is not already violating are at least the
                # safety distance out; that fact is itself an exclusion disk,
                # so standing still always stays certified
                extra = safe_distances[kind]
                centers = np.vstack((positions, self.center[None, :]))
                floors = np.append(floors, extra)
            self.groups.append(DiskUnion(centers, floors, safe_distances[kind] + motile))
            quiet.append(None if (zk > 0.0).any() else (kernels[kind].beta, extra))
        kern_e = kernels["e"]
        ze = frame.readings["e"]
        wall_floors = np.array(
            [wall_distance_bound(float(z), kern_e) if z > 0.0 else kern_e.beta for z in ze]
        )
        wall_floors = np.append(wall_floors, safe_distances["e"])
        self.groups.append(
            DiskUnion(np.vstack((positions, self.center[None, :])), wall_floors, safe_distances["e"])
        )
        quiet.append(None if (np.asarray(ze) > 0.0).any() else (kern_e.beta, safe_distances["e"]))
        self.kinds = ("g", "r", "o", "e")
        cx, cy = float(self.center[0]), float(self.center[1])
        ring = math.hypot(positions[0, 0] - cx, positions[0, 1] - cy)
        self.iso = [
            (
                _silent_clearance(len(positions), ring, q[0], q[1])
                if q is not None
                else g.clearance_point(cx, cy)
            )
            - g.keep_out
            for g, q in zip(self.groups, quiet)
        ]

    def _margin_list(self, margin: float | dict[str, float]) -> list[float]:
        if isinstance(margin, dict):
            return [float(margin.get(k, 0.0)) for k in self.kinds]
        return [float(margin)] * len(self.groups)

    def worst_margin(self, thetas: np.ndarray, length: float) -> np.ndarray:
        """Worst clearance-above-keep-out over all groups at the endpoint of
        a step of the given length along each bearing. Unlike evaluate this
        reports negative margins instead of refusing, so a robot whose own
        aggregate readings claim a violation can still rank directions and
        back out along the least-bad one."""
        pts = self.center[None, :] + length * np.stack(
            (np.cos(thetas), np.sin(thetas)), axis=1
        )
        worst = np.full(len(thetas), np.inf)
        for g in self.groups:
            np.minimum(worst, g.clearance(pts) - g.keep_out, out=worst)
        return worst

    def evaluate(
        self,
        thetas: np.ndarray,
        cap: float,
        margin: float | dict[str, float] = 0.0,
    ) -> np.ndarray:
        """Certified step length per direction. A positive margin demands that
        much spare clearance on top of the keep-out, which pursuit behaviors
        use to stop short of states they could enter but not provably leave;
        a dict sets the demand per signal kind."""
        thetas = np.asarray(thetas, dtype=float)
        if cap <= 0.0:
            return np.zeros(thetas.shape)
        margins = self._margin_list(margin)
        # feasible lengths per direction need not form an interval (a ray can
        # clear a keep-out at full length yet graze it partway), so every
        # candidate length is tested against all groups jointly and only
        # lengths that passed as a whole are ever granted
        isos = [iso - m for iso, m in zip(self.iso, margins)]
        active = [(g, m) for g, m, iso in zip(self.groups, margins, isos) if iso < cap]
        if not active:
            return np.full(thetas.shape, float(cap))
        seed = min(max(iso, 0.0) for iso in isos if iso < cap)
        u = np.stack((np.cos(thetas), np.sin(thetas)), axis=-1)

        def admitted(lengths: np.ndarray, dirs: np.ndarray) -> np.ndarray:
            pts = self.center + lengths[:, None] * dirs
            good = np.ones(len(lengths), dtype=bool)
            for grp, m in active:
                good &= grp.clearance(pts) >= grp.keep_out + m
                if not good.any():
                    break
            return good

        lo = np.full(thetas.shape, seed)
        hi = np.full(thetas.shape, float(cap))
        ok = admitted(np.full(thetas.shape, float(cap)), u)
        lo[ok] = cap
        rem = np.nonzero(~ok)[0]
        for _ in range(3):
            if len(rem) == 0:
                break
            mid = 0.5 * (lo[rem] + hi[rem])
            good = admitted(mid, u[rem])
            lo[rem[good]] = mid[good]
            hi[rem[~good]] = mid[~good]
        return np.clip(lo, 0.0, cap)

    def evaluate_one(
        self, theta: float, cap: float, margin: float | dict[str, float] = 0.0
    ) -> float:
        return float(self.evaluate(np.asarray([theta]), cap, margin)[0])


def safe_step(
    frame: SensorFrame,
    kernels: dict[str, SignalKernel],
    safe_distances: dict[str, float],
    d_other_max: float,
    theta: float,
    cap: float,
) -> float:
    """Certified step length in world direction theta: the largest distance
    (up to cap) the center can move while provably keeping every safety
    distance against targets, robots, obstacles, and walls, whatever
    consistent placement the readings allow."""
    return StepConstraints(frame, kernels, safe_distances, d_other_max).evaluate_one(theta, cap)


def safe_step_many(
    frame: SensorFrame,
    kernels: dict[str, SignalKernel],
    safe_distances: dict[str, float],
    d_other_max: float,
    thetas: np.ndarray,
    cap: float,
) -> np.ndarray:
    return StepConstraints(frame, kernels, safe_distances, d_other_max).evaluate(thetas, cap)


def wrap_signed_many(a: np.ndarray) -> np.ndarray:
    return np.mod(np.asarray(a, dtype=float) + math.pi, 2.0 * math.pi) - math.pi


def boundary_trigger(
    frame: SensorFrame, kernel_e: SignalKernel, safe_e: float, d_max: float
) -> tuple[bool, int]:
    """Whether any sensor's implied wall distance has entered the reaction
    band safe_e + d_max; returns (triggered, index of the strongest sensor)."""
    ze = frame.readings["e"]
    best = int(np.argmax(ze))
    if ze[best] <= 0.0:
        return False, best
    d_hat = wall_distance_bound(float(ze[best]), kernel_e)
    return d_hat <= safe_e + d_max, best


def wall_clearance(frame: SensorFrame, kernel_e: SignalKernel) -> float:
    """Most pessimistic implied wall distance over all sensors (beta when
    nothing is heard)."""
    ze = frame.readings["e"]
    best = float(np.max(ze))
    if best <= 0.0:
        return kernel_e.beta
    return wall_distance_bound(best, kernel_e)
