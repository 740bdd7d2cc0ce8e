"""Signal kernels, field aggregation, boundary emission, and sensor scans.

Every source kind (target g, robot r, obstacle o, environment boundary e)
broadcasts an isotropic scalar signal through a strictly decreasing radial
kernel with a finite cutoff. Robots only ever see per-sensor aggregate
intensities; nothing in here hands a robot a position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from swarmcap.geometry import segment_intersects_disk
from swarmcap.world import D_MIN, KernelSpec

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)


class SignalKernel:
    """Strictly decreasing radial intensity profile with cutoff.

    evaluate / gradient_magnitude / hessian_norm accept scalars or arrays;
    inverse is scalar and strict about its domain.
    """

    def __init__(self, family: str, C: float = 1.0, beta: float = 1.0, table=None):
        self.family = family
        self.C = float(C)
        self.beta = float(beta)
        if family == "inverse-square":
            self._interp = None
        elif family == "custom-tabulated":
            if table is None or len(table) < 2:
                raise ValueError("custom-tabulated kernel needs a (d, f) table")
            from scipy.interpolate import PchipInterpolator

            d = np.asarray([p[0] for p in table], dtype=float)
            f = np.asarray([p[1] for p in table], dtype=float)
            if np.any(np.diff(d) <= 0) or np.any(np.diff(f) >= 0):
                raise ValueError("table must have increasing d and decreasing f")
            self._interp = PchipInterpolator(d, f, extrapolate=False)
            self._d1 = self._interp.derivative(1)
            self._d2 = self._interp.derivative(2)
            self._dlo = float(d[0])
            self.beta = min(self.beta, float(d[-1]))
        else:
            raise ValueError(f"unknown kernel family {family!r}")

    @classmethod
    def from_spec(cls, spec: KernelSpec) -> "SignalKernel":
        return cls(spec.family, spec.C, spec.beta, spec.table)

    # -- forward -----------------------------------------------------------

    def evaluate(self, d):
        d = np.asarray(d, dtype=float)
        dc = np.maximum(d, D_MIN)
        if self._interp is None:
            out = self.C / dc**2
        else:
            out = self._interp(np.clip(dc, self._dlo, self.beta))
            out = np.nan_to_num(out, nan=0.0)
        out = np.where(d > self.beta, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def gradient_magnitude(self, d):
        d = np.asarray(d, dtype=float)
        dc = np.maximum(d, D_MIN)
        if self._interp is None:
            out = 2.0 * self.C / dc**3
        else:
            out = np.abs(self._d1(np.clip(dc, self._dlo, self.beta)))
            out = np.nan_to_num(out, nan=0.0)
        out = np.where(d > self.beta, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def hessian_norm(self, d):
        """Spectral norm of the Hessian of x -> f(|x - c|) at distance d.

        Eigenvalues of the radial Hessian are f''(d) and f'(d)/d, so the norm
        is the larger magnitude of the two."""
        d = np.asarray(d, dtype=float)
        dc = np.maximum(d, D_MIN)
        if self._interp is None:
            out = 6.0 * self.C / dc**4
        else:
            x = np.clip(dc, self._dlo, self.beta)
            out = np.maximum(np.abs(self._d2(x)), np.abs(self._d1(x)) / dc)
            out = np.nan_to_num(out, nan=0.0)
        out = np.where(d > self.beta, 0.0, out)
        return float(out) if out.ndim == 0 else out

    # -- inverse -----------------------------------------------------------

    def inverse(self, z: float) -> float:
        """Distance at which the kernel emits intensity z.

        Raises ValueError for z <= 0 or z below the cutoff intensity (the
        source would be beyond the sensing horizon, there is no distance to
        report). Intensities above the clamp ceiling return d_min."""
        if z <= 0.0:
            raise ValueError("intensity must be > 0 to invert")
        floor = self.evaluate(self.beta)
        if z < floor - 1e-15:
            raise ValueError(f"intensity {z:.6g} below cutoff floor {floor:.6g}")
        if self._interp is None:
            d = math.sqrt(self.C / z)
            return min(max(d, D_MIN), self.beta)
        if z >= float(self._interp(self._dlo)):
            return self._dlo
        from scipy.optimize import brentq

        return float(brentq(lambda d: float(self._interp(d)) - z, self._dlo, self.beta))

    def lipschitz(self, d):
        """Envelope Lipschitz constant for the gradient over distances >= d;
        both families here have monotone hessian norms, so this is just the
        Hessian norm at the nearest point."""
        return self.hessian_norm(d)


# ---------------------------------------------------------------------------
# aggregate fields (world-frame, used by validation and tests; robots only
# see the sampled version through their sensors)


def aggregate_at(x: float, y: float, centers, kernel: SignalKernel) -> float:
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    if c.size == 0:
        return 0.0
    d = np.hypot(c[:, 0] - x, c[:, 1] - y)
    return float(np.sum(kernel.evaluate(d)))


def aggregate_gradient(x: float, y: float, centers, kernel: SignalKernel) -> tuple[float, float]:
    """Analytic gradient of the aggregate inverse-square field (sum of
    per-source radial gradients pointing toward each source)."""
    c = np.asarray(centers, dtype=float).reshape(-1, 2)
    if c.size == 0:
        return 0.0, 0.0
    dx = c[:, 0] - x
    dy = c[:, 1] - y
    d = np.maximum(np.hypot(dx, dy), D_MIN)
    mag = kernel.gradient_magnitude(d)
    gx = np.sum(mag * dx / d)
    gy = np.sum(mag * dy / d)
    return float(gx), float(gy)


# ---------------------------------------------------------------------------
# boundary emission: the walls radiate with the e kernel per unit length


def wall_segments(boundary: tuple[float, float]) -> list[tuple[float, float, float, float]]:
    w, h = boundary
    return [
        (0.0, 0.0, w, 0.0),
        (w, 0.0, w, h),
        (w, h, 0.0, h),
        (0.0, h, 0.0, 0.0),
    ]


def _segment_within_cutoff(px, py, ax, ay, bx, by, beta):
    """Clip segment to the part within distance beta of point p; None if the
    whole segment is out of range."""
    vx, vy = bx - ax, by - ay
    wx, wy = ax - px, ay - py
    a = vx * vx + vy * vy
    b = 2 * (vx * wx + vy * wy)
    c = wx * wx + wy * wy - beta * beta
    disc = b * b - 4 * a * c
    if disc <= 0 or a == 0:
        return None
    s = math.sqrt(disc)
    t0 = max(0.0, (-b - s) / (2 * a))
    t1 = min(1.0, (-b + s) / (2 * a))
    if t0 >= t1:
        return None
    return (ax + t0 * vx, ay + t0 * vy, ax + t1 * vx, ay + t1 * vy)


def _gl_panel(px, py, ax, ay, bx, by, kernel):
    t = 0.5 * (_GL_NODES + 1.0)
    xs = ax + t * (bx - ax)
    ys = ay + t * (by - ay)
    d = np.hypot(xs - px, ys - py)
    length = math.hypot(bx - ax, by - ay)
    return 0.5 * length * float(np.sum(_GL_WEIGHTS * kernel.evaluate(d)))


def _adaptive_panel(px, py, ax, ay, bx, by, kernel, whole, depth):
    mx, my = 0.5 * (ax + bx), 0.5 * (ay + by)
    left = _gl_panel(px, py, ax, ay, mx, my, kernel)
    right = _gl_panel(px, py, mx, my, bx, by, kernel)
    if depth >= 12 or abs(left + right - whole) <= 1e-10 * (1.0 + abs(left + right)):
        return left + right
    return _adaptive_panel(px, py, ax, ay, mx, my, kernel, left, depth + 1) + _adaptive_panel(
        px, py, mx, my, bx, by, kernel, right, depth + 1
    )


def boundary_intensity(px: float, py: float, boundary, kernel: SignalKernel) -> float:
    """Line-integrated wall signal at a point: sum over walls of the kernel
    integrated along the in-range part of each wall."""
    total = 0.0
    for ax, ay, bx, by in wall_segments(boundary):
        clipped = _segment_within_cutoff(px, py, ax, ay, bx, by, kernel.beta)
        if clipped is None:
            continue
        cx0, cy0, cx1, cy1 = clipped
        whole = _gl_panel(px, py, cx0, cy0, cx1, cy1, kernel)
        total += _adaptive_panel(px, py, cx0, cy0, cx1, cy1, kernel, whole, 0)
    return total


def _wall_integral_closed(px, py, ax, ay, bx, by, kernel) -> float:
    """Exact inverse-square line integral over one wall segment windowed by
    the cutoff: C/a * (atan(u1/a) - atan(u0/a)) in foot-of-perpendicular
    coordinates."""
    vx, vy = bx - ax, by - ay
    L = math.hypot(vx, vy)
    if L == 0.0:
        return 0.0
    ux, uy = vx / L, vy / L
    t_foot = (px - ax) * ux + (py - ay) * uy
    fx, fy = ax + t_foot * ux, ay + t_foot * uy
    a = math.hypot(px - fx, py - fy)
    if a >= kernel.beta:
        return 0.0
    win = math.sqrt(kernel.beta**2 - a * a)
    u0 = max(-t_foot, -win)
    u1 = min(L - t_foot, win)
    if u0 >= u1:
        return 0.0
    if a < 1e-9:
        # collinear with the wall line: integrand is C/u^2 outside the foot
        lo, hi = abs(u0), abs(u1)
        if u0 <= 0.0 <= u1:
            return kernel.C / 1e-9  # on the wall itself; saturate
        lo, hi = min(lo, hi), max(lo, hi)
        return kernel.C * (1.0 / lo - 1.0 / hi)
    return kernel.C / a * (math.atan(u1 / a) - math.atan(u0 / a))


def boundary_intensity_fast(px: float, py: float, boundary, kernel: SignalKernel) -> float:
    """Same wall signal as boundary_intensity; exact closed form for the
    inverse-square family, adaptive quadrature otherwise."""
    if kernel.family != "inverse-square":
        return boundary_intensity(px, py, boundary, kernel)
    if nearest_wall_distance(px, py, boundary) >= kernel.beta:
        return 0.0
    return sum(
        _wall_integral_closed(px, py, ax, ay, bx, by, kernel)
        for ax, ay, bx, by in wall_segments(boundary)
    )


def nearest_wall_distance(px: float, py: float, boundary) -> float:
    w, h = boundary
    return min(px, py, w - px, h - py)


def wall_reading(
    px: float,
    py: float,
    boundary,
    kernel: SignalKernel,
    *,
    eta: float = 1.0,
    occluders=None,
    skip: int = -1,
) -> float:
    """Environment reading at one sensor: per-wall integral, with one
    nearest-point occlusion ray standing in for each wall when attenuation
    applies."""
    if nearest_wall_distance(px, py, boundary) >= kernel.beta:
        return 0.0
    test_rays = eta < 1.0 and occluders is not None and len(occluders) > 0
    total = 0.0
    for ax, ay, bx, by in wall_segments(boundary):
        if kernel.family == "inverse-square":
            part = _wall_integral_closed(px, py, ax, ay, bx, by, kernel)
        else:
            clipped = _segment_within_cutoff(px, py, ax, ay, bx, by, kernel.beta)
            if clipped is None:
                continue
            cx0, cy0, cx1, cy1 = clipped
            whole = _gl_panel(px, py, cx0, cy0, cx1, cy1, kernel)
            part = _adaptive_panel(px, py, cx0, cy0, cx1, cy1, kernel, whole, 0)
        if test_rays and part > 0.0:
            from swarmcap.geometry import nearest_segment_point

            nx, ny = nearest_segment_point(px, py, ax, ay, bx, by)
            part *= _occlusion_factor(px, py, nx, ny, eta, occluders, skip, -1)
        total += part
    return total


# ---------------------------------------------------------------------------
# sensing


@dataclass
class SensorFrame:
    """Everything a robot knows at one tick: where its sensors sit and what
    they read, per source kind. Angles are body-frame; world bearings of
    sensor k are heading + body_angles[k]."""

    center: tuple[float, float]
    heading: float
    radius: float
    body_angles: np.ndarray  # (p,)
    positions: np.ndarray  # (p, 2) world coordinates
    readings: dict[str, np.ndarray]  # kind -> (p,)

    @property
    def p(self) -> int:
        return len(self.body_angles)

    def world_bearing(self, k: int) -> float:
        return (self.heading + float(self.body_angles[k])) % (2.0 * math.pi)


def sensor_positions(center, heading, radius, body_angles) -> np.ndarray:
    a = np.asarray(body_angles, dtype=float) + heading
    return np.column_stack(
        (center[0] + radius * np.cos(a), center[1] + radius * np.sin(a))
    )


def truncated_noise_sample(rng: np.random.Generator, sigma: float, size: int) -> np.ndarray:
    """Draws from N(0, sigma^2) conditioned on n <= 1, by resampling. The
    truncation keeps attenuated readings nonnegative."""
    if sigma <= 0.0:
        return np.zeros(size)
    n = rng.normal(0.0, sigma, size)
    while True:
        bad = n > 1.0
        if not bad.any():
            return n
        n[bad] = rng.normal(0.0, sigma, int(bad.sum()))


def truncated_noise_moments(sigma: float) -> tuple[float, float]:
    """(mean, second moment) of N(0, sigma^2) truncated to n <= 1."""
    if sigma <= 0.0:
        return 0.0, 0.0
    b = 1.0 / sigma
    phi = math.exp(-0.5 * b * b) / math.sqrt(2.0 * math.pi)
    Phi = 0.5 * (1.0 + math.erf(b / math.sqrt(2.0)))
    mean = -sigma * phi / Phi
    second = sigma * sigma * (1.0 - b * phi / Phi)
    return mean, second


def attenuation_pct(sigma: float) -> float:
    """Root-mean-square relative reading perturbation, as a percentage:
    100 * sqrt(E[n^2]) for the truncated noise draw n."""
    _, m2 = truncated_noise_moments(sigma)
    return 100.0 * math.sqrt(max(0.0, m2))


def _occlusion_factor(sx, sy, cx, cy, eta, occluders, skip_a, skip_b):
    """Transmission multiplier for one sensor-source ray. occluders is an
    (M, 3) array of disks; skip indices are transparent for this ray (the
    sensing robot's own body and the emitting body)."""
    for idx in range(len(occluders)):
        if idx == skip_a or idx == skip_b:
            continue
        ox, oy, orad = occluders[idx]
        if segment_intersects_disk(sx, sy, cx, cy, ox, oy, orad):
            return eta
    return 1.0


def scan(
    center,
    heading,
    radius,
    body_angles,
    sources: dict[str, np.ndarray],
    kernels: dict[str, SignalKernel],
    boundary,
    *,
    eta: float = 1.0,
    occluders: np.ndarray | None = None,
    source_occluder_index: dict[str, np.ndarray] | None = None,
    self_occluder: int | None = None,
    noise_sigma: dict[str, float] | None = None,
    rng: np.random.Generator | None = None,
) -> SensorFrame:
    """One robot's full sensor sweep.

    sources maps kind -> (N, 2) centers ("e" is implicit via boundary).
    occluders is an (M, 3) array of body disks; source_occluder_index maps the
    i-th source of a kind to its occluder row so emitters don't block their
    own signal. Noise draws happen in fixed kind order so runs are replayable
    from the rng seed alone.
    """
    pos = sensor_positions(center, heading, radius, body_angles)
    p = len(pos)
    readings: dict[str, np.ndarray] = {}
    test_rays = eta < 1.0 and occluders is not None and len(occluders) > 0

    for kind in ("g", "r", "o"):
        kern = kernels[kind]
        pts = sources.get(kind)
        z = np.zeros(p)
        if pts is not None and len(pts):
            pts = np.asarray(pts, dtype=float).reshape(-1, 2)
            d = np.hypot(
                pts[None, :, 0] - pos[:, None, 0], pts[None, :, 1] - pos[:, None, 1]
            )  # (p, N)
            vals = kern.evaluate(d)
            if test_rays:
                idx_map = None
                if source_occluder_index is not None:
                    idx_map = source_occluder_index.get(kind)
                for k in range(p):
                    for i in range(pts.shape[0]):
                        if vals[k, i] == 0.0:
                            continue
                        skip_b = int(idx_map[i]) if idx_map is not None else -1
                        vals[k, i] *= _occlusion_factor(
                            pos[k, 0], pos[k, 1], pts[i, 0], pts[i, 1], eta, occluders,
                            -1 if self_occluder is None else self_occluder, skip_b,
                        )
            z = vals.sum(axis=1)
        readings[kind] = z

    kern_e = kernels["e"]
    ze = np.zeros(p)
    for k in range(p):
        ze[k] = wall_reading(
            pos[k, 0],
            pos[k, 1],
            boundary,
            kern_e,
            eta=eta if test_rays else 1.0,
            occluders=occluders if test_rays else None,
            skip=-1 if self_occluder is None else self_occluder,
        )
    readings["e"] = ze

    if noise_sigma and rng is not None:
        for kind in ("g", "r", "o", "e"):
            sig = noise_sigma.get(kind, 0.0)
            if sig > 0.0:
                n = truncated_noise_sample(rng, sig, p)
                readings[kind] = (1.0 - n) * readings[kind]

    return SensorFrame(
        center=(float(center[0]), float(center[1])),
        heading=float(heading),
        radius=float(radius),
        body_angles=np.asarray(body_angles, dtype=float),
        positions=pos,
        readings=readings,
    )
