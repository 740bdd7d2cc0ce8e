"""Planar geometry primitives: angles on the circle, circle-circle
intersection, segment-disk tests, and angular intervals.

All angles are radians. Angular intervals are directed counterclockwise from
``lo`` to ``hi`` on the circle, so an interval may wrap through 2π; width is
``(hi - lo) mod 2π``.
"""

from __future__ import annotations

import math

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Reduce to [0, 2π)."""
    a = math.fmod(a, TWO_PI)
    return a + TWO_PI if a < 0.0 else a


def wrap_signed(a: float) -> float:
    """Reduce to (-π, π]."""
    a = math.fmod(a, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


def angle_between(a: float, b: float) -> float:
    """Unsigned angular distance in [0, π]."""
    return abs(wrap_signed(a - b))


def in_arc(theta: float, lo: float, hi: float) -> bool:
    """True when theta lies on the counterclockwise arc from lo to hi.

    Endpoints are half-open [lo, hi): ties at hi resolve to outside
    (conservative). A zero-width arc contains only lo.
    """
    span = wrap_angle(hi - lo)
    off = wrap_angle(theta - lo)
    if span == 0.0:
        return off == 0.0
    return off < span


def circle_circle_intersection(
    c1x: float, c1y: float, r1: float, c2x: float, c2y: float, r2: float
) -> list[tuple[float, float]]:
    """Intersection points of two circles; [] when disjoint or nested,
    one point when tangent, two otherwise. Concentric circles return [].
    """
    dx = c2x - c1x
    dy = c2y - c1y
    d = math.hypot(dx, dy)
    if d == 0.0:
        return []
    if d > r1 + r2 or d < abs(r1 - r2):
        return []
    a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    h2 = r1 * r1 - a * a
    h = math.sqrt(h2) if h2 > 0.0 else 0.0
    mx = c1x + a * dx / d
    my = c1y + a * dy / d
    if h == 0.0:
        return [(mx, my)]
    ox = -dy / d * h
    oy = dx / d * h
    return [(mx + ox, my + oy), (mx - ox, my - oy)]


def segment_intersects_disk(
    ax: float, ay: float, bx: float, by: float, cx: float, cy: float, r: float
) -> bool:
    """True when the open segment (a, b) passes through the open disk of
    radius r at c. Touching the boundary does not count; endpoints lying in
    the disk count only if an interior segment point is also inside.
    """
    abx = bx - ax
    aby = by - ay
    acx = cx - ax
    acy = cy - ay
    ab2 = abx * abx + aby * aby
    if ab2 == 0.0:
        return False
    t = (acx * abx + acy * aby) / ab2
    if t <= 0.0 or t >= 1.0:
        return False
    px = ax + t * abx
    py = ay + t * aby
    return (px - cx) ** 2 + (py - cy) ** 2 < r * r


def point_segment_distance(
    px: float, py: float, ax: float, ay: float, bx: float, by: float
) -> float:
    """Euclidean distance from point p to segment [a, b]."""
    abx = bx - ax
    aby = by - ay
    ab2 = abx * abx + aby * aby
    if ab2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * abx + (py - ay) * aby) / ab2
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return math.hypot(px - (ax + t * abx), py - (ay + t * aby))


def nearest_segment_point(
    px: float, py: float, ax: float, ay: float, bx: float, by: float
) -> tuple[float, float]:
    """Closest point of segment [a, b] to p."""
    abx = bx - ax
    aby = by - ay
    ab2 = abx * abx + aby * aby
    if ab2 == 0.0:
        return ax, ay
    t = ((px - ax) * abx + (py - ay) * aby) / ab2
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return ax + t * abx, ay + t * aby


def step_intervals_outside_disk(
    b0: float, psi: float, keep_out: float
) -> list[tuple[float, float]]:
    """Admissible travel distances along a ray that must stay outside a
    keep-out disk.

    The ray starts at the origin; the disk center sits at distance b0 at
    angle psi off the ray; keep_out is the disk radius. Returns disjoint
    sorted intervals of admissible nonnegative travel. When the ray misses
    the disk entirely the result is [(0, inf)].
    """
    rad = keep_out * keep_out - (b0 * math.sin(psi)) ** 2
    if rad < 0.0:
        return [(0.0, math.inf)]
    root = math.sqrt(rad)
    mid = b0 * math.cos(psi)
    lo = mid - root
    hi = mid + root
    if hi <= 0.0:
        return [(0.0, math.inf)]
    if lo <= 0.0:
        return [(hi, math.inf)]
    return [(0.0, lo), (hi, math.inf)]


def segments_intersect_disks(p0: "np.ndarray", p1: "np.ndarray", disks: "np.ndarray") -> "np.ndarray":
    """Vectorized open-segment / open-disk intersection.

    p0, p1: (K, 2) segment endpoints. disks: (M, 3) rows of (cx, cy, r).
    Returns a (K, M) boolean mask, True where the open segment passes
    strictly inside the disk. Semantics match segment_intersects_disk."""
    import numpy as np

    v = p1 - p0  # (K, 2)
    vv = np.einsum("ij,ij->i", v, v)  # (K,)
    c = disks[None, :, :2] - p0[:, None, :]  # (K, M, 2)
    t = np.einsum("kmj,kj->km", c, v)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(vv[:, None] > 0.0, t / vv[:, None], -1.0)
    inside = (t > 0.0) & (t < 1.0)
    closest = p0[:, None, :] + t[..., None] * v[:, None, :]
    d2 = np.sum((closest - disks[None, :, :2]) ** 2, axis=-1)
    return inside & (d2 < disks[None, :, 2] ** 2)
